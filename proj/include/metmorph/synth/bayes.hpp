#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "metmorph/model/metrics.hpp"
#include "metmorph/rng.hpp"
#include "metmorph/synth/spec.hpp"

namespace metmorph::synth {

/// Planted latent shifts in standard-deviation units, one row per altered
/// label that has slides, with the label's share among altered slides.
struct ShiftTable {
    std::vector<std::pair<Knob, std::string>> dims;
    std::vector<MetLabel> labels;
    std::vector<double> weights;
    std::vector<std::vector<double>> shift; // [label][dim]
};

inline ShiftTable shift_table(const GeneratorSpec& spec)
{
    ShiftTable t;
    for (const auto& e : spec.effects) {
        const std::pair<Knob, std::string> d{e.knob, e.cell_type};
        if (std::find(t.dims.begin(), t.dims.end(), d) == t.dims.end()) t.dims.push_back(d);
    }
    double total = 0.0;
    for (std::size_t i = 1; i < kAllLabels.size(); ++i) total += static_cast<double>(spec.n_slides[i]);
    for (std::size_t i = 1; i < kAllLabels.size(); ++i) {
        if (spec.n_slides[i] == 0) continue;
        t.labels.push_back(kAllLabels[i]);
        t.weights.push_back(static_cast<double>(spec.n_slides[i]) / total);
        std::vector<double> row(t.dims.size(), 0.0);
        for (const auto& e : spec.effects_for(kAllLabels[i])) {
            const auto at = std::find(t.dims.begin(), t.dims.end(), std::pair<Knob, std::string>{e.knob, e.cell_type});
            row[static_cast<std::size_t>(at - t.dims.begin())] += e.effect_mad * kGaussianMad;
        }
        t.shift.push_back(std::move(row));
    }
    return t;
}

/// Monte-Carlo AUC of the Bayes classifier (mixture likelihood ratio) for
/// wild type against the altered classes on the planted latents, with
/// n_mc draws per side.
inline double oracle_bayes_auc(const GeneratorSpec& spec, std::size_t n_mc, std::uint64_t seed = 7)
{
    const auto t = shift_table(spec);
    if (t.labels.empty() || t.dims.empty() || n_mc == 0) return 0.5;
    Rng rng(seed);
    const std::size_t D = t.dims.size();
    std::vector<double> half_norm(t.labels.size(), 0.0);
    for (std::size_t c = 0; c < t.labels.size(); ++c)
        for (double s : t.shift[c]) half_norm[c] += 0.5 * s * s;

    std::vector<double> z(D), terms(t.labels.size());
    auto llr = [&] {
        double hi = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < t.labels.size(); ++c) {
            double dot = 0.0;
            for (std::size_t d = 0; d < D; ++d) dot += t.shift[c][d] * z[d];
            terms[c] = std::log(t.weights[c]) + dot - half_norm[c];
            hi = std::max(hi, terms[c]);
        }
        double s = 0.0;
        for (double v : terms) s += std::exp(v - hi);
        return hi + std::log(s);
    };

    std::vector<double> scores;
    std::vector<int> labels;
    scores.reserve(2 * n_mc);
    labels.reserve(2 * n_mc);
    for (std::size_t i = 0; i < n_mc; ++i) {
        for (auto& v : z) v = rng.normal();
        scores.push_back(llr());
        labels.push_back(0);
    }
    for (std::size_t i = 0; i < n_mc; ++i) {
        const double u = rng.uniform();
        std::size_t c = 0;
        double acc = t.weights[0];
        while (c + 1 < t.labels.size() && u >= acc) acc += t.weights[++c];
        for (std::size_t d = 0; d < D; ++d) z[d] = t.shift[c][d] + rng.normal();
        scores.push_back(llr());
        labels.push_back(1);
    }
    return roc_auc(scores, labels);
}

} // namespace metmorph::synth
