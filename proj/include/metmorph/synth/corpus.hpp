#pragma once

#include <json.hpp>

#include <string>
#include <vector>

#include "metmorph/io/files.hpp"
#include "metmorph/io/png.hpp"
#include "metmorph/io/tables.hpp"
#include "metmorph/parallel.hpp"
#include "metmorph/synth/bayes.hpp"
#include "metmorph/synth/generator.hpp"

namespace metmorph::synth {

inline constexpr std::size_t kTruthMonteCarlo = 200000;

struct CorpusSummary {
    std::vector<ManifestRow> manifest;
    double bayes_auc = 0.5;
    std::vector<std::string> warnings;
};

/// Writes <root>/<slide>/{tiles,masks}/<tile>.png, <slide>/cells.csv,
/// manifest.csv and truth.json.
inline CorpusSummary write_corpus(const GeneratorSpec& spec, const io::fs::path& root, unsigned jobs = 1)
{
    spec.validate();
    const auto plans = plan_slides(spec);
    std::vector<nlohmann::ordered_json> slide_truth(plans.size());
    std::vector<std::string> procedures(plans.size());
    std::vector<std::vector<std::string>> warnings(plans.size());
    parallel_for(plans.size(), jobs, [&](std::size_t i) {
        const auto g = generate_slide(spec, plans[i]);
        const auto dir = root / g.plan.slide_id;
        for (const auto& t : g.tiles) {
            io::write_png_rgb(dir / "tiles" / (t.tile_id + ".png"), t.rgb);
            io::write_png_labels(dir / "masks" / (t.tile_id + ".png"), t.mask);
        }
        io::write_atomic(dir / "cells.csv", io::cells_csv(g.cells));
        std::size_t counts[3] = {0, 0, 0};
        for (const auto& c : g.cells) ++counts[static_cast<int>(c.cell_class)];
        nlohmann::ordered_json lat = nlohmann::ordered_json::object();
        for (std::size_t t = 0; t < 3; ++t)
            for (std::size_t k = 0; k < kKnobs.size(); ++k)
                lat[std::string(kGeneratedTypes[t]) + "." + std::string(to_string(kKnobs[k]))] = g.latents[t][k];
        slide_truth[i] = {{"slide_id", g.plan.slide_id},
                          {"label", to_string(g.plan.label)},
                          {"seed", g.seed},
                          {"procedure_type", g.procedure_type},
                          {"tiles", g.tiles.size()},
                          {"cells", {{"tumor", counts[0]}, {"lymphocyte", counts[1]}, {"other", counts[2]}}},
                          {"latents", lat},
                          {"warnings", g.warnings}};
        procedures[i] = g.procedure_type;
        warnings[i] = g.warnings;
    });

    CorpusSummary out;
    for (std::size_t i = 0; i < plans.size(); ++i) {
        out.manifest.push_back({plans[i].slide_id, plans[i].label, procedures[i], Split::unassigned});
        for (const auto& w : warnings[i]) out.warnings.push_back(plans[i].slide_id + ": " + w);
    }
    io::write_atomic(root / "manifest.csv", io::manifest_csv(out.manifest));

    out.bayes_auc = oracle_bayes_auc(spec, kTruthMonteCarlo);
    nlohmann::ordered_json effects = nlohmann::ordered_json::array();
    for (const auto& e : spec.effects)
        effects.push_back({{"knob", to_string(e.knob)},
                           {"cell_type", e.cell_type},
                           {"label", to_string(e.label)},
                           {"effect_mad", e.effect_mad},
                           {"feature", planted_feature(e.knob, e.cell_type)}});
    nlohmann::ordered_json truth;
    truth["spec"] = to_json(spec);
    truth["effects"] = effects;
    truth["bayes_auc"] = {{"value", out.bayes_auc}, {"n_mc", kTruthMonteCarlo}, {"seed", 7}};
    truth["slides"] = slide_truth;
    io::write_atomic(root / "truth.json", truth.dump(2) + "\n");
    return out;
}

} // namespace metmorph::synth
