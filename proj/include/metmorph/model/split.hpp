#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "metmorph/cohort.hpp"
#include "metmorph/error.hpp"
#include "metmorph/rng.hpp"

namespace metmorph {

struct SplitResult {
    std::vector<std::size_t> train;   // indices into the input rows, ascending
    std::vector<std::size_t> holdout;
};

/// Stratum key: MET label plus procedure type, so each alteration class is
/// split proportionally, not only the binary target.
inline std::string split_stratum(const ManifestRow& r)
{
    return std::string(to_string(r.label)) + "|" + r.procedure_type;
}

/// Seeded proportional split within each stratum; each stratum is shuffled
/// with its own generator so strata do not influence each other.
inline SplitResult stratified_split(std::span<const ManifestRow> rows, double train_fraction, std::uint64_t seed)
{
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw SchemaError("split fraction must be in (0, 1)");
    std::map<std::string, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < rows.size(); ++i) strata[split_stratum(rows[i])].push_back(i);

    SplitResult out;
    for (auto& [key, idx] : strata) {
        Rng rng(derive_seed(seed, hash_string(key)));
        shuffle(std::span<std::size_t>(idx), rng);
        std::size_t n_train = idx.size() == 1
                                  ? 1
                                  : static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(idx.size())));
        for (std::size_t k = 0; k < idx.size(); ++k) (k < n_train ? out.train : out.holdout).push_back(idx[k]);
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.holdout.begin(), out.holdout.end());
    return out;
}

/// Fold index per sample for stratified k-fold: each class is shuffled and
/// dealt round-robin, the second class continuing where the first stopped.
/// Re-drawn until every fold's validation and training parts hold both
/// classes; gives up after 100 attempts.
inline std::vector<int> stratified_folds(std::span<const int> y, int k, Rng& rng)
{
    if (k < 2) throw std::invalid_argument("need at least 2 folds");
    std::vector<std::size_t> cls[2];
    for (std::size_t i = 0; i < y.size(); ++i) cls[y[i] ? 1 : 0].push_back(i);
    for (int attempt = 0; attempt < 100; ++attempt) {
        std::vector<int> fold(y.size(), 0);
        std::size_t slot = rng.below(static_cast<std::uint64_t>(k));
        for (auto& c : cls) {
            shuffle(std::span<std::size_t>(c), rng);
            for (auto i : c) fold[i] = static_cast<int>(slot++ % static_cast<std::size_t>(k));
        }
        std::vector<int> pos(static_cast<std::size_t>(k), 0), cnt(static_cast<std::size_t>(k), 0);
        for (std::size_t i = 0; i < y.size(); ++i) {
            pos[static_cast<std::size_t>(fold[i])] += y[i];
            cnt[static_cast<std::size_t>(fold[i])] += 1;
        }
        const int total_pos = static_cast<int>(cls[1].size());
        const int total = static_cast<int>(y.size());
        bool ok = true;
        for (std::size_t f = 0; f < static_cast<std::size_t>(k); ++f) {
            const int vp = pos[f], vn = cnt[f] - pos[f];
            const int tp = total_pos - vp, tn = (total - total_pos) - vn;
            ok = ok && vp > 0 && vn > 0 && tp > 0 && tn > 0;
        }
        if (ok) return fold;
    }
    throw NumericalError("stratified folds: could not place both classes in every fold after 100 attempts");
}

} // namespace metmorph
