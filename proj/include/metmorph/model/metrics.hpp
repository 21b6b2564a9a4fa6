#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "metmorph/error.hpp"

namespace metmorph {

namespace detail {

inline void check_scored(std::span<const double> scores, std::span<const int> labels)
{
    if (scores.size() != labels.size()) throw std::invalid_argument("scores and labels differ in length");
    bool has0 = false, has1 = false;
    for (int y : labels) {
        if (y != 0 && y != 1) throw std::invalid_argument("labels must be 0/1");
        (y ? has1 : has0) = true;
    }
    if (!has0 || !has1) throw NumericalError("metric undefined: only one class present");
}

/// Indices by descending score.
inline std::vector<std::size_t> descending(std::span<const double> scores)
{
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

} // namespace detail

/// Twice the Mann-Whitney U of positive scores against negative scores:
/// 2 per correctly ordered pair, 1 per tied pair. Integer valued.
inline long long twice_auc_pairs(std::span<const double> scores, std::span<const int> labels)
{
    detail::check_scored(scores, labels);
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    long long below = 0, total = 0; // negatives strictly below the current block
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        long long neg = 0, pos = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            (labels[order[j]] ? pos : neg) += 1;
            ++j;
        }
        total += pos * (2 * below + neg);
        below += neg;
        i = j;
    }
    return total;
}

/// ROC-AUC: probability that a positive outranks a negative, ties counted 1/2.
inline double roc_auc(std::span<const double> scores, std::span<const int> labels)
{
    const long long twice_u = twice_auc_pairs(scores, labels);
    long long n1 = 0;
    for (int y : labels) n1 += y;
    const long long n0 = static_cast<long long>(labels.size()) - n1;
    const double u = 0.5 * static_cast<double>(twice_u);
    return u / (static_cast<double>(n0) * static_cast<double>(n1));
}

struct RocPoint {
    double threshold;
    double fpr;
    double tpr;
};

/// ROC curve at every distinct score, starting at (0, 0).
inline std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels)
{
    detail::check_scored(scores, labels);
    const auto order = detail::descending(scores);
    double n1 = 0.0;
    for (int y : labels) n1 += y;
    const double n0 = static_cast<double>(labels.size()) - n1;
    std::vector<RocPoint> pts{{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
    double tp = 0.0, fp = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            (labels[order[i]] ? tp : fp) += 1.0;
            ++i;
        }
        pts.push_back({s, fp / n0, tp / n1});
    }
    return pts;
}

struct PrPoint {
    double threshold;
    double recall;
    double precision;
};

struct PrCurve {
    std::vector<PrPoint> points; // starts at recall 0, precision 1
    double average_precision = 0.0;
};

/// Precision-recall curve with AP = sum (R_k - R_{k-1}) P_k over the
/// descending-score sweep; tied scores form one step.
inline PrCurve pr_curve(std::span<const double> scores, std::span<const int> labels)
{
    detail::check_scored(scores, labels);
    const auto order = detail::descending(scores);
    double n1 = 0.0;
    for (int y : labels) n1 += y;
    PrCurve out;
    out.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 1.0});
    double tp = 0.0, fp = 0.0, prev_recall = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            (labels[order[i]] ? tp : fp) += 1.0;
            ++i;
        }
        const double recall = tp / n1;
        const double precision = tp / (tp + fp);
        out.average_precision += (recall - prev_recall) * precision;
        prev_recall = recall;
        out.points.push_back({s, recall, precision});
    }
    return out;
}

} // namespace metmorph
