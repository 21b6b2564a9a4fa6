#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "metmorph/cohort.hpp"
#include "metmorph/error.hpp"
#include "metmorph/feature_names.hpp"
#include "metmorph/numeric.hpp"

namespace metmorph {

struct TransformOptions {
    std::size_t min_unique = 10; // fewer distinct training values -> dropped
    double log_epsilon = 1e-8;
};

/// Fitted per-feature transform. Imputation value, center and scale live
/// in the post-log space.
struct FeatureTransform {
    std::string name;
    bool dropped = false;
    std::string drop_reason; // few_unique, all_missing, constant
    bool log_flag = false;
    double imputation_value = 0.0;
    double center = 0.0;
    double scale = 1.0;
    RobustScale::Source scale_source = RobustScale::Source::mad;
};

struct TransformParams {
    TransformOptions options;
    std::vector<FeatureTransform> features;
    std::vector<std::string> warnings;

    std::vector<std::size_t> retained() const
    {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < features.size(); ++i)
            if (!features[i].dropped) out.push_back(i);
        return out;
    }

    std::vector<std::string> retained_names() const
    {
        std::vector<std::string> out;
        for (const auto& f : features)
            if (!f.dropped) out.push_back(f.name);
        return out;
    }
};

namespace detail {

inline double log_value(double v, double eps, const std::string& name)
{
    const double t = v + eps;
    if (!(t > 0.0)) throw NumericalError("log transform of non-positive value in " + name);
    return std::log(t);
}

inline std::size_t count_unique(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    return static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
}

} // namespace detail

/// Fit on the training cohort only: drop low-cardinality features, log the
/// flagged ones, impute with the median, then center/scale by median and MAD.
inline TransformParams fit_transform(const Cohort& train, const TransformOptions& opt = {})
{
    if (train.size() == 0) throw SchemaError("fit_transform: empty training cohort");
    TransformParams params;
    params.options = opt;
    const std::size_t m = train.feature_names.size();
    params.features.resize(m);
    std::vector<double> col;
    col.reserve(train.size());
    for (std::size_t f = 0; f < m; ++f) {
        auto& t = params.features[f];
        t.name = train.feature_names[f];
        t.log_flag = names::is_log_transformed(t.name);
        col.clear();
        for (const auto& s : train.slides) {
            const double v = s.values[f];
            if (!std::isnan(v)) col.push_back(v);
        }
        if (col.empty()) {
            t.dropped = true;
            t.drop_reason = "all_missing";
            continue;
        }
        if (detail::count_unique(col) < opt.min_unique) {
            t.dropped = true;
            t.drop_reason = "few_unique";
            continue;
        }
        if (t.log_flag)
            for (auto& v : col) v = detail::log_value(v, opt.log_epsilon, t.name);
        t.imputation_value = median(col);
        const std::size_t missing = train.size() - col.size();
        col.insert(col.end(), missing, t.imputation_value);
        const auto rs = robust_scale(col);
        t.center = rs.center;
        t.scale = rs.scale;
        t.scale_source = rs.source;
        const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
        if (rs.apply(*lo) == rs.apply(*hi)) {
            t.dropped = true;
            t.drop_reason = "constant";
            params.warnings.push_back(t.name + ": constant after transform, dropped");
        }
    }
    return params;
}

inline double transform_value(const FeatureTransform& t, double v, double eps)
{
    if (std::isnan(v)) return (t.imputation_value - t.center) / t.scale;
    if (t.log_flag) v = detail::log_value(v, eps, t.name);
    return (v - t.center) / t.scale;
}

/// Design matrix (slides x retained features). Columns are looked up by
/// name, so the cohort may carry extra or reordered features.
inline Eigen::MatrixXd apply_transform(const TransformParams& params, const Cohort& cohort)
{
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < cohort.feature_names.size(); ++i) index.emplace(cohort.feature_names[i], i);
    const auto kept = params.retained();
    std::vector<std::size_t> src(kept.size());
    std::string missing;
    for (std::size_t j = 0; j < kept.size(); ++j) {
        const auto it = index.find(params.features[kept[j]].name);
        if (it == index.end()) {
            missing += (missing.empty() ? "" : ", ") + params.features[kept[j]].name;
            continue;
        }
        src[j] = it->second;
    }
    if (!missing.empty()) throw SchemaError("missing feature columns: " + missing);

    Eigen::MatrixXd x(static_cast<Eigen::Index>(cohort.size()), static_cast<Eigen::Index>(kept.size()));
    for (std::size_t j = 0; j < kept.size(); ++j) {
        const auto& t = params.features[kept[j]];
        for (std::size_t i = 0; i < cohort.size(); ++i) {
            const auto& s = cohort.slides[i];
            if (s.values.size() != cohort.feature_names.size())
                throw SchemaError("slide " + s.slide_id + " has the wrong feature count");
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                transform_value(t, s.values[src[j]], params.options.log_epsilon);
        }
    }
    if (!x.allFinite()) throw NumericalError("non-finite value after transform");
    return x;
}

} // namespace metmorph
