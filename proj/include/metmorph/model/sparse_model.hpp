#pragma once

#include <json.hpp>

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "metmorph/cohort.hpp"
#include "metmorph/error.hpp"
#include "metmorph/model/cv.hpp"
#include "metmorph/model/metrics.hpp"
#include "metmorph/model/transform.hpp"

namespace metmorph {

inline constexpr int kModelSchemaVersion = 1;

/// A deployable classifier: fitted transform plus sparse coefficients.
struct SparseModel {
    Candidate candidate;
    TransformParams transform;
    std::vector<std::string> feature_names; // retained features, aligned with coefficients
    std::vector<double> coefficients;
    double intercept = 0.0;
    double lambda = 0.0;
    double gamma = 1.0; // 1 = plain lasso
    CvDesign inner;
    double inner_auc = kNaN;
    double in_sample_auc = kNaN;
    std::string training_manifest_sha256;
    std::vector<std::string> training_slide_ids;
    nlohmann::ordered_json provenance = nlohmann::ordered_json::object();

    /// Probability of a MET alteration for every slide of the cohort.
    std::vector<double> predict(const Cohort& cohort) const
    {
        const Eigen::MatrixXd x = apply_transform(transform, cohort);
        if (static_cast<std::size_t>(x.cols()) != coefficients.size())
            throw SchemaError("model: coefficient count does not match retained features");
        std::vector<double> out(cohort.size());
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            double eta = intercept;
            for (Eigen::Index j = 0; j < x.cols(); ++j) eta += x(i, j) * coefficients[static_cast<std::size_t>(j)];
            out[static_cast<std::size_t>(i)] = sigmoid(eta);
        }
        return out;
    }

    std::size_t nonzero_count() const
    {
        return static_cast<std::size_t>(std::count_if(coefficients.begin(), coefficients.end(),
                                                      [](double b) { return b != 0.0; }));
    }
};

inline SparseModel make_sparse_model(const FittedModel& m, const TuningConfig& cfg, const Cohort& train)
{
    SparseModel s;
    s.candidate = m.candidate;
    s.transform = m.transform;
    s.feature_names = m.feature_names;
    s.coefficients.assign(m.fit.beta.data(), m.fit.beta.data() + m.fit.beta.size());
    s.intercept = m.fit.intercept;
    s.lambda = m.fit.lambda;
    s.gamma = m.tuning.gamma;
    s.inner = cfg.inner;
    s.inner_auc = m.tuning.inner_auc;
    for (const auto& sl : train.slides) s.training_slide_ids.push_back(sl.slide_id);
    s.in_sample_auc = roc_auc(s.predict(train), train.binary_labels());
    return s;
}

inline const char* to_string(RobustScale::Source s)
{
    switch (s) {
    case RobustScale::Source::mad: return "mad";
    case RobustScale::Source::iqr: return "iqr";
    case RobustScale::Source::unit: return "unit";
    }
    return "mad";
}

inline RobustScale::Source parse_scale_source(const std::string& s)
{
    if (s == "mad") return RobustScale::Source::mad;
    if (s == "iqr") return RobustScale::Source::iqr;
    if (s == "unit") return RobustScale::Source::unit;
    throw SchemaError("unknown scale source '" + s + "'");
}

inline nlohmann::ordered_json to_json(const SparseModel& m)
{
    using nlohmann::ordered_json;
    ordered_json j;
    j["schema_version"] = kModelSchemaVersion;
    j["model"] = {{"family", m.candidate.relaxed ? "relaxed_lasso" : "lasso"},
                  {"class_weights", m.candidate.weights.to_string()},
                  {"lambda", m.lambda},
                  {"relax_gamma", m.gamma},
                  {"relaxed_convention", "refit on the lasso active set with penalty gamma * lambda"},
                  {"intercept", m.intercept}};
    ordered_json coef = ordered_json::object();
    for (std::size_t i = 0; i < m.feature_names.size(); ++i) coef[m.feature_names[i]] = m.coefficients[i];
    j["coefficients"] = std::move(coef);

    ordered_json feats = ordered_json::array();
    for (const auto& f : m.transform.features) {
        ordered_json e = {{"name", f.name}, {"dropped", f.dropped}};
        if (f.dropped) {
            e["drop_reason"] = f.drop_reason;
        } else {
            e["log"] = f.log_flag;
            e["impute"] = f.imputation_value;
            e["center"] = f.center;
            e["scale"] = f.scale;
            e["scale_source"] = to_string(f.scale_source);
        }
        feats.push_back(std::move(e));
    }
    j["transform"] = {{"min_unique", m.transform.options.min_unique},
                      {"log_epsilon", m.transform.options.log_epsilon},
                      {"mad_constant", 1.0},
                      {"features", std::move(feats)},
                      {"warnings", m.transform.warnings}};
    j["tuning"] = {{"inner_design", m.inner.to_string()}, {"inner_auc", m.inner_auc}};
    j["training"] = {{"manifest_sha256", m.training_manifest_sha256},
                     {"in_sample_auc", m.in_sample_auc},
                     {"slide_ids", m.training_slide_ids}};
    j["provenance"] = m.provenance;
    return j;
}

inline SparseModel model_from_json(const nlohmann::ordered_json& j)
{
    try {
        if (j.at("schema_version").get<int>() != kModelSchemaVersion)
            throw SchemaError("unsupported model schema_version " + j.at("schema_version").dump());
        SparseModel m;
        const auto& mj = j.at("model");
        m.candidate.relaxed = mj.at("family").get<std::string>() == "relaxed_lasso";
        m.candidate.weights = parse_class_weights(mj.at("class_weights").get<std::string>());
        m.lambda = mj.at("lambda").get<double>();
        m.gamma = mj.at("relax_gamma").get<double>();
        m.intercept = mj.at("intercept").get<double>();

        const auto& tj = j.at("transform");
        m.transform.options.min_unique = tj.at("min_unique").get<std::size_t>();
        m.transform.options.log_epsilon = tj.at("log_epsilon").get<double>();
        for (const auto& e : tj.at("features")) {
            FeatureTransform f;
            f.name = e.at("name").get<std::string>();
            f.dropped = e.at("dropped").get<bool>();
            if (f.dropped) {
                f.drop_reason = e.at("drop_reason").get<std::string>();
            } else {
                f.log_flag = e.at("log").get<bool>();
                f.imputation_value = e.at("impute").get<double>();
                f.center = e.at("center").get<double>();
                f.scale = e.at("scale").get<double>();
                f.scale_source = parse_scale_source(e.at("scale_source").get<std::string>());
            }
            m.transform.features.push_back(std::move(f));
        }
        m.transform.warnings = tj.at("warnings").get<std::vector<std::string>>();

        const auto& cj = j.at("coefficients");
        for (const auto& name : m.transform.retained_names()) {
            if (!cj.contains(name)) throw SchemaError("model: no coefficient for retained feature " + name);
            m.feature_names.push_back(name);
            m.coefficients.push_back(cj.at(name).get<double>());
        }
        if (cj.size() != m.feature_names.size()) throw SchemaError("model: coefficient for a dropped feature");

        m.inner = CvDesign::parse(j.at("tuning").at("inner_design").get<std::string>());
        m.inner_auc = j.at("tuning").at("inner_auc").get<double>();
        const auto& tr = j.at("training");
        m.training_manifest_sha256 = tr.at("manifest_sha256").get<std::string>();
        m.in_sample_auc = tr.at("in_sample_auc").get<double>();
        m.training_slide_ids = tr.at("slide_ids").get<std::vector<std::string>>();
        m.provenance = j.at("provenance");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("model file: ") + e.what());
    }
}

struct HoldoutReport {
    double auc = kNaN;
    double average_precision = kNaN;
    std::optional<double> auc_amplified; // wild type vs amplified only
    std::optional<double> auc_exon14;    // wild type vs exon14 only
    std::size_t n_wild_type = 0, n_amplified = 0, n_exon14 = 0, n_dual = 0;
    std::vector<double> probabilities;
    std::vector<int> labels;
    std::vector<RocPoint> roc;
    PrCurve pr;
};

/// Scores a labelled cohort that must not share slides with the model's
/// training set.
inline HoldoutReport evaluate_holdout(const SparseModel& model, const Cohort& holdout)
{
    std::set<std::string> trained(model.training_slide_ids.begin(), model.training_slide_ids.end());
    std::string overlap;
    for (const auto& s : holdout.slides)
        if (trained.count(s.slide_id)) overlap += (overlap.empty() ? "" : ", ") + s.slide_id;
    if (!overlap.empty()) throw SchemaError("holdout slides overlap the training manifest: " + overlap);

    HoldoutReport r;
    r.probabilities = model.predict(holdout);
    r.labels = holdout.binary_labels();
    r.auc = roc_auc(r.probabilities, r.labels);
    r.roc = roc_curve(r.probabilities, r.labels);
    r.pr = pr_curve(r.probabilities, r.labels);
    r.average_precision = r.pr.average_precision;

    auto subgroup = [&](MetLabel altered, std::size_t& count) -> std::optional<double> {
        std::vector<double> s;
        std::vector<int> y;
        for (std::size_t i = 0; i < holdout.size(); ++i) {
            const auto l = *holdout.slides[i].label;
            if (l != MetLabel::wild_type && l != altered) continue;
            s.push_back(r.probabilities[i]);
            y.push_back(l == altered);
            count += l == altered;
        }
        if (count == 0 || count == y.size()) return std::nullopt;
        return roc_auc(s, y);
    };
    r.auc_amplified = subgroup(MetLabel::amplified, r.n_amplified);
    r.auc_exon14 = subgroup(MetLabel::exon14, r.n_exon14);
    for (const auto& s : holdout.slides) {
        r.n_wild_type += *s.label == MetLabel::wild_type;
        r.n_dual += *s.label == MetLabel::amplified_and_exon14;
    }
    return r;
}

} // namespace metmorph
