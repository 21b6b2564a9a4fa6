// metmorph command-line tool: feature extraction, aggregation, univariate
// screening, sparse-model training and evaluation, reports and synthetic
// cohorts. Exit codes: 0 ok, 2 schema error, 3 numerical failure, 4 I/O error.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "metmorph/pipeline/commands.hpp"

namespace {

namespace fs = std::filesystem;
using namespace metmorph;
namespace pl = metmorph::pipeline;

std::optional<Split> parse_split_choice(const std::string& s)
{
    if (s == "all") return std::nullopt;
    return parse_split(s);
}

std::pair<double, double> parse_pair(const std::string& s, const char* what)
{
    const auto comma = s.find(',');
    if (comma == std::string::npos) throw SchemaError(std::string(what) + " must be 'a,b'");
    return {io::parse_double(s.substr(0, comma), what), io::parse_double(s.substr(comma + 1), what)};
}

std::vector<Candidate> candidate_grid(const std::vector<std::string>& weights, const std::string& relaxed)
{
    std::vector<ClassWeightSpec> ws;
    if (weights.empty())
        ws = {ClassWeightSpec::make_balanced(), ClassWeightSpec::fixed(0.3, 0.7), ClassWeightSpec::fixed(0.5, 0.5)};
    for (const auto& w : weights) ws.push_back(parse_class_weights(w));
    std::vector<bool> modes;
    if (relaxed == "both" || relaxed == "no") modes.push_back(false);
    if (relaxed == "both" || relaxed == "yes") modes.push_back(true);
    std::vector<Candidate> out;
    for (bool r : modes)
        for (const auto& w : ws) out.push_back({r, w});
    return out;
}

void print_warnings(const pl::Warnings& w)
{
    constexpr std::size_t kShown = 20;
    for (std::size_t i = 0; i < w.size() && i < kShown; ++i) std::cerr << "warning: " << w[i] << "\n";
    if (w.size() > kShown) std::cerr << "warning: ... " << (w.size() - kShown) << " more\n";
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"metmorph: cell-morphology features and sparse classifiers for MET-alteration prediction"};
    app.set_version_flag("--version", pl::kToolVersion);
    app.require_subcommand(1);

    std::string input, output, manifest, split_choice = "all", model, spec_file, clip = "1,99", slides_arg;
    std::vector<std::string> inputs, weights;
    std::uint64_t seed = 0;
    double subsample = 0.2, fraction = 0.75;
    std::size_t min_full = 50, n_lambda = 50;
    std::string outer = "10x10", inner = "5x5", relaxed = "both", cv_summary;
    unsigned jobs = 1;
    bool plots = false, all_cells = false, include_dual = false;

    auto add_jobs = [&](CLI::App* c) { c->add_option("--jobs", jobs, "Worker threads")->check(CLI::Range(1u, 1024u)); };
    auto add_split = [&](CLI::App* c, const char* def) {
        split_choice = def;
        c->add_option("--split", split_choice, "Manifest split to use")
            ->check(CLI::IsMember({"train", "holdout", "unassigned", "all"}))
            ->capture_default_str();
    };

    auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus with planted effects");
    synth->add_option("--output", output, "Corpus directory")->required();
    synth->add_option("--spec", spec_file, "Generator spec JSON (defaults when absent)");
    auto* synth_seed = synth->add_option("--seed", seed, "Overrides the spec seed");
    synth->add_option("--slides", slides_arg, "Slide counts wt,amp,exon14,dual");
    add_jobs(synth);

    auto* extract = app.add_subcommand("extract", "Per-cell features from tiles, masks and cells.csv");
    extract->add_option("--input", input, "Corpus directory")->required();
    extract->add_option("--output", output, "Output directory")->required();
    extract->add_flag("--all-cells", all_cells, "Compute features for every cell class and region");
    add_jobs(extract);

    auto* aggregate = app.add_subcommand("aggregate", "Slide-level 372-feature vectors");
    aggregate->add_option("--input", input, "Extract output directory")->required();
    aggregate->add_option("--output", output, "Output directory")->required();
    aggregate->add_option("--manifest", manifest, "Label manifest");
    aggregate->add_option("--seed", seed, "Subsampling seed");
    aggregate->add_option("--subsample-fraction", subsample, "Fraction of cells per type")->capture_default_str();
    aggregate->add_option("--clip", clip, "Clip percentiles low,high")->capture_default_str();
    aggregate->add_option("--min-cells-full-use", min_full, "Use all cells below this count")->capture_default_str();
    add_jobs(aggregate);

    auto* univariate = app.add_subcommand("univariate", "Mann-Whitney screen with BH correction and heatmap");
    univariate->add_option("--input", input, "slide_features.csv")->required();
    univariate->add_option("--output", output, "Output directory")->required();
    univariate->add_option("--manifest", manifest, "Label manifest");
    univariate->add_flag("--include-dual", include_dual, "Dual-alteration slides join both altered groups");
    univariate->add_flag("--plots", plots, "Also write heatmap.svg");

    auto* split = app.add_subcommand("split", "Stratified train/holdout split of a manifest");
    split->add_option("--manifest", manifest, "Label manifest")->required();
    split->add_option("--output", output, "Output directory")->required();
    split->add_option("--fraction", fraction, "Training fraction")->capture_default_str();
    split->add_option("--seed", seed, "Split seed");

    auto* train_cv = app.add_subcommand("train-cv", "Nested cross-validation over model candidates");
    train_cv->add_option("--input", input, "slide_features.csv")->required();
    train_cv->add_option("--manifest", manifest, "Label manifest with splits")->required();
    train_cv->add_option("--output", output, "Output directory")->required();
    train_cv->add_option("--outer-design", outer, "Outer CV RxK")->capture_default_str();
    train_cv->add_option("--inner-design", inner, "Inner CV RxK")->capture_default_str();
    train_cv->add_option("--weights", weights, "Class weights balanced|a,b (repeatable)");
    train_cv->add_option("--relaxed", relaxed, "Candidate penalties")
        ->check(CLI::IsMember({"both", "yes", "no"}))
        ->capture_default_str();
    train_cv->add_option("--n-lambda", n_lambda, "Lambda path length")->capture_default_str();
    train_cv->add_option("--seed", seed, "CV seed");
    train_cv->add_flag("--plots", plots, "Also write cv_auc.svg");
    add_jobs(train_cv);

    auto* train_final = app.add_subcommand("train-final", "Retrain the chosen candidate on the training cohort");
    train_final->add_option("--input", input, "slide_features.csv")->required();
    train_final->add_option("--manifest", manifest, "Label manifest with splits")->required();
    train_final->add_option("--output", output, "Output directory")->required();
    train_final->add_option("--cv-summary", cv_summary, "cv_summary.csv whose winner is retrained");
    auto* final_weights = train_final->add_option("--weights", weights, "Class weights balanced|a,b");
    auto* final_relaxed = train_final->add_option("--relaxed", relaxed, "Relaxed lasso")
                              ->check(CLI::IsMember({"yes", "no"}));
    train_final->add_option("--inner-design", inner, "Inner CV RxK")->capture_default_str();
    train_final->add_option("--n-lambda", n_lambda, "Lambda path length")->capture_default_str();
    train_final->add_option("--seed", seed, "Tuning seed");

    auto* predict = app.add_subcommand("predict", "Score slides with a model file");
    predict->add_option("--model", model, "model.json")->required();
    predict->add_option("--input", input, "slide_features.csv")->required();
    predict->add_option("--output", output, "Output directory")->required();
    predict->add_option("--manifest", manifest, "Label manifest");
    predict->add_flag("--plots", plots, "Also write roc.svg and pr.svg");

    auto* report = app.add_subcommand("report", "SVG figures and CSV point data from run artifacts");
    report->add_option("--input", inputs, "Artifact directories (repeatable)")->required();
    report->add_option("--output", output, "Output directory")->required();

    // --split is shared by the cohort-reading commands; defaults differ.
    add_split(univariate, "all");
    for (auto* c : {train_cv, train_final}) c->add_option("--split", split_choice, "Manifest split to use")
                                                ->check(CLI::IsMember({"train", "holdout", "unassigned", "all"}));
    predict->add_option("--split", split_choice, "Manifest split to use")
        ->check(CLI::IsMember({"train", "holdout", "unassigned", "all"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(ExitCode::schema);
    }

    try {
        pl::Warnings warn;
        auto cohort_in = [&](std::optional<Split> def) {
            pl::CohortInput in{input, {}, {}};
            if (!manifest.empty()) in.manifest = fs::path(manifest);
            // Commands that default to the training split keep that default
            // unless --split was given.
            in.split = split_choice == "all" && def ? def : parse_split_choice(split_choice);
            return in;
        };
        auto tuning = [&] {
            TuningConfig t;
            t.inner = CvDesign::parse(inner);
            t.n_lambda = n_lambda;
            return t;
        };

        if (synth->parsed()) {
            pl::SynthConfig cfg;
            if (!spec_file.empty()) {
                cfg.spec_file = fs::path(spec_file);
                cfg.spec = pl::read_generator_spec(spec_file);
            }
            if (*synth_seed) cfg.spec.seed = seed;
            if (!slides_arg.empty()) {
                std::vector<std::size_t> n;
                std::string cur;
                for (char ch : slides_arg + ",") {
                    if (ch != ',') {
                        cur += ch;
                        continue;
                    }
                    n.push_back(io::parse_uint(cur, "--slides"));
                    cur.clear();
                }
                if (n.size() != 4) throw SchemaError("--slides needs four counts wt,amp,exon14,dual");
                for (std::size_t k = 0; k < 4; ++k) cfg.spec.n_slides[k] = n[k];
            }
            cfg.output = output;
            cfg.jobs = jobs;
            warn = pl::run_synth(cfg);
        } else if (extract->parsed()) {
            pl::ExtractConfig cfg;
            cfg.input = input;
            cfg.output = output;
            cfg.options.all_cells = all_cells;
            cfg.jobs = jobs;
            warn = pl::run_extract(cfg);
        } else if (aggregate->parsed()) {
            pl::AggregateConfig cfg;
            cfg.input = input;
            cfg.output = output;
            if (!manifest.empty()) cfg.manifest = fs::path(manifest);
            cfg.aggregation.seed = seed;
            cfg.aggregation.subsample_fraction = subsample;
            cfg.aggregation.min_cells_full_use = min_full;
            std::tie(cfg.aggregation.clip_low, cfg.aggregation.clip_high) = parse_pair(clip, "--clip");
            try {
                cfg.aggregation.validate();
            } catch (const std::invalid_argument& e) {
                throw SchemaError(e.what());
            }
            cfg.jobs = jobs;
            warn = pl::run_aggregate(cfg);
        } else if (univariate->parsed()) {
            pl::UnivariateConfig cfg;
            cfg.input = cohort_in(std::nullopt);
            cfg.output = output;
            cfg.screen.include_dual = include_dual;
            cfg.plots = plots;
            warn = pl::run_univariate(cfg);
        } else if (split->parsed()) {
            warn = pl::run_split({manifest, output, fraction, seed});
        } else if (train_cv->parsed()) {
            pl::TrainCvConfig cfg;
            cfg.input = cohort_in(Split::train);
            cfg.output = output;
            cfg.candidates = candidate_grid(weights, relaxed);
            cfg.cv.outer = CvDesign::parse(outer);
            cfg.cv.tuning = tuning();
            cfg.cv.seed = seed;
            cfg.cv.jobs = jobs;
            cfg.plots = plots;
            warn = pl::run_train_cv(cfg);
        } else if (train_final->parsed()) {
            pl::TrainFinalConfig cfg;
            cfg.input = cohort_in(Split::train);
            cfg.output = output;
            if (!cv_summary.empty()) {
                if (*final_weights || *final_relaxed)
                    throw SchemaError("--cv-summary and --weights/--relaxed are mutually exclusive");
                cfg.cv_summary = fs::path(cv_summary);
            } else {
                if (weights.size() > 1) throw SchemaError("train-final takes a single --weights value");
                cfg.candidate.relaxed = relaxed == "yes";
                if (!weights.empty()) cfg.candidate.weights = parse_class_weights(weights.front());
            }
            cfg.tuning = tuning();
            cfg.seed = seed;
            warn = pl::run_train_final(cfg);
        } else if (predict->parsed()) {
            pl::PredictConfig cfg;
            cfg.model = model;
            cfg.input = cohort_in(std::nullopt);
            cfg.output = output;
            cfg.plots = plots;
            warn = pl::run_predict(cfg);
        } else if (report->parsed()) {
            pl::ReportConfig cfg;
            for (const auto& d : inputs) cfg.inputs.emplace_back(d);
            cfg.output = output;
            warn = pl::run_report(cfg);
        }
        print_warnings(warn);
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.exit_code());
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::schema);
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::io);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::schema);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::failure);
    }
}
