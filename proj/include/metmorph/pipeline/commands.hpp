#pragma once

// In-process implementations of the command-line subcommands. Every command
// reads upstream artifacts, writes its outputs atomically and records a
// run_meta.json with the resolved configuration and input hashes.

#include <json.hpp>

#include <algorithm>
#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "metmorph/cellfeat/extract.hpp"
#include "metmorph/cohort.hpp"
#include "metmorph/error.hpp"
#include "metmorph/feature_names.hpp"
#include "metmorph/io/csv.hpp"
#include "metmorph/io/files.hpp"
#include "metmorph/io/png.hpp"
#include "metmorph/io/tables.hpp"
#include "metmorph/model/cv.hpp"
#include "metmorph/model/metrics.hpp"
#include "metmorph/model/sparse_model.hpp"
#include "metmorph/model/split.hpp"
#include "metmorph/model/stability.hpp"
#include "metmorph/parallel.hpp"
#include "metmorph/pipeline/svg.hpp"
#include "metmorph/slideagg/aggregate.hpp"
#include "metmorph/stats/chi_squared.hpp"
#include "metmorph/stats/correlation.hpp"
#include "metmorph/stats/screen.hpp"
#include "metmorph/synth/corpus.hpp"

namespace metmorph::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kArtifactSchemaVersion = 1;

/// Messages a command wants shown to the user; nothing here is fatal.
using Warnings = std::vector<std::string>;

// Provenance -----------------------------------------------------------------

/// Hash of a directory tree: relative path and content hash of every
/// regular file, in sorted path order.
inline std::string tree_sha256(const fs::path& root)
{
    std::vector<std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) files.push_back(fs::relative(e.path(), root).generic_string());
    std::sort(files.begin(), files.end());
    std::string listing;
    for (const auto& f : files) listing += f + '\0' + io::sha256_file(root / f) + '\n';
    return io::sha256_hex(listing);
}

inline json input_entry(const fs::path& p)
{
    if (fs::is_directory(p)) return {{"name", p.filename().string()}, {"kind", "directory"}, {"sha256", tree_sha256(p)}};
    return {{"name", p.filename().string()}, {"kind", "file"}, {"sha256", io::sha256_file(p)}};
}

/// Paths are recorded by basename so the file does not depend on where the
/// run happened.
inline void write_run_meta(const fs::path& out, std::string_view command, const json& config,
                           const std::vector<fs::path>& inputs)
{
    json in = json::array();
    for (const auto& p : inputs) in.push_back(input_entry(p));
    json meta{{"schema_version", kArtifactSchemaVersion},
              {"tool", "metmorph"},
              {"tool_version", kToolVersion},
              {"command", command},
              {"config", config},
              {"inputs", in}};
    io::write_atomic(out / "run_meta.json", meta.dump(2) + "\n");
}

inline void require_exists(const fs::path& p, std::string_view what)
{
    if (!fs::exists(p)) throw IoError(std::string(what) + " not found: " + p.string());
}

inline json read_json(const fs::path& p)
{
    try {
        return json::parse(io::read_text(p));
    } catch (const json::parse_error& e) {
        throw SchemaError(p.string() + ": " + e.what());
    }
}

inline void check_schema_version(const json& j, const fs::path& p)
{
    if (!j.contains("schema_version") || j.at("schema_version") != kArtifactSchemaVersion)
        throw SchemaError(p.string() + ": unsupported or missing schema_version");
}

/// Immediate subdirectories of root that contain `marker`, sorted by name.
inline std::vector<std::string> find_slides(const fs::path& root, const char* marker)
{
    require_exists(root, "input directory");
    std::vector<std::string> out;
    for (const auto& e : fs::directory_iterator(root))
        if (e.is_directory() && fs::exists(e.path() / marker)) out.push_back(e.path().filename().string());
    std::sort(out.begin(), out.end());
    if (out.empty()) throw SchemaError(root.string() + ": no slide directories containing " + marker);
    return out;
}

inline std::string feature_header_part(const std::string& name, int part)
{
    const auto p = names::parse(name);
    if (!p) return part == 2 ? name : std::string{};
    switch (part) {
    case 0: return p->cell;
    case 1: return p->family;
    case 2: return p->feature;
    default: return p->statistic;
    }
}

inline io::CsvWriter& name_fields(io::CsvWriter& w, const std::string& name)
{
    for (int k = 0; k < 4; ++k) w.field(feature_header_part(name, k));
    return w;
}

// extract --------------------------------------------------------------------

struct ExtractConfig {
    fs::path input;  // corpus root: <slide>/{cells.csv,tiles/,masks/}
    fs::path output; // <slide>/cell_features.csv
    ExtractOptions options;
    unsigned jobs = 1;
};

struct SlideExtraction {
    std::vector<CellFeatureRecord> records;
    std::size_t tiles = 0;
};

/// Per-cell features of one slide directory. Tiles are the union of those
/// named in cells.csv and those with a mask file, so unlisted mask ids fail.
inline SlideExtraction extract_slide_dir(const fs::path& dir, const ExtractOptions& opt = {})
{
    const auto table = dir / "cells.csv";
    const auto rows = io::parse_cells_csv(io::read_text(table), table.string());
    std::map<std::string, std::vector<CellTableRow>> by_tile;
    for (const auto& r : rows) by_tile[r.tile_id].push_back(r);
    if (fs::is_directory(dir / "masks"))
        for (const auto& e : fs::directory_iterator(dir / "masks"))
            if (e.is_regular_file() && e.path().extension() == ".png") by_tile[e.path().stem().string()];

    SlideExtraction out;
    for (const auto& [tile, tile_rows] : by_tile) {
        const auto rgb = io::read_png_rgb(dir / "tiles" / (tile + ".png"));
        const auto mask = io::read_png_labels(dir / "masks" / (tile + ".png"));
        auto recs = extract_tile(tile, rgb, mask, tile_rows, opt);
        out.records.insert(out.records.end(), std::make_move_iterator(recs.begin()),
                           std::make_move_iterator(recs.end()));
        ++out.tiles;
    }
    return out;
}

inline Warnings run_extract(const ExtractConfig& cfg)
{
    const auto slides = find_slides(cfg.input, "cells.csv");
    std::vector<json> stats(slides.size());
    parallel_for(slides.size(), cfg.jobs, [&](std::size_t i) {
        const auto ex = extract_slide_dir(cfg.input / slides[i], cfg.options);
        io::write_atomic(cfg.output / slides[i] / "cell_features.csv", io::cell_features_csv(ex.records));
        std::size_t computed = 0, degenerate = 0;
        for (const auto& r : ex.records) {
            computed += r.computed;
            degenerate += r.computed && r.degenerate;
        }
        stats[i] = {{"slide_id", slides[i]},
                    {"tiles", ex.tiles},
                    {"cells", ex.records.size()},
                    {"computed", computed},
                    {"degenerate", degenerate}};
    });

    Warnings warn;
    for (const auto& s : stats)
        if (s["degenerate"].get<std::size_t>() > 0)
            warn.push_back(s["slide_id"].get<std::string>() + ": " + std::to_string(s["degenerate"].get<std::size_t>()) +
                           " degenerate cells");
    json meta{{"schema_version", kArtifactSchemaVersion}, {"all_cells", cfg.options.all_cells}, {"slides", stats}};
    io::write_atomic(cfg.output / "extract_meta.json", meta.dump(2) + "\n");
    write_run_meta(cfg.output, "extract",
                   {{"all_cells", cfg.options.all_cells},
                    {"canny", {{"sigma", cfg.options.canny.sigma},
                               {"low_ratio", cfg.options.canny.low_ratio},
                               {"high_ratio", cfg.options.canny.high_ratio}}},
                    {"jobs", cfg.jobs}},
                   {cfg.input});
    return warn;
}

// aggregate ------------------------------------------------------------------

struct AggregateConfig {
    fs::path input; // extract output: <slide>/cell_features.csv
    fs::path output;
    std::optional<fs::path> manifest; // labels; slides without a manifest row fail
    AggregationConfig aggregation;
    unsigned jobs = 1;
};

inline Warnings run_aggregate(const AggregateConfig& cfg)
{
    cfg.aggregation.validate();
    const auto extract_meta = cfg.input / "extract_meta.json";
    if (fs::exists(extract_meta)) check_schema_version(read_json(extract_meta), extract_meta);
    const auto slides = find_slides(cfg.input, "cell_features.csv");
    Cohort cohort;
    cohort.slides.resize(slides.size());
    parallel_for(slides.size(), cfg.jobs, [&](std::size_t i) {
        const auto p = cfg.input / slides[i] / "cell_features.csv";
        const auto recs = io::parse_cell_features_csv(io::read_text(p), p.string());
        cohort.slides[i] = aggregate_slide(slides[i], recs, cfg.aggregation);
    });
    std::vector<fs::path> inputs{cfg.input};
    if (cfg.manifest) {
        cohort = io::label_cohort(cohort, io::read_manifest(*cfg.manifest));
        inputs.push_back(*cfg.manifest);
    }

    Warnings warn;
    json per = json::array();
    for (const auto& s : cohort.slides) {
        json counts = json::object();
        for (const auto& [k, v] : s.provenance.cell_counts) counts[k] = v;
        per.push_back({{"slide_id", s.slide_id},
                       {"subsample_seed", s.provenance.subsample_seed},
                       {"cell_counts", counts},
                       {"warnings", s.provenance.warnings}});
        for (const auto& w : s.provenance.warnings) warn.push_back(s.slide_id + ": " + w);
    }
    const auto& a = cfg.aggregation;
    const json config{{"seed", a.seed},
                      {"subsample_fraction", a.subsample_fraction},
                      {"min_cells_full_use", a.min_cells_full_use},
                      {"clip", {a.clip_low, a.clip_high}},
                      {"min_usable_cells", a.min_usable_cells},
                      {"jobs", cfg.jobs}};
    json meta{{"schema_version", kArtifactSchemaVersion}, {"config", config}, {"slides", per}};
    io::write_atomic(cfg.output / "slide_features.csv", io::slide_features_csv(cohort));
    io::write_atomic(cfg.output / "aggregation_meta.json", meta.dump(2) + "\n");
    write_run_meta(cfg.output, "aggregate", config, inputs);
    return warn;
}

// shared cohort loading ------------------------------------------------------

struct CohortInput {
    fs::path features; // slide_features.csv
    std::optional<fs::path> manifest;
    std::optional<Split> split; // keep only this split (needs a manifest)
};

inline Cohort load_cohort(const CohortInput& in)
{
    require_exists(in.features, "slide features");
    auto cohort = io::read_slide_features(in.features);
    if (in.manifest) {
        require_exists(*in.manifest, "manifest");
        cohort = io::label_cohort(cohort, io::read_manifest(*in.manifest), in.split);
    } else if (in.split) {
        throw SchemaError("selecting a split requires a manifest");
    }
    if (cohort.slides.empty()) throw SchemaError("no slides selected from " + in.features.string());
    return cohort;
}

inline std::vector<fs::path> input_paths(const CohortInput& in)
{
    std::vector<fs::path> out{in.features};
    if (in.manifest) out.push_back(*in.manifest);
    return out;
}

inline json cohort_config(const CohortInput& in)
{
    return {{"split", in.split ? std::string(to_string(*in.split)) : std::string("all")}};
}

// univariate -----------------------------------------------------------------

struct UnivariateConfig {
    CohortInput input;
    fs::path output;
    ScreenConfig screen;
    bool plots = false;
};

inline std::string univariate_csv(const ScreenResult& res, const std::vector<std::string>& features)
{
    io::CsvWriter w;
    w.row(std::vector<std::string>{"cell", "family", "feature", "statistic", "direction", "q_wt_vs_amp",
                                   "q_wt_vs_exon14", "feature_name", "direction_wt_vs_amp", "u_wt_vs_amp",
                                   "p_wt_vs_amp", "direction_wt_vs_exon14", "u_wt_vs_exon14", "p_wt_vs_exon14"});
    for (const auto& f : features) {
        const auto* a = res.find(f, Comparison::wt_vs_amp);
        const auto* e = res.find(f, Comparison::wt_vs_exon14);
        // Overall direction comes from the stronger of the two comparisons.
        const UnivariateResult* lead = a;
        if (!lead || (e && e->q_value < a->q_value)) lead = e;
        name_fields(w, f);
        w.field(lead ? to_string(lead->direction) : std::string_view{});
        w.field(a ? a->q_value : kNaN).field(e ? e->q_value : kNaN).field(f);
        for (const auto* r : {a, e}) {
            w.field(r ? to_string(r->direction) : std::string_view{});
            w.field(r ? r->u_statistic : kNaN).field(r ? r->p_value : kNaN);
        }
        w.end_row();
    }
    return w.str();
}

inline std::string heatmap_csv(const std::vector<HeatmapRow>& rows)
{
    io::CsvWriter w;
    w.row(std::vector<std::string>{"feature_name", "band", "wild_type", "amplified", "exon14", "scale_source"});
    for (const auto& r : rows)
        w.field(r.feature_name).field(to_string(r.band)).field(r.wild_type).field(r.amplified).field(r.exon14)
            .field(to_string(r.scale_source)).end_row();
    return w.str();
}

inline std::string heatmap_svg_from_csv(const io::CsvTable& t)
{
    const auto cn = t.column("feature_name"), cb = t.column("band"), cw = t.column("wild_type"),
               ca = t.column("amplified"), ce = t.column("exon14");
    std::vector<std::string> rows;
    std::vector<std::vector<double>> vals;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        rows.push_back(row[cb] + "  " + row[cn]);
        vals.push_back({io::parse_double(row[cw], t.where(r)), io::parse_double(row[ca], t.where(r)),
                        io::parse_double(row[ce], t.where(r))});
    }
    return svg::heatmap("Normalized group medians", rows, {"wild type", "amplified", "exon 14"}, vals);
}

inline Warnings run_univariate(const UnivariateConfig& cfg)
{
    const auto cohort = load_cohort(cfg.input);
    const auto res = run_univariate_screen(cohort, cfg.screen);
    io::write_atomic(cfg.output / "univariate.csv", univariate_csv(res, cohort.feature_names));
    const auto heat = heatmap_csv(res.heatmap);
    io::write_atomic(cfg.output / "heatmap.csv", heat);
    if (cfg.plots) io::write_atomic(cfg.output / "heatmap.svg", heatmap_svg_from_csv(io::parse_csv(heat, "heatmap.csv")));
    auto config = cohort_config(cfg.input);
    config["include_dual"] = cfg.screen.include_dual;
    config["alpha"] = cfg.screen.alpha;
    config["min_group_size"] = cfg.screen.min_group_size;
    config["plots"] = cfg.plots;
    write_run_meta(cfg.output, "univariate", config, input_paths(cfg.input));
    return res.warnings;
}

// split ----------------------------------------------------------------------

struct SplitConfig {
    fs::path manifest;
    fs::path output;
    double train_fraction = 0.75;
    std::uint64_t seed = 0;
};

/// Chi-squared test of a grouping against the split, as in a cohort table.
inline json balance_test(const std::vector<ManifestRow>& rows, bool by_label)
{
    std::map<std::string, std::array<std::size_t, 2>> counts;
    for (const auto& r : rows) ++counts[by_label ? std::string(to_string(r.label)) : r.procedure_type][r.split == Split::train ? 0 : 1];
    json out{{"groups", json::object()}};
    std::vector<std::vector<double>> table;
    for (const auto& [k, v] : counts) {
        out["groups"][k] = {{"train", v[0]}, {"holdout", v[1]}};
        table.push_back({static_cast<double>(v[0]), static_cast<double>(v[1])});
    }
    if (table.size() < 2) {
        out["chi_squared"] = nullptr;
        return out;
    }
    try {
        const auto r = chi_squared_independence(table);
        out["chi_squared"] = {{"statistic", r.statistic}, {"dof", r.dof}, {"p_value", r.p_value}};
    } catch (const std::exception&) {
        out["chi_squared"] = nullptr; // a zero margin makes the test undefined
    }
    return out;
}

inline Warnings run_split(const SplitConfig& cfg)
{
    require_exists(cfg.manifest, "manifest");
    auto rows = io::read_manifest(cfg.manifest);
    const auto s = stratified_split(rows, cfg.train_fraction, cfg.seed);
    for (auto i : s.train) rows[i].split = Split::train;
    for (auto i : s.holdout) rows[i].split = Split::holdout;
    io::write_atomic(cfg.output / "manifest.csv", io::manifest_csv(rows));
    json balance{{"schema_version", kArtifactSchemaVersion},
                 {"n_train", s.train.size()},
                 {"n_holdout", s.holdout.size()},
                 {"label", balance_test(rows, true)},
                 {"procedure_type", balance_test(rows, false)}};
    io::write_atomic(cfg.output / "split_balance.json", balance.dump(2) + "\n");
    write_run_meta(cfg.output, "split", {{"train_fraction", cfg.train_fraction}, {"seed", cfg.seed}}, {cfg.manifest});
    return {};
}

// train-cv -------------------------------------------------------------------

struct TrainCvConfig {
    CohortInput input{{}, {}, Split::train};
    fs::path output;
    std::vector<Candidate> candidates = default_candidates();
    NestedCvConfig cv;
    bool plots = false;
};

inline json tuning_config(const TuningConfig& t)
{
    return {{"inner_design", t.inner.to_string()},
            {"n_lambda", t.n_lambda},
            {"lambda_ratio", t.lambda_ratio},
            {"gammas", t.gammas},
            {"min_unique", t.transform.min_unique}};
}

inline std::string cv_report_csv(const NestedCvResult& res)
{
    io::CsvWriter w;
    w.row(std::vector<std::string>{"candidate", "relaxed", "weights", "repeat", "fold", "lambda", "gamma", "inner_auc",
                                   "auc", "n_train", "n_validation", "n_nonzero"});
    for (const auto& rep : res.reports)
        for (const auto& f : rep.folds) {
            const auto nz = std::count_if(f.coefficients.begin(), f.coefficients.end(), [](double b) { return b != 0.0; });
            w.field(rep.candidate.name()).field(rep.candidate.relaxed).field(rep.candidate.weights.to_string());
            w.field(f.repeat).field(f.fold).field(f.lambda).field(f.gamma).field(f.inner_auc).field(f.auc);
            w.field(f.n_train).field(f.n_validation).field(static_cast<std::size_t>(nz)).end_row();
        }
    return w.str();
}

inline std::string cv_summary_csv(const NestedCvResult& res)
{
    io::CsvWriter w;
    w.row(std::vector<std::string>{"candidate", "relaxed", "weights", "mean_auc", "sd_auc", "winner"});
    for (std::size_t c = 0; c < res.reports.size(); ++c) {
        const auto& rep = res.reports[c];
        w.field(rep.candidate.name()).field(rep.candidate.relaxed).field(rep.candidate.weights.to_string());
        w.field(rep.mean_auc).field(rep.sd_auc).field(c == res.winner).end_row();
    }
    return w.str();
}

inline std::string stability_csv(const std::vector<StabilityEntry>& entries)
{
    io::CsvWriter w;
    w.row(std::vector<std::string>{"cell", "family", "feature", "statistic", "feature_name", "q25", "median", "q75",
                                   "selected", "sign"});
    for (const auto& e : entries) {
        name_fields(w, e.feature_name).field(e.feature_name).field(e.q25).field(e.median).field(e.q75);
        w.field(e.selected).field(e.sign).end_row();
    }
    return w.str();
}

inline std::string cv_auc_svg(const io::CsvTable& t)
{
    const auto cn = t.column("candidate"), cm = t.column("mean_auc");
    std::vector<std::string> labels;
    std::vector<double> values;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        labels.push_back(t.rows[r][cn]);
        values.push_back(io::parse_double(t.rows[r][cm], t.where(r)) - 0.5);
    }
    return svg::bar_chart("Mean outer-CV AUC minus 0.5 per candidate", labels, values);
}

inline Warnings run_train_cv(const TrainCvConfig& cfg)
{
    const auto cohort = load_cohort(cfg.input);
    const auto res = nested_cv(cohort, cfg.candidates, cfg.cv);
    const auto& win = res.reports[res.winner];
    io::write_atomic(cfg.output / "cv_report.csv", cv_report_csv(res));
    const auto summary = cv_summary_csv(res);
    io::write_atomic(cfg.output / "cv_summary.csv", summary);
    Warnings warn;
    // Quartile-based selection is undefined on very few outer folds.
    if (win.folds.size() >= 4)
        io::write_atomic(cfg.output / "stability.csv", stability_csv(stability_select(win)));
    else
        warn.push_back("fewer than 4 outer folds: stability.csv not written");
    if (cfg.plots) io::write_atomic(cfg.output / "cv_auc.svg", cv_auc_svg(io::parse_csv(summary, "cv_summary.csv")));

    std::set<std::string> seen;
    for (const auto& rep : res.reports)
        for (const auto& f : rep.folds)
            for (const auto& w : f.warnings)
                if (seen.insert(w).second) warn.push_back(w);
    auto config = cohort_config(cfg.input);
    json cands = json::array();
    for (const auto& c : cfg.candidates) cands.push_back(c.name());
    config["candidates"] = cands;
    config["outer_design"] = cfg.cv.outer.to_string();
    config["tuning"] = tuning_config(cfg.cv.tuning);
    config["seed"] = cfg.cv.seed;
    config["jobs"] = cfg.cv.jobs;
    config["plots"] = cfg.plots;
    write_run_meta(cfg.output, "train-cv", config, input_paths(cfg.input));
    return warn;
}

/// The winner row of a cv_summary.csv.
inline Candidate read_cv_winner(const fs::path& path)
{
    require_exists(path, "CV summary");
    const auto t = io::parse_csv(io::read_text(path), path.string());
    const auto cr = t.column("relaxed"), cw = t.column("weights"), cwin = t.column("winner");
    for (std::size_t r = 0; r < t.rows.size(); ++r)
        if (io::parse_bool(t.rows[r][cwin], t.where(r)))
            return {io::parse_bool(t.rows[r][cr], t.where(r)), parse_class_weights(t.rows[r][cw])};
    throw SchemaError(path.string() + ": no winner row");
}

// train-final ----------------------------------------------------------------

struct TrainFinalConfig {
    CohortInput input{{}, {}, Split::train};
    fs::path output;
    Candidate candidate;
    std::optional<fs::path> cv_summary; // source of the candidate, if given
    TuningConfig tuning;
    std::uint64_t seed = 0;
};

inline std::string coefficients_csv(const SparseModel& m)
{
    std::vector<std::size_t> order;
    for (std::size_t j = 0; j < m.coefficients.size(); ++j)
        if (m.coefficients[j] != 0.0) order.push_back(j);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return m.coefficients[a] > m.coefficients[b]; });
    io::CsvWriter w;
    w.row(std::vector<std::string>{"cell", "family", "feature", "statistic", "coefficient", "feature_name"});
    for (auto j : order) name_fields(w, m.feature_names[j]).field(m.coefficients[j]).field(m.feature_names[j]).end_row();
    return w.str();
}

inline Warnings run_train_final(const TrainFinalConfig& cfg)
{
    if (!cfg.input.manifest) throw SchemaError("train-final needs a manifest");
    const auto cohort = load_cohort(cfg.input);
    const Candidate cand = cfg.cv_summary ? read_cv_winner(*cfg.cv_summary) : cfg.candidate;
    const auto fitted = fit_tuned(cohort, cand, cfg.tuning, cfg.seed);
    auto model = make_sparse_model(fitted, cfg.tuning, cohort);
    model.training_manifest_sha256 = io::sha256_file(*cfg.input.manifest);

    auto config = cohort_config(cfg.input);
    config["candidate"] = cand.name();
    config["candidate_source"] = cfg.cv_summary ? "cv_summary" : "flags";
    config["tuning"] = tuning_config(cfg.tuning);
    config["seed"] = cfg.seed;
    auto inputs = input_paths(cfg.input);
    if (cfg.cv_summary) inputs.push_back(*cfg.cv_summary);
    model.provenance = {{"tool", "metmorph"}, {"tool_version", kToolVersion}, {"command", "train-final"},
                        {"config", config}, {"features_sha256", io::sha256_file(cfg.input.features)}};

    io::write_atomic(cfg.output / "model.json", to_json(model).dump(2) + "\n");
    io::write_atomic(cfg.output / "coefficients.csv", coefficients_csv(model));
    write_run_meta(cfg.output, "train-final", config, inputs);
    return fitted.warnings;
}

inline SparseModel read_model(const fs::path& path)
{
    require_exists(path, "model file");
    return model_from_json(read_json(path));
}

// predict --------------------------------------------------------------------

struct PredictConfig {
    fs::path model;
    CohortInput input;
    fs::path output;
    bool plots = false;
};

inline std::string roc_csv(const std::vector<RocPoint>& pts)
{
    io::CsvWriter w;
    w.row(std::vector<std::string>{"threshold", "fpr", "tpr"});
    for (const auto& p : pts) w.field(p.threshold).field(p.fpr).field(p.tpr).end_row();
    return w.str();
}

inline std::string pr_csv(const PrCurve& pr)
{
    io::CsvWriter w;
    w.row(std::vector<std::string>{"threshold", "recall", "precision"});
    for (const auto& p : pr.points) w.field(p.threshold).field(p.recall).field(p.precision).end_row();
    return w.str();
}

inline std::vector<std::pair<double, double>> curve_points(const io::CsvTable& t, const char* x, const char* y)
{
    const auto cx = t.column(x), cy = t.column(y);
    std::vector<std::pair<double, double>> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r)
        out.emplace_back(io::parse_double(t.rows[r][cx], t.where(r)), io::parse_double(t.rows[r][cy], t.where(r)));
    return out;
}

inline Warnings run_predict(const PredictConfig& cfg)
{
    const auto model = read_model(cfg.model);
    const auto cohort = load_cohort(cfg.input);
    const auto prob = model.predict(cohort);

    io::CsvWriter w;
    w.row(std::vector<std::string>{"slide_id", "label", "probability"});
    bool all_labelled = true;
    std::set<int> classes;
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        const auto& s = cohort.slides[i];
        w.field(s.slide_id).field(s.label ? to_string(*s.label) : std::string_view{}).field(prob[i]).end_row();
        all_labelled = all_labelled && s.label.has_value();
        if (s.label) classes.insert(is_altered(*s.label));
    }
    io::write_atomic(cfg.output / "predictions.csv", w.str());

    Warnings warn;
    if (all_labelled && classes.size() == 2) {
        // Only a declared holdout is audited for overlap with the training set;
        // scoring the training cohort itself is a legitimate consistency check.
        auto audited = model;
        const bool holdout = cfg.input.split == Split::holdout;
        if (!holdout) audited.training_slide_ids.clear();
        const auto r = evaluate_holdout(audited, cohort);
        auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
        json metrics{{"schema_version", kArtifactSchemaVersion},
                     {"n", cohort.size()},
                     {"auc", r.auc},
                     {"average_precision", r.average_precision},
                     {"auc_wt_vs_amp", opt(r.auc_amplified)},
                     {"auc_wt_vs_exon14", opt(r.auc_exon14)},
                     {"counts", {{"wild_type", r.n_wild_type},
                                 {"amplified", r.n_amplified},
                                 {"exon14", r.n_exon14},
                                 {"amplified_and_exon14", r.n_dual}}},
                     {"model_in_sample_auc", model.in_sample_auc}};
        io::write_atomic(cfg.output / "metrics.json", metrics.dump(2) + "\n");
        const auto roc = roc_csv(r.roc), pr = pr_csv(r.pr);
        io::write_atomic(cfg.output / "roc_points.csv", roc);
        io::write_atomic(cfg.output / "pr_points.csv", pr);
        if (cfg.plots) {
            io::write_atomic(cfg.output / "roc.svg",
                             svg::curve_plot("ROC (AUC " + io::format_double(std::round(r.auc * 1000) / 1000) + ")",
                                             "False positive rate", "True positive rate",
                                             curve_points(io::parse_csv(roc), "fpr", "tpr"), true));
            io::write_atomic(cfg.output / "pr.svg",
                             svg::curve_plot("Precision-recall (AP " +
                                                 io::format_double(std::round(r.average_precision * 1000) / 1000) + ")",
                                             "Recall", "Precision", curve_points(io::parse_csv(pr), "recall", "precision"),
                                             false));
        }
    } else {
        warn.push_back("labels missing or one class only: no metrics written");
    }
    auto config = cohort_config(cfg.input);
    config["plots"] = cfg.plots;
    auto inputs = input_paths(cfg.input);
    inputs.insert(inputs.begin(), cfg.model);
    write_run_meta(cfg.output, "predict", config, inputs);
    return warn;
}

// report ---------------------------------------------------------------------

struct ReportConfig {
    std::vector<fs::path> inputs; // artifact directories, searched in order
    fs::path output;
};

/// Renders every figure whose source artifact is found: ROC and PR curves
/// from predict, coefficients from a model, the univariate heatmap and the
/// CV candidate comparison. CSV point data is written next to each SVG.
inline Warnings run_report(const ReportConfig& cfg)
{
    auto find = [&](const char* name) -> std::optional<fs::path> {
        for (const auto& d : cfg.inputs)
            if (fs::exists(d / name)) return d / name;
        return std::nullopt;
    };
    for (const auto& d : cfg.inputs) require_exists(d, "report input");

    Warnings warn;
    std::vector<fs::path> used;
    json summary{{"schema_version", kArtifactSchemaVersion}, {"figures", json::array()}};
    auto emit = [&](const fs::path& src, const std::string& csv_name, const std::string& csv, const std::string& svg_name,
                    const std::string& svg) {
        io::write_atomic(cfg.output / csv_name, csv);
        io::write_atomic(cfg.output / svg_name, svg);
        summary["figures"].push_back(svg_name);
        used.push_back(src);
    };

    if (auto p = find("roc_points.csv")) {
        const auto text = io::read_text(*p);
        emit(*p, "roc_points.csv", text, "roc.svg",
             svg::curve_plot("ROC", "False positive rate", "True positive rate",
                             curve_points(io::parse_csv(text, p->string()), "fpr", "tpr"), true));
    }
    if (auto p = find("pr_points.csv")) {
        const auto text = io::read_text(*p);
        emit(*p, "pr_points.csv", text, "pr.svg",
             svg::curve_plot("Precision-recall", "Recall", "Precision",
                             curve_points(io::parse_csv(text, p->string()), "recall", "precision"), false));
    }
    std::optional<SparseModel> model;
    if (auto p = find("model.json")) {
        model = read_model(*p);
        std::vector<std::string> labels;
        std::vector<double> values;
        const auto csv = coefficients_csv(*model);
        const auto t = io::parse_csv(csv, "coefficients.csv");
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            labels.push_back(t.rows[r][t.column("feature_name")]);
            values.push_back(io::parse_double(t.rows[r][t.column("coefficient")], t.where(r)));
        }
        emit(*p, "coefficients.csv", csv, "coefficients.svg",
             svg::bar_chart("Final model coefficients", labels, values));
        summary["n_nonzero"] = model->nonzero_count();
        summary["in_sample_auc"] = model->in_sample_auc;
    }
    if (auto p = find("heatmap.csv")) {
        const auto text = io::read_text(*p);
        emit(*p, "heatmap.csv", text, "heatmap.svg", heatmap_svg_from_csv(io::parse_csv(text, p->string())));
    }
    if (auto p = find("cv_summary.csv")) {
        const auto text = io::read_text(*p);
        emit(*p, "cv_summary.csv", text, "cv_auc.svg", cv_auc_svg(io::parse_csv(text, p->string())));
    }
    if (auto p = find("stability.csv"); p && model) {
        // Rank agreement between CV median coefficients and the final model,
        // over features nonzero in either.
        const auto t = io::parse_csv(io::read_text(*p), p->string());
        std::map<std::string, double> final_coef;
        for (std::size_t j = 0; j < model->feature_names.size(); ++j) final_coef[model->feature_names[j]] = model->coefficients[j];
        std::vector<double> a, b;
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            const double med = io::parse_double(t.rows[r][t.column("median")], t.where(r));
            const auto it = final_coef.find(t.rows[r][t.column("feature_name")]);
            const double fin = it == final_coef.end() ? 0.0 : it->second;
            if (med == 0.0 && fin == 0.0) continue;
            a.push_back(med);
            b.push_back(fin);
        }
        const auto rho = a.size() >= 3 ? spearman_rho(a, b) : std::nullopt;
        summary["stability_spearman"] = rho ? json(*rho) : json(nullptr);
        summary["stability_spearman_n"] = a.size();
        used.push_back(*p);
    }
    if (used.empty()) throw SchemaError("report: no known artifacts in the input directories");
    io::write_atomic(cfg.output / "report.json", summary.dump(2) + "\n");
    write_run_meta(cfg.output, "report", json::object(), used);
    return warn;
}

// synth ----------------------------------------------------------------------

struct SynthConfig {
    synth::GeneratorSpec spec;
    std::optional<fs::path> spec_file; // recorded as an input when given
    fs::path output;
    unsigned jobs = 1;
};

inline synth::GeneratorSpec read_generator_spec(const fs::path& path)
{
    require_exists(path, "generator spec");
    return synth::spec_from_json(read_json(path));
}

inline Warnings run_synth(const SynthConfig& cfg)
{
    const auto s = synth::write_corpus(cfg.spec, cfg.output, cfg.jobs);
    std::vector<fs::path> inputs;
    if (cfg.spec_file) inputs.push_back(*cfg.spec_file);
    write_run_meta(cfg.output, "synth", {{"spec", synth::to_json(cfg.spec)}, {"jobs", cfg.jobs}}, inputs);
    return s.warnings;
}

} // namespace metmorph::pipeline
