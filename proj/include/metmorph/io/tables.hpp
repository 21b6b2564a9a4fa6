#pragma once

#include <algorithm>
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

namespace metmorph::io {

// cells.csv ----------------------------------------------------------------

inline std::string cells_csv(const std::vector<CellTableRow>& rows)
{
    CsvWriter w;
    w.row(std::vector<std::string>{"tile_id", "instance_id", "cell_class", "in_tumor_region"});
    for (const auto& r : rows)
        w.field(r.tile_id)
            .field(static_cast<std::uint64_t>(r.instance_id))
            .field(to_string(r.cell_class))
            .field(r.in_tumor_region)
            .end_row();
    return w.str();
}

inline std::vector<CellTableRow> parse_cells_csv(std::string_view text, const std::string& source)
{
    const auto t = parse_csv(text, source);
    const auto ct = t.column("tile_id"), ci = t.column("instance_id"), cc = t.column("cell_class"),
               cr = t.column("in_tumor_region");
    std::vector<CellTableRow> out;
    out.reserve(t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        CellTableRow c;
        c.tile_id = row[ct];
        const auto id = parse_uint(row[ci], t.where(r));
        if (id == 0 || id > 65535) throw SchemaError(t.where(r) + ": instance_id must be in 1..65535");
        c.instance_id = static_cast<std::uint32_t>(id);
        try {
            c.cell_class = parse_cell_class(row[cc]);
        } catch (const SchemaError& e) {
            throw SchemaError(t.where(r) + ": " + e.what());
        }
        c.in_tumor_region = parse_bool(row[cr], t.where(r));
        out.push_back(std::move(c));
    }
    return out;
}

// cell_features.csv --------------------------------------------------------

inline std::vector<std::string> cell_feature_header()
{
    std::vector<std::string> h{"tile_id", "instance_id", "cell_class", "in_tumor_region", "degenerate", "computed"};
    for (const auto& n : names::cell_feature_names()) h.push_back(n);
    return h;
}

inline std::string cell_features_csv(const std::vector<CellFeatureRecord>& records)
{
    CsvWriter w;
    w.row(cell_feature_header());
    for (const auto& r : records) {
        w.field(r.tile_id)
            .field(static_cast<std::uint64_t>(r.instance_id))
            .field(to_string(r.cell_class))
            .field(r.in_tumor_region)
            .field(r.degenerate)
            .field(r.computed);
        for (double v : r.values) w.field(v);
        w.end_row();
    }
    return w.str();
}

inline std::vector<CellFeatureRecord> parse_cell_features_csv(std::string_view text, const std::string& source)
{
    const auto t = parse_csv(text, source);
    const auto expected = cell_feature_header();
    if (t.header != expected) {
        for (const auto& name : expected) t.column(name); // names the first missing column
        throw SchemaError(source + ": columns are not in canonical order");
    }
    std::vector<CellFeatureRecord> out;
    out.reserve(t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        CellFeatureRecord c;
        c.tile_id = row[0];
        c.instance_id = static_cast<std::uint32_t>(parse_uint(row[1], t.where(r)));
        c.cell_class = parse_cell_class(row[2]);
        c.in_tumor_region = parse_bool(row[3], t.where(r));
        c.degenerate = parse_bool(row[4], t.where(r));
        c.computed = parse_bool(row[5], t.where(r));
        for (std::size_t k = 0; k < c.values.size(); ++k) c.values[k] = parse_double(row[6 + k], t.where(r));
        out.push_back(std::move(c));
    }
    return out;
}

// slide_features.csv -------------------------------------------------------

inline std::string slide_features_csv(const Cohort& cohort)
{
    CsvWriter w;
    w.field("slide_id").field("label");
    for (const auto& n : cohort.feature_names) w.field(n);
    w.end_row();
    for (const auto& s : cohort.slides) {
        w.field(s.slide_id).field(s.label ? to_string(*s.label) : std::string_view{});
        for (double v : s.values) w.field(v);
        w.end_row();
    }
    return w.str();
}

/// Reads slide features; every canonical feature must be present (extra
/// columns are kept, order follows the file).
inline Cohort parse_slide_features_csv(std::string_view text, const std::string& source, bool require_canonical = true)
{
    const auto t = parse_csv(text, source);
    const auto cid = t.column("slide_id"), cl = t.column("label");
    Cohort c;
    c.feature_names.clear();
    std::vector<std::size_t> cols;
    for (std::size_t i = 0; i < t.header.size(); ++i) {
        if (i == cid || i == cl) continue;
        c.feature_names.push_back(t.header[i]);
        cols.push_back(i);
    }
    if (require_canonical) {
        std::set<std::string> have(c.feature_names.begin(), c.feature_names.end());
        std::string missing;
        std::size_t count = 0;
        for (const auto& n : names::slide_feature_names())
            if (!have.count(n)) {
                if (count++ < 10) missing += (missing.empty() ? "" : ", ") + n;
            }
        if (count) throw SchemaError(source + ": " + std::to_string(count) + " canonical feature columns missing: " + missing);
    }
    std::set<std::string> seen;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        SlideFeatureVector s;
        s.slide_id = row[cid];
        if (!seen.insert(s.slide_id).second) throw SchemaError(t.where(r) + ": duplicate slide_id " + s.slide_id);
        if (!row[cl].empty()) {
            try {
                s.label = parse_label(row[cl]);
            } catch (const SchemaError& e) {
                throw SchemaError(t.where(r) + ": " + e.what());
            }
        }
        s.values.reserve(cols.size());
        for (auto ci : cols) s.values.push_back(parse_double(row[ci], t.where(r)));
        c.slides.push_back(std::move(s));
    }
    return c;
}

// manifest.csv -------------------------------------------------------------

inline std::string manifest_csv(const std::vector<ManifestRow>& rows)
{
    CsvWriter w;
    w.row(std::vector<std::string>{"slide_id", "met_label", "procedure_type", "split"});
    for (const auto& r : rows) w.field(r.slide_id).field(to_string(r.label)).field(r.procedure_type).field(to_string(r.split)).end_row();
    return w.str();
}

inline std::vector<ManifestRow> parse_manifest_csv(std::string_view text, const std::string& source)
{
    const auto t = parse_csv(text, source);
    const auto ci = t.column("slide_id"), cl = t.column("met_label");
    std::size_t cp = t.header.size(), cs = t.header.size();
    for (std::size_t i = 0; i < t.header.size(); ++i) {
        if (t.header[i] == "procedure_type") cp = i;
        if (t.header[i] == "split") cs = i;
    }
    std::vector<ManifestRow> out;
    std::set<std::string> seen;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        ManifestRow m;
        m.slide_id = row[ci];
        if (m.slide_id.empty()) throw SchemaError(t.where(r) + ": empty slide_id");
        if (!seen.insert(m.slide_id).second) throw SchemaError(t.where(r) + ": duplicate slide_id " + m.slide_id);
        try {
            m.label = parse_label(row[cl]);
            if (cs < row.size()) m.split = parse_split(row[cs]);
        } catch (const SchemaError& e) {
            throw SchemaError(t.where(r) + ": " + e.what());
        }
        if (cp < row.size()) m.procedure_type = row[cp];
        out.push_back(std::move(m));
    }
    return out;
}

inline std::vector<ManifestRow> read_manifest(const fs::path& path)
{
    return parse_manifest_csv(read_text(path), path.string());
}

inline Cohort read_slide_features(const fs::path& path) { return parse_slide_features_csv(read_text(path), path.string()); }

/// Attaches manifest labels to a cohort (manifest wins) and optionally keeps
/// only slides of one split.
inline Cohort label_cohort(const Cohort& in, const std::vector<ManifestRow>& manifest, std::optional<Split> only = {})
{
    std::map<std::string, const ManifestRow*> by_id;
    for (const auto& m : manifest) by_id[m.slide_id] = &m;
    Cohort out;
    out.feature_names = in.feature_names;
    for (const auto& s : in.slides) {
        const auto it = by_id.find(s.slide_id);
        if (it == by_id.end()) {
            if (only) continue;
            throw SchemaError("slide " + s.slide_id + " is not in the manifest");
        }
        if (only && it->second->split != *only) continue;
        auto copy = s;
        copy.label = it->second->label;
        out.slides.push_back(std::move(copy));
    }
    return out;
}

} // namespace metmorph::io
