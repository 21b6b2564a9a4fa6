#pragma once

#include <json.hpp>

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "metmorph/cohort.hpp"
#include "metmorph/error.hpp"

namespace metmorph::synth {

/// Slide-level morphology dials. Each is a Gaussian latent per slide and
/// cell type; planted effects move its mean for one label class.
enum class Knob { size, size_skew, elongation, red, hue, texture };

inline constexpr std::array<Knob, 6> kKnobs{Knob::size, Knob::size_skew, Knob::elongation,
                                            Knob::red,  Knob::hue,       Knob::texture};

inline std::string_view to_string(Knob k) noexcept
{
    switch (k) {
    case Knob::size: return "size";
    case Knob::size_skew: return "size_skew";
    case Knob::elongation: return "elongation";
    case Knob::red: return "red";
    case Knob::hue: return "hue";
    case Knob::texture: return "texture";
    }
    return "size";
}

inline Knob parse_knob(std::string_view s)
{
    for (auto k : kKnobs)
        if (to_string(k) == s) return k;
    throw SchemaError("unknown generator knob '" + std::string(s) + "'");
}

/// Slide feature that moves with a knob, for the given cell type.
inline std::string planted_feature(Knob k, std::string_view cell_type)
{
    std::string f;
    switch (k) {
    case Knob::size: f = "shape.area.mean"; break;
    case Knob::size_skew: f = "shape.area.skewness"; break;
    case Knob::elongation: f = "shape.bbox_aspect_ratio.mean"; break;
    case Knob::red: f = "color.red_mean.mean"; break;
    case Knob::hue: f = "color.hue_mean.mean"; break;
    case Knob::texture: f = "texture.haralick_contrast.mean"; break;
    }
    return std::string(cell_type) + "." + f;
}

/// Slide-level Gaussian: mean and between-slide standard deviation.
struct Latent {
    double mean = 0.0;
    double slide_sd = 0.0;
};

/// Per cell class. Radii in pixels, colors in 8-bit units, hue in turns.
struct ClassMorphology {
    std::array<double, 3> base_rgb{120, 70, 150};
    Latent log_radius{1.8, 0.08};      // log geometric-mean semi-axis
    Latent log_dispersion{-1.9, 0.25}; // log of the per-cell sd of log radius
    Latent elongation{0.25, 0.06};     // mean log axis ratio
    double elongation_cell_sd = 0.15;
    Latent red{0.0, 6.0};             // additive red offset
    Latent hue{0.0, 0.01};            // hue rotation
    Latent log_texture{2.3, 0.35};    // log of per-pixel noise sd
    double color_jitter_sd = 4.0;

    Latent& latent(Knob k)
    {
        switch (k) {
        case Knob::size: return log_radius;
        case Knob::size_skew: return log_dispersion;
        case Knob::elongation: return elongation;
        case Knob::red: return red;
        case Knob::hue: return hue;
        case Knob::texture: return log_texture;
        }
        return log_radius;
    }
    const Latent& latent(Knob k) const { return const_cast<ClassMorphology*>(this)->latent(k); }
};

struct PlantedEffect {
    Knob knob = Knob::size;
    std::string cell_type = "tumor"; // tumor or lymph
    MetLabel label = MetLabel::amplified;
    double effect_mad = 0.0; // shift of the latent mean in units of its MAD
};

/// Raw MAD of a Gaussian in standard deviations.
inline constexpr double kGaussianMad = 0.6744897501960817;

struct GeneratorSpec {
    std::uint64_t seed = 1;
    std::array<std::size_t, 4> n_slides{80, 10, 10, 0}; // indexed like kAllLabels
    int cells_min = 400;
    int cells_max = 600;
    int tile_size = 256;
    int cells_per_tile = 90;
    int placement_attempts = 60;
    double tumor_fraction = 0.6, tumor_fraction_sd = 0.05;
    double lymph_fraction = 0.3, lymph_fraction_sd = 0.05;
    double til_fraction = 0.7, til_fraction_sd = 0.1; // lymphocytes inside the tumor region
    double other_in_region = 0.5;
    std::vector<std::pair<std::string, double>> procedure_types{{"biopsy", 0.6}, {"resection", 0.4}};
    std::array<double, 3> background_rgb{230, 170, 200};
    double background_noise_sd = 4.0;
    ClassMorphology tumor;
    ClassMorphology lymph{{70, 40, 120}, {1.5, 0.06},  {-1.6, 0.4},  {0.08, 0.04}, 0.08,
                          {0.0, 6.0},    {0.0, 0.01},  {2.0, 0.2},   3.0};
    ClassMorphology other{{175, 110, 170}, {1.3, 0.0}, {-2.0, 0.0}, {0.9, 0.0}, 0.2,
                          {0.0, 0.0},      {0.0, 0.0}, {1.8, 0.0},  4.0};
    std::vector<PlantedEffect> effects;

    std::size_t total_slides() const
    {
        std::size_t n = 0;
        for (auto k : n_slides) n += k;
        return n;
    }

    const ClassMorphology& morphology(std::string_view cell_type) const
    {
        if (cell_type == "tumor") return tumor;
        if (cell_type == "lymph") return lymph;
        return other;
    }

    /// Effects that apply to a label; dual-alteration slides inherit both
    /// single-alteration effect sets.
    std::vector<PlantedEffect> effects_for(MetLabel label) const
    {
        std::vector<PlantedEffect> out;
        for (const auto& e : effects) {
            const bool inherited = label == MetLabel::amplified_and_exon14 &&
                                   (e.label == MetLabel::amplified || e.label == MetLabel::exon14);
            if (e.label == label || inherited) out.push_back(e);
        }
        return out;
    }

    void validate() const
    {
        if (total_slides() == 0) throw SchemaError("generator: no slides requested");
        if (cells_min < 1 || cells_max < cells_min) throw SchemaError("generator: bad cells_min/cells_max");
        if (tile_size < 32) throw SchemaError("generator: tile_size must be >= 32");
        if (cells_per_tile < 1 || placement_attempts < 1) throw SchemaError("generator: bad placement settings");
        if (procedure_types.empty()) throw SchemaError("generator: no procedure types");
        for (const auto& e : effects) {
            if (e.cell_type != "tumor" && e.cell_type != "lymph")
                throw SchemaError("generator: effects target tumor or lymph cells");
            if (e.label == MetLabel::wild_type) throw SchemaError("generator: effects target altered labels");
            if (!(morphology(e.cell_type).latent(e.knob).slide_sd > 0.0))
                throw SchemaError("generator: effect on a knob without between-slide variation");
        }
    }
};

// JSON ---------------------------------------------------------------------

inline nlohmann::ordered_json to_json(const Latent& l) { return {l.mean, l.slide_sd}; }

inline Latent latent_from_json(const nlohmann::ordered_json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

inline nlohmann::ordered_json to_json(const ClassMorphology& m)
{
    return {{"base_rgb", m.base_rgb},
            {"log_radius", to_json(m.log_radius)},
            {"log_dispersion", to_json(m.log_dispersion)},
            {"elongation", to_json(m.elongation)},
            {"elongation_cell_sd", m.elongation_cell_sd},
            {"red", to_json(m.red)},
            {"hue", to_json(m.hue)},
            {"log_texture", to_json(m.log_texture)},
            {"color_jitter_sd", m.color_jitter_sd}};
}

inline ClassMorphology morphology_from_json(const nlohmann::ordered_json& j, ClassMorphology m)
{
    if (j.contains("base_rgb")) m.base_rgb = j.at("base_rgb").get<std::array<double, 3>>();
    auto lat = [&](const char* key, Latent& dst) {
        if (j.contains(key)) dst = latent_from_json(j.at(key));
    };
    lat("log_radius", m.log_radius);
    lat("log_dispersion", m.log_dispersion);
    lat("elongation", m.elongation);
    lat("red", m.red);
    lat("hue", m.hue);
    lat("log_texture", m.log_texture);
    if (j.contains("elongation_cell_sd")) m.elongation_cell_sd = j.at("elongation_cell_sd").get<double>();
    if (j.contains("color_jitter_sd")) m.color_jitter_sd = j.at("color_jitter_sd").get<double>();
    return m;
}

inline nlohmann::ordered_json to_json(const GeneratorSpec& s)
{
    nlohmann::ordered_json j;
    j["seed"] = s.seed;
    nlohmann::ordered_json n = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < kAllLabels.size(); ++i) n[std::string(to_string(kAllLabels[i]))] = s.n_slides[i];
    j["n_slides"] = n;
    j["cells_per_slide"] = {s.cells_min, s.cells_max};
    j["tile_size"] = s.tile_size;
    j["cells_per_tile"] = s.cells_per_tile;
    j["placement_attempts"] = s.placement_attempts;
    j["class_mix"] = {{"tumor", {s.tumor_fraction, s.tumor_fraction_sd}},
                      {"lymph", {s.lymph_fraction, s.lymph_fraction_sd}},
                      {"til", {s.til_fraction, s.til_fraction_sd}},
                      {"other_in_region", s.other_in_region}};
    nlohmann::ordered_json proc = nlohmann::ordered_json::array();
    for (const auto& [name, p] : s.procedure_types) proc.push_back({{"name", name}, {"probability", p}});
    j["procedure_types"] = proc;
    j["background"] = {{"rgb", s.background_rgb}, {"noise_sd", s.background_noise_sd}};
    j["morphology"] = {{"tumor", to_json(s.tumor)}, {"lymph", to_json(s.lymph)}, {"other", to_json(s.other)}};
    nlohmann::ordered_json eff = nlohmann::ordered_json::array();
    for (const auto& e : s.effects)
        eff.push_back({{"knob", to_string(e.knob)},
                       {"cell_type", e.cell_type},
                       {"label", to_string(e.label)},
                       {"effect_mad", e.effect_mad}});
    j["effects"] = eff;
    return j;
}

/// Missing keys keep their defaults.
inline GeneratorSpec spec_from_json(const nlohmann::ordered_json& j)
{
    try {
        GeneratorSpec s;
        if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("n_slides"))
            for (const auto& [k, v] : j.at("n_slides").items()) {
                const auto l = parse_label(k);
                for (std::size_t i = 0; i < kAllLabels.size(); ++i)
                    if (kAllLabels[i] == l) s.n_slides[i] = v.get<std::size_t>();
            }
        if (j.contains("cells_per_slide")) {
            s.cells_min = j.at("cells_per_slide").at(0).get<int>();
            s.cells_max = j.at("cells_per_slide").at(1).get<int>();
        }
        if (j.contains("tile_size")) s.tile_size = j.at("tile_size").get<int>();
        if (j.contains("cells_per_tile")) s.cells_per_tile = j.at("cells_per_tile").get<int>();
        if (j.contains("placement_attempts")) s.placement_attempts = j.at("placement_attempts").get<int>();
        if (j.contains("class_mix")) {
            const auto& m = j.at("class_mix");
            if (m.contains("tumor")) {
                s.tumor_fraction = m.at("tumor").at(0).get<double>();
                s.tumor_fraction_sd = m.at("tumor").at(1).get<double>();
            }
            if (m.contains("lymph")) {
                s.lymph_fraction = m.at("lymph").at(0).get<double>();
                s.lymph_fraction_sd = m.at("lymph").at(1).get<double>();
            }
            if (m.contains("til")) {
                s.til_fraction = m.at("til").at(0).get<double>();
                s.til_fraction_sd = m.at("til").at(1).get<double>();
            }
            if (m.contains("other_in_region")) s.other_in_region = m.at("other_in_region").get<double>();
        }
        if (j.contains("procedure_types")) {
            s.procedure_types.clear();
            for (const auto& p : j.at("procedure_types"))
                s.procedure_types.emplace_back(p.at("name").get<std::string>(), p.at("probability").get<double>());
        }
        if (j.contains("background")) {
            const auto& b = j.at("background");
            if (b.contains("rgb")) s.background_rgb = b.at("rgb").get<std::array<double, 3>>();
            if (b.contains("noise_sd")) s.background_noise_sd = b.at("noise_sd").get<double>();
        }
        if (j.contains("morphology")) {
            const auto& m = j.at("morphology");
            if (m.contains("tumor")) s.tumor = morphology_from_json(m.at("tumor"), s.tumor);
            if (m.contains("lymph")) s.lymph = morphology_from_json(m.at("lymph"), s.lymph);
            if (m.contains("other")) s.other = morphology_from_json(m.at("other"), s.other);
        }
        if (j.contains("effects"))
            for (const auto& e : j.at("effects"))
                s.effects.push_back({parse_knob(e.at("knob").get<std::string>()), e.at("cell_type").get<std::string>(),
                                     parse_label(e.at("label").get<std::string>()), e.at("effect_mad").get<double>()});
        s.validate();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("generator spec: ") + e.what());
    }
}

} // namespace metmorph::synth
