#pragma once

#include <Eigen/Dense>

#include <charconv>
#include <span>
#include <string>
#include <string_view>

#include "metmorph/error.hpp"

namespace metmorph {

/// Either balanced (w_c = N / (2 n_c)) or a fixed (negative, positive) pair.
struct ClassWeightSpec {
    bool balanced = true;
    double negative = 1.0;
    double positive = 1.0;

    static ClassWeightSpec make_balanced() { return {}; }
    static ClassWeightSpec fixed(double a, double b) { return {false, a, b}; }

    std::string to_string() const
    {
        if (balanced) return "balanced";
        char buf[64];
        auto p = std::to_chars(buf, buf + sizeof buf, negative).ptr;
        *p++ = ',';
        p = std::to_chars(p, buf + sizeof buf, positive).ptr;
        return std::string(buf, p);
    }

    friend bool operator==(const ClassWeightSpec&, const ClassWeightSpec&) = default;
};

/// Parses "balanced" or "a,b".
inline ClassWeightSpec parse_class_weights(std::string_view s)
{
    if (s == "balanced") return ClassWeightSpec::make_balanced();
    const auto comma = s.find(',');
    if (comma == std::string_view::npos) throw SchemaError("class weights must be 'balanced' or 'a,b'");
    double a = 0.0, b = 0.0;
    auto r1 = std::from_chars(s.data(), s.data() + comma, a);
    auto r2 = std::from_chars(s.data() + comma + 1, s.data() + s.size(), b);
    if (r1.ec != std::errc{} || r1.ptr != s.data() + comma || r2.ec != std::errc{} || r2.ptr != s.data() + s.size())
        throw SchemaError("cannot parse class weights '" + std::string(s) + "'");
    if (!(a > 0.0 && b > 0.0)) throw SchemaError("class weights must be positive");
    return ClassWeightSpec::fixed(a, b);
}

struct ClassWeights {
    double negative = 1.0;
    double positive = 1.0;
};

inline ClassWeights compute_class_weights(std::span<const int> labels, const ClassWeightSpec& spec)
{
    std::size_t n1 = 0;
    for (int y : labels) {
        if (y != 0 && y != 1) throw SchemaError("labels must be binary");
        n1 += static_cast<std::size_t>(y);
    }
    const std::size_t n0 = labels.size() - n1;
    if (n0 == 0 || n1 == 0) throw SchemaError("class weights: both classes must be present");
    if (!spec.balanced) return {spec.negative, spec.positive};
    const double n = static_cast<double>(labels.size());
    return {n / (2.0 * static_cast<double>(n0)), n / (2.0 * static_cast<double>(n1))};
}

inline Eigen::VectorXd sample_weights(std::span<const int> labels, const ClassWeightSpec& spec)
{
    const auto cw = compute_class_weights(labels, spec);
    Eigen::VectorXd w(static_cast<Eigen::Index>(labels.size()));
    for (std::size_t i = 0; i < labels.size(); ++i)
        w[static_cast<Eigen::Index>(i)] = labels[i] ? cw.positive : cw.negative;
    return w;
}

} // namespace metmorph
