#pragma once

// Minimal hand-written SVG: line charts, horizontal bar charts and a
// diverging heatmap. Numbers go through format_double so output is stable.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "metmorph/io/csv.hpp"

namespace metmorph::svg {

inline std::string num(double v)
{
    return io::format_double(std::round(v * 100.0) / 100.0);
}

inline std::string escape(std::string_view s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

class Document {
public:
    Document(double width, double height) : w_(width), h_(height) {}

    void line(double x1, double y1, double x2, double y2, std::string_view stroke, double width = 1.0,
              std::string_view dash = {})
    {
        body_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" + num(y2) +
                 "\" stroke=\"" + std::string(stroke) + "\" stroke-width=\"" + num(width) + "\"";
        if (!dash.empty()) body_ += " stroke-dasharray=\"" + std::string(dash) + "\"";
        body_ += "/>\n";
    }

    void polyline(const std::vector<std::pair<double, double>>& pts, std::string_view stroke, double width = 1.5)
    {
        body_ += "<polyline fill=\"none\" stroke=\"" + std::string(stroke) + "\" stroke-width=\"" + num(width) +
                 "\" points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i) body_ += (i ? " " : "") + num(pts[i].first) + "," + num(pts[i].second);
        body_ += "\"/>\n";
    }

    void rect(double x, double y, double w, double h, std::string_view fill, std::string_view title = {})
    {
        body_ += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" + num(h) +
                 "\" fill=\"" + std::string(fill) + "\"";
        if (title.empty()) {
            body_ += "/>\n";
        } else {
            body_ += "><title>" + escape(title) + "</title></rect>\n";
        }
    }

    void text(double x, double y, std::string_view s, double size = 11, std::string_view anchor = "start",
              double rotate = 0.0)
    {
        body_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + num(size) +
                 "\" font-family=\"sans-serif\" text-anchor=\"" + std::string(anchor) + "\"";
        if (rotate != 0.0) body_ += " transform=\"rotate(" + num(rotate) + " " + num(x) + " " + num(y) + ")\"";
        body_ += ">" + escape(s) + "</text>\n";
    }

    std::string str() const
    {
        return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w_) + "\" height=\"" + num(h_) +
               "\" viewBox=\"0 0 " + num(w_) + " " + num(h_) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" +
               body_ + "</svg>\n";
    }

private:
    double w_, h_;
    std::string body_;
};

/// Unit-square curve plot (ROC or PR) with axes and optional chance line.
inline std::string curve_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                              const std::vector<std::pair<double, double>>& pts, bool diagonal)
{
    const double size = 360, m = 50;
    Document d(size + 2 * m, size + 2 * m);
    auto px = [&](double x) { return m + x * size; };
    auto py = [&](double y) { return m + (1.0 - y) * size; };
    d.line(px(0), py(0), px(1), py(0), "black");
    d.line(px(0), py(0), px(0), py(1), "black");
    for (int k = 0; k <= 4; ++k) {
        const double t = k / 4.0;
        d.text(px(t), py(0) + 16, io::format_double(t), 10, "middle");
        d.text(px(0) - 6, py(t) + 4, io::format_double(t), 10, "end");
    }
    if (diagonal) d.line(px(0), py(0), px(1), py(1), "#999999", 1.0, "4,4");
    std::vector<std::pair<double, double>> mapped;
    for (const auto& [x, y] : pts) mapped.emplace_back(px(x), py(y));
    d.polyline(mapped, "#1f77b4", 2.0);
    d.text(m + size / 2, m - 18, title, 14, "middle");
    d.text(m + size / 2, m + size + 38, xlabel, 12, "middle");
    d.text(m - 36, m + size / 2, ylabel, 12, "middle", -90);
    return d.str();
}

/// Horizontal bars around zero, one per label, in the given order.
inline std::string bar_chart(const std::string& title, const std::vector<std::string>& labels,
                             const std::vector<double>& values)
{
    const double row = 18, left = 300, width = 300, top = 40;
    Document d(left + width + 40, top + row * static_cast<double>(labels.size()) + 30);
    double hi = 0.0;
    for (double v : values) hi = std::max(hi, std::abs(v));
    if (hi == 0.0) hi = 1.0;
    const double zero = left + width / 2;
    d.text((left + width) / 2, 20, title, 14, "middle");
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double y = top + row * static_cast<double>(i);
        const double len = values[i] / hi * (width / 2);
        d.rect(std::min(zero, zero + len), y + 2, std::abs(len), row - 4, values[i] >= 0 ? "#d62728" : "#1f77b4",
               labels[i] + " = " + io::format_double(values[i]));
        d.text(left - 6, y + row - 5, labels[i], 10, "end");
    }
    d.line(zero, top - 4, zero, top + row * static_cast<double>(labels.size()), "black");
    return d.str();
}

/// Blue-white-red fill for a value clipped to [-limit, limit]; grey for NaN.
inline std::string diverging(double v, double limit)
{
    if (std::isnan(v)) return "#cccccc";
    const double t = std::clamp(v / limit, -1.0, 1.0);
    const int fade = static_cast<int>(std::lround(255.0 * (1.0 - std::abs(t))));
    char buf[16];
    if (t >= 0)
        std::snprintf(buf, sizeof buf, "#ff%02x%02x", fade, fade);
    else
        std::snprintf(buf, sizeof buf, "#%02x%02xff", fade, fade);
    return buf;
}

/// Rows x columns grid of values with row and column labels.
inline std::string heatmap(const std::string& title, const std::vector<std::string>& rows,
                           const std::vector<std::string>& cols, const std::vector<std::vector<double>>& values,
                           double limit = 3.0)
{
    const double cell = 16, left = 320, top = 60, colw = 70;
    Document d(left + colw * static_cast<double>(cols.size()) + 40, top + cell * static_cast<double>(rows.size()) + 20);
    d.text(left / 2, 24, title, 14, "middle");
    for (std::size_t c = 0; c < cols.size(); ++c)
        d.text(left + colw * (static_cast<double>(c) + 0.5), top - 8, cols[c], 11, "middle");
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const double y = top + cell * static_cast<double>(r);
        d.text(left - 6, y + cell - 4, rows[r], 10, "end");
        for (std::size_t c = 0; c < cols.size(); ++c)
            d.rect(left + colw * static_cast<double>(c), y, colw - 1, cell - 1, diverging(values[r][c], limit),
                   rows[r] + " / " + cols[c] + " = " + io::format_double(values[r][c]));
    }
    return d.str();
}

} // namespace metmorph::svg
