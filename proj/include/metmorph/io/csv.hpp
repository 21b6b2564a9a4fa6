#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "metmorph/error.hpp"
#include "metmorph/numeric.hpp"

namespace metmorph::io {

/// Shortest round-trip decimal form; NaN is written as NA.
inline std::string format_double(double v)
{
    if (std::isnan(v)) return "NA";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline double parse_double(std::string_view s, std::string_view context = {})
{
    if (s.empty() || s == "NA" || s == "nan" || s == "NaN") return kNaN;
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
        throw SchemaError("not a number: '" + std::string(s) + "'" + (context.empty() ? "" : " in " + std::string(context)));
    return v;
}

inline std::uint64_t parse_uint(std::string_view s, std::string_view context = {})
{
    std::uint64_t v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || r.ec != std::errc{} || r.ptr != s.data() + s.size())
        throw SchemaError("not an unsigned integer: '" + std::string(s) + "'" +
                          (context.empty() ? "" : " in " + std::string(context)));
    return v;
}

inline bool parse_bool(std::string_view s, std::string_view context = {})
{
    if (s == "1" || s == "true" || s == "True" || s == "TRUE") return true;
    if (s == "0" || s == "false" || s == "False" || s == "FALSE") return false;
    throw SchemaError("not a boolean: '" + std::string(s) + "'" + (context.empty() ? "" : " in " + std::string(context)));
}

inline bool needs_quotes(std::string_view s)
{
    return s.find_first_of(",\"\n\r") != std::string_view::npos;
}

inline std::string quote(std::string_view s)
{
    if (!needs_quotes(s)) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

/// Builds CSV text row by row with '\n' line endings.
class CsvWriter {
public:
    CsvWriter& field(std::string_view s)
    {
        sep();
        text_ += quote(s);
        return *this;
    }
    CsvWriter& field(const char* s) { return field(std::string_view(s)); }
    CsvWriter& field(const std::string& s) { return field(std::string_view(s)); }
    CsvWriter& field(double v)
    {
        sep();
        text_ += format_double(v);
        return *this;
    }
    CsvWriter& field(std::uint64_t v)
    {
        sep();
        text_ += std::to_string(v);
        return *this;
    }
    CsvWriter& field(int v)
    {
        sep();
        text_ += std::to_string(v);
        return *this;
    }
    CsvWriter& field(bool v)
    {
        sep();
        text_ += v ? '1' : '0';
        return *this;
    }
    CsvWriter& end_row()
    {
        text_ += '\n';
        fresh_ = true;
        return *this;
    }
    template <class Range>
    CsvWriter& row(const Range& fields)
    {
        for (const auto& f : fields) field(std::string_view(f));
        return end_row();
    }

    const std::string& str() const noexcept { return text_; }

private:
    void sep()
    {
        if (!fresh_) text_ += ',';
        fresh_ = false;
    }
    std::string text_;
    bool fresh_ = true;
};

struct CsvTable {
    std::string source;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index by name; throws a schema error naming the file.
    std::size_t column(std::string_view name) const
    {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw SchemaError(source + ": missing column '" + std::string(name) + "'");
    }

    std::string where(std::size_t row) const { return source + " row " + std::to_string(row + 2); }
};

/// RFC 4180-style parser: quoted fields, doubled quotes, CRLF tolerated.
inline CsvTable parse_csv(std::string_view text, std::string source = "csv")
{
    CsvTable t;
    t.source = std::move(source);
    std::vector<std::string> cur;
    std::string field;
    bool quoted = false, any = false;
    auto finish_row = [&] {
        cur.push_back(std::move(field));
        field.clear();
        if (t.header.empty())
            t.header = std::move(cur);
        else
            t.rows.push_back(std::move(cur));
        cur.clear();
        any = false;
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            cur.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\n') {
            finish_row();
        } else if (c != '\r') {
            field += c;
            any = true;
        }
    }
    if (quoted) throw SchemaError(t.source + ": unterminated quoted field");
    if (any || !field.empty() || !cur.empty()) finish_row();
    if (t.header.empty()) throw SchemaError(t.source + ": empty file");
    for (std::size_t r = 0; r < t.rows.size(); ++r)
        if (t.rows[r].size() != t.header.size())
            throw SchemaError(t.where(r) + ": expected " + std::to_string(t.header.size()) + " fields, found " +
                              std::to_string(t.rows[r].size()));
    return t;
}

} // namespace metmorph::io
