#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "geometry.hpp"

namespace cdtw {

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline bool parse_real(std::string_view s, double& out) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size() && !s.empty();
}

inline Error parse_error(std::size_t line, const std::string& what) {
    return Error(Errc::Parse, "line " + std::to_string(line) + ": " + what);
}

// Line of the first vertex that makes the curve invalid.
inline void validate_with_lines(const Curve& c, const std::vector<std::size_t>& lines) {
    if (c.vertices.size() < 2) throw Error(Errc::Parse, "a curve needs at least two vertices");
    for (std::size_t i = 1; i < c.vertices.size(); ++i)
        if (c.vertices[i] == c.vertices[i - 1]) throw parse_error(lines[i], "vertex repeats the previous one");
}

} // namespace detail

// One "x,y" vertex per line; '#' starts a comment.
inline Curve parse_curve_csv(std::string_view text) {
    Curve c;
    std::vector<std::size_t> lines;
    std::size_t line = 0;
    while (!text.empty()) {
        ++line;
        const auto nl = text.find('\n');
        std::string_view row = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (line == 1 && row.starts_with("\xEF\xBB\xBF")) row.remove_prefix(3);
        if (const auto h = row.find('#'); h != std::string_view::npos) row = row.substr(0, h);
        row = detail::trim(row);
        if (row.empty()) continue;
        const auto comma = row.find(',');
        if (comma == std::string_view::npos) throw detail::parse_error(line, "expected \"x,y\"");
        double x, y;
        if (!detail::parse_real(row.substr(0, comma), x) || !detail::parse_real(row.substr(comma + 1), y))
            throw detail::parse_error(line, "malformed number");
        if (!std::isfinite(x) || !std::isfinite(y)) throw detail::parse_error(line, "non-finite coordinate");
        c.vertices.push_back({x, y});
        lines.push_back(line);
    }
    detail::validate_with_lines(c, lines);
    return c;
}

// Array of [x, y] pairs.
inline Curve parse_curve_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        // byte offset -> line number
        const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
        const std::size_t line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + upto, '\n'));
        throw detail::parse_error(line, "invalid JSON");
    }
    if (!j.is_array()) throw detail::parse_error(1, "expected an array of [x, y] pairs");
    Curve c;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& v = j[i];
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
            throw Error(Errc::Parse, "vertex " + std::to_string(i) + ": expected [x, y]");
        c.vertices.push_back({v[0].get<double>(), v[1].get<double>()});
    }
    if (c.vertices.size() < 2) throw Error(Errc::Parse, "a curve needs at least two vertices");
    for (std::size_t i = 1; i < c.vertices.size(); ++i)
        if (c.vertices[i] == c.vertices[i - 1])
            throw Error(Errc::Parse, "vertex " + std::to_string(i) + " repeats the previous one");
    return c;
}

inline bool looks_like_json(std::string_view path, std::string_view text) {
    if (path.ends_with(".json")) return true;
    const auto t = detail::trim(text);
    return !t.empty() && t.front() == '[';
}

inline Curve load_curve(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Parse, "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    try {
        return looks_like_json(path, text) ? parse_curve_json(text) : parse_curve_csv(text);
    } catch (const Error& e) {
        throw Error(Errc::Parse, path + ": " + std::string(e.what()).substr(std::string("Parse: ").size()));
    }
}

inline std::string curve_to_csv(const Curve& c) {
    std::ostringstream os;
    os.precision(17);
    for (Point2 p : c.vertices) os << p.x << ',' << p.y << '\n';
    return os.str();
}

} // namespace cdtw
