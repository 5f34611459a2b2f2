#include "edurisk/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "edurisk/error.hpp"

namespace edurisk::csv {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace

std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        const auto piece = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        out.emplace_back(trim(piece));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

Reader::Reader(std::istream& in, const std::vector<std::string>& required) : in_(in) {
    std::string line;
    while (std::getline(in_, line)) {
        ++line_;
        if (line_ == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (!trim(line).empty()) break;
    }
    if (trim(line).empty()) throw SchemaError("empty input: missing header line");
    header_ = split(line);
    for (const auto& name : required) {
        if (std::find(header_.begin(), header_.end(), name) == header_.end())
            throw SchemaError("missing column '" + name + "' in header");
    }
}

bool Reader::next() {
    std::string line;
    while (std::getline(in_, line)) {
        ++line_;
        if (trim(line).empty()) continue;
        fields_ = split(line);
        return true;
    }
    return false;
}

std::size_t Reader::column_index(std::string_view column) const {
    const auto it = std::find(header_.begin(), header_.end(), column);
    if (it == header_.end()) throw SchemaError("unknown column '" + std::string(column) + "'");
    return static_cast<std::size_t>(it - header_.begin());
}

std::string_view Reader::field(std::string_view column) const {
    const auto idx = column_index(column);
    if (idx >= fields_.size()) return {};
    return fields_[idx];
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::optional<double> parse_double(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::optional<long long> parse_int(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    long long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

}  // namespace edurisk::csv
