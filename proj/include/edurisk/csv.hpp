#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace edurisk::csv {

/// Minimal reader for the comma-delimited, unquoted tables used by the
/// pipeline. Accepts LF and CRLF line endings and a leading UTF-8 BOM.
class Reader {
public:
    /// Reads the header line and checks that every name in `required` is
    /// present. Throws SchemaError naming the first missing column.
    Reader(std::istream& in, const std::vector<std::string>& required);

    /// Next non-blank record, or false at end of input.
    bool next();

    std::size_t line() const { return line_; }
    std::string_view field(std::string_view column) const;
    std::size_t column_index(std::string_view column) const;

private:
    std::istream& in_;
    std::vector<std::string> header_;
    std::vector<std::string> fields_;
    std::size_t line_ = 0;
};

std::vector<std::string> split(std::string_view line);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

/// Strict numeric parsing; the whole field must be consumed.
std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

}  // namespace edurisk::csv
