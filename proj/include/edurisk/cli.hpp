#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "edurisk/serialization.hpp"

namespace edurisk::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitDegenerate = 3;

/// Entry point of the `edurisk` executable. Output goes to `out`, diagnostics
/// to `err`; the return value is the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "2014-2018" or "2014,2016,2019" (ranges and lists may be mixed).
std::set<int> parse_years(std::string_view text);

/// Provenance record written next to every output.
struct RunManifest {
    std::string subcommand;
    std::string config;  // resolved option values, one "key=value" per line
    std::map<std::string, std::string> inputs;
    std::map<std::string, std::string> outputs;
    std::optional<std::uint64_t> seed;
    std::string timestamp;
    std::map<std::string, std::string> checksums;  // output name -> sha256 hex
};

/// SHA-256 of a file's bytes as lowercase hex.
std::string sha256_file(const std::filesystem::path& path);
/// UTC ISO-8601 time; honours SOURCE_DATE_EPOCH for reproducible builds.
std::string timestamp_now();
void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);

}  // namespace edurisk::cli
