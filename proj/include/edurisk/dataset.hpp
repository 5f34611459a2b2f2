#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace edurisk {

using MunicipalityCode = std::int64_t;
using StateCode = std::int64_t;

/// One test-taker. `global_score` is always populated after parsing: when the
/// source row only carries the five subject scores it is their sum.
struct StudentRecord {
    MunicipalityCode municipality_code = 0;
    int year = 0;
    /// reading, citizenship, english, writing, quant
    std::optional<std::array<double, 5>> subject_scores;
    double global_score = 0.0;
    bool has_internet = false;
    bool has_computer = false;
    bool is_ethnic = false;
    bool school_public = false;
};

struct ConnectivityRecord {
    MunicipalityCode municipality_code = 0;
    int year = 0;
    std::int64_t subscribers = 0;
};

struct CensusRecord {
    MunicipalityCode municipality_code = 0;
    int year = 0;
    StateCode state_code = 0;
    std::int64_t population = 0;
    std::int64_t rural_population = 0;
};

/// Aggregated covariables of one municipality in one test year. Percentages
/// are on the [0,100] scale; connectivity is subscriptions per 1000 people.
struct MunicipalityYear {
    MunicipalityCode code = 0;
    StateCode state_code = 0;
    int year = 0;
    double internet_pct = 0.0;
    double computer_pct = 0.0;
    double ethnic_pct = 0.0;
    double school_public_pct = 0.0;
    double global_score_mean = 0.0;
    std::int64_t population = 0;
    double connectivity = 0.0;
    double rural_index = 0.0;
    std::int64_t n_students = 0;

    bool operator==(const MunicipalityYear&) const = default;
};

/// Covariable names used throughout reports, models and the bundle file.
inline constexpr std::string_view kInternet = "INTERNET";
inline constexpr std::string_view kComputer = "COMPUTER";
inline constexpr std::string_view kEthnic = "ETHNIC";
inline constexpr std::string_view kSchool = "SCHOOL";
inline constexpr std::string_view kGlobalScore = "GLOBAL_SCORE";
inline constexpr std::string_view kPopulation = "POPULATION";
inline constexpr std::string_view kConnectivity = "CONNECTIVITY";
inline constexpr std::string_view kRuralIndex = "RURAL_INDEX";

/// Every numeric covariable of a MunicipalityYear, in report order.
const std::vector<std::string>& all_covariables();

/// Value of the named covariable; throws DataError for unknown names.
double covariable_value(const MunicipalityYear& row, std::string_view name);
bool is_percentage_covariable(std::string_view name);

struct RowError {
    std::size_t line = 0;
    std::string message;
};

template <typename Record>
struct ParseResult {
    std::vector<Record> records;
    std::vector<RowError> errors;
};

/// Parsers for the three source tables. Row-level problems are collected in
/// `errors`; with `strict` the first one is thrown as a SchemaError instead.
/// A malformed header always throws.
ParseResult<StudentRecord> parse_students(std::istream& in, bool strict = false);
ParseResult<ConnectivityRecord> parse_connectivity(std::istream& in, bool strict = false);
ParseResult<CensusRecord> parse_census(std::istream& in, bool strict = false);

struct AggregateResult {
    std::vector<MunicipalityYear> rows;  // sorted by (code, year)
    std::vector<std::string> warnings;
};

/// Groups students by (code, year) and joins connectivity and census data.
/// Census population comes from the nearest census year (ties go to the
/// earlier year). Missing connectivity yields 0 with a warning; a missing
/// census entry is a DataError.
AggregateResult aggregate(std::span<const StudentRecord> students,
                          std::span<const ConnectivityRecord> connectivity,
                          std::span<const CensusRecord> census);

struct YearSplit {
    std::vector<MunicipalityYear> train;
    std::vector<MunicipalityYear> validation;
    std::size_t excluded = 0;
};

YearSplit split_by_year(std::span<const MunicipalityYear> rows, const std::set<int>& train_years,
                        int validation_year);

/// Planted linear model used by the synthetic generator:
/// score = base + sum(coef * covariable) + noise, clamped to [0, 500].
struct SynthConfig {
    int municipalities = 200;
    int states = 10;
    std::vector<int> years{2014, 2015, 2016, 2017, 2018, 2019};

    double base_score = 200.0;
    double coef_internet = 0.0;
    double coef_computer = 0.0;
    double coef_ethnic = 0.0;
    double coef_school = 0.0;
    double coef_connectivity = 0.0;
    double coef_rural = 0.0;
    double noise_sd = 20.0;

    /// Percentage-point drift of every municipality's internet share per year.
    double internet_growth_pp = 0.0;

    int min_students = 20;
    int max_students = 400;
};

/// Strong internet / connectivity effects, used by the planted-signal checks.
SynthConfig planted_signal_config();

/// Deterministic for a fixed seed. Percentages are multiples of
/// 100 / n_students and connectivity and rural index derive from integer
/// counts, so the rows can be expanded into consistent source tables.
std::vector<MunicipalityYear> generate_synthetic(const SynthConfig& config, std::uint64_t seed);

struct SourceTables {
    std::vector<StudentRecord> students;
    std::vector<ConnectivityRecord> connectivity;
    std::vector<CensusRecord> census;
};

/// Expands aggregated rows into student, connectivity and census tables whose
/// aggregation reproduces the rows (means to floating-point rounding).
/// Census rows are written for the first year of each municipality only.
SourceTables expand_to_sources(std::span<const MunicipalityYear> rows, std::uint64_t seed);

void write_students_csv(std::ostream& out, std::span<const StudentRecord> students);
void write_connectivity_csv(std::ostream& out, std::span<const ConnectivityRecord> records);
void write_census_csv(std::ostream& out, std::span<const CensusRecord> records);
void write_aggregated_csv(std::ostream& out, std::span<const MunicipalityYear> rows);
std::vector<MunicipalityYear> read_aggregated_csv(std::istream& in);

}  // namespace edurisk
