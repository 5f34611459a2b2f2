#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "edurisk/assessment.hpp"
#include "edurisk/dataset.hpp"

namespace edurisk::stats {

double mean(std::span<const double> xs);
/// Sample variance (denominator n - 1); requires at least two values.
double sample_variance(std::span<const double> xs);
double sample_sd(std::span<const double> xs);
/// Sample Pearson coefficient; throws DataError if either input is constant.
double pearson(std::span<const double> x, std::span<const double> y);

/// Regularized incomplete beta I_x(a, b), evaluated with a Lentz continued
/// fraction (relative accuracy ~1e-14).
double incomplete_beta(double a, double b, double x);
/// Two-sided tail probability P(|T| >= |t|) for Student's t with `df` degrees
/// of freedom (df may be fractional).
double student_t_two_sided_p(double t, double df);
double normal_two_sided_p(double z);

struct CorrelationMatrix {
    std::vector<std::string> covariables;
    std::vector<std::vector<double>> values;
};

CorrelationMatrix correlation_matrix(std::span<const MunicipalityYear> rows, const std::vector<std::string>& covariables);

struct GroupSummary {
    Level level = Level::None;
    std::size_t members = 0;
    std::map<std::string, double> mean_per_covariable;
};

/// Rows are matched to assessments by (code, year); a row without an
/// assessment is a DataError. Levels with no members are omitted.
std::vector<GroupSummary> group_means(std::span<const MunicipalityYear> rows,
                                      std::span<const VulnerabilityAssessment> assessments,
                                      const std::vector<std::string>& covariables);

struct WelchResult {
    double t = 0.0;  // NaN when undefined (both groups constant and equal)
    double df = 0.0;
    double p = 1.0;
};

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

struct PairwiseTestResult {
    Level level_a = Level::None;
    Level level_b = Level::None;
    std::string covariable;
    double t_statistic = 0.0;
    double df = 0.0;
    double raw_p = 1.0;
    double adjusted_alpha = 0.0;
    bool significant = false;
};

struct BonferroniReport {
    std::vector<PairwiseTestResult> results;
    std::vector<std::string> notices;
    std::size_t tests_performed = 0;
};

/// Welch t-tests for every pair of levels with at least two members each and
/// every covariable; the significance level is divided by the number of
/// tests actually performed.
BonferroniReport bonferroni_pairwise(std::span<const MunicipalityYear> rows,
                                     std::span<const VulnerabilityAssessment> assessments,
                                     const std::vector<std::string>& covariables, double alpha);

/// Same procedure on pre-grouped samples: groups[level][covariable] -> values.
BonferroniReport bonferroni_pairwise(const std::map<Level, std::map<std::string, std::vector<double>>>& groups,
                                     double alpha);

enum class ScopeKind { Country, States, Municipalities };

struct TrendScope {
    ScopeKind kind = ScopeKind::Country;
    std::vector<std::int64_t> members;  // state or municipality codes
};

struct TrendRow {
    std::string member;  // "country", "state:<code>" or "municipality:<code>"
    int year = 0;
    std::size_t rows = 0;
    double internet = 0.0;
    double computer = 0.0;
    double ethnic = 0.0;
    double rural_index = 0.0;
};

/// Per-year means of INTERNET, COMPUTER, ETHNIC and RURAL_INDEX for each
/// scope member, ordered by member then year.
std::vector<TrendRow> trend_report(std::span<const MunicipalityYear> rows, const TrendScope& scope);

}  // namespace edurisk::stats
