#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "edurisk/assessment.hpp"
#include "edurisk/dataset.hpp"
#include "edurisk/evaluation.hpp"
#include "edurisk/forest.hpp"
#include "edurisk/logistic.hpp"

namespace edurisk {

/// What the "regression" forest learns: the mean global score (thresholded
/// at the year's risk cutoff) or the 0/1 at-risk label.
enum class RegressionTarget { Score, Label };

struct RiskConfig {
    double k = 1.0;       // threshold = mean - k * sd, k in [0, 2]
    int depth_m = 3;      // regression forest depth, must exceed 2
    int depth_l = 3;      // classifier forest depth
    double alpha = 0.05;  // significance level for feature screening
    std::set<int> train_years{2014, 2015, 2016, 2017, 2018};
    int validation_year = 2019;
    RegressionTarget regression_target = RegressionTarget::Score;
    int n_trees = 100;
    int min_leaf = 2;
    std::optional<int> max_features;

    /// Throws ConfigError on any out-of-range value.
    void validate() const;
};

/// Covariables offered to the screening logistic regression.
const std::vector<std::string>& initial_features();

struct RiskModelBundle {
    static constexpr int kVersion = 1;

    RiskConfig config;
    std::uint64_t seed = 0;
    std::map<int, double> thresholds;
    /// Screening fit on the initial covariables; its p-values drive selection.
    LogisticModel screening;
    std::vector<std::string> selected_features;
    LogisticModel logistic;
    ForestModel forest_regression;
    ForestModel forest_classifier;
    std::optional<EvalReport> eval;
    std::vector<std::string> warnings;
};

/// Year mean of municipality scores minus k sample standard deviations.
double compute_threshold(std::span<const MunicipalityYear> rows, int year, double k);

/// At-risk (1) when the score is strictly below the year's threshold.
std::vector<int> label_at_risk(std::span<const MunicipalityYear> rows, const std::map<int, double>& thresholds);

/// Threshold for `year`; years without one reuse the latest training year.
double effective_threshold(const RiskModelBundle& bundle, int year);

/// Feature vector of `row` in the order of `names`.
std::vector<double> feature_vector(const MunicipalityYear& row, const std::vector<std::string>& names);
FeatureMatrix feature_matrix(std::span<const MunicipalityYear> rows, const std::vector<std::string>& names);

/// Thresholds, screening regression, feature selection and the three final
/// models. `threads` only affects speed, never the result.
RiskModelBundle train_bundle(std::span<const MunicipalityYear> train_rows, const RiskConfig& config,
                             std::uint64_t seed, unsigned threads = 1);

VulnerabilityAssessment assess_row(const RiskModelBundle& bundle, const MunicipalityYear& row);
std::vector<VulnerabilityAssessment> assess(const RiskModelBundle& bundle, std::span<const MunicipalityYear> rows);

/// Builds a VulnerabilityAssessment from three votes.
VulnerabilityAssessment combine_votes(bool logistic, bool regression_forest, bool classifier_forest);

/// AUC per model and the 2x4 confusion matrix on the validation rows; the
/// report is also stored in `bundle.eval`. Single-class labels leave the AUC
/// maps empty with a note instead of throwing.
EvalReport evaluate(RiskModelBundle& bundle, std::span<const MunicipalityYear> validation_rows);

struct StateLevelSummary {
    StateCode state = 0;
    std::int64_t total = 0;
    std::array<std::int64_t, 4> counts{};
    std::array<double, 4> fractions{};
};

/// Count and fraction of municipalities per level for each state.
std::vector<StateLevelSummary> state_summary(std::span<const VulnerabilityAssessment> assessments,
                                             const std::map<MunicipalityCode, StateCode>& code_to_state);

}  // namespace edurisk
