#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "edurisk/dataset.hpp"

namespace edurisk {

/// Vulnerability level; the numeric value equals TOTAL_RISK.
enum class Level : int { None = 0, Low = 1, Medium = 2, Serious = 3 };

inline constexpr std::array<Level, 4> kAllLevels{Level::None, Level::Low, Level::Medium, Level::Serious};

std::string_view to_string(Level level);
std::optional<Level> parse_level(std::string_view name);
Level level_from_total_risk(int total_risk);

/// Per-municipality output of the three-model ensemble.
struct VulnerabilityAssessment {
    MunicipalityCode code = 0;
    StateCode state_code = 0;
    int year = 0;
    bool vote_logistic = false;
    bool vote_regression_forest = false;
    bool vote_classifier_forest = false;
    int total_risk = 0;
    Level level = Level::None;
    /// Oriented so that higher means riskier: logistic probability, negated
    /// regression-forest prediction, classifier-forest probability.
    double score_logistic = 0.0;
    double score_regression_forest = 0.0;
    double score_classifier_forest = 0.0;

    bool operator==(const VulnerabilityAssessment&) const = default;
};

}  // namespace edurisk
