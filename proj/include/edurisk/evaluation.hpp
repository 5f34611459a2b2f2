#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace edurisk {

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    bool operator==(const RocPoint&) const = default;
};

/// Threshold sweep over distinct scores, from (0,0) to (1,1).
struct RocCurve {
    std::vector<RocPoint> points;
    bool operator==(const RocCurve&) const = default;
};

struct RocResult {
    RocCurve curve;
    double auc = 0.0;
};

/// Tie-aware Mann-Whitney AUC, P(s+ > s-) + P(s+ = s-)/2, computed from
/// midranks. Higher scores must mean higher risk. Throws DegenerateError if
/// the labels hold a single class.
RocResult roc_auc(std::span<const double> scores, std::span<const int> labels);

/// Trapezoidal area under a curve.
double trapezoid_area(const RocCurve& curve);

/// Rows: actual not-at-risk / at-risk. Columns: TOTAL_RISK 0..3.
using ConfusionMatrix = std::array<std::array<std::int64_t, 4>, 2>;
/// Binarized view: predicted at-risk when TOTAL_RISK >= 1.
using BinaryConfusion = std::array<std::array<std::int64_t, 2>, 2>;

ConfusionMatrix confusion_by_level(std::span<const int> actual_at_risk, std::span<const int> levels);
BinaryConfusion binarize(const ConfusionMatrix& m);

inline constexpr const char* kModelLogistic = "logistic_regression";
inline constexpr const char* kModelRegressionForest = "regression_forest";
inline constexpr const char* kModelClassifierForest = "classifier_forest";

struct EvalReport {
    std::map<std::string, double> auc_per_model;
    std::map<std::string, RocCurve> roc_per_model;
    ConfusionMatrix confusion{};
    std::size_t n_rows = 0;
    std::size_t n_at_risk = 0;
    /// Set when the AUCs could not be computed (single-class labels).
    std::string note;
};

}  // namespace edurisk
