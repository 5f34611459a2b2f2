#pragma once

#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "edurisk/matrix.hpp"

namespace edurisk {

/// Per-feature z-scoring parameters.
struct Standardization {
    std::vector<double> mean;
    std::vector<double> sd;

    /// Throws DataError if a column has zero variance.
    static Standardization fit(const FeatureMatrix& x, const std::vector<std::string>& names);
    std::vector<double> apply(std::span<const double> x) const;
};

struct LogisticConfig {
    int max_iterations = 100;
    /// Convergence when every entry of the score vector is below this.
    double score_tolerance = 1e-8;
    /// Standardized coefficient magnitude treated as diverging (separation).
    double separation_limit = 30.0;
};

/// Logistic regression fitted on z-scored features. Index 0 of every
/// coefficient vector is the intercept.
struct LogisticModel {
    std::vector<std::string> feature_names;
    std::vector<double> coefficients;               // original feature units
    std::vector<double> coefficients_standardized;  // z-scored features
    std::vector<double> standard_errors;            // original feature units
    std::vector<double> p_values;                   // two-sided Wald
    Standardization standardization;

    int iterations = 0;
    bool converged = false;
    bool separation = false;
    double log_likelihood = 0.0;
    std::vector<double> log_likelihood_trace;
};

namespace logistic {

/// Bernoulli log-likelihood of `beta` for a design whose first column is the
/// intercept.
double log_likelihood(const Eigen::MatrixXd& design, std::span<const int> y, const Eigen::VectorXd& beta);
/// Gradient of log_likelihood with respect to beta (the score vector).
Eigen::VectorXd score_vector(const Eigen::MatrixXd& design, std::span<const int> y, const Eigen::VectorXd& beta);
/// Observed (= expected) information X^T W X.
Eigen::MatrixXd information(const Eigen::MatrixXd& design, const Eigen::VectorXd& beta);

double sigmoid(double eta);

}  // namespace logistic

/// Newton-Raphson maximum likelihood with step halving. Throws DegenerateError
/// when y holds one class and DataError on collinear or constant features.
LogisticModel fit_logistic(const FeatureMatrix& x, std::span<const int> y, const std::vector<std::string>& feature_names,
                           const LogisticConfig& config = {});

/// Probability of class 1 for a feature vector in original units.
double predict_logistic(const LogisticModel& model, std::span<const double> x);

/// Features (intercept excluded) whose p-value is below alpha, in model order.
std::vector<std::string> significant_features(const LogisticModel& model, double alpha);

}  // namespace edurisk
