#include "edurisk/logistic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "edurisk/error.hpp"
#include "edurisk/stats.hpp"

namespace edurisk {

namespace {

// log(1 + e^eta) without overflow
double softplus(double eta) { return std::max(eta, 0.0) + std::log1p(std::exp(-std::abs(eta))); }

Eigen::MatrixXd standardized_design(const FeatureMatrix& x, const Standardization& s) {
    Eigen::MatrixXd z(x.rows(), x.cols() + 1);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        z(i, 0) = 1.0;
        for (std::size_t j = 0; j < x.cols(); ++j) z(i, j + 1) = (x(i, j) - s.mean[j]) / s.sd[j];
    }
    return z;
}

// Inverse of a symmetric positive semi-definite matrix with eigenvalues
// floored relative to the largest one.
Eigen::MatrixXd floored_inverse(const Eigen::MatrixXd& h) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
    Eigen::VectorXd values = eig.eigenvalues();
    const double floor = std::max(values.maxCoeff(), 1e-300) * 1e-14;
    for (Eigen::Index i = 0; i < values.size(); ++i) values(i) = 1.0 / std::max(values(i), floor);
    return eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
}

double reciprocal_condition(const Eigen::MatrixXd& h) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h, Eigen::EigenvaluesOnly);
    const auto& v = eig.eigenvalues();
    const double hi = v.maxCoeff();
    return hi > 0.0 ? v.minCoeff() / hi : 0.0;
}

}  // namespace

Standardization Standardization::fit(const FeatureMatrix& x, const std::vector<std::string>& names) {
    if (x.rows() < 2) throw DataError("standardization needs at least two rows");
    Standardization s;
    std::vector<double> col(x.rows());
    for (std::size_t j = 0; j < x.cols(); ++j) {
        for (std::size_t i = 0; i < x.rows(); ++i) col[i] = x(i, j);
        const double sd = stats::sample_sd(col);
        if (!(sd > 0.0))
            throw DataError("feature '" + (j < names.size() ? names[j] : std::to_string(j)) + "' has zero variance");
        s.mean.push_back(stats::mean(col));
        s.sd.push_back(sd);
    }
    return s;
}

std::vector<double> Standardization::apply(std::span<const double> x) const {
    if (x.size() != mean.size())
        throw DataError("expected " + std::to_string(mean.size()) + " features, got " + std::to_string(x.size()));
    std::vector<double> z(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) z[j] = (x[j] - mean[j]) / sd[j];
    return z;
}

namespace logistic {

double sigmoid(double eta) {
    if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

double log_likelihood(const Eigen::MatrixXd& design, std::span<const int> y, const Eigen::VectorXd& beta) {
    const Eigen::VectorXd eta = design * beta;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) ll += y[static_cast<std::size_t>(i)] * eta(i) - softplus(eta(i));
    return ll;
}

Eigen::VectorXd score_vector(const Eigen::MatrixXd& design, std::span<const int> y, const Eigen::VectorXd& beta) {
    const Eigen::VectorXd eta = design * beta;
    Eigen::VectorXd resid(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) resid(i) = y[static_cast<std::size_t>(i)] - sigmoid(eta(i));
    return design.transpose() * resid;
}

Eigen::MatrixXd information(const Eigen::MatrixXd& design, const Eigen::VectorXd& beta) {
    const Eigen::VectorXd eta = design * beta;
    Eigen::VectorXd w(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        const double p = sigmoid(eta(i));
        w(i) = p * (1.0 - p);
    }
    return design.transpose() * w.asDiagonal() * design;
}

}  // namespace logistic

LogisticModel fit_logistic(const FeatureMatrix& x, std::span<const int> y, const std::vector<std::string>& feature_names,
                           const LogisticConfig& config) {
    if (x.cols() == 0) throw DataError("logistic regression needs at least one feature");
    if (x.rows() != y.size()) throw DataError("feature rows and label count differ");
    if (feature_names.size() != x.cols()) throw DataError("feature name count does not match matrix columns");
    const auto positives = std::count(y.begin(), y.end(), 1);
    if (std::any_of(y.begin(), y.end(), [](int v) { return v != 0 && v != 1; }))
        throw DataError("labels must be 0 or 1");
    if (positives == 0 || positives == static_cast<long>(y.size()))
        throw DegenerateError("labels contain a single class; logistic regression needs both");

    LogisticModel model;
    model.feature_names = feature_names;
    model.standardization = Standardization::fit(x, feature_names);
    const Eigen::MatrixXd z = standardized_design(x, model.standardization);
    const auto k = z.cols();

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
    double ll = logistic::log_likelihood(z, y, beta);
    model.log_likelihood_trace.push_back(ll);

    for (int iter = 0; iter < config.max_iterations; ++iter) {
        const Eigen::VectorXd g = logistic::score_vector(z, y, beta);
        if (g.cwiseAbs().maxCoeff() < config.score_tolerance) {
            model.converged = true;
            break;
        }
        const Eigen::MatrixXd h = logistic::information(z, beta);
        if (reciprocal_condition(h) < 1e-12) {
            if (model.separation) break;
            throw DataError("information matrix is singular: features are collinear (e.g. a duplicated column)");
        }
        const Eigen::VectorXd step = h.ldlt().solve(g);

        // near the optimum the gain falls below rounding noise in the summed likelihood
        const double noise = 100.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(ll));
        const auto ascends = [&](double candidate) { return candidate >= ll - noise; };
        double scale = 1.0;
        Eigen::VectorXd candidate = beta + step;
        double candidate_ll = logistic::log_likelihood(z, y, candidate);
        for (int halving = 0; halving < 40 && !ascends(candidate_ll); ++halving) {
            scale *= 0.5;
            candidate = beta + scale * step;
            candidate_ll = logistic::log_likelihood(z, y, candidate);
        }
        if (!ascends(candidate_ll)) break;  // no ascent direction left at working precision
        beta = candidate;
        ll = candidate_ll;
        model.log_likelihood_trace.push_back(ll);
        model.iterations = iter + 1;
        if (beta.tail(k - 1).cwiseAbs().maxCoeff() > config.separation_limit) model.separation = true;
    }
    model.log_likelihood = ll;

    // covariance in standardized units, then mapped to original units:
    // b_j = beta_j / sd_j, b_0 = beta_0 - sum_j beta_j mean_j / sd_j
    const Eigen::MatrixXd cov_std = floored_inverse(logistic::information(z, beta));
    Eigen::MatrixXd to_original = Eigen::MatrixXd::Identity(k, k);
    const auto& s = model.standardization;
    for (Eigen::Index j = 1; j < k; ++j) {
        const auto jj = static_cast<std::size_t>(j - 1);
        to_original(j, j) = 1.0 / s.sd[jj];
        to_original(0, j) = -s.mean[jj] / s.sd[jj];
    }
    const Eigen::VectorXd beta_orig = to_original * beta;
    const Eigen::MatrixXd cov_orig = to_original * cov_std * to_original.transpose();

    for (Eigen::Index j = 0; j < k; ++j) {
        model.coefficients_standardized.push_back(beta(j));
        model.coefficients.push_back(beta_orig(j));
        const double se = std::sqrt(std::max(cov_orig(j, j), 0.0));
        model.standard_errors.push_back(se);
        model.p_values.push_back(se > 0.0 ? stats::normal_two_sided_p(beta_orig(j) / se) : 1.0);
    }
    return model;
}

double predict_logistic(const LogisticModel& model, std::span<const double> x) {
    const auto z = model.standardization.apply(x);
    double eta = model.coefficients_standardized.at(0);
    for (std::size_t j = 0; j < z.size(); ++j) eta += model.coefficients_standardized.at(j + 1) * z[j];
    return logistic::sigmoid(eta);
}

std::vector<std::string> significant_features(const LogisticModel& model, double alpha) {
    std::vector<std::string> out;
    for (std::size_t j = 0; j < model.feature_names.size(); ++j)
        if (model.p_values.at(j + 1) < alpha) out.push_back(model.feature_names[j]);
    return out;
}

}  // namespace edurisk
