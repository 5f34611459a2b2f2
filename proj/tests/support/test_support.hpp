#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "edurisk/risk.hpp"
#include "edurisk/serialization.hpp"

namespace edurisk::testing {

inline std::filesystem::path fixture(const std::string& name) {
    return std::filesystem::path(EDURISK_FIXTURE_DIR) / name;
}

inline std::filesystem::path golden(const std::string& name) {
    return std::filesystem::path(EDURISK_GOLDEN_DIR) / name;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

/// Fresh scratch directory under the build tree, emptied on creation.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::path(EDURISK_SCRATCH_DIR) / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline MunicipalityYear make_row(MunicipalityCode code, int year, double score, double internet = 50.0,
                                 double computer = 50.0, double connectivity = 10.0) {
    MunicipalityYear r;
    r.code = code;
    r.state_code = code / 1000;
    r.year = year;
    r.internet_pct = internet;
    r.computer_pct = computer;
    r.ethnic_pct = 10.0;
    r.school_public_pct = 80.0;
    r.global_score_mean = score;
    r.population = 10000;
    r.connectivity = connectivity;
    r.rural_index = 30.0;
    r.n_students = 100;
    return r;
}

/// Bundle whose only active voter is a logistic model on one feature:
/// P(at risk) = sigmoid(intercept + slope * x). Both forests are constants
/// that never vote, so the level is Low exactly when the logistic votes.
inline RiskModelBundle logistic_only_bundle(const std::string& feature, double intercept, double slope) {
    RiskModelBundle b;
    b.seed = 0;
    b.thresholds = {{2018, 200.0}};
    b.selected_features = {feature};
    LogisticModel m;
    m.feature_names = {feature};
    m.standardization.mean = {0.0};
    m.standardization.sd = {1.0};
    m.coefficients = {intercept, slope};
    m.coefficients_standardized = {intercept, slope};
    m.standard_errors = {1.0, 1.0};
    m.p_values = {0.0, 0.0};
    m.converged = true;
    b.screening = m;
    b.logistic = m;
    b.forest_regression = constant_forest(ForestKind::Regression, 1, 500.0);
    b.forest_classifier = constant_forest(ForestKind::Classification, 1, 0.0);
    return b;
}

/// Score/label draws with deliberate ties (scores on a coarse grid).
inline void random_scores(std::mt19937_64& rng, std::size_t n, std::vector<double>& scores, std::vector<int>& labels) {
    std::uniform_int_distribution<int> grid(0, 20);
    std::bernoulli_distribution coin(0.4);
    scores.resize(n);
    labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        scores[i] = grid(rng) / 4.0;
        labels[i] = coin(rng);
    }
    labels[0] = 0;
    labels[1] = 1;
}

/// O(n^2) tie-aware Mann-Whitney statistic.
inline double brute_force_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    double wins = 0.0;
    double pairs = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!labels[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j]) continue;
            pairs += 1.0;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    return wins / pairs;
}

}  // namespace edurisk::testing
