#include "edurisk/risk.hpp"

#include <algorithm>
#include <cmath>

#include "edurisk/error.hpp"
#include "edurisk/stats.hpp"

namespace edurisk {

namespace {

constexpr std::uint64_t kClassifierSeedOffset = 1000003;

std::vector<double> year_scores(std::span<const MunicipalityYear> rows, int year) {
    std::vector<double> out;
    for (const auto& r : rows)
        if (r.year == year) out.push_back(r.global_score_mean);
    return out;
}

}  // namespace

void RiskConfig::validate() const {
    if (!(k >= 0.0 && k <= 2.0)) throw ConfigError("k must lie in [0, 2]");
    if (depth_m <= 2) throw ConfigError("regression forest depth m must be greater than 2");
    if (depth_l < 1) throw ConfigError("classifier forest depth l must be at least 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    if (train_years.empty()) throw ConfigError("no training years configured");
    if (train_years.count(validation_year)) throw ConfigError("validation year overlaps the training years");
    if (n_trees < 1) throw ConfigError("forest needs at least one tree");
    if (min_leaf < 1) throw ConfigError("minimum leaf size must be at least 1");
    if (max_features && *max_features < 1) throw ConfigError("max_features must be at least 1");
}

const std::vector<std::string>& initial_features() {
    static const std::vector<std::string> names{std::string(kInternet), std::string(kComputer),
                                                std::string(kEthnic),   std::string(kSchool),
                                                std::string(kConnectivity), std::string(kRuralIndex)};
    return names;
}

double compute_threshold(std::span<const MunicipalityYear> rows, int year, double k) {
    const auto scores = year_scores(rows, year);
    if (scores.size() < 2)
        throw DataError("threshold for year " + std::to_string(year) + " needs at least two municipalities");
    return stats::mean(scores) - k * stats::sample_sd(scores);
}

std::vector<int> label_at_risk(std::span<const MunicipalityYear> rows, const std::map<int, double>& thresholds) {
    std::vector<int> labels;
    labels.reserve(rows.size());
    for (const auto& r : rows) {
        const auto it = thresholds.find(r.year);
        if (it == thresholds.end()) throw DataError("no risk threshold for year " + std::to_string(r.year));
        labels.push_back(r.global_score_mean < it->second ? 1 : 0);
    }
    return labels;
}

double effective_threshold(const RiskModelBundle& bundle, int year) {
    if (bundle.thresholds.empty()) throw DataError("bundle carries no thresholds");
    const auto it = bundle.thresholds.find(year);
    return it != bundle.thresholds.end() ? it->second : bundle.thresholds.rbegin()->second;
}

std::vector<double> feature_vector(const MunicipalityYear& row, const std::vector<std::string>& names) {
    std::vector<double> x;
    x.reserve(names.size());
    for (const auto& n : names) x.push_back(covariable_value(row, n));
    return x;
}

FeatureMatrix feature_matrix(std::span<const MunicipalityYear> rows, const std::vector<std::string>& names) {
    FeatureMatrix x(rows.size(), names.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < names.size(); ++j) x(i, j) = covariable_value(rows[i], names[j]);
    }
    return x;
}

RiskModelBundle train_bundle(std::span<const MunicipalityYear> train_rows, const RiskConfig& config,
                             std::uint64_t seed, unsigned threads) {
    config.validate();
    if (train_rows.empty()) throw DataError("no training rows");

    RiskModelBundle bundle;
    bundle.config = config;
    bundle.seed = seed;

    std::set<int> years;
    for (const auto& r : train_rows) years.insert(r.year);
    for (int y : years) bundle.thresholds[y] = compute_threshold(train_rows, y, config.k);

    const auto labels = label_at_risk(train_rows, bundle.thresholds);
    const auto positives = std::count(labels.begin(), labels.end(), 1);
    if (positives == 0 || positives == static_cast<long>(labels.size())) {
        throw DegenerateError("every training municipality has the same label (" + std::to_string(positives) +
                              " at risk of " + std::to_string(labels.size()) +
                              "); try a smaller k so the threshold separates the classes");
    }
    const auto minority = std::min<long>(positives, static_cast<long>(labels.size()) - positives);
    if (minority < 10) {
        bundle.warnings.push_back("degenerate labels: only " + std::to_string(minority) +
                                  " training rows in the minority class");
    }

    const auto initial_x = feature_matrix(train_rows, initial_features());
    bundle.screening = fit_logistic(initial_x, labels, initial_features());
    bundle.selected_features = significant_features(bundle.screening, config.alpha);
    if (bundle.selected_features.empty()) {
        bundle.warnings.push_back("no covariable significant at alpha; keeping the full initial set");
        bundle.selected_features = initial_features();
    }

    const auto x = feature_matrix(train_rows, bundle.selected_features);
    bundle.logistic = fit_logistic(x, labels, bundle.selected_features);
    if (bundle.logistic.separation) bundle.warnings.push_back("logistic regression: classes are (quasi-)separated");

    ForestConfig forest;
    forest.n_trees = config.n_trees;
    forest.min_leaf = config.min_leaf;
    forest.max_features = config.max_features;
    forest.threads = threads;

    std::vector<double> regression_target;
    regression_target.reserve(train_rows.size());
    for (std::size_t i = 0; i < train_rows.size(); ++i) {
        regression_target.push_back(config.regression_target == RegressionTarget::Score
                                        ? train_rows[i].global_score_mean
                                        : static_cast<double>(labels[i]));
    }
    bundle.forest_regression = fit_forest(x, regression_target, ForestKind::Regression, config.depth_m, forest, seed);

    const std::vector<double> class_target(labels.begin(), labels.end());
    bundle.forest_classifier = fit_forest(x, class_target, ForestKind::Classification, config.depth_l, forest,
                                          seed + kClassifierSeedOffset);
    return bundle;
}

VulnerabilityAssessment combine_votes(bool logistic, bool regression_forest, bool classifier_forest) {
    VulnerabilityAssessment a;
    a.vote_logistic = logistic;
    a.vote_regression_forest = regression_forest;
    a.vote_classifier_forest = classifier_forest;
    a.total_risk = int(logistic) + int(regression_forest) + int(classifier_forest);
    a.level = level_from_total_risk(a.total_risk);
    return a;
}

VulnerabilityAssessment assess_row(const RiskModelBundle& bundle, const MunicipalityYear& row) {
    const auto x = feature_vector(row, bundle.selected_features);
    const double p_logistic = predict_logistic(bundle.logistic, x);
    const double regression = predict_forest(bundle.forest_regression, x);
    const double p_forest = predict_forest(bundle.forest_classifier, x);

    bool regression_vote = false;
    double regression_score = 0.0;
    if (bundle.config.regression_target == RegressionTarget::Score) {
        regression_vote = regression < effective_threshold(bundle, row.year);
        regression_score = -regression;
    } else {
        regression_vote = regression >= 0.5;
        regression_score = regression;
    }

    auto a = combine_votes(p_logistic >= 0.5, regression_vote, p_forest >= 0.5);
    a.code = row.code;
    a.state_code = row.state_code;
    a.year = row.year;
    a.score_logistic = p_logistic;
    a.score_regression_forest = regression_score;
    a.score_classifier_forest = p_forest;
    return a;
}

std::vector<VulnerabilityAssessment> assess(const RiskModelBundle& bundle, std::span<const MunicipalityYear> rows) {
    std::vector<VulnerabilityAssessment> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(assess_row(bundle, r));
    return out;
}

EvalReport evaluate(RiskModelBundle& bundle, std::span<const MunicipalityYear> validation_rows) {
    if (validation_rows.empty()) throw DataError("no validation rows");
    std::map<int, double> thresholds = bundle.thresholds;
    for (const auto& r : validation_rows) thresholds.emplace(r.year, effective_threshold(bundle, r.year));
    const auto labels = label_at_risk(validation_rows, thresholds);
    const auto assessments = assess(bundle, validation_rows);

    EvalReport report;
    report.n_rows = validation_rows.size();
    report.n_at_risk = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));

    std::vector<int> levels;
    std::vector<double> s_lr, s_rfr, s_rfc;
    for (const auto& a : assessments) {
        levels.push_back(a.total_risk);
        s_lr.push_back(a.score_logistic);
        s_rfr.push_back(a.score_regression_forest);
        s_rfc.push_back(a.score_classifier_forest);
    }
    report.confusion = confusion_by_level(labels, levels);

    try {
        for (const auto& [name, scores] : {std::pair{kModelLogistic, &s_lr}, std::pair{kModelRegressionForest, &s_rfr},
                                           std::pair{kModelClassifierForest, &s_rfc}}) {
            auto roc = roc_auc(*scores, labels);
            report.auc_per_model[name] = roc.auc;
            report.roc_per_model[name] = std::move(roc.curve);
        }
    } catch (const DegenerateError& e) {
        report.auc_per_model.clear();
        report.roc_per_model.clear();
        report.note = std::string("AUC unavailable: ") + e.what();
    }
    bundle.eval = report;
    return report;
}

std::vector<StateLevelSummary> state_summary(std::span<const VulnerabilityAssessment> assessments,
                                             const std::map<MunicipalityCode, StateCode>& code_to_state) {
    std::set<MunicipalityCode> unmapped;
    std::map<StateCode, StateLevelSummary> by_state;
    for (const auto& a : assessments) {
        const auto it = code_to_state.find(a.code);
        if (it == code_to_state.end()) {
            unmapped.insert(a.code);
            continue;
        }
        auto& s = by_state[it->second];
        s.state = it->second;
        ++s.total;
        ++s.counts[static_cast<std::size_t>(a.total_risk)];
    }
    if (!unmapped.empty()) {
        std::string list;
        for (auto c : unmapped) list += (list.empty() ? "" : ", ") + std::to_string(c);
        throw DataError("codes without a state: " + list);
    }
    std::vector<StateLevelSummary> out;
    for (auto& [state, s] : by_state) {
        for (std::size_t l = 0; l < 4; ++l) s.fractions[l] = static_cast<double>(s.counts[l]) / static_cast<double>(s.total);
        out.push_back(s);
    }
    return out;
}

}  // namespace edurisk
