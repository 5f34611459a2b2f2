#include "edurisk/serialization.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "edurisk/error.hpp"

namespace edurisk {

namespace {

constexpr const char* kBundleFormat = "edurisk-bundle";

}  // namespace

void to_json(json& j, const Standardization& s) { j = json{{"mean", s.mean}, {"sd", s.sd}}; }

void from_json(const json& j, Standardization& s) {
    j.at("mean").get_to(s.mean);
    j.at("sd").get_to(s.sd);
    if (s.mean.size() != s.sd.size()) throw SchemaError("standardization: mean and sd lengths differ");
    for (double sd : s.sd)
        if (!(sd > 0.0)) throw SchemaError("standardization: non-positive sd");
}

void to_json(json& j, const LogisticModel& m) {
    j = json{{"feature_names", m.feature_names},
             {"coefficients", m.coefficients},
             {"coefficients_standardized", m.coefficients_standardized},
             {"standard_errors", m.standard_errors},
             {"p_values", m.p_values},
             {"standardization", m.standardization},
             {"iterations", m.iterations},
             {"converged", m.converged},
             {"separation", m.separation},
             {"log_likelihood", m.log_likelihood},
             {"log_likelihood_trace", m.log_likelihood_trace}};
}

void from_json(const json& j, LogisticModel& m) {
    j.at("feature_names").get_to(m.feature_names);
    j.at("coefficients").get_to(m.coefficients);
    j.at("coefficients_standardized").get_to(m.coefficients_standardized);
    j.at("standard_errors").get_to(m.standard_errors);
    j.at("p_values").get_to(m.p_values);
    j.at("standardization").get_to(m.standardization);
    j.at("iterations").get_to(m.iterations);
    j.at("converged").get_to(m.converged);
    j.at("separation").get_to(m.separation);
    j.at("log_likelihood").get_to(m.log_likelihood);
    j.at("log_likelihood_trace").get_to(m.log_likelihood_trace);
    const auto k = m.feature_names.size() + 1;
    if (m.coefficients.size() != k || m.coefficients_standardized.size() != k || m.standard_errors.size() != k ||
        m.p_values.size() != k || m.standardization.mean.size() + 1 != k)
        throw SchemaError("logistic model: vector lengths do not match the feature count");
}

void to_json(json& j, const ForestModel& m) {
    json trees = json::array();
    for (const auto& t : m.trees) {
        json nodes = json::array();
        for (const auto& n : t.nodes) {
            if (!n.is_leaf()) {
                nodes.push_back({{"feature", n.feature},
                                 {"threshold", n.threshold},
                                 {"left", n.left},
                                 {"right", n.right},
                                 {"value", n.value}});
            } else if (m.kind == ForestKind::Classification) {
                nodes.push_back({{"probs", {1.0 - n.value, n.value}}});
            } else {
                nodes.push_back({{"value", n.value}});
            }
        }
        trees.push_back({{"nodes", std::move(nodes)}});
    }
    j = json{{"kind", to_string(m.kind)},
             {"depth_limit", m.depth_limit},
             {"seed", m.seed},
             {"n_features", m.n_features},
             {"trees", std::move(trees)}};
}

void from_json(const json& j, ForestModel& m) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "regression")
        m.kind = ForestKind::Regression;
    else if (kind == "classification")
        m.kind = ForestKind::Classification;
    else
        throw SchemaError("forest: unknown kind '" + kind + "'");
    j.at("depth_limit").get_to(m.depth_limit);
    j.at("seed").get_to(m.seed);
    j.at("n_features").get_to(m.n_features);
    m.trees.clear();
    for (const auto& jt : j.at("trees")) {
        Tree t;
        for (const auto& jn : jt.at("nodes")) {
            TreeNode n;
            if (jn.contains("feature")) {
                jn.at("feature").get_to(n.feature);
                jn.at("threshold").get_to(n.threshold);
                jn.at("left").get_to(n.left);
                jn.at("right").get_to(n.right);
                jn.at("value").get_to(n.value);
            } else if (jn.contains("probs")) {
                n.value = jn.at("probs").at(1).get<double>();
            } else {
                jn.at("value").get_to(n.value);
            }
            t.nodes.push_back(n);
        }
        const auto count = static_cast<int>(t.nodes.size());
        for (std::size_t i = 0; i < t.nodes.size(); ++i) {
            const auto& n = t.nodes[i];
            if (n.is_leaf()) continue;
            if (n.left <= static_cast<int>(i) || n.right <= static_cast<int>(i) || n.left >= count || n.right >= count ||
                static_cast<std::size_t>(n.feature) >= m.n_features)
                throw SchemaError("forest: malformed tree node");
        }
        if (t.nodes.empty()) throw SchemaError("forest: empty tree");
        m.trees.push_back(std::move(t));
    }
}

void to_json(json& j, const RocCurve& c) {
    std::vector<double> fpr, tpr;
    for (const auto& p : c.points) {
        fpr.push_back(p.fpr);
        tpr.push_back(p.tpr);
    }
    j = json{{"fpr", fpr}, {"tpr", tpr}};
}

void from_json(const json& j, RocCurve& c) {
    const auto fpr = j.at("fpr").get<std::vector<double>>();
    const auto tpr = j.at("tpr").get<std::vector<double>>();
    if (fpr.size() != tpr.size()) throw SchemaError("roc: fpr and tpr lengths differ");
    c.points.clear();
    for (std::size_t i = 0; i < fpr.size(); ++i) c.points.push_back({fpr[i], tpr[i]});
}

void to_json(json& j, const EvalReport& r) {
    j = json{{"auc", r.auc_per_model},
             {"roc", r.roc_per_model},
             {"confusion", r.confusion},
             {"confusion_binary", binarize(r.confusion)},
             {"n_rows", r.n_rows},
             {"n_at_risk", r.n_at_risk},
             {"note", r.note}};
}

void from_json(const json& j, EvalReport& r) {
    j.at("auc").get_to(r.auc_per_model);
    j.at("roc").get_to(r.roc_per_model);
    j.at("confusion").get_to(r.confusion);
    j.at("n_rows").get_to(r.n_rows);
    j.at("n_at_risk").get_to(r.n_at_risk);
    j.at("note").get_to(r.note);
}

void to_json(json& j, const RiskConfig& c) {
    j = json{{"k", c.k},
             {"depth_m", c.depth_m},
             {"depth_l", c.depth_l},
             {"alpha", c.alpha},
             {"train_years", c.train_years},
             {"validation_year", c.validation_year},
             {"regression_target", c.regression_target == RegressionTarget::Score ? "score" : "label"},
             {"n_trees", c.n_trees},
             {"min_leaf", c.min_leaf},
             {"max_features", c.max_features ? json(*c.max_features) : json(nullptr)}};
}

void from_json(const json& j, RiskConfig& c) {
    j.at("k").get_to(c.k);
    j.at("depth_m").get_to(c.depth_m);
    j.at("depth_l").get_to(c.depth_l);
    j.at("alpha").get_to(c.alpha);
    j.at("train_years").get_to(c.train_years);
    j.at("validation_year").get_to(c.validation_year);
    const auto target = j.at("regression_target").get<std::string>();
    if (target != "score" && target != "label") throw SchemaError("config: unknown regression_target '" + target + "'");
    c.regression_target = target == "score" ? RegressionTarget::Score : RegressionTarget::Label;
    j.at("n_trees").get_to(c.n_trees);
    j.at("min_leaf").get_to(c.min_leaf);
    if (j.at("max_features").is_null())
        c.max_features.reset();
    else
        c.max_features = j.at("max_features").get<int>();
}

void to_json(json& j, const RiskModelBundle& b) {
    json thresholds = json::array();
    for (const auto& [year, tau] : b.thresholds) thresholds.push_back({{"year", year}, {"tau", tau}});
    j = json{{"format", kBundleFormat},
             {"version", RiskModelBundle::kVersion},
             {"seed", b.seed},
             {"config", b.config},
             {"thresholds", std::move(thresholds)},
             {"screening", b.screening},
             {"selected_features", b.selected_features},
             {"logistic", b.logistic},
             {"forest_regression", b.forest_regression},
             {"forest_classifier", b.forest_classifier},
             {"eval", b.eval ? json(*b.eval) : json(nullptr)},
             {"warnings", b.warnings}};
}

void from_json(const json& j, RiskModelBundle& b) {
    if (j.value("format", "") != kBundleFormat) throw SchemaError("not a model bundle (format tag missing)");
    const int version = j.at("version").get<int>();
    if (version != RiskModelBundle::kVersion)
        throw SchemaError("unsupported bundle version " + std::to_string(version));
    j.at("seed").get_to(b.seed);
    j.at("config").get_to(b.config);
    b.thresholds.clear();
    for (const auto& t : j.at("thresholds")) b.thresholds[t.at("year").get<int>()] = t.at("tau").get<double>();
    j.at("screening").get_to(b.screening);
    j.at("selected_features").get_to(b.selected_features);
    j.at("logistic").get_to(b.logistic);
    j.at("forest_regression").get_to(b.forest_regression);
    j.at("forest_classifier").get_to(b.forest_classifier);
    if (j.at("eval").is_null())
        b.eval.reset();
    else
        b.eval = j.at("eval").get<EvalReport>();
    j.at("warnings").get_to(b.warnings);

    if (b.selected_features.empty()) throw SchemaError("bundle has no selected features");
    if (b.logistic.feature_names != b.selected_features || b.forest_regression.n_features != b.selected_features.size() ||
        b.forest_classifier.n_features != b.selected_features.size())
        throw SchemaError("bundle models disagree on the feature columns");
}

void to_json(json& j, const VulnerabilityAssessment& a) {
    j = json{{"code", a.code},
             {"state", a.state_code},
             {"year", a.year},
             {"vote_lr", a.vote_logistic},
             {"vote_rfr", a.vote_regression_forest},
             {"vote_rfc", a.vote_classifier_forest},
             {"total_risk", a.total_risk},
             {"level", to_string(a.level)},
             {"score_lr", a.score_logistic},
             {"score_rfr", a.score_regression_forest},
             {"score_rfc", a.score_classifier_forest}};
}

void to_json(json& j, const InterventionDelta& d) {
    j = json{{"d_internet", d.d_internet},
             {"d_computer", d.d_computer},
             {"d_connectivity", d.d_connectivity_subscribers}};
}

void to_json(json& j, const InterventionResult& r) {
    json trace = json::array();
    for (const auto& t : r.search_trace) trace.push_back({{"delta", t.delta}, {"level", to_string(t.level)}});
    j = json{{"code", r.code},
             {"year", r.year},
             {"knob", to_string(r.knob)},
             {"target_level", to_string(r.target_level)},
             {"baseline_level", to_string(r.baseline_level)},
             {"new_level", to_string(r.new_level)},
             {"delta", r.delta},
             {"achieved", r.achieved},
             {"search_trace", std::move(trace)}};
}

void to_json(json& j, const StateLevelSummary& s) {
    json fractions = json::object();
    json counts = json::object();
    for (auto l : kAllLevels) {
        counts[std::string(to_string(l))] = s.counts[static_cast<std::size_t>(l)];
        fractions[std::string(to_string(l))] = s.fractions[static_cast<std::size_t>(l)];
    }
    j = json{{"state", s.state}, {"total", s.total}, {"counts", counts}, {"fractions", fractions}};
}

namespace stats {

void to_json(json& j, const CorrelationMatrix& m) {
    j = json{{"covariables", m.covariables}, {"values", m.values}};
}

void to_json(json& j, const GroupSummary& g) {
    j = json{{"level", to_string(g.level)}, {"members", g.members}, {"means", g.mean_per_covariable}};
}

void to_json(json& j, const PairwiseTestResult& r) {
    j = json{{"level_a", to_string(r.level_a)},
             {"level_b", to_string(r.level_b)},
             {"covariable", r.covariable},
             {"t_statistic", std::isfinite(r.t_statistic) ? json(r.t_statistic) : json(nullptr)},
             {"df", r.df},
             {"raw_p", r.raw_p},
             {"adjusted_alpha", r.adjusted_alpha},
             {"significant", r.significant}};
}

void to_json(json& j, const TrendRow& r) {
    j = json{{"member", r.member},
             {"year", r.year},
             {"rows", r.rows},
             {"INTERNET", r.internet},
             {"COMPUTER", r.computer},
             {"ETHNIC", r.ethnic},
             {"RURAL_INDEX", r.rural_index}};
}

}  // namespace stats

json covariables_json(const MunicipalityYear& row) {
    json j = json::object();
    for (const auto& name : all_covariables()) j[name] = covariable_value(row, name);
    j["n_students"] = row.n_students;
    return j;
}

std::string dump_bundle(const RiskModelBundle& bundle) { return json(bundle).dump(2) + "\n"; }

RiskModelBundle parse_bundle(const std::string& text) {
    try {
        return json::parse(text).get<RiskModelBundle>();
    } catch (const json::exception& e) {
        throw SchemaError(std::string("invalid bundle JSON: ") + e.what());
    }
}

void save_bundle(const RiskModelBundle& bundle, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write bundle to " + path.string());
    out << dump_bundle(bundle);
}

RiskModelBundle load_bundle(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open bundle " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_bundle(buf.str());
}

}  // namespace edurisk
