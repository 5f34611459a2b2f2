#include "edurisk/cli.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "httplib.h"

#include "edurisk/csv.hpp"
#include "edurisk/error.hpp"
#include "edurisk/service.hpp"

namespace edurisk::cli {

namespace fs = std::filesystem;

namespace {

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open input file '" + path + "'");
    return in;
}

std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write output file '" + path.string() + "'");
    return out;
}

void write_text(const fs::path& path, const std::string& text) { open_output(path) << text; }

std::vector<MunicipalityYear> load_rows(const std::string& path) {
    auto in = open_input(path);
    return read_aggregated_csv(in);
}

fs::path sibling(const fs::path& path, const std::string& suffix) {
    return path.parent_path() / (path.stem().string() + suffix);
}

unsigned resolve_threads(int requested) {
    if (requested > 0) return static_cast<unsigned>(requested);
    return std::max(1u, std::thread::hardware_concurrency());
}

RunManifest start_manifest(const CLI::App& sub) {
    RunManifest m;
    m.subcommand = sub.get_name();
    m.config = sub.config_to_str(true, false);
    m.timestamp = timestamp_now();
    return m;
}

void finish_manifest(RunManifest& m, const fs::path& manifest_path) {
    for (const auto& [name, path] : m.outputs) m.checksums[name] = sha256_file(path);
    write_manifest(m, manifest_path);
}

// ---------------------------------------------------------------- synth

struct SynthOptions {
    std::string out_dir;
    std::string preset = "planted";
    int municipalities = 200;
    int states = 10;
    std::string years = "2014-2019";
    std::uint64_t seed = 1;
    double base = 0, coef_internet = 0, coef_computer = 0, coef_ethnic = 0, coef_school = 0, coef_connectivity = 0,
           coef_rural = 0, noise = 0, internet_growth = 0;
};

int cmd_synth(const SynthOptions& o, const CLI::App& sub, std::ostream& out) {
    SynthConfig config;
    if (o.preset == "planted") {
        config = planted_signal_config();
    } else if (o.preset == "null") {
        config.coef_internet = config.coef_connectivity = 0.0;
    } else {
        throw ConfigError("unknown preset '" + o.preset + "' (expected planted or null)");
    }
    config.municipalities = o.municipalities;
    config.states = o.states;
    const auto years = parse_years(o.years);
    config.years.assign(years.begin(), years.end());
    auto override_if = [&](const char* flag, double value, double& field) {
        if (sub.count(flag)) field = value;
    };
    override_if("--base", o.base, config.base_score);
    override_if("--coef-internet", o.coef_internet, config.coef_internet);
    override_if("--coef-computer", o.coef_computer, config.coef_computer);
    override_if("--coef-ethnic", o.coef_ethnic, config.coef_ethnic);
    override_if("--coef-school", o.coef_school, config.coef_school);
    override_if("--coef-connectivity", o.coef_connectivity, config.coef_connectivity);
    override_if("--coef-rural", o.coef_rural, config.coef_rural);
    override_if("--noise", o.noise, config.noise_sd);
    override_if("--internet-growth", o.internet_growth, config.internet_growth_pp);

    const auto rows = generate_synthetic(config, o.seed);
    const auto tables = expand_to_sources(rows, o.seed + 1);

    const fs::path dir(o.out_dir);
    fs::create_directories(dir);
    auto manifest = start_manifest(sub);
    manifest.seed = o.seed;
    {
        auto f = open_output(dir / "students.csv");
        write_students_csv(f, tables.students);
    }
    {
        auto f = open_output(dir / "connectivity.csv");
        write_connectivity_csv(f, tables.connectivity);
    }
    {
        auto f = open_output(dir / "census.csv");
        write_census_csv(f, tables.census);
    }
    {
        auto f = open_output(dir / "planted_aggregates.csv");
        write_aggregated_csv(f, rows);
    }
    for (const char* name : {"students.csv", "connectivity.csv", "census.csv", "planted_aggregates.csv"})
        manifest.outputs[name] = (dir / name).string();
    finish_manifest(manifest, dir / "manifest.json");

    out << "wrote " << tables.students.size() << " students, " << tables.connectivity.size()
        << " connectivity rows and " << tables.census.size() << " census rows for " << rows.size()
        << " municipality-years to " << dir.string() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- ingest

struct IngestOptions {
    std::string students, connectivity, census, out;
    bool strict = false;
};

int cmd_ingest(const IngestOptions& o, const CLI::App& sub, std::ostream& out, std::ostream& err) {
    auto students_in = open_input(o.students);
    auto connectivity_in = open_input(o.connectivity);
    auto census_in = open_input(o.census);

    auto with_file = [](const std::string& path, auto&& parse) {
        try {
            return parse();
        } catch (const SchemaError& e) {
            throw SchemaError(path + ": " + e.what());
        }
    };
    const auto students = with_file(o.students, [&] { return parse_students(students_in, o.strict); });
    const auto connectivity = with_file(o.connectivity, [&] { return parse_connectivity(connectivity_in, o.strict); });
    const auto census = with_file(o.census, [&] { return parse_census(census_in, o.strict); });

    auto report = [&](const std::string& path, const auto& errors) {
        for (const auto& e : errors) err << path << ":" << e.line << ": " << e.message << "\n";
    };
    report(o.students, students.errors);
    report(o.connectivity, connectivity.errors);
    report(o.census, census.errors);

    const auto result = aggregate(students.records, connectivity.records, census.records);
    for (const auto& w : result.warnings) err << "warning: " << w << "\n";

    const fs::path out_path(o.out);
    {
        auto f = open_output(out_path);
        write_aggregated_csv(f, result.rows);
    }
    auto manifest = start_manifest(sub);
    manifest.inputs = {{"students", o.students}, {"connectivity", o.connectivity}, {"census", o.census}};
    manifest.outputs = {{"aggregated", out_path.string()}};
    finish_manifest(manifest, sibling(out_path, ".manifest.json"));

    const auto excluded = students.errors.size() + connectivity.errors.size() + census.errors.size();
    out << "aggregated " << result.rows.size() << " municipality-year rows from " << students.records.size()
        << " students; excluded " << excluded << " invalid rows; " << result.warnings.size() << " warnings\n";
    return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainOptions {
    std::string data, out, report;
    double k = 1.0;
    int depth_m = 3;
    int depth_l = 3;
    double alpha = 0.05;
    std::string train_years = "2014-2018";
    int val_year = 2019;
    std::uint64_t seed = 42;
    int n_trees = 100;
    std::string regression_target = "score";
    int threads = 0;
};

std::string format_fixed(double v, int precision = 4) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(precision) << v;
    return s.str();
}

std::string eval_table(const RiskModelBundle& bundle) {
    std::ostringstream s;
    const auto& eval = *bundle.eval;
    s << "Selected covariables: ";
    for (std::size_t i = 0; i < bundle.selected_features.size(); ++i)
        s << (i ? ", " : "") << bundle.selected_features[i];
    s << "\n\nScreening logistic regression (initial covariables)\n";
    s << std::left << std::setw(14) << "covariable" << std::right << std::setw(14) << "coefficient" << std::setw(12)
      << "std.err" << std::setw(12) << "p-value" << "\n";
    const auto& m = bundle.screening;
    for (std::size_t j = 0; j < m.feature_names.size(); ++j) {
        s << std::left << std::setw(14) << m.feature_names[j] << std::right << std::setw(14)
          << format_fixed(m.coefficients[j + 1], 5) << std::setw(12) << format_fixed(m.standard_errors[j + 1], 5)
          << std::setw(12) << format_fixed(m.p_values[j + 1], 5) << "\n";
    }

    s << "\nAUC for each classification algorithm (validation, n=" << eval.n_rows << ", at risk=" << eval.n_at_risk
      << ")\n";
    s << std::left << std::setw(26) << "Algorithm" << "AUC\n";
    const std::pair<const char*, const char*> names[] = {{kModelLogistic, "Logistic regression"},
                                                         {kModelRegressionForest, "Regression random forest"},
                                                         {kModelClassifierForest, "Classifier random forest"}};
    for (const auto& [key, label] : names) {
        const auto it = eval.auc_per_model.find(key);
        s << std::left << std::setw(26) << label << (it == eval.auc_per_model.end() ? "n/a" : format_fixed(it->second))
          << "\n";
    }
    if (!eval.note.empty()) s << eval.note << "\n";

    s << "\nConfusion matrix (rows: actual not at risk / at risk; columns: TOTAL_RISK 0..3)\n";
    for (const auto& row : eval.confusion) {
        for (std::size_t c = 0; c < row.size(); ++c) s << (c ? " " : "") << std::setw(6) << row[c];
        s << "\n";
    }
    const auto b = binarize(eval.confusion);
    s << "\nBinarized (predicted at risk when TOTAL_RISK >= 1)\n";
    for (const auto& row : b) s << std::setw(6) << row[0] << " " << std::setw(6) << row[1] << "\n";
    return s.str();
}

int cmd_train(const TrainOptions& o, const CLI::App& sub, std::ostream& out, std::ostream& err) {
    RiskConfig config;
    config.k = o.k;
    config.depth_m = o.depth_m;
    config.depth_l = o.depth_l;
    config.alpha = o.alpha;
    config.train_years = parse_years(o.train_years);
    config.validation_year = o.val_year;
    config.n_trees = o.n_trees;
    if (o.regression_target == "score")
        config.regression_target = RegressionTarget::Score;
    else if (o.regression_target == "label")
        config.regression_target = RegressionTarget::Label;
    else
        throw ConfigError("--regression-target must be score or label");
    config.validate();

    const auto rows = load_rows(o.data);
    const auto split = split_by_year(rows, config.train_years, config.validation_year);
    if (split.excluded) err << "note: " << split.excluded << " rows outside the selected years were excluded\n";

    auto bundle = train_bundle(split.train, config, o.seed, resolve_threads(o.threads));
    evaluate(bundle, split.validation);
    for (const auto& w : bundle.warnings) err << "warning: " << w << "\n";

    const fs::path bundle_path(o.out);
    const fs::path report_path = o.report.empty() ? sibling(bundle_path, ".eval.json") : fs::path(o.report);
    const fs::path table_path = sibling(report_path, ".txt");
    {
        auto f = open_output(bundle_path);
        f << dump_bundle(bundle);
    }
    json report = *bundle.eval;
    report["selected_features"] = bundle.selected_features;
    report["thresholds"] = json::object();
    for (const auto& [year, tau] : bundle.thresholds) report["thresholds"][std::to_string(year)] = tau;
    write_text(report_path, report.dump(2) + "\n");
    const auto table = eval_table(bundle);
    write_text(table_path, table);

    auto manifest = start_manifest(sub);
    manifest.seed = o.seed;
    manifest.inputs = {{"data", o.data}};
    manifest.outputs = {{"bundle", bundle_path.string()}, {"report", report_path.string()}, {"table", table_path.string()}};
    finish_manifest(manifest, sibling(bundle_path, ".manifest.json"));

    out << "trained on " << split.train.size() << " rows, validated on " << split.validation.size() << " rows\n\n"
        << table;
    return kExitOk;
}

// ---------------------------------------------------------------- assess

struct AssessOptions {
    std::string bundle, data, out, geojson, geojson_out;
    std::optional<int> year;
};

void write_assessments_csv(std::ostream& f, std::span<const VulnerabilityAssessment> assessments) {
    using csv::format_double;
    f << "code,state,year,vote_lr,vote_rfr,vote_rfc,total_risk,level,score_lr,score_rfr,score_rfc\n";
    for (const auto& a : assessments) {
        f << a.code << ',' << a.state_code << ',' << a.year << ',' << int(a.vote_logistic) << ','
          << int(a.vote_regression_forest) << ',' << int(a.vote_classifier_forest) << ',' << a.total_risk << ','
          << to_string(a.level) << ',' << format_double(a.score_logistic) << ','
          << format_double(a.score_regression_forest) << ',' << format_double(a.score_classifier_forest) << '\n';
    }
}

std::optional<MunicipalityCode> geojson_code(const json& feature) {
    if (!feature.contains("properties") || !feature["properties"].is_object()) return std::nullopt;
    const auto& props = feature["properties"];
    if (!props.contains("code")) return std::nullopt;
    const auto& c = props["code"];
    if (c.is_number_integer()) return c.get<MunicipalityCode>();
    if (c.is_string()) {
        if (const auto v = csv::parse_int(c.get<std::string>())) return *v;
    }
    return std::nullopt;
}

int cmd_assess(const AssessOptions& o, const CLI::App& sub, std::ostream& out, std::ostream& err) {
    const auto bundle = load_bundle(o.bundle);
    auto rows = load_rows(o.data);
    if (o.year) std::erase_if(rows, [&](const MunicipalityYear& r) { return r.year != *o.year; });
    std::sort(rows.begin(), rows.end(),
              [](const auto& a, const auto& b) { return std::tie(a.code, a.year) < std::tie(b.code, b.year); });
    const auto assessments = assess(bundle, rows);

    const fs::path out_path(o.out);
    {
        auto f = open_output(out_path);
        write_assessments_csv(f, assessments);
    }
    auto manifest = start_manifest(sub);
    manifest.inputs = {{"bundle", o.bundle}, {"data", o.data}};
    manifest.outputs = {{"assessments", out_path.string()}};

    if (!o.geojson.empty()) {
        if (o.geojson_out.empty()) throw ConfigError("--geojson requires --geojson-out");
        json geo;
        try {
            auto in = open_input(o.geojson);
            geo = json::parse(in);
        } catch (const json::exception& e) {
            throw SchemaError(o.geojson + ": " + e.what());
        }
        if (!geo.contains("features") || !geo["features"].is_array())
            throw SchemaError(o.geojson + ": not a GeoJSON FeatureCollection");
        // latest assessed year per code
        std::map<MunicipalityCode, const VulnerabilityAssessment*> latest;
        for (const auto& a : assessments) latest[a.code] = &a;
        std::vector<std::string> unmatched;
        for (auto& feature : geo["features"]) {
            const auto code = geojson_code(feature);
            const auto it = code ? latest.find(*code) : latest.end();
            if (it == latest.end()) {
                unmatched.push_back(code ? std::to_string(*code) : "<missing code>");
                continue;
            }
            feature["properties"]["total_risk"] = it->second->total_risk;
            feature["properties"]["level"] = to_string(it->second->level);
            feature["properties"]["year"] = it->second->year;
        }
        if (!unmatched.empty()) {
            err << "warning: " << unmatched.size() << " GeoJSON features without an assessment:";
            for (const auto& c : unmatched) err << " " << c;
            err << "\n";
        }
        write_text(o.geojson_out, geo.dump(2) + "\n");
        manifest.inputs["geojson"] = o.geojson;
        manifest.outputs["geojson"] = o.geojson_out;
    }
    finish_manifest(manifest, sibling(out_path, ".manifest.json"));

    std::array<int, 4> counts{};
    for (const auto& a : assessments) ++counts[static_cast<std::size_t>(a.total_risk)];
    out << "assessed " << assessments.size() << " rows:";
    for (auto l : kAllLevels) out << " " << to_string(l) << "=" << counts[static_cast<std::size_t>(l)];
    out << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- whatif / plan

struct WhatifOptions {
    std::string bundle, data, out, knob, target = "None";
    long long code = 0;
    int year = 0;
    std::optional<long long> state;
    std::optional<double> step, max_delta;
    double d_internet = 0, d_computer = 0, d_connectivity = 0;
};

Knob require_knob(const std::string& name) {
    const auto knob = parse_knob(name);
    if (!knob) throw ConfigError("unknown knob '" + name + "' (expected internet, computer or connectivity)");
    return *knob;
}

Level require_level(const std::string& name) {
    const auto level = parse_level(name);
    if (!level) throw ConfigError("unknown level '" + name + "' (expected None, Low, Medium or Serious)");
    return *level;
}

double default_step(Knob knob) { return knob == Knob::Connectivity ? kDefaultSubscriberStep : kDefaultPercentStep; }
double default_max(Knob knob) { return knob == Knob::Connectivity ? kDefaultSubscriberMax : kDefaultPercentMax; }

int cmd_whatif(const WhatifOptions& o, const CLI::App& sub, std::ostream& out) {
    const auto bundle = load_bundle(o.bundle);
    const auto rows = load_rows(o.data);
    const InterventionDelta delta{o.d_internet, o.d_computer, o.d_connectivity};

    json result;
    if (o.state) {
        std::vector<MunicipalityYear> year_rows;
        for (const auto& r : rows)
            if (r.year == o.year) year_rows.push_back(r);
        const auto s = state_whatif(bundle, year_rows, *o.state, delta);
        result = json{{"v", service::kSchemaVersion}, {"state", s.state},   {"year", o.year},
                      {"delta", delta},                {"baseline", s.baseline}, {"improved", s.improved},
                      {"assessments", s.assessments}};
    } else {
        const auto it = std::find_if(rows.begin(), rows.end(),
                                     [&](const MunicipalityYear& r) { return r.code == o.code && r.year == o.year; });
        if (it == rows.end())
            throw DataError("unknown municipality " + std::to_string(o.code) + " in year " + std::to_string(o.year));
        if (!o.knob.empty()) {
            const auto knob = require_knob(o.knob);
            const auto r = minimal_intervention(bundle, *it, knob, require_level(o.target),
                                                o.step.value_or(default_step(knob)),
                                                o.max_delta.value_or(default_max(knob)));
            result = r;
            result["v"] = service::kSchemaVersion;
        } else {
            result = service::whatif_response(bundle, *it, delta);
        }
    }
    const auto text = result.dump(2) + "\n";
    out << text;
    if (!o.out.empty()) {
        write_text(o.out, text);
        auto manifest = start_manifest(sub);
        manifest.inputs = {{"bundle", o.bundle}, {"data", o.data}};
        manifest.outputs = {{"result", o.out}};
        finish_manifest(manifest, sibling(o.out, ".manifest.json"));
    }
    return kExitOk;
}

struct PlanOptions {
    std::string bundle, data, out, knob = "computer", target = "None";
    int year = 0;
    std::optional<double> step, max_delta;
    int threads = 0;
};

int cmd_plan(const PlanOptions& o, const CLI::App& sub, std::ostream& out) {
    const auto bundle = load_bundle(o.bundle);
    auto rows = load_rows(o.data);
    std::erase_if(rows, [&](const MunicipalityYear& r) { return r.year != o.year; });
    if (rows.empty()) throw DataError("no rows for year " + std::to_string(o.year));
    const auto knob = require_knob(o.knob);
    const auto plan = batch_plan(bundle, rows, knob, require_level(o.target), o.step.value_or(default_step(knob)),
                                 o.max_delta.value_or(default_max(knob)), resolve_threads(o.threads));
    {
        auto f = open_output(o.out);
        f << "code,year,knob,baseline_level,new_level,achieved,delta\n";
        for (const auto& r : plan) {
            f << r.code << ',' << r.year << ',' << to_string(r.knob) << ',' << to_string(r.baseline_level) << ','
              << to_string(r.new_level) << ',' << int(r.achieved) << ',' << csv::format_double(r.knob_delta()) << '\n';
        }
    }
    auto manifest = start_manifest(sub);
    manifest.inputs = {{"bundle", o.bundle}, {"data", o.data}};
    manifest.outputs = {{"plan", o.out}};
    finish_manifest(manifest, sibling(o.out, ".manifest.json"));
    const auto achieved = std::count_if(plan.begin(), plan.end(), [](const auto& r) { return r.achieved; });
    out << "planned " << plan.size() << " municipalities; target reached for " << achieved << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- report

struct ReportOptions {
    std::string data, bundle, out_dir, scope = "country", members;
    double alpha = 0.05;
};

int cmd_report(const ReportOptions& o, const CLI::App& sub, std::ostream& out, std::ostream& err) {
    const auto rows = load_rows(o.data);
    const fs::path dir(o.out_dir);
    fs::create_directories(dir);
    auto manifest = start_manifest(sub);
    manifest.inputs = {{"data", o.data}};
    auto emit = [&](const std::string& name, const std::string& text) {
        write_text(dir / name, text);
        manifest.outputs[name] = (dir / name).string();
    };

    const std::vector<std::string> corr_vars{std::string(kInternet),    std::string(kComputer),
                                             std::string(kEthnic),      std::string(kSchool),
                                             std::string(kGlobalScore), std::string(kConnectivity),
                                             std::string(kRuralIndex)};
    const auto corr = stats::correlation_matrix(rows, corr_vars);
    emit("correlation.json", json(corr).dump(2) + "\n");
    {
        std::ostringstream s;
        s << "covariable";
        for (const auto& n : corr.covariables) s << ',' << n;
        s << '\n';
        for (std::size_t i = 0; i < corr.covariables.size(); ++i) {
            s << corr.covariables[i];
            for (double v : corr.values[i]) s << ',' << csv::format_double(v);
            s << '\n';
        }
        emit("correlation.csv", s.str());
    }

    stats::TrendScope scope;
    if (o.scope == "country")
        scope.kind = stats::ScopeKind::Country;
    else if (o.scope == "states")
        scope.kind = stats::ScopeKind::States;
    else if (o.scope == "municipalities")
        scope.kind = stats::ScopeKind::Municipalities;
    else
        throw ConfigError("--scope must be country, states or municipalities");
    if (!o.members.empty()) {
        for (const auto& m : csv::split(o.members)) {
            const auto v = csv::parse_int(m);
            if (!v) throw ConfigError("--members must be a comma-separated list of codes");
            scope.members.push_back(*v);
        }
    }
    const auto trend = stats::trend_report(rows, scope);
    emit("trend.json", json(trend).dump(2) + "\n");
    {
        std::ostringstream s;
        s << "member,year,rows,INTERNET,COMPUTER,ETHNIC,RURAL_INDEX\n";
        for (const auto& t : trend)
            s << t.member << ',' << t.year << ',' << t.rows << ',' << csv::format_double(t.internet) << ','
              << csv::format_double(t.computer) << ',' << csv::format_double(t.ethnic) << ','
              << csv::format_double(t.rural_index) << '\n';
        emit("trend.csv", s.str());
    }

    if (!o.bundle.empty()) {
        manifest.inputs["bundle"] = o.bundle;
        const auto bundle = load_bundle(o.bundle);
        const auto assessments = assess(bundle, rows);
        const std::vector<std::string> group_vars{std::string(kInternet), std::string(kComputer),
                                                  std::string(kEthnic), std::string(kConnectivity),
                                                  std::string(kRuralIndex), std::string(kGlobalScore)};
        emit("group_means.json", json(stats::group_means(rows, assessments, group_vars)).dump(2) + "\n");
        const auto tests = stats::bonferroni_pairwise(
            rows, assessments,
            {std::string(kInternet), std::string(kComputer), std::string(kEthnic), std::string(kConnectivity)},
            o.alpha);
        for (const auto& n : tests.notices) err << "notice: " << n << "\n";
        emit("bonferroni.json", json{{"tests_performed", tests.tests_performed},
                                     {"results", tests.results},
                                     {"notices", tests.notices}}
                                        .dump(2) + "\n");
        std::map<MunicipalityCode, StateCode> states;
        for (const auto& r : rows) states[r.code] = r.state_code;
        emit("state_summary.json", json(state_summary(assessments, states)).dump(2) + "\n");
    }
    finish_manifest(manifest, dir / "manifest.json");
    out << "wrote " << manifest.outputs.size() << " report files to " << dir.string() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- serve

struct ServeOptions {
    std::string bundle, data, host = "0.0.0.0", cors_origin;
    int port = 8080;
};

int cmd_serve(const ServeOptions& o, std::ostream& out) {
    const auto state = service::ServiceState::load(load_bundle(o.bundle), load_rows(o.data));
    auto server = service::make_server(state, {o.cors_origin});
    out << "serving " << state.rows.size() << " rows on http://" << o.host << ":" << o.port << "\n" << std::flush;
    if (!server->listen(o.host, o.port)) throw ConfigError("cannot listen on " + o.host + ":" + std::to_string(o.port));
    return kExitOk;
}

}  // namespace

std::set<int> parse_years(std::string_view text) {
    std::set<int> years;
    for (const auto& piece : csv::split(text)) {
        if (piece.empty()) continue;
        const auto dash = piece.find('-', 1);
        if (dash == std::string::npos) {
            const auto y = csv::parse_int(piece);
            if (!y) throw ConfigError("invalid year '" + piece + "'");
            years.insert(static_cast<int>(*y));
        } else {
            const auto lo = csv::parse_int(piece.substr(0, dash));
            const auto hi = csv::parse_int(piece.substr(dash + 1));
            if (!lo || !hi || *lo > *hi) throw ConfigError("invalid year range '" + piece + "'");
            for (auto y = *lo; y <= *hi; ++y) years.insert(static_cast<int>(y));
        }
    }
    if (years.empty()) throw ConfigError("no years given");
    return years;
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string() + " for checksum");
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
    std::array<char, 1 << 16> buf;
    while (in) {
        in.read(buf.data(), buf.size());
        EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), digest, &len);
    std::ostringstream hex;
    for (unsigned i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return hex.str();
}

std::string timestamp_now() {
    std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
        if (const auto v = csv::parse_int(epoch)) t = static_cast<std::time_t>(*v);
    }
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream s;
    s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return s.str();
}

void write_manifest(const RunManifest& m, const fs::path& path) {
    json config = json::object();
    std::istringstream lines(m.config);
    for (std::string line; std::getline(lines, line);) {
        const auto eq = line.find('=');
        if (eq == std::string::npos || line.empty() || line[0] == '#' || line[0] == '[') continue;
        auto trim = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t\""));
            s.erase(s.find_last_not_of(" \t\"") + 1);
            return s;
        };
        const auto value = trim(line.substr(eq + 1));
        if (!value.empty()) config[trim(line.substr(0, eq))] = value;
    }
    json j{{"subcommand", m.subcommand}, {"config", config},      {"inputs", m.inputs},
           {"outputs", m.outputs},       {"timestamp", m.timestamp}, {"checksums", m.checksums},
           {"seed", m.seed ? json(*m.seed) : json(nullptr)}};
    write_text(path, j.dump(2) + "\n");
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Municipality academic-vulnerability pipeline", "edurisk"};
    app.set_config("--config", "", "INI/TOML file whose keys mirror the command-line flags");
    app.require_subcommand(1);

    SynthOptions synth;
    auto* s = app.add_subcommand("synth", "Generate synthetic student/connectivity/census fixtures");
    s->add_option("--out-dir", synth.out_dir, "Directory for the fixture CSVs")->required();
    s->add_option("--preset", synth.preset, "planted (strong internet/connectivity effects) or null")
        ->capture_default_str();
    s->add_option("--municipalities", synth.municipalities)->capture_default_str();
    s->add_option("--states", synth.states)->capture_default_str();
    s->add_option("--years", synth.years, "e.g. 2014-2019")->capture_default_str();
    s->add_option("--seed", synth.seed)->capture_default_str();
    s->add_option("--base", synth.base, "Base score of the planted linear model");
    s->add_option("--coef-internet", synth.coef_internet);
    s->add_option("--coef-computer", synth.coef_computer);
    s->add_option("--coef-ethnic", synth.coef_ethnic);
    s->add_option("--coef-school", synth.coef_school);
    s->add_option("--coef-connectivity", synth.coef_connectivity);
    s->add_option("--coef-rural", synth.coef_rural);
    s->add_option("--noise", synth.noise, "Noise standard deviation");
    s->add_option("--internet-growth", synth.internet_growth, "Internet percentage-point growth per year");

    IngestOptions ingest;
    auto* i = app.add_subcommand("ingest", "Aggregate source tables into municipality-year covariables");
    i->add_option("--students", ingest.students)->required();
    i->add_option("--connectivity", ingest.connectivity)->required();
    i->add_option("--census", ingest.census)->required();
    i->add_option("--out", ingest.out)->required();
    i->add_flag("--strict", ingest.strict, "Fail on the first invalid row");

    TrainOptions train;
    auto* t = app.add_subcommand("train", "Train the three-model ensemble and evaluate it");
    t->add_option("--data", train.data, "Aggregated CSV")->required();
    t->add_option("--out", train.out, "Bundle JSON path")->required();
    t->add_option("--report", train.report, "Evaluation JSON path (default: <out>.eval.json)");
    t->add_option("--k", train.k, "Threshold = mean - k * sd")->capture_default_str();
    t->add_option("--depth-m", train.depth_m, "Regression forest depth (> 2)")->capture_default_str();
    t->add_option("--depth-l", train.depth_l, "Classifier forest depth")->capture_default_str();
    t->add_option("--alpha", train.alpha)->capture_default_str();
    t->add_option("--train-years", train.train_years)->capture_default_str();
    t->add_option("--val-year", train.val_year)->capture_default_str();
    t->add_option("--seed", train.seed)->capture_default_str();
    t->add_option("--n-trees", train.n_trees)->capture_default_str();
    t->add_option("--regression-target", train.regression_target, "score or label")->capture_default_str();
    t->add_option("--threads", train.threads, "Worker threads (0 = all cores)")->envname("RISK_THREADS");

    AssessOptions assess_opts;
    auto* a = app.add_subcommand("assess", "Export per-municipality vulnerability levels");
    a->add_option("--bundle", assess_opts.bundle)->required();
    a->add_option("--data", assess_opts.data)->required();
    a->add_option("--out", assess_opts.out)->required();
    a->add_option("--year", assess_opts.year, "Only assess this year");
    a->add_option("--geojson", assess_opts.geojson, "GeoJSON whose features carry a 'code' property");
    a->add_option("--geojson-out", assess_opts.geojson_out);

    WhatifOptions whatif_opts;
    auto* w = app.add_subcommand("whatif", "Counterfactual assessment or minimal-intervention search");
    w->add_option("--bundle", whatif_opts.bundle)->required();
    w->add_option("--data", whatif_opts.data)->required();
    w->add_option("--code", whatif_opts.code);
    w->add_option("--year", whatif_opts.year)->required();
    w->add_option("--state", whatif_opts.state, "Apply the deltas to every municipality of this state");
    w->add_option("--knob", whatif_opts.knob, "internet, computer or connectivity (enables the search)");
    w->add_option("--target", whatif_opts.target, "None, Low, Medium or Serious")->capture_default_str();
    w->add_option("--step", whatif_opts.step, "Default 1 point or 10 subscribers");
    w->add_option("--max-delta", whatif_opts.max_delta, "Default 100 points or 10000 subscribers");
    w->add_option("--d-internet", whatif_opts.d_internet);
    w->add_option("--d-computer", whatif_opts.d_computer);
    w->add_option("--d-connectivity", whatif_opts.d_connectivity, "Additional subscriptions");
    w->add_option("--out", whatif_opts.out, "Also write the JSON result here");

    PlanOptions plan;
    auto* p = app.add_subcommand("plan", "Minimal-intervention search for every municipality of a year");
    p->add_option("--bundle", plan.bundle)->required();
    p->add_option("--data", plan.data)->required();
    p->add_option("--year", plan.year)->required();
    p->add_option("--out", plan.out)->required();
    p->add_option("--knob", plan.knob)->capture_default_str();
    p->add_option("--target", plan.target)->capture_default_str();
    p->add_option("--step", plan.step);
    p->add_option("--max-delta", plan.max_delta);
    p->add_option("--threads", plan.threads)->envname("RISK_THREADS");

    ReportOptions report;
    auto* r = app.add_subcommand("report", "Correlations, trends, group means and Bonferroni tests");
    r->add_option("--data", report.data)->required();
    r->add_option("--out-dir", report.out_dir)->required();
    r->add_option("--bundle", report.bundle, "Adds level-based summaries");
    r->add_option("--scope", report.scope, "country, states or municipalities")->capture_default_str();
    r->add_option("--members", report.members, "Comma-separated state or municipality codes");
    r->add_option("--alpha", report.alpha)->capture_default_str();

    ServeOptions serve;
    auto* v = app.add_subcommand("serve", "Read-only JSON API over a bundle and dataset");
    v->add_option("--bundle", serve.bundle)->required();
    v->add_option("--data", serve.data)->required();
    v->add_option("--host", serve.host)->capture_default_str();
    v->add_option("--port", serve.port)->envname("RISK_PORT")->capture_default_str();
    v->add_option("--cors-origin", serve.cors_origin);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (s->parsed()) return cmd_synth(synth, *s, out);
        if (i->parsed()) return cmd_ingest(ingest, *i, out, err);
        if (t->parsed()) return cmd_train(train, *t, out, err);
        if (a->parsed()) return cmd_assess(assess_opts, *a, out, err);
        if (w->parsed()) return cmd_whatif(whatif_opts, *w, out);
        if (p->parsed()) return cmd_plan(plan, *p, out);
        if (r->parsed()) return cmd_report(report, *r, out, err);
        if (v->parsed()) return cmd_serve(serve, out);
    } catch (const DegenerateError& e) {
        err << "error: " << e.what() << "\n";
        return kExitDegenerate;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}

}  // namespace edurisk::cli
