#include <cstdlib>
#include <sstream>

#include "doctest.h"
#include "edurisk/cli.hpp"
#include "edurisk/csv.hpp"
#include "edurisk/service.hpp"
#include "test_support.hpp"

using namespace edurisk;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "edurisk");
    std::ostringstream out, err;
    Run r;
    r.code = cli::run(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

/// synth -> ingest -> train on a small planted fixture, shared by the cases.
struct Pipeline {
    fs::path dir;
    fs::path data;
    fs::path bundle;

    explicit Pipeline(const std::string& name) : dir(testing::scratch_dir(name)) {
        data = dir / "aggregated.csv";
        bundle = dir / "bundle.json";
        REQUIRE(run({"synth", "--out-dir", (dir / "src").string(), "--municipalities", "120", "--seed", "4"}).code ==
                0);
        REQUIRE(run({"ingest", "--students", (dir / "src/students.csv").string(), "--connectivity",
                     (dir / "src/connectivity.csv").string(), "--census", (dir / "src/census.csv").string(), "--out",
                     data.string()})
                    .code == 0);
        const auto t = run({"train", "--data", data.string(), "--out", bundle.string(), "--n-trees", "20"});
        REQUIRE_MESSAGE(t.code == 0, t.err);
    }
};

}  // namespace

TEST_CASE("usage errors exit with 2") {
    CHECK(run({}).code == 2);
    CHECK(run({"bogus"}).code == 2);
    CHECK(run({"train"}).code == 2);
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("synth") {
    const auto dir = testing::scratch_dir("cli_synth");
    SUBCASE("same seed gives identical files") {
        REQUIRE(run({"synth", "--out-dir", (dir / "a").string(), "--municipalities", "30", "--seed", "9"}).code == 0);
        REQUIRE(run({"synth", "--out-dir", (dir / "b").string(), "--municipalities", "30", "--seed", "9"}).code == 0);
        for (const char* f : {"students.csv", "connectivity.csv", "census.csv", "planted_aggregates.csv"})
            CHECK(testing::read_file(dir / "a" / f) == testing::read_file(dir / "b" / f));
        CHECK(fs::exists(dir / "a/manifest.json"));
    }
    SUBCASE("ten municipalities in one year give ten rows") {
        REQUIRE(run({"synth", "--out-dir", (dir / "c").string(), "--municipalities", "10", "--years", "2019"}).code ==
                0);
        const auto r = run({"ingest", "--students", (dir / "c/students.csv").string(), "--connectivity",
                            (dir / "c/connectivity.csv").string(), "--census", (dir / "c/census.csv").string(),
                            "--out", (dir / "c/agg.csv").string()});
        CHECK(r.code == 0);
        CHECK(r.out.find("aggregated 10 municipality-year rows") != std::string::npos);
        std::ifstream in(dir / "c/agg.csv");
        CHECK(read_aggregated_csv(in).size() == 10);
    }
    SUBCASE("invalid counts exit with 2") {
        CHECK(run({"synth", "--out-dir", (dir / "d").string(), "--municipalities", "0"}).code == 2);
    }
}

TEST_CASE("ingest errors") {
    const auto dir = testing::scratch_dir("cli_ingest");
    const auto students = testing::fixture("students_6.csv").string();
    const auto conn = testing::fixture("connectivity_6.csv").string();
    const auto census = testing::fixture("census_6.csv").string();
    SUBCASE("valid fixture triple") {
        const auto r = run({"ingest", "--students", students, "--connectivity", conn, "--census", census, "--out",
                            (dir / "agg.csv").string()});
        CHECK(r.code == 0);
        CHECK(r.out.find("aggregated 2 ") != std::string::npos);
        CHECK(r.err.find("warning") != std::string::npos);
        CHECK(fs::exists(dir / "agg.manifest.json"));
    }
    SUBCASE("missing census file names the path") {
        const auto missing = (dir / "no_census.csv").string();
        const auto r = run({"ingest", "--students", students, "--connectivity", conn, "--census", missing, "--out",
                            (dir / "agg.csv").string()});
        CHECK(r.code == 2);
        CHECK(r.err.find(missing) != std::string::npos);
    }
    SUBCASE("strict mode stops at a bad row") {
        const auto bad = testing::fixture("students_bad.csv").string();
        const auto lenient = run({"ingest", "--students", bad, "--connectivity", conn, "--census", census, "--out",
                                  (dir / "agg.csv").string()});
        CHECK(lenient.code == 0);
        const auto strict = run({"ingest", "--students", bad, "--connectivity", conn, "--census", census, "--out",
                                 (dir / "agg.csv").string(), "--strict"});
        CHECK(strict.code == 2);
        CHECK(strict.err.find("line 3") != std::string::npos);
    }
    SUBCASE("schema error names the column") {
        const auto r = run({"ingest", "--students", testing::fixture("students_missing_column.csv").string(),
                            "--connectivity", conn, "--census", census, "--out", (dir / "agg.csv").string()});
        CHECK(r.code == 2);
        CHECK(r.err.find("ethnic") != std::string::npos);
    }
}

TEST_CASE("train, assess, whatif and report") {
    const Pipeline p("cli_pipeline");

    SUBCASE("train report has three AUC values") {
        const auto table = testing::read_file(p.dir / "bundle.eval.txt");
        for (const char* name : {"Logistic regression", "Regression random forest", "Classifier random forest"})
            CHECK(table.find(name) != std::string::npos);
        const auto eval = json::parse(testing::read_file(p.dir / "bundle.eval.json"));
        CHECK(eval["auc"].size() == 3);
        CHECK(fs::exists(p.dir / "bundle.manifest.json"));
    }
    SUBCASE("invalid depth and degenerate labels") {
        CHECK(run({"train", "--data", p.data.string(), "--out", (p.dir / "x.json").string(), "--depth-m", "2"}).code ==
              2);
        const auto k0 = run({"train", "--data", p.data.string(), "--out", (p.dir / "k0.json").string(), "--k", "0",
                             "--n-trees", "10"});
        CHECK(k0.code == 0);
    }
    SUBCASE("assess is byte-reproducible and uses the level names") {
        const auto a = p.dir / "a.csv";
        const auto b = p.dir / "b.csv";
        REQUIRE(run({"assess", "--bundle", p.bundle.string(), "--data", p.data.string(), "--out", a.string()}).code ==
                0);
        REQUIRE(run({"assess", "--bundle", p.bundle.string(), "--data", p.data.string(), "--out", b.string()}).code ==
                0);
        const auto text = testing::read_file(a);
        CHECK(text == testing::read_file(b));
        CHECK(text.rfind("code,state,year,vote_lr,vote_rfr,vote_rfc,total_risk,level,score_lr,score_rfr,score_rfc\n",
                         0) == 0);
        std::istringstream lines(text);
        std::string line;
        std::getline(lines, line);
        while (std::getline(lines, line)) {
            const auto fields = csv::split(line);
            REQUIRE(fields.size() == 11);
            CHECK(parse_level(fields[7]).has_value());
        }
    }
    SUBCASE("geojson with unmatched codes warns and succeeds") {
        auto geo = json::parse(testing::read_file(testing::fixture("regions.geojson")));
        geo["features"][0]["properties"]["code"] = 1001;
        const auto geo_in = p.dir / "regions.geojson";
        std::ofstream(geo_in) << geo.dump();
        const auto r = run({"assess", "--bundle", p.bundle.string(), "--data", p.data.string(), "--out",
                            (p.dir / "g.csv").string(), "--geojson", geo_in.string(), "--geojson-out",
                            (p.dir / "g.geojson").string()});
        CHECK(r.code == 0);
        CHECK(r.err.find("999") != std::string::npos);
        const auto joined = json::parse(testing::read_file(p.dir / "g.geojson"));
        CHECK(joined["features"][0]["properties"].contains("level"));
        CHECK_FALSE(joined["features"][2]["properties"].contains("level"));
    }
    SUBCASE("whatif knob search and explicit deltas") {
        const auto target_none = run({"whatif", "--bundle", p.bundle.string(), "--data", p.data.string(), "--code",
                                      "1001", "--year", "2019", "--knob", "internet", "--target", "Serious"});
        REQUIRE(target_none.code == 0);
        const auto j = json::parse(target_none.out);
        CHECK(j["achieved"] == true);
        CHECK(j["delta"]["d_internet"] == 0.0);
        CHECK(j["search_trace"].size() == 1);

        const auto unknown = run({"whatif", "--bundle", p.bundle.string(), "--data", p.data.string(), "--code",
                                  "424242", "--year", "2019", "--knob", "internet"});
        CHECK(unknown.code == 2);

        const auto explicit_delta = run({"whatif", "--bundle", p.bundle.string(), "--data", p.data.string(), "--code",
                                         "1001", "--year", "2019", "--d-computer", "12"});
        REQUIRE(explicit_delta.code == 0);
        // identical to the service response for the same request
        std::ifstream in(p.data);
        const auto state = service::ServiceState::load(load_bundle(p.bundle), read_aggregated_csv(in));
        const auto reply = service::whatif(state, R"({"code":1001,"year":2019,"d_computer":12})");
        CHECK(json::parse(explicit_delta.out) == reply.body);
    }
    SUBCASE("whatif with an unreachable target reports the best level") {
        const auto bundle = p.dir / "unreachable.json";
        auto b = testing::logistic_only_bundle("INTERNET", 200.0, -0.5);
        save_bundle(b, bundle);
        const auto r = run({"whatif", "--bundle", bundle.string(), "--data", testing::fixture("aggregated_5.csv").string(),
                            "--code", "101", "--year", "2019", "--knob", "internet", "--target", "None"});
        REQUIRE(r.code == 0);
        const auto j = json::parse(r.out);
        CHECK(j["achieved"] == false);
        CHECK(j["new_level"] == "Low");
    }
    SUBCASE("plan and report") {
        CHECK(run({"plan", "--bundle", p.bundle.string(), "--data", p.data.string(), "--year", "2019", "--out",
                   (p.dir / "plan.csv").string()})
                  .code == 0);
        const auto r = run({"report", "--data", p.data.string(), "--bundle", p.bundle.string(), "--out-dir",
                            (p.dir / "report").string()});
        CHECK(r.code == 0);
        for (const char* f : {"correlation.json", "correlation.csv", "trend.csv", "group_means.json",
                              "bonferroni.json", "state_summary.json", "manifest.json"})
            CHECK(fs::exists(p.dir / "report" / f));
    }
}

TEST_CASE("train is byte-reproducible across thread counts") {
    const Pipeline p("cli_threads");
    const auto one = p.dir / "one.json";
    const auto eight = p.dir / "eight.json";
    REQUIRE(run({"train", "--data", p.data.string(), "--out", one.string(), "--n-trees", "20", "--threads", "1"})
                .code == 0);
    REQUIRE(run({"train", "--data", p.data.string(), "--out", eight.string(), "--n-trees", "20", "--threads", "8"})
                .code == 0);
    CHECK(testing::read_file(one) == testing::read_file(eight));
    CHECK(testing::read_file(one) == testing::read_file(p.bundle));
}

TEST_CASE("config file supplies flags and command-line flags win") {
    const Pipeline p("cli_config");
    const auto ini = p.dir / "train.ini";
    std::ofstream(ini) << "[train]\ndata=\"" << p.data.string() << "\"\nk=0.5\nn-trees=10\n";
    const auto out = p.dir / "from_config.json";
    const auto r = run({"--config", ini.string(), "train", "--out", out.string(), "--n-trees", "12"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto bundle = load_bundle(out);
    CHECK(bundle.config.k == 0.5);
    CHECK(bundle.config.n_trees == 12);
}

TEST_CASE("manifest timestamps honour SOURCE_DATE_EPOCH") {
    setenv("SOURCE_DATE_EPOCH", "0", 1);
    CHECK(cli::timestamp_now() == "1970-01-01T00:00:00Z");
    unsetenv("SOURCE_DATE_EPOCH");
}

TEST_CASE("year lists") {
    CHECK(cli::parse_years("2014-2016") == std::set<int>{2014, 2015, 2016});
    CHECK(cli::parse_years("2014,2019") == std::set<int>{2014, 2019});
    CHECK_THROWS(cli::parse_years("2019-2014"));
    CHECK_THROWS(cli::parse_years("abc"));
}
