#include <cmath>

#include "doctest.h"
#include "edurisk/error.hpp"
#include "edurisk/risk.hpp"
#include "test_support.hpp"

using namespace edurisk;
using edurisk::testing::make_row;

namespace {

std::vector<MunicipalityYear> triple() {
    return {make_row(1, 2019, 200), make_row(2, 2019, 250), make_row(3, 2019, 300), make_row(4, 2018, 10)};
}

RiskConfig small_config() {
    RiskConfig c;
    c.n_trees = 20;
    return c;
}

}  // namespace

TEST_CASE("threshold on three municipality means") {
    const auto rows = triple();
    CHECK(compute_threshold(rows, 2019, 0.0) == 250.0);
    CHECK(compute_threshold(rows, 2019, 1.0) == doctest::Approx(200.0).epsilon(1e-14));
    CHECK(compute_threshold(rows, 2019, 2.0) <= compute_threshold(rows, 2019, 1.0));
    CHECK_THROWS_AS(compute_threshold(rows, 2018, 1.0), DataError);  // one row only
}

TEST_CASE("labels at the threshold boundary") {
    const std::map<int, double> tau{{2019, 240.0}};
    const std::vector<MunicipalityYear> rows{make_row(1, 2019, 240.0), make_row(2, 2019, 239.99),
                                             make_row(3, 2019, 240.01)};
    CHECK(label_at_risk(rows, tau) == std::vector<int>{0, 1, 0});

    const std::vector<MunicipalityYear> other{make_row(1, 2017, 100.0)};
    CHECK_THROWS_AS(label_at_risk(other, tau), DataError);

    const auto t = triple();
    const std::map<int, double> low{{2019, compute_threshold(t, 2019, 2.0) - 100.0}, {2018, 0.0}};
    const auto labels = label_at_risk(t, low);
    CHECK(std::count(labels.begin(), labels.end(), 1) == 0);
}

TEST_CASE("at-risk count is nonincreasing in k") {
    const auto rows = generate_synthetic(SynthConfig{.municipalities = 300, .years = {2019}}, 4);
    long previous = static_cast<long>(rows.size()) + 1;
    for (int i = 0; i <= 20; ++i) {
        const double k = 0.1 * i;
        const auto labels = label_at_risk(rows, {{2019, compute_threshold(rows, 2019, k)}});
        const long count = std::count(labels.begin(), labels.end(), 1);
        CHECK(count <= previous);
        previous = count;
    }
}

TEST_CASE("all eight vote combinations") {
    const Level expected[] = {Level::None, Level::Low, Level::Medium, Level::Serious};
    for (int mask = 0; mask < 8; ++mask) {
        const bool a = mask & 1, b = mask & 2, c = mask & 4;
        const auto v = combine_votes(a, b, c);
        CHECK(v.total_risk == int(a) + int(b) + int(c));
        CHECK(v.level == expected[v.total_risk]);
        CHECK(v.vote_logistic == a);
        CHECK(v.vote_regression_forest == b);
        CHECK(v.vote_classifier_forest == c);
    }
    CHECK(to_string(Level::Serious) == "Serious");
    CHECK(level_from_total_risk(0) == Level::None);
    CHECK_THROWS(level_from_total_risk(4));
}

TEST_CASE("logistic vote at probability exactly one half counts as at risk") {
    const auto bundle = testing::logistic_only_bundle("INTERNET", -30.0, 1.0);
    const auto a = assess_row(bundle, make_row(1, 2019, 250.0, 30.0));
    CHECK(a.score_logistic == 0.5);
    CHECK(a.vote_logistic);
    CHECK(a.level == Level::Low);
}

TEST_CASE("config validation") {
    RiskConfig c;
    CHECK_NOTHROW(c.validate());
    c.depth_m = 2;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.k = 2.5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.alpha = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("training on planted data selects the planted features") {
    auto synth = planted_signal_config();
    synth.municipalities = 200;
    synth.years = {2014, 2015, 2016, 2017, 2018, 2019};
    const auto rows = generate_synthetic(synth, 31);
    const auto split = split_by_year(rows, {2014, 2015, 2016, 2017, 2018}, 2019);
    auto bundle = train_bundle(split.train, small_config(), 5);

    CHECK(bundle.thresholds.size() == 5);
    const auto& sel = bundle.selected_features;
    CHECK(std::find(sel.begin(), sel.end(), "INTERNET") != sel.end());
    CHECK(std::find(sel.begin(), sel.end(), "CONNECTIVITY") != sel.end());
    CHECK(bundle.logistic.feature_names == sel);
    CHECK(bundle.forest_regression.n_features == sel.size());
    CHECK(bundle.forest_classifier.n_features == sel.size());
    CHECK(bundle.screening.feature_names == initial_features());

    const auto report = evaluate(bundle, split.validation);
    REQUIRE(bundle.eval.has_value());
    CHECK(report.auc_per_model.size() == 3);
    for (const auto& [name, auc] : report.auc_per_model) CHECK(auc >= 0.9);
    std::int64_t total = 0;
    for (const auto& row : report.confusion)
        for (auto c : row) total += c;
    CHECK(total == static_cast<std::int64_t>(split.validation.size()));
    CHECK(report.confusion[1][0] + report.confusion[1][1] + report.confusion[1][2] + report.confusion[1][3] ==
          static_cast<std::int64_t>(report.n_at_risk));

    SUBCASE("validation years reuse the latest training threshold") {
        CHECK(effective_threshold(bundle, 2019) == bundle.thresholds.at(2018));
    }
    SUBCASE("in-sample evaluation on separable data is near perfect") {
        auto copy = bundle;
        std::vector<MunicipalityYear> train2018;
        for (const auto& r : split.train)
            if (r.year == 2018) train2018.push_back(r);
        const auto in_sample = evaluate(copy, train2018);
        for (const auto& [name, auc] : in_sample.auc_per_model) CHECK(auc >= 0.95);
    }
    SUBCASE("one-class validation still yields a confusion matrix") {
        std::vector<MunicipalityYear> safe;
        for (const auto& r : split.validation)
            if (r.global_score_mean >= bundle.thresholds.at(2018)) safe.push_back(r);
        auto copy = bundle;
        const auto r = evaluate(copy, safe);
        CHECK(r.auc_per_model.empty());
        CHECK_FALSE(r.note.empty());
        CHECK(r.confusion[0][0] + r.confusion[0][1] + r.confusion[0][2] + r.confusion[0][3] ==
              static_cast<std::int64_t>(safe.size()));
    }
}

TEST_CASE("same seed, any thread count, same bundle") {
    const auto rows = generate_synthetic(SynthConfig{.municipalities = 80, .years = {2017, 2018}}, 8);
    RiskConfig c = small_config();
    c.k = 0.5;
    c.train_years = {2017, 2018};
    const auto a = train_bundle(rows, c, 3, 1);
    const auto b = train_bundle(rows, c, 3, 8);
    CHECK(dump_bundle(a) == dump_bundle(b));
}

TEST_CASE("one-class training labels are degenerate") {
    std::vector<MunicipalityYear> rows;
    for (int i = 0; i < 20; ++i) rows.push_back(make_row(i + 1, 2018, 250.0 + (i % 2)));
    RiskConfig c = small_config();
    c.k = 2.0;  // tau far below every score
    c.train_years = {2018};
    CHECK_THROWS_AS(train_bundle(rows, c, 1), DegenerateError);
}

TEST_CASE("a single at-risk municipality per year trains with a warning") {
    auto rows = generate_synthetic(SynthConfig{.municipalities = 400, .years = {2018}, .noise_sd = 5.0}, 2);
    std::sort(rows.begin(), rows.end(),
              [](const auto& a, const auto& b) { return a.global_score_mean < b.global_score_mean; });
    rows[0].global_score_mean = 0.0;  // far below everyone else
    for (std::size_t i = 1; i < rows.size(); ++i) rows[i].global_score_mean = std::max(rows[i].global_score_mean, 150.0);
    RiskConfig c = small_config();
    c.train_years = {2018};
    c.k = 2.0;
    const auto labels = label_at_risk(rows, {{2018, compute_threshold(rows, 2018, 2.0)}});
    REQUIRE(std::count(labels.begin(), labels.end(), 1) >= 1);
    const auto bundle = train_bundle(rows, c, 1);
    CHECK_FALSE(bundle.warnings.empty());
}

TEST_CASE("state summaries") {
    auto make = [](MunicipalityCode code, Level level) {
        VulnerabilityAssessment a;
        a.code = code;
        a.level = level;
        a.total_risk = static_cast<int>(level);
        return a;
    };
    SUBCASE("one state all Serious") {
        const std::vector<VulnerabilityAssessment> as{make(1, Level::Serious), make(2, Level::Serious)};
        const auto s = state_summary(as, {{1, 9}, {2, 9}});
        REQUIRE(s.size() == 1);
        CHECK(s[0].fractions[3] == 1.0);
    }
    SUBCASE("two states match a hand tally") {
        const std::vector<VulnerabilityAssessment> as{make(1, Level::None), make(2, Level::Low), make(3, Level::None),
                                                      make(4, Level::Serious), make(5, Level::Medium)};
        const auto s = state_summary(as, {{1, 10}, {2, 10}, {3, 10}, {4, 20}, {5, 20}});
        REQUIRE(s.size() == 2);
        CHECK(s[0].state == 10);
        CHECK(s[0].total == 3);
        CHECK(s[0].counts == std::array<std::int64_t, 4>{2, 1, 0, 0});
        CHECK(s[0].fractions[0] == doctest::Approx(2.0 / 3.0));
        CHECK(s[1].counts == std::array<std::int64_t, 4>{0, 0, 1, 1});
        for (const auto& st : s) {
            double sum = 0.0;
            for (double f : st.fractions) sum += f;
            CHECK(sum == doctest::Approx(1.0));
        }
    }
    SUBCASE("unmapped codes are listed") {
        const std::vector<VulnerabilityAssessment> as{make(1, Level::None), make(77, Level::Low)};
        try {
            state_summary(as, {{1, 10}});
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("77") != std::string::npos);
        }
    }
}
