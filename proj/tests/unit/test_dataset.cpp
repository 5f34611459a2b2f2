#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "edurisk/dataset.hpp"
#include "edurisk/error.hpp"
#include "edurisk/stats.hpp"
#include "test_support.hpp"

using namespace edurisk;
using edurisk::testing::fixture;

namespace {

template <typename Parse>
auto parse_file(const std::string& name, Parse parse, bool strict = false) {
    std::ifstream in(fixture(name), std::ios::binary);
    REQUIRE(in);
    return parse(in, strict);
}

AggregateResult aggregate_six() {
    const auto s = parse_file("students_6.csv", parse_students);
    const auto c = parse_file("connectivity_6.csv", parse_connectivity);
    const auto p = parse_file("census_6.csv", parse_census);
    REQUIRE(s.errors.empty());
    return aggregate(s.records, c.records, p.records);
}

}  // namespace

TEST_CASE("subject scores without a global score sum to the global score") {
    std::istringstream in(
        "code,year,reading,citizenship,english,writing,quant,global,internet,computer,ethnic,public_school\n"
        "1,2019,50,50,50,50,50,,1,0,0,1\n");
    const auto r = parse_students(in);
    REQUIRE(r.records.size() == 1);
    CHECK(r.records[0].global_score == 250.0);
    CHECK(r.records[0].subject_scores.has_value());
}

TEST_CASE("global score above 500 is a row error carrying the line number") {
    std::istringstream in(
        "code,year,reading,citizenship,english,writing,quant,global,internet,computer,ethnic,public_school\n"
        "1,2019,,,,,,501,1,0,0,1\n");
    const auto r = parse_students(in);
    CHECK(r.records.empty());
    REQUIRE(r.errors.size() == 1);
    CHECK(r.errors[0].line == 2);
    CHECK(r.errors[0].message.find("score out of range") != std::string::npos);
}

TEST_CASE("three-row fixture reads back verbatim") {
    const auto r = parse_file("students_3rows.csv", parse_students);
    REQUIRE(r.errors.empty());
    REQUIRE(r.records.size() == 3);

    const auto& a = r.records[0];
    CHECK(a.municipality_code == 5001);
    CHECK(a.year == 2019);
    CHECK(a.global_score == 250.0);
    CHECK(a.has_internet);
    CHECK_FALSE(a.has_computer);
    CHECK_FALSE(a.is_ethnic);
    CHECK(a.school_public);

    const auto& b = r.records[1];
    CHECK_FALSE(b.subject_scores.has_value());
    CHECK(b.global_score == 312.5);
    CHECK_FALSE(b.has_internet);
    CHECK(b.has_computer);
    CHECK(b.is_ethnic);
    CHECK_FALSE(b.school_public);

    const auto& c = r.records[2];
    CHECK(c.municipality_code == 5002);
    CHECK(c.year == 2018);
    REQUIRE(c.subject_scores.has_value());
    CHECK((*c.subject_scores)[4] == 70.0);
    CHECK(c.global_score == 270.0);
}

TEST_CASE("bad rows are collected, or thrown in strict mode") {
    const auto r = parse_file("students_bad.csv", parse_students);
    CHECK(r.records.size() == 1);
    REQUIRE(r.errors.size() == 2);
    CHECK(r.errors[0].line == 3);
    CHECK(r.errors[1].line == 4);  // global disagrees with the subject sum

    std::ifstream in(fixture("students_bad.csv"));
    CHECK_THROWS_AS(parse_students(in, true), SchemaError);
}

TEST_CASE("missing header column is a schema error naming the column") {
    std::ifstream in(fixture("students_missing_column.csv"));
    try {
        parse_students(in);
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("ethnic") != std::string::npos);
    }
}

TEST_CASE("CRLF line endings are accepted") {
    std::istringstream in("code,year,subscribers\r\n7,2019,12\r\n");
    const auto r = parse_connectivity(in);
    REQUIRE(r.records.size() == 1);
    CHECK(r.records[0].subscribers == 12);
}

TEST_CASE("census rejects rural population above population") {
    std::istringstream in("code,year,state,population,rural_population\n1,2018,1,100,101\n");
    const auto r = parse_census(in);
    CHECK(r.records.empty());
    CHECK(r.errors.size() == 1);
}

TEST_CASE("two students with one internet user give 50 percent") {
    StudentRecord a{.municipality_code = 1, .year = 2019, .global_score = 200, .has_internet = true};
    StudentRecord b{.municipality_code = 1, .year = 2019, .global_score = 300};
    const std::vector<StudentRecord> students{a, b};
    const std::vector<ConnectivityRecord> conn{{1, 2019, 150}};
    const std::vector<CensusRecord> census{{1, 2019, 9, 10000, 0}};
    const auto r = aggregate(students, conn, census);
    REQUIRE(r.rows.size() == 1);
    CHECK(r.rows[0].internet_pct == 50.0);
    CHECK(r.rows[0].connectivity == 15.0);
    CHECK(r.rows[0].global_score_mean == 250.0);
    CHECK(r.warnings.empty());
}

TEST_CASE("six-student fixture aggregates to hand-computed means") {
    const auto r = aggregate_six();
    REQUIRE(r.rows.size() == 2);
    const auto& m1 = r.rows[0];
    CHECK(m1.code == 5001);
    CHECK(m1.state_code == 5);
    CHECK(m1.n_students == 3);
    CHECK(m1.global_score_mean == doctest::Approx(250.0).epsilon(1e-12));
    CHECK(m1.internet_pct == doctest::Approx(200.0 / 3.0));
    CHECK(m1.computer_pct == doctest::Approx(200.0 / 3.0));
    CHECK(m1.ethnic_pct == doctest::Approx(100.0 / 3.0));
    CHECK(m1.school_public_pct == 100.0);
    CHECK(m1.population == 10000);
    CHECK(m1.connectivity == 30.0);
    CHECK(m1.rural_index == 25.0);

    const auto& m2 = r.rows[1];
    CHECK(m2.code == 5002);
    CHECK(m2.global_score_mean == doctest::Approx(180.0).epsilon(1e-12));
    CHECK(m2.internet_pct == 0.0);
    CHECK(m2.computer_pct == doctest::Approx(100.0 / 3.0));
    CHECK(m2.ethnic_pct == doctest::Approx(200.0 / 3.0));
    CHECK(m2.school_public_pct == doctest::Approx(200.0 / 3.0));
    // 2018 and 2020 census are equally near to 2019; the earlier one wins
    CHECK(m2.population == 4000);
    CHECK(m2.rural_index == 75.0);
    // no connectivity record: zero plus a warning
    CHECK(m2.connectivity == 0.0);
    REQUIRE(r.warnings.size() == 1);
    CHECK(r.warnings[0].find("5002") != std::string::npos);
}

TEST_CASE("students without census population are a hard error") {
    StudentRecord a{.municipality_code = 1, .year = 2019, .global_score = 200};
    const std::vector<StudentRecord> students{a};
    CHECK_THROWS_AS(aggregate(students, {}, {}), DataError);
}

TEST_CASE("aggregate is invariant to input order") {
    const auto rows = generate_synthetic(SynthConfig{.municipalities = 30, .states = 3, .years = {2018, 2019}}, 5);
    auto src = expand_to_sources(rows, 6);
    const auto base = aggregate(src.students, src.connectivity, src.census);
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 3; ++rep) {
        std::shuffle(src.students.begin(), src.students.end(), rng);
        std::shuffle(src.connectivity.begin(), src.connectivity.end(), rng);
        std::shuffle(src.census.begin(), src.census.end(), rng);
        CHECK(aggregate(src.students, src.connectivity, src.census).rows == base.rows);
    }
}

TEST_CASE("expanded sources aggregate back to the generated rows") {
    auto rows = generate_synthetic(planted_signal_config(), 3);
    const auto src = expand_to_sources(rows, 4);
    std::sort(rows.begin(), rows.end(),
              [](const auto& a, const auto& b) { return std::tie(a.code, a.year) < std::tie(b.code, b.year); });
    const auto back = aggregate(src.students, src.connectivity, src.census);
    REQUIRE(back.rows.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& a = rows[i];
        const auto& b = back.rows[i];
        CHECK(a.code == b.code);
        CHECK(a.year == b.year);
        CHECK(a.n_students == b.n_students);
        CHECK(b.internet_pct == doctest::Approx(a.internet_pct).epsilon(1e-12));
        CHECK(b.computer_pct == doctest::Approx(a.computer_pct).epsilon(1e-12));
        CHECK(b.global_score_mean == doctest::Approx(a.global_score_mean).epsilon(1e-9));
        CHECK(b.connectivity == doctest::Approx(a.connectivity).epsilon(1e-12));
        CHECK(b.rural_index == doctest::Approx(a.rural_index).epsilon(1e-12));
        for (double pct : {b.internet_pct, b.computer_pct, b.ethnic_pct, b.school_public_pct, b.rural_index}) {
            CHECK(pct >= 0.0);
            CHECK(pct <= 100.0);
        }
        CHECK(b.connectivity >= 0.0);
    }
}

TEST_CASE("aggregated CSV round trip preserves values") {
    const auto rows = generate_synthetic(SynthConfig{.municipalities = 40}, 9);
    std::stringstream buf;
    write_aggregated_csv(buf, rows);
    const auto back = read_aggregated_csv(buf);
    REQUIRE(back.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(back[i] == rows[i]);  // shortest round-trip formatting is exact
    }
}

TEST_CASE("split_by_year partitions and validates") {
    std::vector<MunicipalityYear> rows;
    for (int y = 2013; y <= 2019; ++y)
        for (int c = 1; c <= 3; ++c) rows.push_back(testing::make_row(c, y, 250));

    SUBCASE("validation year gets all of its rows") {
        const auto s = split_by_year(rows, {2014, 2015, 2016, 2017, 2018}, 2019);
        CHECK(s.train.size() == 15);
        CHECK(s.validation.size() == 3);
        CHECK(s.excluded == 3);
        CHECK(std::all_of(s.validation.begin(), s.validation.end(), [](const auto& r) { return r.year == 2019; }));
        CHECK(s.train.size() + s.validation.size() + s.excluded == rows.size());
    }
    SUBCASE("overlap is a configuration error") {
        CHECK_THROWS_AS(split_by_year(rows, {2014}, 2014), ConfigError);
    }
    SUBCASE("empty partitions are a configuration error") {
        std::vector<MunicipalityYear> old{testing::make_row(1, 2013, 250)};
        CHECK_THROWS_AS(split_by_year(old, {2014}, 2015), ConfigError);
    }
}

TEST_CASE("synthetic generator") {
    SUBCASE("same seed is bit-identical") {
        CHECK(generate_synthetic(planted_signal_config(), 17) == generate_synthetic(planted_signal_config(), 17));
        CHECK(generate_synthetic(planted_signal_config(), 17) != generate_synthetic(planted_signal_config(), 18));
    }
    SUBCASE("zero noise reproduces the planted linear form") {
        auto c = planted_signal_config();
        c.noise_sd = 0.0;
        c.coef_ethnic = -0.3;
        c.coef_rural = -0.2;
        for (const auto& r : generate_synthetic(c, 2)) {
            const double planted = c.base_score + c.coef_internet * r.internet_pct + c.coef_computer * r.computer_pct +
                                   c.coef_ethnic * r.ethnic_pct + c.coef_school * r.school_public_pct +
                                   c.coef_connectivity * r.connectivity + c.coef_rural * r.rural_index;
            CHECK(r.global_score_mean == doctest::Approx(std::clamp(planted, 0.0, 500.0)).epsilon(1e-12));
        }
    }
    SUBCASE("planted internet effect shows as positive correlation") {
        const auto rows = generate_synthetic(planted_signal_config(), 23);
        std::vector<double> x, y;
        for (const auto& r : rows) {
            x.push_back(r.internet_pct);
            y.push_back(r.global_score_mean);
        }
        CHECK(stats::pearson(x, y) > 0.0);
    }
    SUBCASE("rows satisfy the covariable invariants") {
        for (const auto& r : generate_synthetic(planted_signal_config(), 4)) {
            CHECK(r.n_students >= 1);
            CHECK(r.population > 0);
            CHECK(r.global_score_mean >= 0.0);
            CHECK(r.global_score_mean <= 500.0);
            for (double pct : {r.internet_pct, r.computer_pct, r.ethnic_pct, r.school_public_pct, r.rural_index}) {
                CHECK(pct >= 0.0);
                CHECK(pct <= 100.0);
            }
        }
    }
    SUBCASE("non-positive counts are rejected") {
        CHECK_THROWS_AS(generate_synthetic(SynthConfig{.municipalities = 0}, 1), ConfigError);
    }
}

TEST_CASE("covariable lookup by name") {
    const auto r = testing::make_row(1, 2019, 222, 12, 34, 56);
    CHECK(covariable_value(r, kInternet) == 12);
    CHECK(covariable_value(r, kComputer) == 34);
    CHECK(covariable_value(r, kConnectivity) == 56);
    CHECK(covariable_value(r, kGlobalScore) == 222);
    CHECK_THROWS_AS(covariable_value(r, "NOPE"), DataError);
}
