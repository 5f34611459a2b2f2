#include "edurisk/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <tuple>

#include "edurisk/csv.hpp"
#include "edurisk/error.hpp"

namespace edurisk {

namespace {

constexpr std::array<const char*, 5> kSubjectColumns{"reading", "citizenship", "english", "writing", "quant"};

// Row-level problem; converted to RowError or rethrown under --strict.
struct RowProblem {
    std::string message;
};

bool parse_flag(std::string_view s, std::string_view column) {
    if (s == "0") return false;
    if (s == "1") return true;
    throw RowProblem{"column '" + std::string(column) + "' must be 0 or 1"};
}

long long require_int(std::string_view s, std::string_view column) {
    const auto v = csv::parse_int(s);
    if (!v) throw RowProblem{"column '" + std::string(column) + "' is not an integer"};
    return *v;
}

template <typename Record, typename RowFn>
ParseResult<Record> parse_table(std::istream& in, const std::vector<std::string>& header, bool strict, RowFn row_fn) {
    csv::Reader reader(in, header);
    ParseResult<Record> result;
    while (reader.next()) {
        try {
            result.records.push_back(row_fn(reader));
        } catch (const RowProblem& p) {
            if (strict) throw SchemaError("line " + std::to_string(reader.line()) + ": " + p.message);
            result.errors.push_back({reader.line(), p.message});
        }
    }
    return result;
}

StudentRecord parse_student_row(const csv::Reader& r) {
    StudentRecord s;
    s.municipality_code = require_int(r.field("code"), "code");
    if (s.municipality_code <= 0) throw RowProblem{"code must be positive"};
    s.year = static_cast<int>(require_int(r.field("year"), "year"));

    std::array<double, 5> subjects{};
    int present = 0;
    for (std::size_t i = 0; i < kSubjectColumns.size(); ++i) {
        const auto cell = r.field(kSubjectColumns[i]);
        if (cell.empty()) continue;
        const auto v = csv::parse_double(cell);
        if (!v) throw RowProblem{"column '" + std::string(kSubjectColumns[i]) + "' is not a number"};
        if (*v < 0.0 || *v > 100.0) throw RowProblem{"score out of range in '" + std::string(kSubjectColumns[i]) + "'"};
        subjects[i] = *v;
        ++present;
    }
    if (present != 0 && present != 5) throw RowProblem{"incomplete subject scores"};

    std::optional<double> global;
    if (const auto cell = r.field("global"); !cell.empty()) {
        global = csv::parse_double(cell);
        if (!global) throw RowProblem{"column 'global' is not a number"};
        if (*global < 0.0 || *global > 500.0) throw RowProblem{"score out of range in 'global'"};
    }
    if (present == 0 && !global) throw RowProblem{"no score given"};

    if (present == 5) {
        s.subject_scores = subjects;
        const double sum = std::accumulate(subjects.begin(), subjects.end(), 0.0);
        if (global && std::abs(*global - sum) > 0.5)
            throw RowProblem{"global score inconsistent with subject scores"};
        s.global_score = global ? *global : sum;
    } else {
        s.global_score = *global;
    }

    s.has_internet = parse_flag(r.field("internet"), "internet");
    s.has_computer = parse_flag(r.field("computer"), "computer");
    s.is_ethnic = parse_flag(r.field("ethnic"), "ethnic");
    s.school_public = parse_flag(r.field("public_school"), "public_school");
    return s;
}

}  // namespace

const std::vector<std::string>& all_covariables() {
    static const std::vector<std::string> names{
        std::string(kInternet),   std::string(kComputer),   std::string(kEthnic),       std::string(kSchool),
        std::string(kGlobalScore), std::string(kPopulation), std::string(kConnectivity), std::string(kRuralIndex)};
    return names;
}

double covariable_value(const MunicipalityYear& row, std::string_view name) {
    if (name == kInternet) return row.internet_pct;
    if (name == kComputer) return row.computer_pct;
    if (name == kEthnic) return row.ethnic_pct;
    if (name == kSchool) return row.school_public_pct;
    if (name == kGlobalScore) return row.global_score_mean;
    if (name == kPopulation) return static_cast<double>(row.population);
    if (name == kConnectivity) return row.connectivity;
    if (name == kRuralIndex) return row.rural_index;
    throw DataError("unknown covariable '" + std::string(name) + "'");
}

bool is_percentage_covariable(std::string_view name) {
    return name == kInternet || name == kComputer || name == kEthnic || name == kSchool || name == kRuralIndex;
}

ParseResult<StudentRecord> parse_students(std::istream& in, bool strict) {
    static const std::vector<std::string> header{"code",  "year",   "reading", "citizenship", "english",  "writing",
                                                 "quant", "global", "internet", "computer",   "ethnic",   "public_school"};
    return parse_table<StudentRecord>(in, header, strict, parse_student_row);
}

ParseResult<ConnectivityRecord> parse_connectivity(std::istream& in, bool strict) {
    return parse_table<ConnectivityRecord>(in, {"code", "year", "subscribers"}, strict, [](const csv::Reader& r) {
        ConnectivityRecord c;
        c.municipality_code = require_int(r.field("code"), "code");
        c.year = static_cast<int>(require_int(r.field("year"), "year"));
        c.subscribers = require_int(r.field("subscribers"), "subscribers");
        if (c.subscribers < 0) throw RowProblem{"subscribers must be non-negative"};
        return c;
    });
}

ParseResult<CensusRecord> parse_census(std::istream& in, bool strict) {
    return parse_table<CensusRecord>(
        in, {"code", "year", "state", "population", "rural_population"}, strict, [](const csv::Reader& r) {
            CensusRecord c;
            c.municipality_code = require_int(r.field("code"), "code");
            c.year = static_cast<int>(require_int(r.field("year"), "year"));
            c.state_code = require_int(r.field("state"), "state");
            c.population = require_int(r.field("population"), "population");
            c.rural_population = require_int(r.field("rural_population"), "rural_population");
            if (c.population <= 0) throw RowProblem{"population must be positive"};
            if (c.rural_population < 0 || c.rural_population > c.population)
                throw RowProblem{"rural_population must lie in [0, population]"};
            return c;
        });
}

AggregateResult aggregate(std::span<const StudentRecord> students, std::span<const ConnectivityRecord> connectivity,
                          std::span<const CensusRecord> census) {
    using Key = std::pair<MunicipalityCode, int>;

    struct Tally {
        std::int64_t n = 0, internet = 0, computer = 0, ethnic = 0, school = 0;
        std::vector<double> scores;
    };
    std::map<Key, Tally> groups;
    for (const auto& s : students) {
        auto& t = groups[{s.municipality_code, s.year}];
        ++t.n;
        t.internet += s.has_internet;
        t.computer += s.has_computer;
        t.ethnic += s.is_ethnic;
        t.school += s.school_public;
        t.scores.push_back(s.global_score);
    }

    std::map<Key, std::int64_t> subscribers;
    for (const auto& c : connectivity) subscribers[{c.municipality_code, c.year}] += c.subscribers;

    std::map<MunicipalityCode, std::map<int, const CensusRecord*>> census_by_code;
    for (const auto& c : census) {
        auto [it, inserted] = census_by_code[c.municipality_code].emplace(c.year, &c);
        if (!inserted)
            throw DataError("duplicate census record for code " + std::to_string(c.municipality_code) + " year " +
                            std::to_string(c.year));
    }

    AggregateResult result;
    result.rows.reserve(groups.size());
    for (auto& [key, t] : groups) {
        const auto [code, year] = key;
        const auto cit = census_by_code.find(code);
        if (cit == census_by_code.end())
            throw DataError("no census population for municipality " + std::to_string(code) + " (year " +
                            std::to_string(year) + ")");
        // nearest census year; on a tie the earlier year wins because the map is ascending
        const CensusRecord* nearest = nullptr;
        int best_gap = 0;
        for (const auto& [cyear, rec] : cit->second) {
            const int gap = std::abs(cyear - year);
            if (!nearest || gap < best_gap) {
                nearest = rec;
                best_gap = gap;
            }
        }

        // sum in sorted order so the mean does not depend on input order
        std::sort(t.scores.begin(), t.scores.end());
        const double score_sum = std::accumulate(t.scores.begin(), t.scores.end(), 0.0);

        MunicipalityYear row;
        row.code = code;
        row.state_code = nearest->state_code;
        row.year = year;
        row.n_students = t.n;
        row.internet_pct = 100.0 * static_cast<double>(t.internet) / static_cast<double>(t.n);
        row.computer_pct = 100.0 * static_cast<double>(t.computer) / static_cast<double>(t.n);
        row.ethnic_pct = 100.0 * static_cast<double>(t.ethnic) / static_cast<double>(t.n);
        row.school_public_pct = 100.0 * static_cast<double>(t.school) / static_cast<double>(t.n);
        row.global_score_mean = score_sum / static_cast<double>(t.n);
        row.population = nearest->population;
        row.rural_index = 100.0 * static_cast<double>(nearest->rural_population) / static_cast<double>(nearest->population);

        const auto sit = subscribers.find(key);
        if (sit == subscribers.end()) {
            result.warnings.push_back("no connectivity record for municipality " + std::to_string(code) + " year " +
                                      std::to_string(year) + "; using 0");
            row.connectivity = 0.0;
        } else {
            row.connectivity = 1000.0 * static_cast<double>(sit->second) / static_cast<double>(row.population);
        }
        result.rows.push_back(row);
    }
    return result;
}

YearSplit split_by_year(std::span<const MunicipalityYear> rows, const std::set<int>& train_years, int validation_year) {
    if (train_years.empty()) throw ConfigError("no training years given");
    if (train_years.count(validation_year))
        throw ConfigError("validation year " + std::to_string(validation_year) + " overlaps the training years");
    YearSplit split;
    for (const auto& r : rows) {
        if (train_years.count(r.year))
            split.train.push_back(r);
        else if (r.year == validation_year)
            split.validation.push_back(r);
        else
            ++split.excluded;
    }
    if (split.train.empty()) throw ConfigError("training partition is empty");
    if (split.validation.empty()) throw ConfigError("validation partition is empty");
    return split;
}

SynthConfig planted_signal_config() {
    SynthConfig c;
    c.municipalities = 500;
    c.years = {2015, 2016, 2017, 2018, 2019};
    c.base_score = 200.0;
    c.coef_internet = 1.2;
    c.coef_connectivity = 1.0;
    c.noise_sd = 8.0;
    return c;
}

std::vector<MunicipalityYear> generate_synthetic(const SynthConfig& config, std::uint64_t seed) {
    if (config.municipalities <= 0) throw ConfigError("municipality count must be positive");
    if (config.states <= 0) throw ConfigError("state count must be positive");
    if (config.years.empty()) throw ConfigError("at least one year is required");
    if (config.min_students <= 0 || config.max_students < config.min_students)
        throw ConfigError("student counts must satisfy 0 < min_students <= max_students");
    if (config.noise_sd < 0.0) throw ConfigError("noise scale must be non-negative");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unif(rng); };
    auto clamp_pct = [](double v) { return std::clamp(v, 0.0, 100.0); };
    auto quantize = [](double pct, std::int64_t n) {
        const auto count = std::llround(pct * static_cast<double>(n) / 100.0);
        return 100.0 * static_cast<double>(count) / static_cast<double>(n);
    };

    std::vector<int> years = config.years;
    std::sort(years.begin(), years.end());
    years.erase(std::unique(years.begin(), years.end()), years.end());

    std::vector<MunicipalityYear> rows;
    rows.reserve(static_cast<std::size_t>(config.municipalities) * years.size());
    for (int i = 0; i < config.municipalities; ++i) {
        const StateCode state = 1 + i % config.states;
        const MunicipalityCode code = state * 1000 + i / config.states + 1;

        const auto population = std::clamp<std::int64_t>(std::llround(std::exp(std::log(20000.0) + 0.9 * normal(rng))),
                                                         1000, 2000000);
        const double base_students = std::clamp(static_cast<double>(population) / 100.0,
                                                static_cast<double>(config.min_students),
                                                static_cast<double>(config.max_students));
        const double internet_base = uniform(5.0, 60.0);
        const double computer_offset = uniform(5.0, 25.0);
        const double ethnic_base = unif(rng) < 0.7 ? uniform(0.0, 20.0) : uniform(40.0, 100.0);
        const double school_base = uniform(60.0, 100.0);
        const auto rural_population = std::llround(static_cast<double>(population) * uniform(0.1, 0.8));
        const double rural_index = 100.0 * static_cast<double>(rural_population) / static_cast<double>(population);
        const double connectivity_base = uniform(0.0, 20.0);

        for (std::size_t y = 0; y < years.size(); ++y) {
            MunicipalityYear row;
            row.code = code;
            row.state_code = state;
            row.year = years[y];
            row.population = population;
            row.rural_index = rural_index;
            row.n_students = std::clamp<std::int64_t>(std::llround(base_students * uniform(0.9, 1.1)),
                                                      config.min_students, config.max_students);

            const double internet = clamp_pct(internet_base + config.internet_growth_pp * static_cast<double>(y) +
                                              3.0 * normal(rng));
            row.internet_pct = quantize(internet, row.n_students);
            row.computer_pct = quantize(clamp_pct(0.6 * internet + computer_offset + 3.0 * normal(rng)), row.n_students);
            row.ethnic_pct = quantize(clamp_pct(ethnic_base + 2.0 * normal(rng)), row.n_students);
            row.school_public_pct = quantize(clamp_pct(school_base + 2.0 * normal(rng)), row.n_students);

            const double per_thousand = std::max(0.0, connectivity_base + 0.6 * internet + 4.0 * normal(rng));
            const auto subs = std::llround(per_thousand * static_cast<double>(population) / 1000.0);
            row.connectivity = 1000.0 * static_cast<double>(subs) / static_cast<double>(population);

            const double noise = config.noise_sd * normal(rng);
            const double score = config.base_score + config.coef_internet * row.internet_pct +
                                 config.coef_computer * row.computer_pct + config.coef_ethnic * row.ethnic_pct +
                                 config.coef_school * row.school_public_pct +
                                 config.coef_connectivity * row.connectivity + config.coef_rural * row.rural_index;
            row.global_score_mean = std::clamp(score + noise, 0.0, 500.0);
            rows.push_back(row);
        }
    }
    return rows;
}

SourceTables expand_to_sources(std::span<const MunicipalityYear> rows, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    SourceTables out;
    std::map<MunicipalityCode, int> first_year;
    for (const auto& r : rows) {
        auto [it, inserted] = first_year.emplace(r.code, r.year);
        if (!inserted) it->second = std::min(it->second, r.year);
    }

    for (const auto& r : rows) {
        const auto n = r.n_students;
        if (n <= 0) throw DataError("row with no students cannot be expanded");
        auto count = [n](double pct) { return std::llround(pct * static_cast<double>(n) / 100.0); };
        auto flags = [&](double pct) {
            std::vector<bool> f(static_cast<std::size_t>(n), false);
            std::fill_n(f.begin(), count(pct), true);
            std::shuffle(f.begin(), f.end(), rng);
            return f;
        };
        const auto internet = flags(r.internet_pct);
        const auto computer = flags(r.computer_pct);
        const auto ethnic = flags(r.ethnic_pct);
        const auto school = flags(r.school_public_pct);

        // centred deviations scaled to stay inside [0, 500]
        std::vector<double> dev(static_cast<std::size_t>(n));
        for (auto& d : dev) d = normal(rng);
        const double centre = std::accumulate(dev.begin(), dev.end(), 0.0) / static_cast<double>(n);
        double spread = 0.0;
        for (auto& d : dev) {
            d -= centre;
            spread = std::max(spread, std::abs(d));
        }
        const double margin = std::min({40.0, r.global_score_mean, 500.0 - r.global_score_mean});
        const double scale = spread > 0.0 ? margin / spread : 0.0;

        for (std::int64_t i = 0; i < n; ++i) {
            const auto idx = static_cast<std::size_t>(i);
            StudentRecord s;
            s.municipality_code = r.code;
            s.year = r.year;
            s.global_score = std::clamp(r.global_score_mean + scale * dev[idx], 0.0, 500.0);
            if (i % 3 == 0) {
                const double part = s.global_score / 5.0;
                s.subject_scores = std::array<double, 5>{part, part, part, part, part};
            }
            s.has_internet = internet[idx];
            s.has_computer = computer[idx];
            s.is_ethnic = ethnic[idx];
            s.school_public = school[idx];
            out.students.push_back(s);
        }

        out.connectivity.push_back(
            {r.code, r.year, std::llround(r.connectivity * static_cast<double>(r.population) / 1000.0)});
        if (first_year.at(r.code) == r.year) {
            out.census.push_back({r.code, r.year, r.state_code, r.population,
                                  std::llround(r.rural_index * static_cast<double>(r.population) / 100.0)});
        }
    }
    return out;
}

void write_students_csv(std::ostream& out, std::span<const StudentRecord> students) {
    out << "code,year,reading,citizenship,english,writing,quant,global,internet,computer,ethnic,public_school\n";
    for (const auto& s : students) {
        out << s.municipality_code << ',' << s.year << ',';
        if (s.subject_scores) {
            for (double v : *s.subject_scores) out << csv::format_double(v) << ',';
            out << ',';  // global derived from subjects
        } else {
            out << ",,,,," << csv::format_double(s.global_score) << ',';
        }
        out << int(s.has_internet) << ',' << int(s.has_computer) << ',' << int(s.is_ethnic) << ','
            << int(s.school_public) << '\n';
    }
}

void write_connectivity_csv(std::ostream& out, std::span<const ConnectivityRecord> records) {
    out << "code,year,subscribers\n";
    for (const auto& c : records) out << c.municipality_code << ',' << c.year << ',' << c.subscribers << '\n';
}

void write_census_csv(std::ostream& out, std::span<const CensusRecord> records) {
    out << "code,year,state,population,rural_population\n";
    for (const auto& c : records)
        out << c.municipality_code << ',' << c.year << ',' << c.state_code << ',' << c.population << ','
            << c.rural_population << '\n';
}

void write_aggregated_csv(std::ostream& out, std::span<const MunicipalityYear> rows) {
    using csv::format_double;
    out << "code,state,year,internet,computer,ethnic,school,global_score,population,connectivity,rural_index,n_students\n";
    for (const auto& r : rows) {
        out << r.code << ',' << r.state_code << ',' << r.year << ',' << format_double(r.internet_pct) << ','
            << format_double(r.computer_pct) << ',' << format_double(r.ethnic_pct) << ','
            << format_double(r.school_public_pct) << ',' << format_double(r.global_score_mean) << ',' << r.population
            << ',' << format_double(r.connectivity) << ',' << format_double(r.rural_index) << ',' << r.n_students
            << '\n';
    }
}

std::vector<MunicipalityYear> read_aggregated_csv(std::istream& in) {
    csv::Reader reader(in, {"code", "state", "year", "internet", "computer", "ethnic", "school", "global_score",
                            "population", "connectivity", "rural_index", "n_students"});
    std::vector<MunicipalityYear> rows;
    auto fail = [&](const std::string& what) {
        throw SchemaError("line " + std::to_string(reader.line()) + ": " + what);
    };
    auto real = [&](std::string_view col, double lo, double hi) {
        const auto v = csv::parse_double(reader.field(col));
        if (!v) fail("column '" + std::string(col) + "' is not a number");
        if (*v < lo || *v > hi) fail("column '" + std::string(col) + "' out of range");
        return *v;
    };
    auto integer = [&](std::string_view col) {
        const auto v = csv::parse_int(reader.field(col));
        if (!v) fail("column '" + std::string(col) + "' is not an integer");
        return *v;
    };
    constexpr double kInf = std::numeric_limits<double>::infinity();
    while (reader.next()) {
        MunicipalityYear r;
        r.code = integer("code");
        r.state_code = integer("state");
        r.year = static_cast<int>(integer("year"));
        r.internet_pct = real("internet", 0.0, 100.0);
        r.computer_pct = real("computer", 0.0, 100.0);
        r.ethnic_pct = real("ethnic", 0.0, 100.0);
        r.school_public_pct = real("school", 0.0, 100.0);
        r.global_score_mean = real("global_score", 0.0, 500.0);
        r.population = integer("population");
        r.connectivity = real("connectivity", 0.0, kInf);
        r.rural_index = real("rural_index", 0.0, 100.0);
        r.n_students = integer("n_students");
        if (r.population <= 0) fail("population must be positive");
        if (r.n_students < 1) fail("n_students must be at least 1");
        rows.push_back(r);
    }
    return rows;
}

}  // namespace edurisk
