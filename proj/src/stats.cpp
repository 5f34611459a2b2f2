#include "edurisk/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "edurisk/error.hpp"

namespace edurisk::stats {

namespace {

std::vector<double> column(std::span<const MunicipalityYear> rows, const std::string& name) {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(covariable_value(r, name));
    return out;
}

// Continued fraction for the incomplete beta function (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIterations = 10000;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIterations; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kEps) return h;
    }
    return h;
}

std::map<std::pair<MunicipalityCode, int>, Level> index_levels(std::span<const VulnerabilityAssessment> assessments) {
    std::map<std::pair<MunicipalityCode, int>, Level> out;
    for (const auto& a : assessments) out[{a.code, a.year}] = a.level;
    return out;
}

Level lookup_level(const std::map<std::pair<MunicipalityCode, int>, Level>& levels, const MunicipalityYear& r) {
    const auto it = levels.find({r.code, r.year});
    if (it == levels.end())
        throw DataError("no assessment for municipality " + std::to_string(r.code) + " year " + std::to_string(r.year));
    return it->second;
}

}  // namespace

double mean(std::span<const double> xs) {
    if (xs.empty()) throw DataError("mean of an empty sample");
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
    if (xs.size() < 2) throw DataError("sample variance needs at least two values");
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return ss / static_cast<double>(xs.size() - 1);
}

double sample_sd(std::span<const double> xs) { return std::sqrt(sample_variance(xs)); }

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DataError("pearson: length mismatch");
    if (x.size() < 2) throw DataError("pearson: need at least two observations");
    const double mx = mean(x);
    const double my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw DataError("pearson: zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double incomplete_beta(double a, double b, double x) {
    if (a <= 0.0 || b <= 0.0) throw DataError("incomplete_beta: parameters must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    // the continued fraction converges fast for x < (a + 1) / (a + b + 2)
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
    if (!(df > 0.0)) throw DataError("student_t_two_sided_p: degrees of freedom must be positive");
    if (std::isnan(t)) return 1.0;
    if (std::isinf(t)) return 0.0;
    const double x = df / (df + t * t);
    return std::clamp(incomplete_beta(0.5 * df, 0.5, x), 0.0, 1.0);
}

double normal_two_sided_p(double z) {
    if (std::isnan(z)) return 1.0;
    return std::clamp(std::erfc(std::abs(z) / std::sqrt(2.0)), 0.0, 1.0);
}

CorrelationMatrix correlation_matrix(std::span<const MunicipalityYear> rows, const std::vector<std::string>& covariables) {
    if (rows.size() < 2) throw DataError("correlation matrix needs at least two rows");
    std::vector<std::vector<double>> cols;
    for (const auto& name : covariables) {
        cols.push_back(column(rows, name));
        const auto [lo, hi] = std::minmax_element(cols.back().begin(), cols.back().end());
        if (*lo == *hi) throw DataError("covariable '" + name + "' has zero variance");
    }
    const auto k = covariables.size();
    CorrelationMatrix m{covariables, std::vector<std::vector<double>>(k, std::vector<double>(k, 1.0))};
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            const double r = pearson(cols[i], cols[j]);
            m.values[i][j] = r;
            m.values[j][i] = r;
        }
    }
    return m;
}

std::vector<GroupSummary> group_means(std::span<const MunicipalityYear> rows,
                                      std::span<const VulnerabilityAssessment> assessments,
                                      const std::vector<std::string>& covariables) {
    const auto levels = index_levels(assessments);
    std::map<Level, std::vector<const MunicipalityYear*>> members;
    for (const auto& r : rows) members[lookup_level(levels, r)].push_back(&r);

    std::vector<GroupSummary> out;
    for (const auto& [level, group] : members) {
        GroupSummary s;
        s.level = level;
        s.members = group.size();
        for (const auto& name : covariables) {
            double sum = 0.0;
            for (const auto* r : group) sum += covariable_value(*r, name);
            s.mean_per_covariable[name] = sum / static_cast<double>(group.size());
        }
        out.push_back(std::move(s));
    }
    return out;
}

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) throw DataError("welch t-test needs at least two values per group");
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double va = sample_variance(a) / na;
    const double vb = sample_variance(b) / nb;
    const double diff = mean(a) - mean(b);
    WelchResult r;
    if (va + vb == 0.0) {
        r.df = na + nb - 2.0;
        if (diff == 0.0) {
            r.t = std::numeric_limits<double>::quiet_NaN();
            r.p = 1.0;
        } else {
            r.t = std::copysign(std::numeric_limits<double>::infinity(), diff);
            r.p = 0.0;
        }
        return r;
    }
    r.t = diff / std::sqrt(va + vb);
    r.df = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    r.p = student_t_two_sided_p(r.t, r.df);
    return r;
}

BonferroniReport bonferroni_pairwise(const std::map<Level, std::map<std::string, std::vector<double>>>& groups,
                                     double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    BonferroniReport report;
    for (auto ia = groups.begin(); ia != groups.end(); ++ia) {
        for (auto ib = std::next(ia); ib != groups.end(); ++ib) {
            bool skipped = false;
            for (const auto& [name, values] : ia->second) {
                const auto it = ib->second.find(name);
                if (it == ib->second.end()) continue;
                if (values.size() < 2 || it->second.size() < 2) {
                    skipped = true;
                    break;
                }
                const auto w = welch_t_test(values, it->second);
                if (std::isnan(w.t)) {
                    report.notices.push_back(std::string(to_string(ia->first)) + " vs " +
                                             std::string(to_string(ib->first)) + " on " + name +
                                             ": both groups constant and equal, t undefined");
                }
                report.results.push_back({ia->first, ib->first, name, w.t, w.df, w.p, 0.0, false});
            }
            if (skipped) {
                // drop any partial results for this pair
                std::erase_if(report.results, [&](const PairwiseTestResult& r) {
                    return r.level_a == ia->first && r.level_b == ib->first;
                });
                report.notices.push_back(std::string(to_string(ia->first)) + " vs " + std::string(to_string(ib->first)) +
                                         ": skipped, a level has fewer than two members");
            }
        }
    }
    report.tests_performed = report.results.size();
    const double adjusted = report.tests_performed ? alpha / static_cast<double>(report.tests_performed) : alpha;
    for (auto& r : report.results) {
        r.adjusted_alpha = adjusted;
        r.significant = r.raw_p < adjusted;
    }
    return report;
}

BonferroniReport bonferroni_pairwise(std::span<const MunicipalityYear> rows,
                                     std::span<const VulnerabilityAssessment> assessments,
                                     const std::vector<std::string>& covariables, double alpha) {
    const auto levels = index_levels(assessments);
    std::map<Level, std::map<std::string, std::vector<double>>> groups;
    for (const auto& r : rows) {
        auto& g = groups[lookup_level(levels, r)];
        for (const auto& name : covariables) g[name].push_back(covariable_value(r, name));
    }
    return bonferroni_pairwise(groups, alpha);
}

std::vector<TrendRow> trend_report(std::span<const MunicipalityYear> rows, const TrendScope& scope) {
    if (rows.empty()) throw DataError("trend report needs at least one row");

    auto member_of = [&](const MunicipalityYear& r) -> std::int64_t {
        switch (scope.kind) {
            case ScopeKind::States: return r.state_code;
            case ScopeKind::Municipalities: return r.code;
            case ScopeKind::Country: break;
        }
        return 0;
    };
    std::set<std::int64_t> wanted(scope.members.begin(), scope.members.end());
    if (scope.kind != ScopeKind::Country) {
        if (wanted.empty()) throw ConfigError("trend scope lists no members");
        std::set<std::int64_t> known;
        for (const auto& r : rows) known.insert(member_of(r));
        std::vector<std::int64_t> unknown;
        std::set_difference(wanted.begin(), wanted.end(), known.begin(), known.end(), std::back_inserter(unknown));
        if (!unknown.empty()) {
            std::string list;
            for (auto u : unknown) list += (list.empty() ? "" : ", ") + std::to_string(u);
            throw DataError("unknown scope member(s): " + list);
        }
    }

    struct Acc {
        std::size_t n = 0;
        double internet = 0, computer = 0, ethnic = 0, rural = 0;
    };
    std::map<std::pair<std::int64_t, int>, Acc> acc;
    for (const auto& r : rows) {
        const auto m = member_of(r);
        if (scope.kind != ScopeKind::Country && !wanted.count(m)) continue;
        auto& a = acc[{m, r.year}];
        ++a.n;
        a.internet += r.internet_pct;
        a.computer += r.computer_pct;
        a.ethnic += r.ethnic_pct;
        a.rural += r.rural_index;
    }

    std::vector<TrendRow> out;
    for (const auto& [key, a] : acc) {
        const double n = static_cast<double>(a.n);
        std::string label = scope.kind == ScopeKind::Country ? "country"
                            : scope.kind == ScopeKind::States ? "state:" + std::to_string(key.first)
                                                              : "municipality:" + std::to_string(key.first);
        out.push_back({std::move(label), key.second, a.n, a.internet / n, a.computer / n, a.ethnic / n, a.rural / n});
    }
    return out;
}

}  // namespace edurisk::stats
