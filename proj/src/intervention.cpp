#include "edurisk/intervention.hpp"

#include <algorithm>
#include <cmath>

#include "edurisk/error.hpp"
#include "edurisk/parallel.hpp"

namespace edurisk {

namespace {

InterventionDelta delta_for(Knob knob, double amount) {
    InterventionDelta d;
    switch (knob) {
        case Knob::Internet: d.d_internet = amount; break;
        case Knob::Computer: d.d_computer = amount; break;
        case Knob::Connectivity: d.d_connectivity_subscribers = amount; break;
    }
    return d;
}

StateLevelSummary summarize(StateCode state, std::span<const VulnerabilityAssessment> assessments) {
    StateLevelSummary s;
    s.state = state;
    for (const auto& a : assessments) {
        ++s.total;
        ++s.counts[static_cast<std::size_t>(a.total_risk)];
    }
    for (std::size_t l = 0; l < 4 && s.total > 0; ++l)
        s.fractions[l] = static_cast<double>(s.counts[l]) / static_cast<double>(s.total);
    return s;
}

}  // namespace

std::string_view to_string(Knob knob) {
    switch (knob) {
        case Knob::Internet: return "internet";
        case Knob::Computer: return "computer";
        case Knob::Connectivity: return "connectivity";
    }
    return "internet";
}

std::optional<Knob> parse_knob(std::string_view name) {
    for (auto k : {Knob::Internet, Knob::Computer, Knob::Connectivity})
        if (to_string(k) == name) return k;
    return std::nullopt;
}

double InterventionResult::knob_delta() const {
    switch (knob) {
        case Knob::Internet: return delta.d_internet;
        case Knob::Computer: return delta.d_computer;
        case Knob::Connectivity: return delta.d_connectivity_subscribers;
    }
    return 0.0;
}

MunicipalityYear apply_delta(const MunicipalityYear& row, const InterventionDelta& delta) {
    if (!(delta.d_internet >= 0.0) || !(delta.d_computer >= 0.0) || !(delta.d_connectivity_subscribers >= 0.0))
        throw ConfigError("intervention deltas must be non-negative");
    MunicipalityYear out = row;
    out.internet_pct = std::min(100.0, row.internet_pct + delta.d_internet);
    out.computer_pct = std::min(100.0, row.computer_pct + delta.d_computer);
    if (delta.d_connectivity_subscribers > 0.0) {
        if (row.population <= 0) throw DataError("row has no population; cannot recompute connectivity");
        const double pop = static_cast<double>(row.population);
        const double implied = row.connectivity * pop / 1000.0;
        out.connectivity = 1000.0 * (implied + delta.d_connectivity_subscribers) / pop;
    }
    return out;
}

VulnerabilityAssessment whatif(const RiskModelBundle& bundle, const MunicipalityYear& row,
                               const InterventionDelta& delta) {
    return assess_row(bundle, apply_delta(row, delta));
}

InterventionResult minimal_intervention(const RiskModelBundle& bundle, const MunicipalityYear& row, Knob knob,
                                        Level target, double step, double max_delta) {
    if (!(step > 0.0)) throw ConfigError("step must be positive");
    if (!(max_delta >= step)) throw ConfigError("max_delta must be at least the step");

    InterventionResult result;
    result.code = row.code;
    result.year = row.year;
    result.knob = knob;
    result.target_level = target;
    result.baseline_level = assess_row(bundle, row).level;
    result.search_trace.push_back({0.0, result.baseline_level});

    auto best = result.search_trace.front();
    if (best.level <= target) {
        result.new_level = best.level;
        result.achieved = true;
        return result;
    }
    // multiples of the step avoid accumulating rounding error
    const double limit = max_delta * (1.0 + 1e-12);
    for (long i = 1;; ++i) {
        const double amount = static_cast<double>(i) * step;
        if (amount > limit) break;
        const Level level = whatif(bundle, row, delta_for(knob, amount)).level;
        result.search_trace.push_back({amount, level});
        if (level < best.level) best = {amount, level};
        if (level <= target) {
            result.achieved = true;
            break;
        }
    }
    result.new_level = best.level;
    result.delta = delta_for(knob, best.delta);
    return result;
}

std::vector<InterventionResult> batch_plan(const RiskModelBundle& bundle, std::span<const MunicipalityYear> rows,
                                           Knob knob, Level target, double step, double max_delta,
                                           unsigned threads) {
    std::vector<InterventionResult> results(rows.size());
    parallel_for(rows.size(), threads, [&](std::size_t i) {
        results[i] = minimal_intervention(bundle, rows[i], knob, target, step, max_delta);
    });
    std::stable_sort(results.begin(), results.end(), [](const InterventionResult& a, const InterventionResult& b) {
        if (a.achieved != b.achieved) return a.achieved;
        if (a.knob_delta() != b.knob_delta()) return a.knob_delta() < b.knob_delta();
        return a.code < b.code;
    });
    return results;
}

StateWhatIf state_whatif(const RiskModelBundle& bundle, std::span<const MunicipalityYear> rows, StateCode state,
                         const InterventionDelta& delta) {
    StateWhatIf out;
    out.state = state;
    std::vector<VulnerabilityAssessment> before;
    for (const auto& r : rows) {
        if (r.state_code != state) continue;
        before.push_back(assess_row(bundle, r));
        out.assessments.push_back(whatif(bundle, r, delta));
    }
    if (before.empty()) throw DataError("no rows for state " + std::to_string(state));
    out.baseline = summarize(state, before);
    out.improved = summarize(state, out.assessments);
    return out;
}

}  // namespace edurisk
