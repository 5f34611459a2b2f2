#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "edurisk/assessment.hpp"
#include "edurisk/dataset.hpp"
#include "edurisk/risk.hpp"

namespace edurisk {

/// Additive improvements: percentage points for internet and computer
/// ownership, absolute subscriber count for connectivity.
struct InterventionDelta {
    double d_internet = 0.0;
    double d_computer = 0.0;
    double d_connectivity_subscribers = 0.0;

    bool operator==(const InterventionDelta&) const = default;
};

enum class Knob { Internet, Computer, Connectivity };

std::string_view to_string(Knob knob);
std::optional<Knob> parse_knob(std::string_view name);

/// Copy of `row` with the delta applied: percentages clamped to 100 and
/// connectivity recomputed from the implied subscriber count.
MunicipalityYear apply_delta(const MunicipalityYear& row, const InterventionDelta& delta);

VulnerabilityAssessment whatif(const RiskModelBundle& bundle, const MunicipalityYear& row,
                               const InterventionDelta& delta);

struct TraceEntry {
    double delta = 0.0;
    Level level = Level::None;
    bool operator==(const TraceEntry&) const = default;
};

struct InterventionResult {
    MunicipalityCode code = 0;
    int year = 0;
    Knob knob = Knob::Internet;
    Level target_level = Level::None;
    Level baseline_level = Level::None;
    Level new_level = Level::None;
    InterventionDelta delta;
    bool achieved = false;
    std::vector<TraceEntry> search_trace;

    /// Magnitude of the searched knob.
    double knob_delta() const;
    bool operator==(const InterventionResult&) const = default;
};

/// Scans 0, step, 2*step, ... up to max_delta on one knob and returns the
/// first delta whose level is at or below `target`. The scan order defines
/// the answer; the forests may respond non-monotonically. If no delta
/// qualifies the result carries the best level seen and its first delta.
InterventionResult minimal_intervention(const RiskModelBundle& bundle, const MunicipalityYear& row, Knob knob,
                                        Level target, double step, double max_delta);

/// One result per row, ordered by (achieved first, delta ascending, code).
std::vector<InterventionResult> batch_plan(const RiskModelBundle& bundle, std::span<const MunicipalityYear> rows,
                                           Knob knob, Level target, double step, double max_delta,
                                           unsigned threads = 1);

/// Applies the same delta to every row of a state and summarizes the levels
/// before and after.
struct StateWhatIf {
    StateCode state = 0;
    StateLevelSummary baseline;
    StateLevelSummary improved;
    std::vector<VulnerabilityAssessment> assessments;
};

StateWhatIf state_whatif(const RiskModelBundle& bundle, std::span<const MunicipalityYear> rows, StateCode state,
                         const InterventionDelta& delta);

inline constexpr double kDefaultPercentStep = 1.0;
inline constexpr double kDefaultSubscriberStep = 10.0;
inline constexpr double kDefaultPercentMax = 100.0;
inline constexpr double kDefaultSubscriberMax = 10000.0;

}  // namespace edurisk
