#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "edurisk/assessment.hpp"
#include "edurisk/evaluation.hpp"
#include "edurisk/forest.hpp"
#include "edurisk/intervention.hpp"
#include "edurisk/logistic.hpp"
#include "edurisk/risk.hpp"
#include "edurisk/stats.hpp"

namespace edurisk {

using json = nlohmann::json;

void to_json(json& j, const Standardization& s);
void from_json(const json& j, Standardization& s);
void to_json(json& j, const LogisticModel& m);
void from_json(const json& j, LogisticModel& m);
void to_json(json& j, const ForestModel& m);
void from_json(const json& j, ForestModel& m);
void to_json(json& j, const RocCurve& c);
void from_json(const json& j, RocCurve& c);
void to_json(json& j, const EvalReport& r);
void from_json(const json& j, EvalReport& r);
void to_json(json& j, const RiskConfig& c);
void from_json(const json& j, RiskConfig& c);
void to_json(json& j, const RiskModelBundle& b);
void from_json(const json& j, RiskModelBundle& b);

void to_json(json& j, const VulnerabilityAssessment& a);
void to_json(json& j, const InterventionDelta& d);
void to_json(json& j, const InterventionResult& r);
void to_json(json& j, const StateLevelSummary& s);
namespace stats {
void to_json(json& j, const CorrelationMatrix& m);
void to_json(json& j, const GroupSummary& g);
void to_json(json& j, const PairwiseTestResult& r);
void to_json(json& j, const TrendRow& r);
}  // namespace stats

/// Covariables of a row as a JSON object keyed by covariable name.
json covariables_json(const MunicipalityYear& row);

/// Deterministic text form (sorted keys, two-space indent, trailing newline).
std::string dump_bundle(const RiskModelBundle& bundle);
RiskModelBundle parse_bundle(const std::string& text);
void save_bundle(const RiskModelBundle& bundle, const std::filesystem::path& path);
/// Throws SchemaError on unreadable files or unknown versions.
RiskModelBundle load_bundle(const std::filesystem::path& path);

}  // namespace edurisk
