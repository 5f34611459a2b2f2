#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "edurisk/serialization.hpp"

namespace httplib {
class Server;
}

namespace edurisk::service {

inline constexpr int kSchemaVersion = 1;

/// Loaded once at startup; request handlers only read it.
struct ServiceState {
    RiskModelBundle bundle;
    std::vector<MunicipalityYear> rows;
    std::vector<VulnerabilityAssessment> assessments;  // parallel to rows

    static ServiceState load(RiskModelBundle bundle, std::vector<MunicipalityYear> rows);
    const MunicipalityYear* find_row(MunicipalityCode code, int year) const;
};

struct Reply {
    int status = 200;
    json body;
};

Reply error_reply(int status, std::string error, std::string detail);

/// GET /api/municipalities?year=&state=&level=
Reply municipalities(const ServiceState& state, const std::map<std::string, std::string>& query);
/// GET /api/metrics
Reply metrics(const ServiceState& state);
/// POST /api/whatif
Reply whatif(const ServiceState& state, const std::string& body);

/// Body shared by POST /api/whatif and `edurisk whatif` with explicit deltas.
json whatif_response(const RiskModelBundle& bundle, const MunicipalityYear& row, const InterventionDelta& delta);

struct ServerOptions {
    std::string cors_origin;  // empty disables CORS headers
};

/// Routes bound to `state`, which must outlive the server.
std::unique_ptr<httplib::Server> make_server(const ServiceState& state, const ServerOptions& options);

}  // namespace edurisk::service
