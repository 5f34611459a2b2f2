#include "edurisk/service.hpp"

#include <algorithm>
#include <numeric>

#include "httplib.h"

#include "edurisk/csv.hpp"
#include "edurisk/error.hpp"

namespace edurisk::service {

namespace {

json summary(const MunicipalityYear& row, const VulnerabilityAssessment& a) {
    json j = a;
    j["covariables"] = covariables_json(row);
    return j;
}

std::optional<double> delta_field(const json& body, const char* name, Reply& failure) {
    if (!body.contains(name) || body.at(name).is_null()) return 0.0;
    if (!body.at(name).is_number()) {
        failure = error_reply(400, "malformed body", std::string("field '") + name + "' must be a number");
        return std::nullopt;
    }
    return body.at(name).get<double>();
}

}  // namespace

ServiceState ServiceState::load(RiskModelBundle bundle, std::vector<MunicipalityYear> rows) {
    ServiceState s;
    s.bundle = std::move(bundle);
    std::sort(rows.begin(), rows.end(),
              [](const auto& a, const auto& b) { return std::tie(a.code, a.year) < std::tie(b.code, b.year); });
    s.rows = std::move(rows);
    s.assessments = assess(s.bundle, s.rows);
    return s;
}

const MunicipalityYear* ServiceState::find_row(MunicipalityCode code, int year) const {
    const auto it = std::lower_bound(rows.begin(), rows.end(), std::pair{code, year}, [](const auto& r, const auto& key) {
        return std::tie(r.code, r.year) < std::tie(key.first, key.second);
    });
    if (it == rows.end() || it->code != code || it->year != year) return nullptr;
    return &*it;
}

Reply error_reply(int status, std::string error, std::string detail) {
    return {status, json{{"error", std::move(error)}, {"detail", std::move(detail)}}};
}

Reply municipalities(const ServiceState& state, const std::map<std::string, std::string>& query) {
    std::optional<long long> year, state_code;
    std::optional<Level> level;
    for (const auto& [key, value] : query) {
        if (key == "year") {
            year = csv::parse_int(value);
            if (!year) return error_reply(400, "invalid filter", "year must be an integer");
        } else if (key == "state") {
            state_code = csv::parse_int(value);
            if (!state_code) return error_reply(400, "invalid filter", "state must be an integer");
        } else if (key == "level") {
            level = parse_level(value);
            if (!level) return error_reply(400, "invalid filter", "level must be one of None, Low, Medium, Serious");
        } else {
            return error_reply(400, "invalid filter", "unknown parameter '" + key + "'");
        }
    }
    json items = json::array();
    for (std::size_t i = 0; i < state.rows.size(); ++i) {
        const auto& row = state.rows[i];
        const auto& a = state.assessments[i];
        if (year && row.year != *year) continue;
        if (state_code && row.state_code != *state_code) continue;
        if (level && a.level != *level) continue;
        items.push_back(summary(row, a));
    }
    return {200, json{{"v", kSchemaVersion}, {"municipalities", std::move(items)}}};
}

Reply metrics(const ServiceState& state) {
    if (!state.bundle.eval) return error_reply(404, "no metrics", "the loaded bundle carries no evaluation report");
    json body = *state.bundle.eval;
    body["v"] = kSchemaVersion;
    return {200, std::move(body)};
}

json whatif_response(const RiskModelBundle& bundle, const MunicipalityYear& row, const InterventionDelta& delta) {
    const auto baseline = assess_row(bundle, row);
    const auto modified = apply_delta(row, delta);
    const auto result = assess_row(bundle, modified);
    return json{{"v", kSchemaVersion},
                {"code", row.code},
                {"year", row.year},
                {"delta", delta},
                {"baseline", baseline},
                {"assessment", result},
                {"covariables", covariables_json(modified)},
                {"baseline_level", to_string(baseline.level)},
                {"new_level", to_string(result.level)},
                {"transition", std::string(to_string(baseline.level)) + "->" + std::string(to_string(result.level))}};
}

Reply whatif(const ServiceState& state, const std::string& body) {
    json request;
    try {
        request = json::parse(body);
    } catch (const json::exception& e) {
        return error_reply(400, "malformed body", e.what());
    }
    if (!request.is_object()) return error_reply(400, "malformed body", "expected a JSON object");
    if (!request.contains("code") || !request.at("code").is_number_integer() || !request.contains("year") ||
        !request.at("year").is_number_integer())
        return error_reply(400, "malformed body", "integer fields 'code' and 'year' are required");

    Reply failure;
    InterventionDelta delta;
    const auto di = delta_field(request, "d_internet", failure);
    if (!di) return failure;
    const auto dc = delta_field(request, "d_computer", failure);
    if (!dc) return failure;
    const auto dn = delta_field(request, "d_connectivity", failure);
    if (!dn) return failure;
    delta = {*di, *dc, *dn};
    if (delta.d_internet < 0.0 || delta.d_computer < 0.0 || delta.d_connectivity_subscribers < 0.0)
        return error_reply(422, "invalid delta", "deltas must be non-negative");

    const auto code = request.at("code").get<MunicipalityCode>();
    const auto year = request.at("year").get<int>();
    const auto* row = state.find_row(code, year);
    if (!row)
        return error_reply(404, "unknown municipality",
                           "no row for code " + std::to_string(code) + " in year " + std::to_string(year));
    return {200, whatif_response(state.bundle, *row, delta)};
}

std::unique_ptr<httplib::Server> make_server(const ServiceState& state, const ServerOptions& options) {
    auto server = std::make_unique<httplib::Server>();
    auto send = [options](httplib::Response& res, const Reply& reply) {
        res.status = reply.status;
        res.set_content(reply.body.dump(2) + "\n", "application/json");
        if (!options.cors_origin.empty()) {
            res.set_header("Access-Control-Allow-Origin", options.cors_origin);
            res.set_header("Vary", "Origin");
        }
    };
    server->Get("/api/municipalities", [&state, send](const httplib::Request& req, httplib::Response& res) {
        std::map<std::string, std::string> query;
        for (const auto& [k, v] : req.params) query[k] = v;
        send(res, municipalities(state, query));
    });
    server->Get("/api/metrics", [&state, send](const httplib::Request&, httplib::Response& res) {
        send(res, metrics(state));
    });
    server->Post("/api/whatif", [&state, send](const httplib::Request& req, httplib::Response& res) {
        send(res, whatif(state, req.body));
    });
    server->Options(R"(/api/.*)", [options](const httplib::Request&, httplib::Response& res) {
        res.status = 204;
        if (!options.cors_origin.empty()) {
            res.set_header("Access-Control-Allow-Origin", options.cors_origin);
            res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type");
        }
    });
    server->set_exception_handler([send](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string detail = "unknown error";
        int status = 500;
        try {
            std::rethrow_exception(ep);
        } catch (const DataError& e) {
            detail = e.what();
            status = 422;
        } catch (const std::exception& e) {
            detail = e.what();
        }
        send(res, error_reply(status, "request failed", detail));
    });
    return server;
}

}  // namespace edurisk::service
