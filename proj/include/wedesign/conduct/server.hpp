#pragma once

// HTTP+JSON front end of the conduct service.
//
//   POST /api/trials                       {config | preset, seed?}
//   GET  /api/trials/{id}
//   POST /api/trials/{id}/assignments      {idempotency_key?}
//   POST /api/trials/{id}/outcomes         {arm, outcome, idempotency_key}
//   GET  /api/trials/{id}/whatif?arm=&outcome=
//   GET  /api/trials/{id}/recommendation
//
// Errors are {code, message, field?}.

#include "wedesign/conduct/store.hpp"

#include <string>

namespace httplib {
class Server;
}

namespace wedesign::conduct {

inline constexpr const char* kTokenHeader = "X-Api-Token";

struct ServiceOptions {
    /// When non-empty every request must carry it in kTokenHeader.
    std::string token;
};

void register_routes(httplib::Server& server, SessionStore& store, const ServiceOptions& options);

/// Blocks until the server stops. Returns false when the port cannot be bound.
bool serve(const std::string& host, int port, SessionStore& store, const ServiceOptions& options);

/// Config for POST /api/trials: either {"config": {...}}, {"preset": name}
/// or a bare config object.
TrialConfig config_from_request(const nlohmann::json& body);

}  // namespace wedesign::conduct
