#include "wedesign/conduct/server.hpp"

#include "wedesign/io.hpp"
#include "wedesign/presets.hpp"

#include <httplib.h>

#include <charconv>

namespace wedesign::conduct {

using nlohmann::json;

namespace {

void send(httplib::Response& res, int status, const json& body)
{
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message,
                const std::string& field = {})
{
    json body{{"code", code}, {"message", message}};
    if (!field.empty()) body["field"] = field;
    send(res, status, body);
}

json parse_body(const httplib::Request& req)
{
    if (req.body.empty()) return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::parse_error& e) {
        throw ConductError(400, "invalid_json", e.what());
    }
}

std::size_t index_field(const json& body, const char* key)
{
    const auto it = body.find(key);
    if (it == body.end() || it->is_null()) {
        throw ConductError(400, "missing_field", std::string(key) + " is required", key);
    }
    if (!it->is_number_unsigned()) {
        throw ConductError(400, "invalid_field", std::string(key) + " must be a non-negative integer", key);
    }
    return it->get<std::size_t>();
}

std::size_t index_param(const httplib::Request& req, const char* key)
{
    if (!req.has_param(key)) throw ConductError(400, "missing_field", std::string(key) + " is required", key);
    const auto text = req.get_param_value(key);
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ConductError(400, "invalid_field", std::string(key) + " must be a non-negative integer", key);
    }
    return value;
}

template <typename Handler>
httplib::Server::Handler guarded(Handler handler)
{
    return [handler](const httplib::Request& req, httplib::Response& res) {
        try {
            handler(req, res);
        } catch (const ConductError& e) {
            send_error(res, e.status(), e.code(), e.what(), e.field());
        } catch (const io::ParseError& e) {
            send_error(res, 400, "invalid_config", e.what(), e.field());
        } catch (const std::invalid_argument& e) {
            send_error(res, 400, "invalid_config", e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, "internal", e.what());
        }
    };
}

}  // namespace

TrialConfig config_from_request(const json& body)
{
    if (!body.is_object()) throw ConductError(400, "invalid_json", "request body must be an object");
    if (const auto it = body.find("preset"); it != body.end()) {
        if (!it->is_string()) throw ConductError(400, "invalid_field", "preset must be a string", "preset");
        const auto name = it->get<std::string>();
        if (name == "phase1") return presets::phase1_config();
        throw ConductError(400, "unknown_preset", "unknown preset '" + name + "'", "preset");
    }
    if (const auto it = body.find("config"); it != body.end()) return io::config_from_json(*it);
    return io::config_from_json(body);
}

void register_routes(httplib::Server& server, SessionStore& store, const ServiceOptions& options)
{
    const std::string token = options.token;
    server.set_pre_routing_handler([token](const httplib::Request& req, httplib::Response& res) {
        if (token.empty() || req.get_header_value(kTokenHeader) == token) return httplib::Server::HandlerResponse::Unhandled;
        send_error(res, 401, "unauthorized", std::string("missing or wrong ") + kTokenHeader + " header");
        return httplib::Server::HandlerResponse::Handled;
    });

    server.Post("/api/trials", guarded([&store](const httplib::Request& req, httplib::Response& res) {
        const json body = parse_body(req);
        std::optional<std::uint64_t> seed;
        if (body.is_object() && body.contains("seed") && !body.at("seed").is_null()) {
            if (!body.at("seed").is_number_unsigned()) {
                throw ConductError(400, "invalid_field", "seed must be a non-negative integer", "seed");
            }
            seed = body.at("seed").get<std::uint64_t>();
        }
        const auto id = store.create(config_from_request(body), seed);
        send(res, 201, json{{"id", id}, {"view", store.view(id)}});
    }));

    server.Get(R"(/api/trials/([0-9a-f]+))", guarded([&store](const httplib::Request& req, httplib::Response& res) {
        send(res, 200, store.view(req.matches[1]));
    }));

    server.Post(R"(/api/trials/([0-9a-f]+)/assignments)",
                guarded([&store](const httplib::Request& req, httplib::Response& res) {
                    const json body = parse_body(req);
                    std::optional<std::string> key;
                    if (body.contains("idempotency_key") && !body.at("idempotency_key").is_null()) {
                        if (!body.at("idempotency_key").is_string()) {
                            throw ConductError(400, "invalid_field", "idempotency_key must be a string",
                                               "idempotency_key");
                        }
                        key = body.at("idempotency_key").get<std::string>();
                    }
                    send(res, 200, store.mutate(req.matches[1], [&](TrialSession& s) { return s.assign(key); }));
                }));

    server.Post(R"(/api/trials/([0-9a-f]+)/outcomes)",
                guarded([&store](const httplib::Request& req, httplib::Response& res) {
                    const json body = parse_body(req);
                    const auto arm = index_field(body, "arm");
                    const auto outcome = index_field(body, "outcome");
                    const auto key_it = body.find("idempotency_key");
                    if (key_it == body.end() || !key_it->is_string()) {
                        throw ConductError(400, "missing_field", "idempotency_key is required", "idempotency_key");
                    }
                    const auto key = key_it->get<std::string>();
                    send(res, 200, store.mutate(req.matches[1], [&](TrialSession& s) {
                        return s.record_outcome(arm, outcome, key);
                    }));
                }));

    server.Get(R"(/api/trials/([0-9a-f]+)/whatif)",
               guarded([&store](const httplib::Request& req, httplib::Response& res) {
                   const auto arm = index_param(req, "arm");
                   const auto outcome = index_param(req, "outcome");
                   send(res, 200,
                        store.inspect(req.matches[1], [&](const TrialSession& s) { return s.whatif(arm, outcome); }));
               }));

    server.Get(R"(/api/trials/([0-9a-f]+)/recommendation)",
               guarded([&store](const httplib::Request& req, httplib::Response& res) {
                   send(res, 200, store.mutate(req.matches[1], [](TrialSession& s) { return s.recommendation(); }));
               }));
}

bool serve(const std::string& host, int port, SessionStore& store, const ServiceOptions& options)
{
    httplib::Server server;
    register_routes(server, store, options);
    return server.listen(host, port);
}

}  // namespace wedesign::conduct
