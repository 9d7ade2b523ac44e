#include "mclab/app/http.hpp"

#include <functional>

#include "mclab/core/errors.hpp"

namespace mclab::app {

namespace {

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

/// Runs `fn` and translates library errors into status codes.
void guarded(httplib::Response& res, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const NotFoundError& e) {
    send_json(res, 404, {{"error", e.what()}});
  } catch (const ConflictError& e) {
    send_json(res, 409, {{"error", e.what()}});
  } catch (const ParseError& e) {
    send_json(res, 400, {{"error", e.what()}});
  } catch (const ConfigError& e) {
    send_json(res, 400, {{"error", e.what()}});
  } catch (const std::exception& e) {
    send_json(res, 500, {{"error", e.what()}});
  }
}

nlohmann::json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return nlohmann::json::object();
  try {
    return nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("request body is not JSON: ") + e.what());
  }
}

}  // namespace

void register_routes(httplib::Server& server, ExperimentService& service) {
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });

  server.Post("/api/sessions", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 201, {{"session_id", service.create_session(parse_body(req))}}); });
  });
  server.Get(R"(/api/sessions/([^/]+)/trials/next)", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, service.next_trial(req.matches[1])); });
  });
  server.Post(R"(/api/sessions/([^/]+)/responses)", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, service.record_response(req.matches[1], parse_body(req))); });
  });
  server.Get(R"(/api/sessions/([^/]+)/results)", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, service.results(req.matches[1])); });
  });
  server.Get(R"(/api/stimuli/([^/]+)/meta)", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, service.stimulus_meta(req.matches[1])); });
  });
  server.Get(R"(/api/stimuli/([^/]+)/frames)", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      res.status = 200;
      res.set_content(service.stimulus_frames(req.matches[1]), "application/octet-stream");
    });
  });

  if (!service.config().static_dir.empty()) server.set_mount_point("/", service.config().static_dir.string());
}

}  // namespace mclab::app
