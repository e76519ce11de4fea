#include "acn/service/http_server.h"

#include <httplib.h>

#include "acn/core/text.h"

namespace acn::service {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound: return 404;
    case ErrorCode::Conflict: return 409;
    case ErrorCode::InvalidArgument:
    case ErrorCode::Parse:
    case ErrorCode::Precondition: return 422;
    case ErrorCode::ProviderUnavailable:
    case ErrorCode::Storage: return 503;
    default: return 500;
  }
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  send_json(res, status, {{"error", code}, {"message", message}});
}

// Runs a handler, mapping engine errors to HTTP statuses.
template <typename F>
void guarded(httplib::Response& res, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    send_error(res, http_status(e.code()), std::string(to_string(e.code())), e.what());
  } catch (const json::exception& e) {
    send_error(res, 422, std::string(to_string(ErrorCode::Parse)), e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, "Internal", e.what());
  }
}

// Body must be a JSON object with a non-empty string field `field`.
std::string required_text(const httplib::Request& req, const std::string& field) {
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) throw Error(ErrorCode::Parse, "body must be a JSON object");
  if (!body.contains(field) || !body.at(field).is_string()) {
    throw Error(ErrorCode::InvalidArgument, "missing string field '" + field + "'");
  }
  std::string v = body.at(field).get<std::string>();
  if (text::trim(v).empty()) throw Error(ErrorCode::InvalidArgument, "field '" + field + "' is empty");
  return v;
}

}  // namespace

struct HttpService::Impl {
  Engine& engine;
  httplib::Server server;

  explicit Impl(Engine& e) : engine(e) {
    server.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, {{"status", "ok"}, {"live_providers", engine.providers().any_live()}});
    });

    server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const std::string sid = engine.create_session(required_text(req, "user_id"));
        send_json(res, 201, {{"session_id", sid}});
      });
    });

    server.Post(R"(/sessions/([^/]+)/messages)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const std::string sid = req.matches[1];
        engine.session(sid);
        send_json(res, 200, to_json(engine.post_message(sid, required_text(req, "text"))));
      });
    });

    server.Post(R"(/sessions/([^/]+)/feedback)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const std::string sid = req.matches[1];
        engine.session(sid);
        send_json(res, 202, {{"rfo_report_id", engine.post_feedback(sid, required_text(req, "text"))}});
      });
    });

    server.Get(R"(/sessions/([^/]+)/trace/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { send_json(res, 200, engine.trace_json(req.matches[1], req.matches[2])); });
    });

    server.Get(R"(/sessions/([^/]+)/rfo-reports)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        json list = json::array();
        for (auto& r : engine.rfo_reports(req.matches[1])) list.push_back(std::move(r));
        send_json(res, 200, list);
      });
    });

    server.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { send_json(res, 200, to_json(engine.session(req.matches[1]))); });
    });

    server.Get(R"(/profile/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { send_json(res, 200, profile::to_json(engine.profile(req.matches[1]))); });
    });

    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) send_error(res, res.status, "NotFound", "no such endpoint");
    });
  }
};

HttpService::HttpService(Engine& engine) : impl_(std::make_unique<Impl>(engine)) {}
HttpService::~HttpService() { stop(); }

int HttpService::bind(const std::string& host, int port) {
  if (port == 0) {
    const int p = impl_->server.bind_to_any_port(host);
    if (p < 0) throw Error(ErrorCode::Storage, "cannot bind " + host);
    return p;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error(ErrorCode::Storage, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpService::serve() { impl_->server.listen_after_bind(); }
void HttpService::stop() {
  if (impl_) impl_->server.stop();
}
bool HttpService::running() const { return impl_->server.is_running(); }

}  // namespace acn::service
