#include "vqr/service.hpp"

#include <cmath>
#include <cstdio>
#include <thread>

#include <httplib.h>

#include <json.hpp>

#include "vqr/error.hpp"
#include "vqr/io.hpp"
#include "vqr/persist.hpp"

namespace vqr {

using nlohmann::json;

std::string_view to_string(ResponseStatus s) noexcept {
  switch (s) {
    case ResponseStatus::Ok: return "Ok";
    case ResponseStatus::OutOfDomain: return "OutOfDomain";
    case ResponseStatus::InvalidInput: return "InvalidInput";
  }
  return "";
}

std::optional<std::string> validate_request(const PredictRequest& req) {
  if (!std::isfinite(req.current_hr) || !std::isfinite(req.current_bt) || !std::isfinite(req.age_months)) {
    return "all fields must be finite numbers";
  }
  if (!(req.current_hr > 0.0)) return "current_hr must be positive";
  if (!(req.current_bt > 25.0 && req.current_bt < 44.0)) return "current_bt must lie in (25, 44)";
  if (!(req.age_months >= 0.0 && req.age_months <= kMaxAgeMonths)) return "age_months must lie in [0, 216]";
  return std::nullopt;
}

PredictResponse handle_predict(const PredictRequest& req, const QuantileModelBundle& bundle,
                               const std::string& model_id) {
  PredictResponse resp;
  resp.model_id = model_id;
  if (auto problem = validate_request(req)) {
    resp.status = ResponseStatus::InvalidInput;
    resp.message = std::move(*problem);
    return resp;
  }
  const auto band = predict_band(bundle, req.age_months, req.current_bt, req.current_hr);
  if (band.status == DomainStatus::OutOfDomain) {
    resp.status = ResponseStatus::OutOfDomain;
    return resp;
  }
  resp.status = ResponseStatus::Ok;
  for (std::size_t j = 0; j < band.levels.size(); ++j) resp.quantiles.emplace_back(band.levels[j], band.hr_bpm[j]);
  resp.in_range = band.in_range;
  return resp;
}

PredictRequest parse_predict_request(std::string_view body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    throw RequestError(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw RequestError("request body must be a JSON object");
  auto field = [&](const char* name) {
    const auto it = doc.find(name);
    if (it == doc.end()) throw RequestError(std::string("missing field '") + name + "'");
    if (!it->is_number()) throw RequestError(std::string("field '") + name + "' must be a number");
    return it->get<double>();
  };
  PredictRequest req;
  req.current_hr = field("current_hr");
  req.current_bt = field("current_bt");
  req.age_months = field("age_months");
  return req;
}

std::string response_json(const PredictResponse& r) {
  json doc;
  doc["status"] = std::string(to_string(r.status));
  doc["model_id"] = r.model_id;
  if (r.status == ResponseStatus::Ok) {
    json q = json::object();
    for (const auto& [level, bpm] : r.quantiles) q[io::exact(level)] = bpm;
    doc["quantiles"] = std::move(q);
    if (r.in_range) doc["in_range"] = *r.in_range;
  }
  if (!r.message.empty()) doc["message"] = r.message;
  return doc.dump();
}

struct PredictionService::Loaded {
  QuantileModelBundle bundle;
  std::string model_id;
  std::string header;
};

PredictionService::PredictionService() : started_(std::chrono::steady_clock::now()) {}
PredictionService::~PredictionService() = default;

void PredictionService::publish(QuantileModelBundle bundle) {
  if (owner_) throw Error("PredictionService: a model is already published");
  auto loaded = std::make_unique<Loaded>();
  const auto text = serialize_bundle(bundle);
  loaded->model_id = model_id_of_text(text);
  loaded->header = bundle_header(bundle);
  loaded->bundle = std::move(bundle);
  owner_ = std::move(loaded);
  loaded_.store(owner_.get(), std::memory_order_release);
}

HttpReply PredictionService::predict(std::string_view body) const {
  const Loaded* m = loaded_.load(std::memory_order_acquire);
  if (!m) return {503, json{{"status", "loading"}}.dump()};
  PredictRequest req;
  try {
    req = parse_predict_request(body);
  } catch (const RequestError& e) {
    return {400, json{{"error", e.what()}}.dump()};
  }
  return {200, response_json(handle_predict(req, m->bundle, m->model_id))};
}

HttpReply PredictionService::health() const {
  const Loaded* m = loaded_.load(std::memory_order_acquire);
  const auto uptime =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
  if (!m) return {503, json{{"status", "loading"}, {"uptime_s", uptime}}.dump()};
  const auto& b = m->bundle;
  json doc{{"status", "ok"},
           {"model_id", m->model_id},
           {"family", std::string(to_string(b.family))},
           {"levels", b.levels},
           {"bounds",
            {{"age_min", b.bounds.age_min},
             {"age_max", b.bounds.age_max},
             {"bt_min", b.bounds.bt_min},
             {"bt_max", b.bounds.bt_max}}},
           {"uptime_s", uptime}};
  return {200, doc.dump()};
}

HttpReply PredictionService::model() const {
  const Loaded* m = loaded_.load(std::memory_order_acquire);
  if (!m) return {503, json{{"status", "loading"}}.dump()};
  return {200, m->header + "\n"};
}

std::pair<std::string, int> parse_bind(std::string_view bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string_view::npos) throw DomainError("--bind expects addr:port");
  const auto port = io::parse_int(bind.substr(colon + 1));
  if (!port || *port < 0 || *port > 65535) throw DomainError("--bind: bad port in '" + std::string(bind) + "'");
  std::string host(bind.substr(0, colon));
  if (host.empty()) host = "0.0.0.0";
  return {host, static_cast<int>(*port)};
}

struct HttpServer::Impl {
  httplib::Server server;
};

HttpServer::HttpServer(const PredictionService& service) : impl_(std::make_unique<Impl>()) {
  auto reply = [](httplib::Response& res, const HttpReply& r, const char* type) {
    res.status = r.status;
    res.set_content(r.body, type);
  };
  auto& server = impl_->server;
  server.Post("/predict", [&service, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.predict(req.body), "application/json");
  });
  server.Get("/health", [&service, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, service.health(), "application/json");
  });
  server.Get("/model", [&service, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, service.model(), "text/plain");
  });
}

HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error("cannot bind " + host + " to any port");
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }
void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }
void HttpServer::stop() { impl_->server.stop(); }

void serve(const ServeOptions& options) {
  PredictionService service;
  HttpServer server(service);
  server.bind(options.host, options.port);
  std::exception_ptr load_error;
  std::thread loader([&] {
    try {
      service.publish(load_model(options.model_path));
      std::fprintf(stderr, "model loaded from %s\n", options.model_path.string().c_str());
    } catch (...) {
      load_error = std::current_exception();
      server.wait_until_ready();
      server.stop();
    }
  });
  std::fprintf(stderr, "listening on %s:%d\n", options.host.c_str(), options.port);
  server.listen();
  loader.join();
  if (load_error) std::rethrow_exception(load_error);
}

}  // namespace vqr
