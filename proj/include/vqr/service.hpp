#pragma once

// Prediction endpoint: POST /predict, GET /health, GET /model.

#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vqr/bundle.hpp"

namespace vqr {

struct PredictRequest {
  double current_hr = 0.0;
  double current_bt = 0.0;
  double age_months = 0.0;
};

enum class ResponseStatus { Ok, OutOfDomain, InvalidInput };
std::string_view to_string(ResponseStatus s) noexcept;

struct PredictResponse {
  ResponseStatus status = ResponseStatus::InvalidInput;
  std::vector<std::pair<double, double>> quantiles;  // (level, bpm); Ok only
  std::optional<bool> in_range;                      // Ok only
  std::string model_id;
  std::string message;  // reason for InvalidInput
};

// Sanity window: hr > 0, 25 < bt < 44, 0 <= age <= 216, all finite.
std::optional<std::string> validate_request(const PredictRequest& req);

PredictResponse handle_predict(const PredictRequest& req, const QuantileModelBundle& bundle,
                               const std::string& model_id);

// Wire forms. parse_predict_request throws RequestError on a malformed body.
class RequestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
PredictRequest parse_predict_request(std::string_view body);
std::string response_json(const PredictResponse& response);

struct HttpReply {
  int status = 200;
  std::string body;
};

// Holds one bundle, published once; request handlers only read it.
class PredictionService {
 public:
  PredictionService();
  ~PredictionService();
  PredictionService(const PredictionService&) = delete;
  PredictionService& operator=(const PredictionService&) = delete;

  void publish(QuantileModelBundle bundle);
  bool ready() const noexcept { return loaded_.load(std::memory_order_acquire) != nullptr; }

  HttpReply predict(std::string_view body) const;
  HttpReply health() const;
  HttpReply model() const;

 private:
  struct Loaded;
  std::unique_ptr<Loaded> owner_;
  std::atomic<const Loaded*> loaded_{nullptr};
  std::chrono::steady_clock::time_point started_;
};

// HTTP front end for a PredictionService: POST /predict, GET /health,
// GET /model.
class HttpServer {
 public:
  explicit HttpServer(const PredictionService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Port 0 picks a free port. Returns the bound port; throws vqr::Error.
  int bind(const std::string& host, int port);
  void listen();  // blocks until stop()
  void wait_until_ready() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct ServeOptions {
  std::filesystem::path model_path;
  std::string host = "127.0.0.1";
  int port = 8080;
};

// Parses "addr:port" (or ":port"). Throws DomainError.
std::pair<std::string, int> parse_bind(std::string_view bind);

// Blocks until the server stops. The model is loaded after the listener is up,
// so /health reports "loading" until it is ready. Throws vqr::Error when the
// model cannot be loaded or the address cannot be bound.
void serve(const ServeOptions& options);

}  // namespace vqr
