#include "vqr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vqr/error.hpp"
#include "vqr/simd.hpp"

namespace vqr::metrics {

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DomainError(std::string(what) + ": length mismatch (" + std::to_string(a) + " vs " +
                      std::to_string(b) + ")");
  }
  if (a == 0) throw DomainError(std::string(what) + ": empty input");
}

void require_tau(double tau, const char* what) {
  if (!(tau > 0.0 && tau < 1.0)) {
    throw DomainError(std::string(what) + ": quantile level must lie in (0, 1)");
  }
}

}  // namespace

double r2(std::span<const double> y_true, std::span<const double> y_pred) {
  require_same_length(y_true.size(), y_pred.size(), "r2");
  const double n = static_cast<double>(y_true.size());
  double mean = 0.0;
  for (double y : y_true) mean += y;
  mean /= n;
  double ssr = 0.0;
  double sst = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double r = y_true[i] - y_pred[i];
    const double c = y_true[i] - mean;
    ssr += r * r;
    sst += c * c;
  }
  if (sst == 0.0) throw DomainError("r2: y_true has zero variance");
  return 1.0 - ssr / sst;
}

double mse(std::span<const double> y_true, std::span<const double> y_pred) {
  require_same_length(y_true.size(), y_pred.size(), "mse");
  double s = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double r = y_true[i] - y_pred[i];
    s += r * r;
  }
  return s / static_cast<double>(y_true.size());
}

double pinball(double y, double y_hat, double tau) {
  require_tau(tau, "pinball");
  const double d = y - y_hat;
  return std::max(tau * d, (tau - 1.0) * d);
}

double mean_pinball(std::span<const double> y_true, std::span<const double> y_pred, double tau) {
  require_same_length(y_true.size(), y_pred.size(), "mean_pinball");
  require_tau(tau, "mean_pinball");
  return simd::pinball_sum(y_true, y_pred, tau) / static_cast<double>(y_true.size());
}

double total_quantile_loss(const std::map<double, double>& per_level_means) {
  if (per_level_means.empty()) throw DomainError("total_quantile_loss: no levels");
  double s = 0.0;
  for (const auto& [level, loss] : per_level_means) s += loss;
  return s / static_cast<double>(per_level_means.size());
}

double coverage(std::span<const double> y_true, std::span<const double> q_low,
                std::span<const double> q_high) {
  require_same_length(y_true.size(), q_low.size(), "coverage");
  require_same_length(y_true.size(), q_high.size(), "coverage");
  std::size_t inside = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (q_low[i] <= y_true[i] && y_true[i] <= q_high[i]) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(y_true.size());
}

double empirical_quantile_inplace(std::span<double> values, double tau) {
  if (values.empty()) throw DomainError("empirical_quantile: empty sample");
  require_tau(tau, "empirical_quantile");
  const auto n = values.size();
  // ceil(n * tau) with a guard so that e.g. 20 * 0.15 counts as exactly 3.
  const double scaled = static_cast<double>(n) * tau;
  auto k = static_cast<std::size_t>(std::ceil(scaled - 1e-9 * std::max(1.0, scaled)));
  k = std::clamp<std::size_t>(k, 1, n);
  const auto nth = values.begin() + static_cast<std::ptrdiff_t>(k - 1);
  std::nth_element(values.begin(), nth, values.end());
  return *nth;
}

double empirical_quantile(std::span<const double> values, double tau) {
  std::vector<double> copy(values.begin(), values.end());
  return empirical_quantile_inplace(copy, tau);
}

}  // namespace vqr::metrics
