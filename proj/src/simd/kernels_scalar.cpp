#include <algorithm>
#include <cmath>

#include "vqr/simd.hpp"

namespace vqr::simd {

namespace {

void sub_scalar(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_scalar(const double* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i];
  return s;
}

void pinball_each_scalar(const double* y, const double* yhat, double tau, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double d = y[i] - yhat[i];
    out[i] = std::max(tau * d, (tau - 1.0) * d);
  }
}

double pinball_sum_scalar(const double* y, const double* yhat, double tau, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = y[i] - yhat[i];
    s += std::max(tau * d, (tau - 1.0) * d);
  }
  return s;
}

void check_weights_scalar(const double* r, double tau, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = tau - (r[i] < 0.0 ? 1.0 : 0.0);
}

void tube_weights_scalar(const double* r, double eps, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = r[i] > eps ? 1.0 : (r[i] < -eps ? -1.0 : 0.0);
}

double tube_loss_sum_scalar(const double* r, double eps, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::max(0.0, std::fabs(r[i]) - eps);
  return s;
}

void relu_scalar(double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = x[i] > 0.0 ? x[i] : 0.0;
}

}  // namespace

const KernelTable& scalar_kernels() noexcept {
  static const KernelTable table{
      "scalar",          sub_scalar,          axpy_scalar,          dot_scalar,
      sum_scalar,        pinball_each_scalar, pinball_sum_scalar,   check_weights_scalar,
      tube_weights_scalar, tube_loss_sum_scalar, relu_scalar,
  };
  return table;
}

}  // namespace vqr::simd
