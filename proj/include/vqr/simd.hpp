#pragma once

// Data-parallel inner loops shared by the models and metrics.
//
// Every kernel has a scalar reference implementation; an AVX2 variant is
// compiled on x86-64 and selected at startup when the CPU supports it.
// Setting VQR_SIMD=scalar in the environment forces the reference kernels.
//
// Element-wise kernels produce bit-identical results across variants.
// Reductions differ only in summation order.

#include <cstddef>
#include <span>
#include <string_view>

namespace vqr::simd {

struct KernelTable {
  std::string_view name;

  // out[i] = a[i] - b[i]
  void (*sub)(const double* a, const double* b, double* out, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* a, std::size_t n);
  // out[i] = max(tau * d, (tau - 1) * d) with d = y[i] - yhat[i]
  void (*pinball_each)(const double* y, const double* yhat, double tau, double* out, std::size_t n);
  double (*pinball_sum)(const double* y, const double* yhat, double tau, std::size_t n);
  // out[i] = tau - 1[r[i] < 0]  (negated pinball subgradient with respect to the prediction)
  void (*check_weights)(const double* r, double tau, double* out, std::size_t n);
  // out[i] = sign(r[i]) if |r[i]| > eps else 0
  void (*tube_weights)(const double* r, double eps, double* out, std::size_t n);
  // sum of max(0, |r[i]| - eps)
  double (*tube_loss_sum)(const double* r, double eps, std::size_t n);
  // x[i] = max(x[i], 0)
  void (*relu)(double* x, std::size_t n);
};

const KernelTable& scalar_kernels() noexcept;
// nullptr when not compiled in or not supported by this CPU.
const KernelTable* avx2_kernels() noexcept;
// The table selected for this process.
const KernelTable& active() noexcept;

inline void sub(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  active().sub(a.data(), b.data(), out.data(), out.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), y.size());
}
inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline double sum(std::span<const double> a) { return active().sum(a.data(), a.size()); }
inline double pinball_sum(std::span<const double> y, std::span<const double> yhat, double tau) {
  return active().pinball_sum(y.data(), yhat.data(), tau, y.size());
}
inline void check_weights(std::span<const double> r, double tau, std::span<double> out) {
  active().check_weights(r.data(), tau, out.data(), out.size());
}
inline void tube_weights(std::span<const double> r, double eps, std::span<double> out) {
  active().tube_weights(r.data(), eps, out.data(), out.size());
}
inline double tube_loss_sum(std::span<const double> r, double eps) {
  return active().tube_loss_sum(r.data(), eps, r.size());
}
inline void relu(std::span<double> x) { active().relu(x.data(), x.size()); }

}  // namespace vqr::simd
