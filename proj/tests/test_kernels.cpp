#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "vqr/metrics.hpp"
#include "vqr/rng.hpp"
#include "vqr/simd.hpp"

using namespace vqr;

namespace {

std::vector<double> random_vector(Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_CASE("kernel selection") {
  const auto& active = simd::active();
  MESSAGE("active kernels: " << active.name);
  if (const char* env = std::getenv("VQR_SIMD"); env && std::string(env) == "scalar") {
    CHECK(active.name == simd::scalar_kernels().name);
  }
}

TEST_CASE("avx2 kernels match the scalar reference") {
  const auto* avx = simd::avx2_kernels();
  if (!avx) {
    MESSAGE("AVX2 kernels unavailable; skipping");
    return;
  }
  const auto& ref = simd::scalar_kernels();
  Rng rng(3);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 17u, 64u, 1001u}) {
    auto a = random_vector(rng, n, -50, 50);
    auto b = random_vector(rng, n, -50, 50);
    for (std::size_t i = 0; i < n; i += 5) b[i] = a[i];  // exact zeros in differences
    const double tau = rng.uniform(0.01, 0.99);

    std::vector<double> o1(n), o2(n);
    ref.sub(a.data(), b.data(), o1.data(), n);
    avx->sub(a.data(), b.data(), o2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(same_bits(o1[i], o2[i]));

    ref.pinball_each(a.data(), b.data(), tau, o1.data(), n);
    avx->pinball_each(a.data(), b.data(), tau, o2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(same_bits(o1[i], o2[i]));

    ref.check_weights(a.data(), tau, o1.data(), n);
    avx->check_weights(a.data(), tau, o2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(same_bits(o1[i], o2[i]));

    ref.tube_weights(a.data(), 10.0, o1.data(), n);
    avx->tube_weights(a.data(), 10.0, o2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(same_bits(o1[i], o2[i]));

    o1 = b;
    o2 = b;
    ref.axpy(0.37, a.data(), o1.data(), n);
    avx->axpy(0.37, a.data(), o2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(same_bits(o1[i], o2[i]));

    o1 = a;
    o2 = a;
    ref.relu(o1.data(), n);
    avx->relu(o2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(same_bits(o1[i], o2[i]));

    // Reductions differ only in summation order.
    const double scale = n == 0 ? 1.0 : 1e-12 * static_cast<double>(n) * 2500.0;
    CHECK(std::abs(ref.dot(a.data(), b.data(), n) - avx->dot(a.data(), b.data(), n)) <= scale);
    CHECK(std::abs(ref.sum(a.data(), n) - avx->sum(a.data(), n)) <= scale);
    CHECK(std::abs(ref.pinball_sum(a.data(), b.data(), tau, n) - avx->pinball_sum(a.data(), b.data(), tau, n)) <=
          scale);
    CHECK(std::abs(ref.tube_loss_sum(a.data(), 10.0, n) - avx->tube_loss_sum(a.data(), 10.0, n)) <= scale);
  }
}

TEST_CASE("pinball kernel matches the direct formula bit for bit") {
  Rng rng(5);
  const std::size_t n = 10000;
  auto y = random_vector(rng, n, -300, 300);
  auto yhat = random_vector(rng, n, -300, 300);
  std::vector<double> out(n);
  for (double tau : {0.05, 0.25, 0.5, 0.75, 0.95, 0.123}) {
    simd::active().pinball_each(y.data(), yhat.data(), tau, out.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = y[i] - yhat[i];
      const double direct = std::max(tau * d, (tau - 1.0) * d);
      REQUIRE(same_bits(out[i], direct));
      REQUIRE(same_bits(metrics::pinball(y[i], yhat[i], tau), direct));
    }
  }
}

TEST_CASE("check and tube weights") {
  const std::vector<double> r = {-2.0, -0.0, 0.0, 3.0};
  std::vector<double> w(4);
  simd::check_weights(r, 0.3, w);
  CHECK(w[0] == doctest::Approx(-0.7));
  CHECK(w[1] == doctest::Approx(0.3));  // -0.0 is not < 0
  CHECK(w[2] == doctest::Approx(0.3));
  CHECK(w[3] == doctest::Approx(0.3));
  simd::tube_weights(r, 1.0, w);
  CHECK(w == std::vector<double>{-1.0, 0.0, 0.0, 1.0});
  CHECK(simd::tube_loss_sum(r, 1.0) == 3.0);
}
