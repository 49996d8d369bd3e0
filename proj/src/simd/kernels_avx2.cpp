// Compiled with -mavx2 -mfma; only reached through the dispatch table after
// a runtime CPU check.

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "vqr/simd.hpp"

namespace vqr::simd {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void sub_avx2(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    // mul then add (no fma) so results match the scalar loop bit for bit
    const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_avx2(const double* a, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(a + i));
    acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(a + i + 4));
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(a + i));
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i];
  return s;
}

inline __m256d pinball4(__m256d y, __m256d yhat, __m256d tau, __m256d tau_m1) {
  const __m256d d = _mm256_sub_pd(y, yhat);
  const __m256d a = _mm256_mul_pd(tau, d);
  const __m256d b = _mm256_mul_pd(tau_m1, d);
  // max_pd returns its second operand on ties, which matches std::max(a, b).
  return _mm256_max_pd(b, a);
}

void pinball_each_avx2(const double* y, const double* yhat, double tau, double* out, std::size_t n) {
  const __m256d vt = _mm256_set1_pd(tau);
  const __m256d vt1 = _mm256_set1_pd(tau - 1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, pinball4(_mm256_loadu_pd(y + i), _mm256_loadu_pd(yhat + i), vt, vt1));
  }
  for (; i < n; ++i) {
    const double d = y[i] - yhat[i];
    out[i] = std::max(tau * d, (tau - 1.0) * d);
  }
}

double pinball_sum_avx2(const double* y, const double* yhat, double tau, std::size_t n) {
  const __m256d vt = _mm256_set1_pd(tau);
  const __m256d vt1 = _mm256_set1_pd(tau - 1.0);
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, pinball4(_mm256_loadu_pd(y + i), _mm256_loadu_pd(yhat + i), vt, vt1));
    acc1 = _mm256_add_pd(acc1,
                         pinball4(_mm256_loadu_pd(y + i + 4), _mm256_loadu_pd(yhat + i + 4), vt, vt1));
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_add_pd(acc0, pinball4(_mm256_loadu_pd(y + i), _mm256_loadu_pd(yhat + i), vt, vt1));
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    const double d = y[i] - yhat[i];
    s += std::max(tau * d, (tau - 1.0) * d);
  }
  return s;
}

void check_weights_avx2(const double* r, double tau, double* out, std::size_t n) {
  const __m256d vt = _mm256_set1_pd(tau);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d neg = _mm256_cmp_pd(_mm256_loadu_pd(r + i), zero, _CMP_LT_OQ);
    _mm256_storeu_pd(out + i, _mm256_sub_pd(vt, _mm256_and_pd(neg, one)));
  }
  for (; i < n; ++i) out[i] = tau - (r[i] < 0.0 ? 1.0 : 0.0);
}

void tube_weights_avx2(const double* r, double eps, double* out, std::size_t n) {
  const __m256d pos_eps = _mm256_set1_pd(eps);
  const __m256d neg_eps = _mm256_set1_pd(-eps);
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(r + i);
    const __m256d above = _mm256_and_pd(_mm256_cmp_pd(v, pos_eps, _CMP_GT_OQ), one);
    const __m256d below = _mm256_and_pd(_mm256_cmp_pd(v, neg_eps, _CMP_LT_OQ), one);
    _mm256_storeu_pd(out + i, _mm256_sub_pd(above, below));
  }
  for (; i < n; ++i) out[i] = r[i] > eps ? 1.0 : (r[i] < -eps ? -1.0 : 0.0);
}

double tube_loss_sum_avx2(const double* r, double eps, std::size_t n) {
  const __m256d veps = _mm256_set1_pd(eps);
  const __m256d sign = _mm256_set1_pd(-0.0);
  const __m256d zero = _mm256_setzero_pd();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d a = _mm256_andnot_pd(sign, _mm256_loadu_pd(r + i));
    acc = _mm256_add_pd(acc, _mm256_max_pd(_mm256_sub_pd(a, veps), zero));
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += std::max(0.0, std::fabs(r[i]) - eps);
  return s;
}

void relu_avx2(double* x, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
  for (; i < n; ++i) x[i] = x[i] > 0.0 ? x[i] : 0.0;
}

}  // namespace

const KernelTable& avx2_table_impl() noexcept {
  static const KernelTable table{
      "avx2",           sub_avx2,          axpy_avx2,          dot_avx2,
      sum_avx2,         pinball_each_avx2, pinball_sum_avx2,   check_weights_avx2,
      tube_weights_avx2, tube_loss_sum_avx2, relu_avx2,
  };
  return table;
}

}  // namespace vqr::simd
