#include "vqr/linear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "vqr/error.hpp"
#include "vqr/metrics.hpp"
#include "vqr/simd.hpp"

namespace vqr {

double LinearModel::predict(std::span<const double> x) const {
  if (x.size() != coefficients.size()) {
    throw DomainError("LinearModel::predict: expected " + std::to_string(coefficients.size()) +
                      " features, got " + std::to_string(x.size()));
  }
  double s = intercept;
  for (std::size_t j = 0; j < x.size(); ++j) s += coefficients[j] * x[j];
  return s;
}

double LinearModel::predict(const FeatureRow& row) const {
  double buf[4];
  const auto p = feature_count(features);
  if (features == FeatureSet::Custom || p != coefficients.size()) {
    throw DomainError("LinearModel::predict: model has no row feature mapping");
  }
  fill_features(features, row, std::span<double>(buf, p));
  return predict(std::span<const double>(buf, p));
}

namespace {

void check_inputs(const Design& x, std::span<const double> y, const char* what) {
  for (const auto& c : x.columns) {
    if (c.size() != y.size()) throw DomainError(std::string(what) + ": design/target length mismatch");
  }
  if (y.size() < x.cols() + 1) {
    throw FitError(std::string(what) + ": need at least " + std::to_string(x.cols() + 1) + " rows");
  }
}

LinearModel empty_model(const Design& x) {
  LinearModel m;
  m.features = x.set;
  m.feature_names = x.names;
  m.coefficients.assign(x.cols(), 0.0);
  return m;
}

// Centered and scaled copy of the problem; the optimizers work in these units.
struct Scaled {
  std::vector<double> mean;
  std::vector<double> scale;
  std::vector<std::vector<double>> z;
  double y_center = 0.0;
  double y_scale = 1.0;
  std::vector<double> y;
  std::size_t n = 0;
  std::size_t p = 0;
};

Scaled standardize(const Design& x, std::span<const double> y) {
  Scaled s;
  s.n = y.size();
  s.p = x.cols();
  const double n = static_cast<double>(s.n);
  for (const auto& col : x.columns) {
    const double m = std::accumulate(col.begin(), col.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : col) ss += (v - m) * (v - m);
    double sd = std::sqrt(ss / n);
    if (!(sd > 0.0)) sd = 1.0;
    std::vector<double> z(col.size());
    for (std::size_t i = 0; i < col.size(); ++i) z[i] = (col[i] - m) / sd;
    s.mean.push_back(m);
    s.scale.push_back(sd);
    s.z.push_back(std::move(z));
  }
  s.y_center = metrics::empirical_quantile(y, 0.5);
  double mad = 0.0;
  for (double v : y) mad += std::fabs(v - s.y_center);
  mad /= n;
  s.y_scale = mad > 0.0 ? mad : 1.0;
  s.y.resize(s.n);
  for (std::size_t i = 0; i < s.n; ++i) s.y[i] = (y[i] - s.y_center) / s.y_scale;
  return s;
}

struct Params {
  std::vector<double> beta;
  double b = 0.0;
};

LinearModel to_original(const Design& x, const Scaled& s, const Params& prm) {
  LinearModel m = empty_model(x);
  double intercept = s.y_center + s.y_scale * prm.b;
  for (std::size_t j = 0; j < s.p; ++j) {
    m.coefficients[j] = s.y_scale * prm.beta[j] / s.scale[j];
    intercept -= m.coefficients[j] * s.mean[j];
  }
  m.intercept = intercept;
  return m;
}

void predict_scaled(const Scaled& s, const Params& prm, std::vector<double>& pred) {
  std::fill(pred.begin(), pred.end(), prm.b);
  for (std::size_t j = 0; j < s.p; ++j) {
    if (prm.beta[j] != 0.0) simd::axpy(prm.beta[j], s.z[j], pred);
  }
}

// Mean pinball loss in scaled units.
double scaled_pinball(const Scaled& s, const Params& prm, double tau, std::vector<double>& pred) {
  predict_scaled(s, prm, pred);
  return simd::pinball_sum(s.y, pred, tau) / static_cast<double>(s.n);
}

// argmin over delta of sum_i pinball_tau(r_i - delta * z_i); z == nullptr means z_i = 1.
double exact_line_search(std::span<const double> r, const double* z, double tau,
                         std::vector<std::pair<double, double>>& work) {
  work.clear();
  double target = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double zi = z ? z[i] : 1.0;
    if (zi == 0.0) continue;
    const double w = std::fabs(zi);
    work.emplace_back(r[i] / zi, w);
    target += w * (zi > 0.0 ? tau : 1.0 - tau);
  }
  if (work.empty()) return 0.0;
  std::sort(work.begin(), work.end());
  double cum = 0.0;
  const double slack = 1e-12 * target;
  for (const auto& [u, w] : work) {
    cum += w;
    if (cum >= target - slack) return u;
  }
  return work.back().first;
}

// Solves the square system a * x = rhs (row-major, in place). False when singular.
bool solve_dense(std::vector<double>& a, std::vector<double>& rhs, std::size_t n) {
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::fabs(a[r * n + col]) > std::fabs(a[piv * n + col])) piv = r;
    }
    if (std::fabs(a[piv * n + col]) < 1e-12) return false;
    if (piv != col) {
      for (std::size_t k = 0; k < n; ++k) std::swap(a[col * n + k], a[piv * n + k]);
      std::swap(rhs[col], rhs[piv]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] / a[col * n + col];
      if (f == 0.0) continue;
      for (std::size_t k = col; k < n; ++k) a[r * n + k] -= f * a[col * n + k];
      rhs[r] -= f * rhs[col];
    }
  }
  for (std::size_t i = n; i-- > 0;) {
    double v = rhs[i];
    for (std::size_t k = i + 1; k < n; ++k) v -= a[i * n + k] * rhs[k];
    rhs[i] = v / a[i * n + i];
  }
  return true;
}

// Interpolates the p + 1 observations with the smallest absolute residuals
// (a vertex of the pinball objective). Returns false if singular.
bool basis_candidate(const Scaled& s, std::span<const double> r, Params& out) {
  const std::size_t m = s.p + 1;
  std::vector<std::size_t> idx(s.n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(m), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      const double fa = std::fabs(r[a]);
                      const double fb = std::fabs(r[b]);
                      return fa < fb || (fa == fb && a < b);
                    });
  std::vector<double> a(m * m);
  std::vector<double> rhs(m);
  for (std::size_t row = 0; row < m; ++row) {
    const auto i = idx[row];
    a[row * m] = 1.0;
    for (std::size_t j = 0; j < s.p; ++j) a[row * m + 1 + j] = s.z[j][i];
    rhs[row] = s.y[i];
  }
  if (!solve_dense(a, rhs, m)) return false;
  out.b = rhs[0];
  out.beta.assign(rhs.begin() + 1, rhs.end());
  return std::all_of(rhs.begin(), rhs.end(), [](double v) { return std::isfinite(v); });
}

// Descends from `prm` with vertex jumps and exact coordinate line searches.
void polish_pinball(const Scaled& s, double tau, std::size_t sweeps, Params& prm) {
  std::vector<double> pred(s.n);
  std::vector<double> r(s.n);
  std::vector<std::pair<double, double>> work;
  double loss = scaled_pinball(s, prm, tau, pred);
  for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
    const double start = loss;

    predict_scaled(s, prm, pred);
    simd::sub(s.y, pred, r);
    Params vertex;
    if (basis_candidate(s, r, vertex)) {
      const double l = scaled_pinball(s, vertex, tau, pred);
      if (l < loss) {
        prm = std::move(vertex);
        loss = l;
      }
    }

    for (std::size_t j = 0; j <= s.p; ++j) {
      predict_scaled(s, prm, pred);
      simd::sub(s.y, pred, r);
      const bool is_intercept = j == s.p;
      const double delta = exact_line_search(r, is_intercept ? nullptr : s.z[j].data(), tau, work);
      if (delta == 0.0) continue;
      Params trial = prm;
      if (is_intercept) {
        trial.b += delta;
      } else {
        trial.beta[j] += delta;
      }
      const double l = scaled_pinball(s, trial, tau, pred);
      if (l <= loss) {
        prm = std::move(trial);
        loss = l;
      }
    }
    if (start - loss <= 1e-13 * (1.0 + std::fabs(start))) break;
  }
}

// Simplex-style edge descent over vertices of the pinball objective. Each
// edge keeps all but one basis observation interpolated; the step along it is
// an exact weighted-quantile line search.
void simplex_pinball(const Scaled& s, double tau, Params& prm) {
  const std::size_t m = s.p + 1;
  const std::size_t n = s.n;
  std::vector<double> pred(n);
  std::vector<double> r(n);
  predict_scaled(s, prm, pred);
  simd::sub(s.y, pred, r);

  auto row = [&](std::size_t i, std::size_t j) { return j == 0 ? 1.0 : s.z[j - 1][i]; };

  // Greedy independent basis among the smallest residuals.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return std::fabs(r[a]) < std::fabs(r[b]); });
  std::vector<std::size_t> basis;
  std::vector<std::vector<double>> reduced;  // echelon rows for the rank test
  for (std::size_t i : order) {
    if (basis.size() == m) break;
    std::vector<double> v(m);
    for (std::size_t j = 0; j < m; ++j) v[j] = row(i, j);
    for (const auto& e : reduced) {
      std::size_t lead = 0;
      while (e[lead] == 0.0) ++lead;
      const double f = v[lead] / e[lead];
      for (std::size_t j = 0; j < m; ++j) v[j] -= f * e[j];
    }
    double mx = 0.0;
    for (double x : v) mx = std::max(mx, std::fabs(x));
    if (mx < 1e-9) continue;
    for (auto& x : v) {
      if (std::fabs(x) < 1e-12 * mx) x = 0.0;
    }
    basis.push_back(i);
    reduced.push_back(std::move(v));
  }
  if (basis.size() != m) return;

  // theta = (b, beta...); interpolate the basis.
  auto solve_basis = [&](std::vector<double>& inv) {
    std::vector<double> a(m * m);
    for (std::size_t k = 0; k < m; ++k) {
      for (std::size_t j = 0; j < m; ++j) a[k * m + j] = row(basis[k], j);
    }
    inv.assign(m * m, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      std::vector<double> aa = a;
      std::vector<double> e(m, 0.0);
      e[k] = 1.0;
      if (!solve_dense(aa, e, m)) return false;
      for (std::size_t j = 0; j < m; ++j) inv[j * m + k] = e[j];
    }
    return true;
  };
  std::vector<double> inv;
  if (!solve_basis(inv)) return;
  Params cur{std::vector<double>(s.p), 0.0};
  {
    std::vector<double> theta(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t k = 0; k < m; ++k) theta[j] += inv[j * m + k] * s.y[basis[k]];
    }
    cur.b = theta[0];
    for (std::size_t j = 0; j < s.p; ++j) cur.beta[j] = theta[j + 1];
  }
  double loss = scaled_pinball(s, cur, tau, pred);

  std::vector<double> g(n);
  std::vector<std::pair<double, double>> work;
  const std::size_t max_pivots = 50 * n + 100;
  for (std::size_t pivot = 0; pivot < max_pivots; ++pivot) {
    predict_scaled(s, cur, pred);
    simd::sub(s.y, pred, r);
    double best_gain = 0.0;
    std::size_t best_k = m;
    double best_t = 0.0;
    std::vector<double> best_d;
    for (std::size_t k = 0; k < m; ++k) {
      std::vector<double> d(m);
      for (std::size_t j = 0; j < m; ++j) d[j] = inv[j * m + k];
      for (std::size_t i = 0; i < n; ++i) {
        double v = d[0];
        for (std::size_t j = 1; j < m; ++j) v += d[j] * s.z[j - 1][i];
        g[i] = v;
      }
      for (std::size_t q = 0; q < m; ++q) {
        if (q != k) g[basis[q]] = 0.0;  // exact zeros along the edge
      }
      const double t = exact_line_search(r, g.data(), tau, work);
      if (t == 0.0) continue;
      Params trial = cur;
      trial.b += t * d[0];
      for (std::size_t j = 0; j < s.p; ++j) trial.beta[j] += t * d[j + 1];
      const double l = scaled_pinball(s, trial, tau, pred);
      if (loss - l > best_gain) {
        best_gain = loss - l;
        best_k = k;
        best_t = t;
        best_d = d;
      }
    }
    if (best_k == m || best_gain <= 1e-15 * (1.0 + loss)) break;

    // Entering observation: the zero-residual point with the step's breakpoint.
    std::size_t enter = n;
    double closest = INFINITY;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::find(basis.begin(), basis.end(), i) != basis.end()) continue;
      double gi = best_d[0];
      for (std::size_t j = 1; j < m; ++j) gi += best_d[j] * s.z[j - 1][i];
      if (gi == 0.0) continue;
      const double dist = std::fabs(r[i] / gi - best_t);
      if (dist < closest) {
        closest = dist;
        enter = i;
      }
    }
    cur.b += best_t * best_d[0];
    for (std::size_t j = 0; j < s.p; ++j) cur.beta[j] += best_t * best_d[j + 1];
    loss -= best_gain;
    if (enter == n) break;
    const std::size_t leaving = basis[best_k];
    basis[best_k] = enter;
    if (!solve_basis(inv)) {
      basis[best_k] = leaving;
      break;
    }
  }
  loss = scaled_pinball(s, cur, tau, pred);
  if (loss < scaled_pinball(s, prm, tau, pred)) prm = std::move(cur);
}

}  // namespace

std::vector<double> residuals(const LinearModel& m, const Design& x, std::span<const double> y) {
  std::vector<double> r(y.begin(), y.end());
  for (auto& v : r) v -= m.intercept;
  for (std::size_t j = 0; j < x.cols(); ++j) simd::axpy(-m.coefficients[j], x.columns[j], r);
  return r;
}

double mean_pinball_loss(const LinearModel& m, const Design& x, std::span<const double> y, double tau) {
  const auto r = residuals(m, x, y);
  double s = 0.0;
  for (double v : r) s += std::max(tau * v, (tau - 1.0) * v);
  return s / static_cast<double>(y.size());
}

double svr_objective(const LinearModel& m, const Design& x, std::span<const double> y, double epsilon,
                     double c_reg) {
  const auto r = residuals(m, x, y);
  double pen = 0.0;
  for (double w : m.coefficients) pen += w * w;
  return 0.5 * pen + c_reg * simd::tube_loss_sum(r, epsilon);
}

LinearModel fit_ols(const Design& x, std::span<const double> y) {
  check_inputs(x, y, "fit_ols");
  const std::size_t p = x.cols();
  const std::size_t n = y.size();
  const double nd = static_cast<double>(n);
  std::vector<double> mean(p);
  for (std::size_t j = 0; j < p; ++j) {
    mean[j] = std::accumulate(x.columns[j].begin(), x.columns[j].end(), 0.0) / nd;
  }
  const double ybar = std::accumulate(y.begin(), y.end(), 0.0) / nd;

  // Centered normal equations G beta = c.
  std::vector<double> g(p * p, 0.0);
  std::vector<double> c(p, 0.0);
  std::vector<std::vector<double>> centered(p, std::vector<double>(n));
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t i = 0; i < n; ++i) centered[j][i] = x.columns[j][i] - mean[j];
  }
  std::vector<double> yc(n);
  for (std::size_t i = 0; i < n; ++i) yc[i] = y[i] - ybar;
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t k = 0; k <= j; ++k) {
      g[j * p + k] = g[k * p + j] = simd::dot(centered[j], centered[k]);
    }
    c[j] = simd::dot(centered[j], yc);
  }

  // Cholesky G = L L^T with a relative pivot test.
  std::vector<double> l(p * p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    double d = g[j * p + j];
    for (std::size_t k = 0; k < j; ++k) d -= l[j * p + k] * l[j * p + k];
    if (!(g[j * p + j] > 0.0) || !(d > 1e-10 * g[j * p + j])) {
      throw FitError("fit_ols: rank-deficient design (column '" + x.names[j] + "')");
    }
    l[j * p + j] = std::sqrt(d);
    for (std::size_t i = j + 1; i < p; ++i) {
      double v = g[i * p + j];
      for (std::size_t k = 0; k < j; ++k) v -= l[i * p + k] * l[j * p + k];
      l[i * p + j] = v / l[j * p + j];
    }
  }
  std::vector<double> z(p);
  for (std::size_t i = 0; i < p; ++i) {
    double v = c[i];
    for (std::size_t k = 0; k < i; ++k) v -= l[i * p + k] * z[k];
    z[i] = v / l[i * p + i];
  }
  LinearModel m = empty_model(x);
  for (std::size_t i = p; i-- > 0;) {
    double v = z[i];
    for (std::size_t k = i + 1; k < p; ++k) v -= l[k * p + i] * m.coefficients[k];
    m.coefficients[i] = v / l[i * p + i];
  }
  m.intercept = ybar;
  for (std::size_t j = 0; j < p; ++j) m.intercept -= m.coefficients[j] * mean[j];
  return m;
}

LinearFit fit_linear_qr(const Design& x, std::span<const double> y, double tau,
                        const SubgradientParams& params) {
  if (!(tau > 0.0 && tau < 1.0)) throw DomainError("fit_linear_qr: tau must lie in (0, 1)");
  check_inputs(x, y, "fit_linear_qr");
  LinearFit fit;
  const auto s = standardize(x, y);
  const std::size_t n = s.n;
  const double nd = static_cast<double>(n);

  if (std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; })) {
    fit.model = empty_model(x);
    fit.model.intercept = y[0];
    fit.diagnostics = {true, 0, 0.0};
    return fit;
  }

  Params cur{std::vector<double>(s.p, 0.0), metrics::empirical_quantile(s.y, tau)};
  Params avg = cur;
  Params best = cur;
  std::vector<double> pred(n);
  std::vector<double> r(n);
  std::vector<double> w(n);
  double best_loss = scaled_pinball(s, best, tau, pred);
  double prev_avg_loss = std::numeric_limits<double>::infinity();

  std::size_t t = 1;
  for (; t <= params.max_iterations; ++t) {
    predict_scaled(s, cur, pred);
    simd::sub(s.y, pred, r);
    simd::check_weights(r, tau, w);
    const double eta = params.step_scale / std::sqrt(static_cast<double>(t));
    cur.b += eta * simd::sum(w) / nd;
    for (std::size_t j = 0; j < s.p; ++j) cur.beta[j] += eta * simd::dot(w, s.z[j]) / nd;

    const double keep = static_cast<double>(t) / static_cast<double>(t + 1);
    avg.b = keep * avg.b + (1.0 - keep) * cur.b;
    for (std::size_t j = 0; j < s.p; ++j) avg.beta[j] = keep * avg.beta[j] + (1.0 - keep) * cur.beta[j];

    if (t % params.check_every == 0) {
      const double avg_loss = scaled_pinball(s, avg, tau, pred);
      if (avg_loss < best_loss) {
        best_loss = avg_loss;
        best = avg;
      }
      if ((prev_avg_loss - avg_loss) * s.y_scale < params.tolerance) {
        fit.diagnostics.converged = true;
        break;
      }
      prev_avg_loss = avg_loss;
    }
  }
  fit.diagnostics.iterations = std::min(t, params.max_iterations);

  polish_pinball(s, tau, params.polish_sweeps, best);
  simplex_pinball(s, tau, best);
  fit.model = to_original(x, s, best);

  // Re-center the intercept exactly in original units: the lower tau-quantile
  // of y - x'beta balances the residual signs.
  std::vector<double> partial(y.begin(), y.end());
  for (std::size_t j = 0; j < s.p; ++j) simd::axpy(-fit.model.coefficients[j], x.columns[j], partial);
  const double old_intercept = fit.model.intercept;
  const double old_loss = mean_pinball_loss(fit.model, x, y, tau);
  fit.model.intercept = metrics::empirical_quantile_inplace(partial, tau);
  fit.diagnostics.final_loss = mean_pinball_loss(fit.model, x, y, tau);
  if (fit.diagnostics.final_loss > old_loss) {
    fit.model.intercept = old_intercept;
    fit.diagnostics.final_loss = old_loss;
  }
  return fit;
}

LinearFit fit_statistical(std::span<const FeatureRow> rows, std::span<const double> y, double tau,
                          const SubgradientParams& params) {
  return fit_linear_qr(make_design(FeatureSet::Statistical, rows), y, tau, params);
}

LinearFit fit_linear_svr(const Design& x, std::span<const double> y, double epsilon, double c_reg,
                         const SubgradientParams& params) {
  if (!(epsilon >= 0.0)) throw DomainError("fit_linear_svr: epsilon must be >= 0");
  if (!(c_reg > 0.0)) throw DomainError("fit_linear_svr: c_reg must be > 0");
  check_inputs(x, y, "fit_linear_svr");
  const auto s = standardize(x, y);
  const std::size_t n = s.n;
  const double nd = static_cast<double>(n);
  const double eps_scaled = epsilon / s.y_scale;
  // Objective per sample in original units: penalty / (c n) + mean tube loss.
  std::vector<double> pen_weight(s.p);
  for (std::size_t j = 0; j < s.p; ++j) pen_weight[j] = s.y_scale / (c_reg * nd * s.scale[j] * s.scale[j]);

  std::vector<double> pred(n);
  std::vector<double> r(n);
  std::vector<double> w(n);
  auto objective = [&](const Params& prm) {
    predict_scaled(s, prm, pred);
    simd::sub(s.y, pred, r);
    double pen = 0.0;
    for (std::size_t j = 0; j < s.p; ++j) pen += 0.5 * pen_weight[j] * prm.beta[j] * prm.beta[j];
    return (pen + simd::tube_loss_sum(r, eps_scaled) / nd) * s.y_scale;
  };

  Params cur{std::vector<double>(s.p, 0.0), 0.0};
  Params avg = cur;
  Params best = cur;
  double best_obj = objective(best);
  double prev = std::numeric_limits<double>::infinity();
  LinearFit fit;
  std::size_t t = 1;
  for (; t <= params.max_iterations; ++t) {
    predict_scaled(s, cur, pred);
    simd::sub(s.y, pred, r);
    simd::tube_weights(r, eps_scaled, w);
    const double eta = params.step_scale / std::sqrt(static_cast<double>(t));
    cur.b += eta * simd::sum(w) / nd;
    for (std::size_t j = 0; j < s.p; ++j) {
      const double grad = pen_weight[j] * cur.beta[j] - simd::dot(w, s.z[j]) / nd;
      cur.beta[j] -= eta * grad;
    }
    const double keep = static_cast<double>(t) / static_cast<double>(t + 1);
    avg.b = keep * avg.b + (1.0 - keep) * cur.b;
    for (std::size_t j = 0; j < s.p; ++j) avg.beta[j] = keep * avg.beta[j] + (1.0 - keep) * cur.beta[j];
    if (t % params.check_every == 0) {
      const double obj = objective(avg);
      if (obj < best_obj) {
        best_obj = obj;
        best = avg;
      }
      const double cur_obj = objective(cur);
      if (cur_obj < best_obj) {
        best_obj = cur_obj;
        best = cur;
      }
      if (prev - obj < params.tolerance) {
        fit.diagnostics.converged = true;
        break;
      }
      prev = obj;
    }
  }
  fit.diagnostics.iterations = std::min(t, params.max_iterations);

  // Continuation on a Huber-smoothed tube loss, damped Newton per stage.
  {
    const std::size_t m = s.p + 1;
    Params cur = best;
    std::vector<double> grad(m);
    std::vector<double> hess(m * m);
    auto smoothed = [&](const Params& prm, double mu) {
      predict_scaled(s, prm, pred);
      simd::sub(s.y, pred, r);
      double pen = 0.0;
      for (std::size_t j = 0; j < s.p; ++j) pen += 0.5 * pen_weight[j] * prm.beta[j] * prm.beta[j];
      double loss = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double u = std::fabs(r[i]) - eps_scaled;
        if (u <= 0.0) continue;
        loss += u < mu ? u * u / (2.0 * mu) : u - 0.5 * mu;
      }
      return pen + loss / nd;
    };
    for (double mu = 0.1; mu >= 1e-12; mu *= 0.1) {
      double f = smoothed(cur, mu);
      for (int it = 0; it < 100; ++it) {
        std::fill(grad.begin(), grad.end(), 0.0);
        std::fill(hess.begin(), hess.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
          const double u = std::fabs(r[i]) - eps_scaled;
          if (u <= 0.0) continue;
          const double sg = r[i] > 0.0 ? 1.0 : -1.0;
          const double dh = u < mu ? u / mu : 1.0;
          const double c = -sg * dh / nd;
          grad[0] += c;
          for (std::size_t j = 0; j < s.p; ++j) grad[j + 1] += c * s.z[j][i];
          if (u < mu) {
            const double hw = 1.0 / (mu * nd);
            for (std::size_t a = 0; a < m; ++a) {
              const double xa = a == 0 ? 1.0 : s.z[a - 1][i];
              for (std::size_t b = 0; b < m; ++b) {
                const double xb = b == 0 ? 1.0 : s.z[b - 1][i];
                hess[a * m + b] += hw * xa * xb;
              }
            }
          }
        }
        for (std::size_t j = 0; j < s.p; ++j) {
          grad[j + 1] += pen_weight[j] * cur.beta[j];
          hess[(j + 1) * m + j + 1] += pen_weight[j];
        }
        double gnorm = 0.0;
        for (double v : grad) gnorm = std::max(gnorm, std::fabs(v));
        if (gnorm < 1e-14) break;
        double diag = 0.0;
        for (std::size_t a = 0; a < m; ++a) diag = std::max(diag, hess[a * m + a]);
        std::vector<double> h = hess;
        std::vector<double> step(grad);
        for (std::size_t a = 0; a < m; ++a) h[a * m + a] += 1e-10 * (diag > 0.0 ? diag : 1.0);
        if (!solve_dense(h, step, m)) break;
        double alpha = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
          Params trial = cur;
          trial.b -= alpha * step[0];
          for (std::size_t j = 0; j < s.p; ++j) trial.beta[j] -= alpha * step[j + 1];
          const double ft = smoothed(trial, mu);
          if (ft < f) {
            cur = std::move(trial);
            f = ft;
            moved = true;
            break;
          }
        }
        smoothed(cur, mu);  // refresh residuals for the next iteration
        if (!moved) break;
      }
      const double obj = objective(cur);
      if (obj < best_obj) {
        best_obj = obj;
        best = cur;
      }
    }
  }

  fit.model = to_original(x, s, best);
  fit.diagnostics.final_loss = svr_objective(fit.model, x, y, epsilon, c_reg);
  return fit;
}

}  // namespace vqr
