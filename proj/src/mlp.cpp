#include "vqr/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "vqr/error.hpp"
#include "vqr/metrics.hpp"
#include "vqr/rng.hpp"
#include "vqr/simd.hpp"

namespace vqr {

namespace {

struct Workspace {
  std::vector<double> a;   // hidden pre-activation
  std::vector<double> h;   // hidden activation
  std::vector<double> dh;  // d loss / d h
};

void forward(const MlpModel& m, const double* z, Workspace& ws, double* out) {
  const std::size_t in = m.inputs;
  for (std::size_t k = 0; k < m.hidden; ++k) {
    ws.a[k] = m.b1[k] + simd::active().dot(&m.w1[k * in], z, in);
  }
  ws.h = ws.a;
  simd::relu(ws.h);
  for (std::size_t j = 0; j < m.outputs(); ++j) {
    out[j] = m.b2[j] + simd::active().dot(&m.w2[j * m.hidden], ws.h.data(), m.hidden);
  }
}

// Loss and (optionally) gradient over `idx` rows of the standardized data `z`
// (row-major, m.inputs wide) with standardized targets `t`.
double accumulate(const MlpModel& m, const std::vector<double>& z, std::span<const double> t,
                  std::span<const std::size_t> idx, double* grad, Workspace& ws) {
  const std::size_t in = m.inputs;
  const std::size_t nh = m.hidden;
  const std::size_t no = m.outputs();
  const double inv_b = 1.0 / static_cast<double>(idx.size());
  double* g_w1 = grad;
  double* g_b1 = grad ? grad + m.w1.size() : nullptr;
  double* g_w2 = grad ? g_b1 + m.b1.size() : nullptr;
  double* g_b2 = grad ? g_w2 + m.w2.size() : nullptr;

  std::vector<double> out(no);
  double loss = 0.0;
  for (auto i : idx) {
    const double* zi = &z[i * in];
    forward(m, zi, ws, out.data());
    for (std::size_t j = 0; j < no; ++j) loss += metrics::pinball(t[i], out[j], m.levels[j]);
    if (!grad) continue;

    std::fill(ws.dh.begin(), ws.dh.end(), 0.0);
    for (std::size_t j = 0; j < no; ++j) {
      const double r = t[i] - out[j];
      const double g = -(m.levels[j] - (r < 0.0 ? 1.0 : 0.0)) * inv_b;
      g_b2[j] += g;
      simd::active().axpy(g, ws.h.data(), &g_w2[j * nh], nh);
      simd::active().axpy(g, &m.w2[j * nh], ws.dh.data(), nh);
    }
    for (std::size_t k = 0; k < nh; ++k) {
      if (!(ws.a[k] > 0.0)) continue;
      const double da = ws.dh[k];
      g_b1[k] += da;
      simd::active().axpy(da, zi, &g_w1[k * in], in);
    }
  }
  return loss * inv_b;
}

Workspace make_workspace(const MlpModel& m) {
  return Workspace{std::vector<double>(m.hidden), std::vector<double>(m.hidden), std::vector<double>(m.hidden)};
}

void check_levels(std::span<const double> levels) {
  if (levels.empty()) throw DomainError("mlp: at least one quantile level is required");
  for (std::size_t j = 0; j < levels.size(); ++j) {
    if (!(levels[j] > 0.0 && levels[j] < 1.0)) throw DomainError("mlp: levels must lie in (0, 1)");
    if (j > 0 && !(levels[j] > levels[j - 1])) throw DomainError("mlp: levels must be increasing");
  }
}

}  // namespace

MlpModel make_mlp(std::size_t inputs, std::size_t hidden, std::vector<double> levels) {
  check_levels(levels);
  if (inputs == 0 || hidden == 0) throw DomainError("mlp: layer sizes must be positive");
  MlpModel m;
  m.inputs = inputs;
  m.hidden = hidden;
  m.input_mean.assign(inputs, 0.0);
  m.input_scale.assign(inputs, 1.0);
  m.w1.assign(hidden * inputs, 0.0);
  m.b1.assign(hidden, 0.0);
  m.w2.assign(levels.size() * hidden, 0.0);
  m.b2.assign(levels.size(), 0.0);
  m.levels = std::move(levels);
  return m;
}

std::vector<double> MlpModel::parameters() const {
  std::vector<double> p;
  p.reserve(parameter_count());
  p.insert(p.end(), w1.begin(), w1.end());
  p.insert(p.end(), b1.begin(), b1.end());
  p.insert(p.end(), w2.begin(), w2.end());
  p.insert(p.end(), b2.begin(), b2.end());
  return p;
}

void MlpModel::set_parameters(std::span<const double> p) {
  if (p.size() != parameter_count()) throw DomainError("MlpModel: parameter count mismatch");
  auto it = p.begin();
  for (auto* v : {&w1, &b1, &w2, &b2}) {
    std::copy(it, it + static_cast<std::ptrdiff_t>(v->size()), v->begin());
    it += static_cast<std::ptrdiff_t>(v->size());
  }
}

std::vector<double> MlpModel::predict(std::span<const double> x) const {
  if (x.size() != inputs) throw DomainError("MlpModel: expected " + std::to_string(inputs) + " inputs");
  std::vector<double> z(inputs);
  for (std::size_t f = 0; f < inputs; ++f) z[f] = (x[f] - input_mean[f]) / input_scale[f];
  Workspace ws = make_workspace(*this);
  std::vector<double> out(outputs());
  forward(*this, z.data(), ws, out.data());
  for (auto& v : out) v = target_mean + target_scale * v;
  return out;
}

std::vector<double> MlpModel::predict(const FeatureRow& row) const {
  const double x[2] = {row.age_months, row.bt_celsius};
  return predict(std::span<const double>(x, 2));
}

double MlpModel::batch_loss(std::span<const std::vector<double>> rows, std::span<const double> y,
                            std::vector<double>* grad) const {
  if (rows.size() != y.size() || rows.empty()) throw DomainError("MlpModel: batch size mismatch");
  std::vector<double> z(rows.size() * inputs);
  std::vector<double> t(y.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != inputs) throw DomainError("MlpModel: batch row has the wrong width");
    for (std::size_t f = 0; f < inputs; ++f) z[i * inputs + f] = (rows[i][f] - input_mean[f]) / input_scale[f];
    t[i] = (y[i] - target_mean) / target_scale;
  }
  std::vector<std::size_t> idx(rows.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Workspace ws = make_workspace(*this);
  if (grad) grad->assign(parameter_count(), 0.0);
  return accumulate(*this, z, t, idx, grad ? grad->data() : nullptr, ws);
}

MlpModel fit_mlp_qr(const Design& x, std::span<const double> y, std::span<const double> levels,
                    const MlpParams& params, MlpTrace* trace) {
  const std::size_t n = y.size();
  const std::size_t in = x.cols();
  if (n == 0 || in == 0) throw FitError("fit_mlp_qr: no data");
  for (const auto& c : x.columns) {
    if (c.size() != n) throw DomainError("fit_mlp_qr: design/target length mismatch");
  }
  if (params.batch == 0 || !(params.learning_rate > 0.0)) throw DomainError("fit_mlp_qr: bad parameters");

  MlpModel m = make_mlp(in, params.hidden, std::vector<double>(levels.begin(), levels.end()));
  for (std::size_t f = 0; f < in; ++f) {
    const auto& col = x.columns[f];
    const double mean = std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : col) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n));
    m.input_mean[f] = mean;
    m.input_scale[f] = sd > 0.0 ? sd : 1.0;
  }
  {
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : y) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n));
    m.target_mean = mean;
    if (!(sd > 0.0)) {
      // Constant target: zero network around the constant.
      if (trace) trace->epoch_loss.assign(params.epochs, 0.0);
      return m;
    }
    m.target_scale = sd;
  }

  std::vector<double> z(n * in);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < in; ++f) z[i * in + f] = (x.columns[f][i] - m.input_mean[f]) / m.input_scale[f];
  }
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = (y[i] - m.target_mean) / m.target_scale;

  Rng rng(params.seed);
  const double lim1 = std::sqrt(6.0 / static_cast<double>(in));
  const double lim2 = std::sqrt(6.0 / static_cast<double>(params.hidden));
  for (auto& w : m.w1) w = rng.uniform(-lim1, lim1);
  for (auto& w : m.w2) w = 0.1 * rng.uniform(-lim2, lim2);
  for (std::size_t j = 0; j < m.outputs(); ++j) m.b2[j] = metrics::empirical_quantile(t, m.levels[j]);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> grad(m.parameter_count());
  std::vector<double> p;
  Workspace ws = make_workspace(m);
  if (trace) trace->epoch_loss.clear();

  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += params.batch) {
      const std::size_t len = std::min(params.batch, n - start);
      const std::span<const std::size_t> idx(order.data() + start, len);
      std::fill(grad.begin(), grad.end(), 0.0);
      const double loss = accumulate(m, z, t, idx, grad.data(), ws);
      if (!std::isfinite(loss)) {
        throw FitError("fit_mlp_qr: training loss became non-finite in epoch " + std::to_string(epoch + 1));
      }
      epoch_loss += loss * static_cast<double>(len);
      p = m.parameters();
      simd::axpy(-params.learning_rate, grad, p);
      m.set_parameters(p);
    }
    epoch_loss /= static_cast<double>(n);
    if (!std::isfinite(epoch_loss)) {
      throw FitError("fit_mlp_qr: training loss became non-finite in epoch " + std::to_string(epoch + 1));
    }
    if (trace) trace->epoch_loss.push_back(epoch_loss);
  }
  return m;
}

}  // namespace vqr
