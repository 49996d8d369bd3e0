// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "vqr/bundle.hpp"
#include "vqr/harness.hpp"
#include "vqr/ingest.hpp"
#include "vqr/io.hpp"
#include "vqr/linear.hpp"
#include "vqr/metrics.hpp"
#include "vqr/mlp.hpp"
#include "vqr/persist.hpp"
#include "vqr/preprocess.hpp"
#include "vqr/rng.hpp"
#include "vqr/service.hpp"
#include "vqr/synth.hpp"

using namespace vqr;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

const std::vector<double> kLevels = {0.05, 0.25, 0.5, 0.75, 0.95};

std::vector<ObservationPair> synth_pairs(std::size_t n, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n_pairs = n;
  cfg.seed = seed;
  return generate(cfg).pairs;
}

// GBM bundle on 40,000 synthetic pairs, shared by the calibration, oracle and
// direction criteria.
const QuantileModelBundle& big_gbm() {
  static const QuantileModelBundle b = train_bundle(Family::GBM, synth_pairs(40000, 1));
  return b;
}

Outcome pinball_exactness() {
  Rng rng(101);
  std::size_t mismatches = 0;
  for (int i = 0; i < 10000; ++i) {
    const double y = rng.uniform(-300, 300);
    const double yhat = rng.uniform(-300, 300);
    const double tau = rng.uniform(1e-6, 1 - 1e-6);
    const double d = y - yhat;
    const double direct = std::max(tau * d, (tau - 1.0) * d);
    if (!same_bits(metrics::pinball(y, yhat, tau), direct)) ++mismatches;
    if (metrics::pinball(y, yhat, 0.5) != std::fabs(d) / 2) ++mismatches;
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatches"};
}

Outcome quantile_minimizer() {
  Rng rng(102);
  std::size_t bad = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const auto n = static_cast<std::size_t>(rng.between(1, 25));
    std::vector<double> v(n);
    // Integers keep every pinball sum exact, so the scan needs no tolerance.
    for (auto& x : v) x = static_cast<double>(rng.between(-20, 20));
    for (int j = 1; j <= 19; ++j) {
      const double tau = j / 20.0;
      double best = INFINITY;
      double arg = 0;
      std::vector<double> sorted = v;
      std::sort(sorted.begin(), sorted.end());
      for (double c : sorted) {
        // Scaled by 20 so tau * d is an exact integer multiple.
        double s = 0;
        for (double x : v) s += x >= c ? j * (x - c) : (20 - j) * (c - x);
        if (s < best) {
          best = s;
          arg = c;
        }
      }
      if (metrics::empirical_quantile(v, tau) != arg) ++bad;
    }
  }
  return {bad == 0, std::to_string(bad) + " of 3800 disagree"};
}

Outcome gbm_monotone() {
  const auto pairs = synth_pairs(4462, 1);
  std::vector<FeatureRow> rows;
  std::vector<double> y;
  for (const auto& p : pairs) {
    rows.push_back({p.age_months, p.bt_celsius});
    y.push_back(p.hr_bpm);
  }
  const auto d = make_design(FeatureSet::Raw, rows);
  std::size_t increases = 0;
  std::size_t stages = 0;
  for (double tau : kLevels) {
    GbmTrace trace;
    fit_gbm_qr(d, y, tau, GbmParams{200, 3, 0.1, 20}, &trace);
    stages += trace.train_loss.size() - 1;
    for (std::size_t k = 1; k < trace.train_loss.size(); ++k) increases += trace.train_loss[k] > trace.train_loss[k - 1];
  }
  return {increases == 0 && stages == 1000, std::to_string(increases) + " increases over " + std::to_string(stages) + " stages"};
}

Outcome qr_residual_balance() {
  Rng rng(104);
  std::size_t violations = 0;
  std::size_t checks = 0;
  for (int inst = 0; inst < 50; ++inst) {
    const std::size_t n = 500;
    std::vector<std::vector<double>> cols(3, std::vector<double>(n));
    std::vector<double> y(n);
    const double b0 = rng.uniform(-5, 5), b1 = rng.uniform(-3, 3), b2 = rng.uniform(-3, 3), b3 = rng.uniform(-3, 3);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& c : cols) c[i] = rng.uniform(-10, 10);
      y[i] = b0 + b1 * cols[0][i] + b2 * cols[1][i] + b3 * cols[2][i] + rng.normal() * rng.uniform(0.5, 5);
    }
    const auto d = custom_design(cols);
    for (double tau : kLevels) {
      const auto r = residuals(fit_linear_qr(d, y, tau).model, d, y);
      const auto neg = std::count_if(r.begin(), r.end(), [](double v) { return v < 0; });
      const auto pos = std::count_if(r.begin(), r.end(), [](double v) { return v > 0; });
      violations += neg > static_cast<long>(std::ceil(n * tau)) + 4;
      violations += pos > static_cast<long>(std::ceil(n * (1 - tau))) + 4;
      checks += 2;
    }
  }
  return {violations == 0, std::to_string(violations) + " of " + std::to_string(checks) + " bounds exceeded"};
}

Outcome ols_oracle() {
  Rng rng(105);
  double worst = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const auto p = static_cast<std::size_t>(rng.between(1, 4));
    const auto n = static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(p) + 2, 40));
    std::vector<std::vector<double>> cols(p, std::vector<double>(n));
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = rng.uniform(-50, 50);
      for (auto& c : cols) c[i] = rng.uniform(-20, 20);
    }
    const auto m = fit_ols(custom_design(cols), y);

    // Normal equations with an explicit intercept column, long double Gauss-Jordan.
    const std::size_t k = p + 1;
    std::vector<long double> a(k * (k + 1), 0.0L);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<long double> row(k);
      row[0] = 1;
      for (std::size_t j = 0; j < p; ++j) row[j + 1] = cols[j][i];
      for (std::size_t r = 0; r < k; ++r) {
        for (std::size_t c = 0; c < k; ++c) a[r * (k + 1) + c] += row[r] * row[c];
        a[r * (k + 1) + k] += row[r] * y[i];
      }
    }
    for (std::size_t c = 0; c < k; ++c) {
      std::size_t piv = c;
      for (std::size_t r = c + 1; r < k; ++r) {
        if (std::fabs(a[r * (k + 1) + c]) > std::fabs(a[piv * (k + 1) + c])) piv = r;
      }
      for (std::size_t q = 0; q <= k; ++q) std::swap(a[c * (k + 1) + q], a[piv * (k + 1) + q]);
      for (std::size_t r = 0; r < k; ++r) {
        if (r == c) continue;
        const long double f = a[r * (k + 1) + c] / a[c * (k + 1) + c];
        for (std::size_t q = c; q <= k; ++q) a[r * (k + 1) + q] -= f * a[c * (k + 1) + q];
      }
    }
    double diff = 0, norm = 0;
    for (std::size_t r = 0; r < k; ++r) {
      const double oracle = static_cast<double>(a[r * (k + 1) + k] / a[r * (k + 1) + r]);
      const double got = r == 0 ? m.intercept : m.coefficients[r - 1];
      diff = std::max(diff, std::fabs(got - oracle));
      norm = std::max(norm, std::fabs(oracle));
    }
    worst = std::max(worst, diff / norm);
  }
  return {worst <= 1e-6, fmt("max relative error %.3g", worst)};
}

Outcome table_iii_ordering() {
  std::size_t wins = 0;
  std::size_t total = 0;
  std::ostringstream detail;
  for (std::uint64_t cohort_seed = 1; cohort_seed <= 5; ++cohort_seed) {
    const auto pairs = synth_pairs(4462, cohort_seed);
    ExperimentConfig cfg;
    cfg.families = {Family::GBM, Family::QR, Family::OLS};
    cfg.n_experiments = 5;
    cfg.jobs = std::max(1u, std::min(5u, std::thread::hardware_concurrency()));
    const auto r = run_experiments(cfg, pairs);
    for (std::size_t e = 0; e < 5; ++e) {
      const auto& g = r.families[0].runs[e];
      const auto& q = r.families[1].runs[e];
      const auto& o = r.families[2].runs[e];
      ++total;
      if (!g.error && !q.error && !o.error && g.total_quantile_loss < q.total_quantile_loss &&
          g.total_quantile_loss < o.total_quantile_loss) {
        ++wins;
      }
    }
    if (cohort_seed == 1) {
      detail << "cohort 1 mean TQL gbm " << io::fixed(r.families[0].total_quantile_loss.mean, 3) << " qr "
             << io::fixed(r.families[1].total_quantile_loss.mean, 3) << " ols "
             << io::fixed(r.families[2].total_quantile_loss.mean, 3) << "; ";
    }
  }
  detail << "gbm smallest in " << wins << "/" << total << " experiments";
  return {wins == total, detail.str()};
}

Outcome band_calibration() {
  const auto& b = big_gbm();
  const auto test = synth_pairs(10000, 2);
  std::size_t inside = 0, below = 0;
  for (const auto& p : test) {
    const auto band = predict_band(b, p.age_months, p.bt_celsius, p.hr_bpm);
    if (band.status != DomainStatus::InDomain) continue;  // counted as a miss
    inside += *band.in_range;
    below += p.hr_bpm <= band.hr_bpm.back();
  }
  const double cov = static_cast<double>(inside) / static_cast<double>(test.size());
  const double frac = static_cast<double>(below) / static_cast<double>(test.size());
  return {std::fabs(cov - 0.90) <= 0.03 && std::fabs(frac - 0.95) <= 0.03,
          fmt("coverage %.4f", cov) + fmt(", below q0.95 %.4f", frac)};
}

Outcome oracle_recovery() {
  const auto& b = big_gbm();
  const GroundTruth truth;
  double sum = 0;
  std::size_t n = 0;
  for (int i = 0; i < 25; ++i) {
    const double age = 1.0 + 209.0 * i / 24.0;
    for (int j = 0; j < 20; ++j) {
      const double bt = 35.0 + 0.2 * j;
      const auto band = predict_band(b, age, bt);
      if (band.status != DomainStatus::InDomain) return {false, "grid point outside training domain"};
      sum += std::fabs(band.hr_bpm[2] - oracle_quantile(truth, age, bt, 0.5));
      ++n;
    }
  }
  const double mae = sum / static_cast<double>(n);
  return {n == 500 && mae < 4.0, fmt("MAE %.3f bpm", mae) + " over " + std::to_string(n) + " points"};
}

Outcome directional() {
  const auto& b = big_gbm();
  const double ages[] = {6, 24, 60, 120, 192};
  const double bts[] = {36, 37, 38, 39};
  double q[5][4];
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 4; ++j) {
      const auto band = predict_band(b, ages[i], bts[j]);
      if (band.status != DomainStatus::InDomain) return {false, "grid point outside training domain"};
      q[i][j] = band.hr_bpm[2];
    }
  }
  std::size_t bad = 0;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (i > 0 && q[i][j] > q[i - 1][j]) ++bad;
      if (j > 0 && q[i][j] < q[i][j - 1]) ++bad;
    }
  }
  return {bad == 0, std::to_string(bad) + " direction violations" + fmt(", q0.5(6mo,36C)=%.1f", q[0][0]) +
                        fmt(", q0.5(192mo,39C)=%.1f", q[4][3])};
}

Outcome pipeline_golden() {
  const auto c = load_cohort(CohortFiles::in_directory(std::filesystem::path(VQR_FIXTURE_DIR) / "golden"));
  const auto r = run_pipeline(c.records);
  PipelineAudit expect;
  expect.pairs_before = 6;
  expect.removed_medication = 1;
  expect.removed_movement = 1;
  expect.removed_hr_bounds = 1;
  expect.removed_dedupe = 1;
  expect.pairs_after = 2;
  expect.pairs_without_assessment = 3;
  expect.counts[36 - kMinBucket][2] = 1;
  expect.counts[37 - kMinBucket][2] = 1;
  const bool pairs_ok = r.pairs.size() == 2 && r.pairs[0].bt_celsius == 36.5 && r.pairs[0].hr_bpm == 110 &&
                        r.pairs[0].timestamp == 7200 && r.pairs[1].bt_celsius == 37.2 &&
                        r.pairs[1].hr_bpm == 120 && r.pairs[1].timestamp == 3600;
  return {pairs_ok && r.audit == expect, std::to_string(r.pairs.size()) + " pairs, audit " +
                                             (r.audit == expect ? "matches" : "differs")};
}

std::string end_to_end_once(const std::filesystem::path& dir) {
  SynthConfig cfg;
  cfg.n_pairs = 1500;
  cfg.seed = 42;
  cfg.raw_mode = true;
  io::write_cohort(dir, generate(cfg).records);
  const auto cohort = load_cohort(CohortFiles::in_directory(dir));
  const auto pipe = run_pipeline(cohort.records);
  const auto pairs_text = io::format_pairs(pipe.pairs);
  const auto pairs = io::parse_pairs(pairs_text);
  TrainOptions opt;
  opt.seed = 42;
  const auto model = serialize_bundle(train_bundle(Family::GBM, pairs, opt));
  ExperimentConfig ec;
  ec.n_experiments = 2;
  ec.base_seed = 42;
  const auto report = run_experiments(ec, pairs);
  std::string all = io::read_file(dir / "vitals.csv") + format_audit(pipe.audit) + pairs_text + model +
                    format_report(report) + format_report_csv(report);
  std::filesystem::remove_all(dir);
  return all;
}

Outcome end_to_end_determinism() {
  const auto tmp = std::filesystem::temp_directory_path();
  const auto a = end_to_end_once(tmp / "vqr_accept_e2e_a");
  const auto b = end_to_end_once(tmp / "vqr_accept_e2e_b");
  return {a == b && !a.empty(), std::to_string(a.size()) + " bytes compared"};
}

Outcome mlp_gradient() {
  Rng rng(112);
  double worst = 0;
  std::size_t checked = 0;
  for (int rep = 0; rep < 10; ++rep) {
    auto m = make_mlp(2, 16, kLevels);
    auto p = m.parameters();
    for (auto& v : p) v = rng.uniform(-1, 1);
    m.set_parameters(p);
    std::vector<std::vector<double>> rows;
    std::vector<double> y;
    for (int i = 0; i < 32; ++i) {
      rows.push_back({rng.uniform(-2, 2), rng.uniform(-2, 2)});
      y.push_back(rng.uniform(-3, 3));
    }
    std::vector<double> grad;
    m.batch_loss(rows, y, &grad);
    const double h = 1e-5;
    for (std::size_t k = 0; k < p.size(); ++k) {
      auto q = p;
      q[k] = p[k] + h;
      auto mp = m;
      mp.set_parameters(q);
      const double up = mp.batch_loss(rows, y, nullptr);
      q[k] = p[k] - h;
      mp.set_parameters(q);
      const double down = mp.batch_loss(rows, y, nullptr);
      // Skip coordinates whose stencil straddles a kink: the one-sided slopes differ.
      q[k] = p[k];
      mp.set_parameters(q);
      const double mid = mp.batch_loss(rows, y, nullptr);
      const double left = (mid - down) / h;
      const double right = (up - mid) / h;
      if (std::fabs(left - right) > 1e-6 * std::max(1.0, std::fabs(left))) continue;
      const double numeric = (up - down) / (2 * h);
      const double denom = std::max({std::fabs(numeric), std::fabs(grad[k]), 1e-8});
      worst = std::max(worst, std::fabs(numeric - grad[k]) / denom);
      ++checked;
    }
  }
  return {worst < 1e-4 && checked > 0,
          fmt("max relative error %.3g", worst) + " over " + std::to_string(checked) + " coordinates"};
}

Outcome persistence() {
  const auto pairs = synth_pairs(1500, 13);
  const auto dir = std::filesystem::temp_directory_path() / "vqr_accept_models";
  std::filesystem::create_directories(dir);
  Rng rng(113);
  double worst = 0;
  std::string failed;
  for (Family f : kAllFamilies) {
    TrainOptions opt;
    opt.hyper.mlp.epochs = 50;
    const auto b = train_bundle(f, pairs, opt);
    const auto path = dir / (std::string(to_string(f)) + ".model");
    save_model(b, path);
    const auto back = load_model(path);
    for (int i = 0; i < 1000; ++i) {
      const FeatureRow row{rng.uniform(0, 216), rng.uniform(33, 41)};
      const auto x = b.predict_levels(row);
      const auto y = back.predict_levels(row);
      for (std::size_t l = 0; l < x.size(); ++l) {
        const double d = std::fabs(x[l] - y[l]);
        if (!(d < 1e-12)) failed += std::string(to_string(f)) + " ";
        worst = std::max(worst, d);
      }
    }
  }
  std::filesystem::remove_all(dir);
  return {failed.empty(), fmt("max drift %.3g over 10 families", worst)};
}

Outcome service_contract() {
  const auto pairs = synth_pairs(4462, 1);
  const auto b = train_bundle(Family::GBM, pairs);
  const auto id = model_id(b);
  std::vector<ObservationPair> cool;
  for (const auto& p : pairs) {
    if (p.bt_celsius < 40.0) cool.push_back(p);
  }
  const auto c = train_bundle(Family::GBM, cool);

  const auto ok = handle_predict({120, 37.2, 60}, b, id);
  bool ok_pass = ok.status == ResponseStatus::Ok && ok.quantiles.size() == 5 && ok.in_range.has_value();
  for (std::size_t i = 1; ok_pass && i < ok.quantiles.size(); ++i) {
    ok_pass = ok.quantiles[i - 1].second <= ok.quantiles[i].second;
  }
  const bool invalid = handle_predict({120, 44.0, 60}, b, id).status == ResponseStatus::InvalidInput;
  const auto ood = handle_predict({120, 40.5, 2}, c, model_id(c));
  const bool ood_pass = c.bounds.bt_max < 40.5 && ood.status == ResponseStatus::OutOfDomain && ood.quantiles.empty();

  PredictionService svc;
  svc.publish(b);
  const std::string body = R"({"current_hr": 120, "current_bt": 37.2, "age_months": 60})";
  const auto expect = svc.predict(body).body;
  std::vector<std::string> got(16 * 100);
  std::vector<std::thread> threads;
  for (int t = 0; t < 16; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 100; ++i) got[static_cast<std::size_t>(t * 100 + i)] = svc.predict(body).body;
    });
  }
  for (auto& th : threads) th.join();
  const auto same = static_cast<std::size_t>(std::count(got.begin(), got.end(), expect));
  return {ok_pass && invalid && ood_pass && same == got.size(),
          std::string("ok ") + (ok_pass ? "y" : "n") + ", invalid " + (invalid ? "y" : "n") + ", out-of-domain " +
              (ood_pass ? "y" : "n") + ", " + std::to_string(same) + "/" + std::to_string(got.size()) +
              " concurrent bodies identical"};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
    double max_seconds;  // <= 0: no runtime bound
  };
  const std::vector<Criterion> criteria = {
      {"pinball-exactness", pinball_exactness, 1.0},
      {"quantile-minimizer-oracle", quantile_minimizer, 5.0},
      {"gbm-monotone-training-loss", gbm_monotone, 30.0},
      {"linear-qr-residual-balance", qr_residual_balance, 20.0},
      {"ols-oracle", ols_oracle, 0.0},
      {"surrogate-table-iii-ordering", table_iii_ordering, 180.0},
      {"band-calibration", band_calibration, 0.0},
      {"oracle-quantile-recovery", oracle_recovery, 0.0},
      {"directional-claims", directional, 0.0},
      {"pipeline-golden", pipeline_golden, 0.0},
      {"end-to-end-determinism", end_to_end_determinism, 0.0},
      {"mlp-gradient-check", mlp_gradient, 0.0},
      {"model-persistence", persistence, 0.0},
      {"service-contract", service_contract, 0.0},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.max_seconds > 0 && secs >= c.max_seconds) {
      o.pass = false;
      o.detail += fmt("; over the %.0f s budget", c.max_seconds);
    }
    failures += !o.pass;
    std::printf("%s %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
