#include "vqr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <thread>

#include "vqr/error.hpp"
#include "vqr/io.hpp"
#include "vqr/metrics.hpp"
#include "vqr/rng.hpp"

namespace vqr {

namespace {

constexpr std::size_t kMinPairs = 50;

struct Data {
  std::vector<FeatureRow> rows;
  std::vector<double> y;
};

Data gather(std::span<const ObservationPair> pairs, std::span<const std::size_t> idx) {
  Data d;
  d.rows.reserve(idx.size());
  d.y.reserve(idx.size());
  for (auto i : idx) {
    d.rows.push_back({pairs[i].age_months, pairs[i].bt_celsius});
    d.y.push_back(pairs[i].hr_bpm);
  }
  return d;
}

// Mean pinball per level over rows whose (rearranged) level predictions are `preds[i]`.
std::map<double, double> per_level_loss(const std::vector<std::vector<double>>& preds, std::span<const double> y,
                                        std::span<const double> levels) {
  std::map<double, double> out;
  std::vector<double> col(y.size());
  for (std::size_t j = 0; j < levels.size(); ++j) {
    for (std::size_t i = 0; i < y.size(); ++i) col[i] = preds[i][j];
    out[levels[j]] = metrics::mean_pinball(y, col, levels[j]);
  }
  return out;
}

std::vector<std::vector<double>> predict_all(const QuantileModelBundle& b, const Data& d) {
  std::vector<std::vector<double>> preds;
  preds.reserve(d.rows.size());
  for (const auto& r : d.rows) {
    auto p = b.predict_levels(r);
    std::sort(p.begin(), p.end());
    preds.push_back(std::move(p));
  }
  return preds;
}

double tql(const QuantileModelBundle& b, const Data& d) {
  return metrics::total_quantile_loss(per_level_loss(predict_all(b, d), d.y, b.levels));
}

std::string describe(Family f, const Hyperparameters& h) {
  switch (f) {
    case Family::GBM:
      return "depth=" + std::to_string(h.gbm.max_depth) + " lr=" + io::exact(h.gbm.learning_rate) +
             " trees=" + std::to_string(h.gbm.n_trees);
    case Family::RF: return "depth=" + std::to_string(h.rf.max_depth);
    case Family::MLP: return "hidden=" + std::to_string(h.mlp.hidden);
    default: return "";
  }
}

// Grid search on a 75/25 sub-split of the training side.
Hyperparameters tune(Family family, const ExperimentConfig& config, std::span<const ObservationPair> pairs,
                     std::span<const std::size_t> train, std::uint64_t seed) {
  Hyperparameters best = config.hyper;
  if (family != Family::GBM && family != Family::RF && family != Family::MLP) return best;

  std::vector<ObservationPair> side;
  side.reserve(train.size());
  for (auto i : train) side.push_back(pairs[i]);
  const Split sub = split_pairs(side, 0.75, mix_seed(seed, 200), config.split_by_patient);
  const Data fit_data = gather(side, sub.train);
  const Data val_data = gather(side, sub.test);
  if (fit_data.y.empty() || val_data.y.empty()) return best;

  TrainOptions opt{config.levels, seed, config.hyper};
  double best_loss = INFINITY;
  auto consider = [&](const Hyperparameters& h, double loss) {
    if (loss < best_loss) {
      best_loss = loss;
      best = h;
    }
  };

  if (family == Family::GBM) {
    for (int depth : {2, 3, 4}) {
      for (double lr : {0.05, 0.1}) {
        Hyperparameters h = config.hyper;
        h.gbm.max_depth = depth;
        h.gbm.learning_rate = lr;
        h.gbm.n_trees = 200;
        opt.hyper = h;
        const auto b = train_bundle(family, fit_data.rows, fit_data.y, opt);
        const auto& models = std::get<GbmBody>(b.body).models;
        for (std::size_t stages : {std::size_t{100}, std::size_t{200}}) {
          std::vector<std::vector<double>> preds;
          for (const auto& r : val_data.rows) {
            const double x[2] = {r.age_months, r.bt_celsius};
            std::vector<double> p;
            for (const auto& m : models) p.push_back(m.predict_stages(std::span<const double>(x, 2), stages));
            std::sort(p.begin(), p.end());
            preds.push_back(std::move(p));
          }
          h.gbm.n_trees = stages;
          consider(h, metrics::total_quantile_loss(per_level_loss(preds, val_data.y, config.levels)));
        }
      }
    }
  } else if (family == Family::RF) {
    for (int depth : {6, 8}) {
      Hyperparameters h = config.hyper;
      h.rf.max_depth = depth;
      opt.hyper = h;
      consider(h, tql(train_bundle(family, fit_data.rows, fit_data.y, opt), val_data));
    }
  } else {
    for (std::size_t hidden : {std::size_t{16}, std::size_t{32}}) {
      Hyperparameters h = config.hyper;
      h.mlp.hidden = hidden;
      opt.hyper = h;
      consider(h, tql(train_bundle(family, fit_data.rows, fit_data.y, opt), val_data));
    }
  }
  return best;
}

FamilyRun run_one(Family family, const ExperimentConfig& config, std::span<const ObservationPair> pairs,
                  const Split& split, std::size_t experiment, std::uint64_t seed) {
  FamilyRun run;
  run.experiment = experiment;
  run.seed = seed;
  try {
    const Hyperparameters h = config.tune ? tune(family, config, pairs, split.train, seed) : config.hyper;
    const Data train = gather(pairs, split.train);
    const Data test = gather(pairs, split.test);
    const auto b = train_bundle(family, train.rows, train.y, TrainOptions{config.levels, seed, h});
    const auto preds = predict_all(b, test);
    run.per_level_pinball = per_level_loss(preds, test.y, b.levels);
    run.total_quantile_loss = metrics::total_quantile_loss(run.per_level_pinball);
    const auto [lo, hi] = band_level_indices(b.levels);
    std::size_t inside = 0;
    for (std::size_t i = 0; i < test.y.size(); ++i) {
      if (preds[i][lo] <= test.y[i] && test.y[i] <= preds[i][hi]) ++inside;
    }
    run.coverage = static_cast<double>(inside) / static_cast<double>(test.y.size());
    if (is_linear(family)) {
      std::vector<double> point;
      point.reserve(test.rows.size());
      for (const auto& r : test.rows) point.push_back(b.predict_point(r));
      run.mse = metrics::mse(test.y, point);
      try {
        run.r2 = metrics::r2(test.y, point);
      } catch (const DomainError&) {
        run.r2.reset();
      }
    }
    if (config.tune) run.tuned = describe(family, h);
  } catch (const Error& e) {
    run.error = e.what();
  }
  return run;
}

}  // namespace

Summary summarize(std::span<const double> values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

Split split_pairs(std::span<const ObservationPair> pairs, double train_fraction, std::uint64_t seed,
                  bool by_patient) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw DomainError("split fraction must lie in (0, 1)");
  Split s;
  const std::size_t n = pairs.size();
  const auto target = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  Rng rng(seed);
  if (!by_patient) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(idx));
    s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(target));
    s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(target), idx.end());
  } else {
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < n; ++i) groups[pairs[i].patient].push_back(i);
    std::vector<const std::vector<std::size_t>*> order;
    for (const auto& [id, members] : groups) order.push_back(&members);
    rng.shuffle(std::span<const std::vector<std::size_t>*>(order));
    for (const auto* members : order) {
      auto& side = s.train.size() < target ? s.train : s.test;
      side.insert(side.end(), members->begin(), members->end());
    }
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

ExperimentReport run_experiments(const ExperimentConfig& config, std::span<const ObservationPair> pairs) {
  if (config.n_experiments == 0) throw DomainError("n_experiments must be at least 1");
  if (config.families.empty()) throw DomainError("no model families requested");
  check_levels(config.levels);
  if (pairs.size() < kMinPairs) {
    throw DataError("need at least " + std::to_string(kMinPairs) + " pairs, got " + std::to_string(pairs.size()));
  }

  ExperimentReport report;
  report.config = config;
  report.n_pairs = pairs.size();
  for (std::size_t e = 0; e < config.n_experiments; ++e) report.seeds.push_back(config.base_seed + e);

  // results[e][f]
  std::vector<std::vector<FamilyRun>> results(config.n_experiments);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t e = next++; e < config.n_experiments; e = next++) {
      const std::uint64_t seed = report.seeds[e];
      const Split split = split_pairs(pairs, config.split, seed, config.split_by_patient);
      for (auto f : config.families) results[e].push_back(run_one(f, config, pairs, split, e, seed));
    }
  };
  const std::size_t jobs = std::clamp<std::size_t>(config.jobs, 1, config.n_experiments);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < jobs; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  for (std::size_t f = 0; f < config.families.size(); ++f) {
    FamilyReport fr;
    fr.family = config.families[f];
    std::vector<double> losses, r2s, mses;
    std::map<double, std::vector<double>> levels;
    for (std::size_t e = 0; e < config.n_experiments; ++e) {
      const auto& run = results[e][f];
      fr.runs.push_back(run);
      if (run.error) {
        ++fr.failures;
        continue;
      }
      losses.push_back(run.total_quantile_loss);
      for (const auto& [tau, v] : run.per_level_pinball) levels[tau].push_back(v);
      if (run.r2) r2s.push_back(*run.r2);
      if (run.mse) mses.push_back(*run.mse);
    }
    fr.total_quantile_loss = summarize(losses);
    for (const auto& [tau, v] : levels) fr.per_level_pinball[tau] = summarize(v);
    if (is_linear(fr.family)) {
      fr.r2 = summarize(r2s);
      fr.mse = summarize(mses);
    }
    report.families.push_back(std::move(fr));
  }
  return report;
}

namespace {

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string rpad(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

std::string cell(const Summary& s, int decimals) {
  if (s.count == 0) return "failed";
  return io::fixed(s.mean, decimals) + " +/- " + io::fixed(s.sd, decimals);
}

std::string level_list(std::span<const double> levels) {
  std::string s;
  for (std::size_t j = 0; j < levels.size(); ++j) s += (j ? "," : "") + io::exact(levels[j]);
  return s;
}

}  // namespace

std::string format_report(const ExperimentReport& report) {
  const auto& c = report.config;
  std::string out;
  out += "pairs: " + std::to_string(report.n_pairs) + "  experiments: " + std::to_string(c.n_experiments) +
         "  split: " + io::exact(c.split) + (c.split_by_patient ? " (by patient)" : "") +
         "  levels: " + level_list(c.levels) + "\n";
  out += "seeds:";
  for (auto s : report.seeds) out += ' ' + std::to_string(s);
  out += "\n\n";

  out += "Mean total quantile loss and SD\n";
  out += pad("model", 8) + rpad("total quantile loss", 22) + "  tuned\n";
  for (const auto& f : report.families) {
    std::string tuned;
    std::set<std::string> seen;
    for (const auto& r : f.runs) {
      if (r.error || r.tuned.empty() || !seen.insert(r.tuned).second) continue;
      tuned += (tuned.empty() ? "" : "; ") + r.tuned;
    }
    out += pad(std::string(to_string(f.family)), 8) + rpad(cell(f.total_quantile_loss, 4), 22) + "  " + tuned;
    if (f.failures) out += "  [" + std::to_string(f.failures) + " failed]";
    out += '\n';
  }

  bool any_linear = false;
  for (const auto& f : report.families) any_linear |= f.r2.has_value();
  if (any_linear) {
    out += "\nLinear models: R2 and MSE\n";
    out += pad("model", 8) + rpad("R2", 20) + rpad("MSE", 22) + '\n';
    for (const auto& f : report.families) {
      if (!f.r2) continue;
      out += pad(std::string(to_string(f.family)), 8) + rpad(cell(*f.r2, 4), 20) + rpad(cell(*f.mse, 3), 22) + '\n';
    }
  }

  out += "\nMean pinball loss per level\n";
  out += pad("model", 8);
  for (double tau : c.levels) out += rpad("q" + io::exact(tau), 10);
  out += '\n';
  for (const auto& f : report.families) {
    out += pad(std::string(to_string(f.family)), 8);
    for (double tau : c.levels) {
      const auto it = f.per_level_pinball.find(tau);
      out += rpad(it == f.per_level_pinball.end() ? "-" : io::fixed(it->second.mean, 4), 10);
    }
    out += '\n';
  }

  for (const auto& f : report.families) {
    for (const auto& r : f.runs) {
      if (r.error) {
        out += "\nerror: " + std::string(to_string(f.family)) + " experiment " + std::to_string(r.experiment + 1) +
               ": " + *r.error;
      }
    }
  }
  return out;
}

std::string format_report_csv(const ExperimentReport& report) {
  std::string out = "family,experiment,seed,status,total_quantile_loss,coverage,r2,mse";
  for (double tau : report.config.levels) out += ",pinball_" + io::exact(tau);
  out += ",tuned\n";
  for (const auto& f : report.families) {
    for (const auto& r : f.runs) {
      out += std::string(to_string(f.family)) + ',' + std::to_string(r.experiment + 1) + ',' + std::to_string(r.seed);
      if (r.error) {
        out += ",failed,,,,";
        for (std::size_t j = 0; j < report.config.levels.size(); ++j) out += ',';
        out += ",\n";
        continue;
      }
      out += ",ok," + io::exact(r.total_quantile_loss) + ',' + io::exact(r.coverage) + ',';
      if (r.r2) out += io::exact(*r.r2);
      out += ',';
      if (r.mse) out += io::exact(*r.mse);
      for (double tau : report.config.levels) out += ',' + io::exact(r.per_level_pinball.at(tau));
      out += ',' + r.tuned + '\n';
    }
  }
  return out;
}

std::vector<ScatterRow> export_quantile_scatter(const QuantileModelBundle& bundle,
                                                std::span<const ObservationPair> pairs, double level) {
  std::size_t j = bundle.levels.size();
  for (std::size_t k = 0; k < bundle.levels.size(); ++k) {
    if (bundle.levels[k] == level) j = k;
  }
  if (j == bundle.levels.size()) throw DomainError("level " + io::exact(level) + " is not in the model");
  std::vector<ScatterRow> rows;
  rows.reserve(pairs.size());
  for (const auto& p : pairs) {
    const auto preds = bundle.predict_levels({p.age_months, p.bt_celsius});
    rows.push_back({p.age_months, p.bt_celsius, p.hr_bpm, preds[j]});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const ScatterRow& a, const ScatterRow& b) {
    return a.age_months < b.age_months || (a.age_months == b.age_months && a.bt_celsius < b.bt_celsius);
  });
  return rows;
}

std::string format_scatter(std::span<const ScatterRow> rows) {
  std::string out = "age_months,bt_celsius,hr_true,hr_pred\n";
  for (const auto& r : rows) {
    out += io::fixed(r.age_months, 6) + ',' + io::fixed(r.bt_celsius, 1) + ',' + io::fixed(r.hr_true, 1) + ',' +
           io::fixed(r.hr_pred, 4) + '\n';
  }
  return out;
}

}  // namespace vqr
