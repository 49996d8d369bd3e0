// vitals-qr: synthetic cohorts, preprocessing, training, evaluation and the
// prediction service behind one command line.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vqr/bundle.hpp"
#include "vqr/error.hpp"
#include "vqr/harness.hpp"
#include "vqr/ingest.hpp"
#include "vqr/io.hpp"
#include "vqr/persist.hpp"
#include "vqr/preprocess.hpp"
#include "vqr/service.hpp"
#include "vqr/synth.hpp"

namespace {

struct Common {
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
  std::size_t jobs = 1;
};

struct ResolvedSeed {
  std::uint64_t value = 1;
  std::string source = "default";
};

ResolvedSeed resolve_seed(const Common& c) {
  if (c.seed) return {*c.seed, "--seed"};
  if (const char* env = std::getenv("VITALS_QR_SEED")) {
    const auto v = vqr::io::parse_int(env);
    if (!v || *v < 0) throw vqr::DomainError("VITALS_QR_SEED is not a non-negative integer");
    return {static_cast<std::uint64_t>(*v), "VITALS_QR_SEED"};
  }
  return {};
}

std::vector<double> parse_levels(const std::string& text) {
  std::vector<double> levels;
  for (auto f : vqr::io::split_fields(text)) {
    const auto v = vqr::io::parse_double(f);
    if (!v) throw vqr::DomainError("bad quantile level '" + std::string(f) + "'");
    levels.push_back(*v);
  }
  vqr::check_levels(levels);
  return levels;
}

std::vector<vqr::Family> parse_families(const std::string& text) {
  std::vector<vqr::Family> out;
  for (auto f : vqr::io::split_fields(text)) out.push_back(vqr::parse_family(f));
  if (out.empty()) throw vqr::DomainError("no model families given");
  return out;
}

void print_config(const std::string& command, const ResolvedSeed& seed,
                  const std::vector<std::pair<std::string, std::string>>& items) {
  std::printf("# %s\n", command.c_str());
  std::printf("#   seed: %llu (%s)\n", static_cast<unsigned long long>(seed.value), seed.source.c_str());
  for (const auto& [k, v] : items) std::printf("#   %s: %s\n", k.c_str(), v.c_str());
}

class Timer {
 public:
  explicit Timer(bool quiet) : quiet_(quiet), start_(std::chrono::steady_clock::now()) {}
  void report() const {
    if (quiet_) return;
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    std::printf("# elapsed: %.2f s\n", s);
  }

 private:
  bool quiet_;
  std::chrono::steady_clock::time_point start_;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Random seed (falls back to VITALS_QR_SEED, then 1)");
  cmd->add_flag("--deterministic-output", c.deterministic, "Suppress timing lines");
  cmd->add_option("--jobs", c.jobs, "Maximum concurrent experiments")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heart-rate quantile models from age and body temperature"};
  app.require_subcommand(1, 1);

  Common common;

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic cohort");
  std::size_t synth_n = 4462;
  double synth_slope = 10.0;
  double synth_noise = 12.0;
  bool synth_homo = false;
  bool synth_raw = false;
  std::string synth_out;
  synth->add_option("--n", synth_n, "Pairs to generate (raw mode: BT readings)")->check(CLI::PositiveNumber);
  synth->add_option("--slope", synth_slope, "bpm per degree C");
  synth->add_option("--noise-sd", synth_noise, "Noise SD in bpm");
  synth->add_flag("--homoscedastic", synth_homo, "Constant noise SD across ages");
  synth->add_flag("--raw", synth_raw, "Write a raw cohort directory instead of pairs");
  synth->add_option("--out", synth_out, "Pairs file, or cohort directory with --raw")->required();
  add_common(synth, common);

  // preprocess
  auto* prep = app.add_subcommand("preprocess", "Run the pairing pipeline over a cohort directory");
  std::string prep_in, prep_out, prep_audit;
  prep->add_option("--in", prep_in, "Cohort directory")->required();
  prep->add_option("--out", prep_out, "Pairs file to write")->required();
  prep->add_option("--audit", prep_audit, "Also write the audit table here");
  add_common(prep, common);

  // train
  auto* train = app.add_subcommand("train", "Fit one model family and save it");
  std::string train_family = "gbm", train_levels = "0.05,0.25,0.5,0.75,0.95", train_in, train_out;
  train->add_option("--family", train_family, "lr|mlr|pr1|svr|stat|ols|qr|gbm|rf|mlp");
  train->add_option("--levels", train_levels, "Comma-separated quantile levels");
  train->add_option("--in", train_in, "Pairs file")->required();
  train->add_option("--out", train_out, "Model file to write")->required();
  add_common(train, common);

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Seeded multi-experiment comparison");
  std::string eval_families = "ols,qr,gbm", eval_levels = "0.05,0.25,0.5,0.75,0.95", eval_in, eval_csv;
  std::size_t eval_experiments = 5;
  double eval_split = 0.8;
  bool eval_by_patient = false;
  bool eval_no_tune = false;
  eval->add_option("--families", eval_families, "Comma-separated family tags");
  eval->add_option("--levels", eval_levels, "Comma-separated quantile levels");
  eval->add_option("--experiments", eval_experiments, "Number of experiments")->check(CLI::PositiveNumber);
  eval->add_option("--split", eval_split, "Training fraction");
  eval->add_flag("--by-patient", eval_by_patient, "Split by patient instead of by pair");
  eval->add_flag("--no-tune", eval_no_tune, "Skip the hyperparameter grid");
  eval->add_option("--in", eval_in, "Pairs file")->required();
  eval->add_option("--csv", eval_csv, "Write per-experiment rows here");
  add_common(eval, common);

  // export-scatter
  auto* scatter = app.add_subcommand("export-scatter", "Per-pair predictions at one level");
  std::string scatter_model, scatter_in, scatter_out;
  double scatter_level = 0.5;
  scatter->add_option("--model", scatter_model, "Model file")->required();
  scatter->add_option("--in", scatter_in, "Pairs file")->required();
  scatter->add_option("--level", scatter_level, "Quantile level");
  scatter->add_option("--out", scatter_out, "CSV to write (stdout when omitted)");
  add_common(scatter, common);

  // predict
  auto* predict = app.add_subcommand("predict", "Percentile band for one patient");
  std::string predict_model;
  double predict_hr = 0.0, predict_bt = 0.0, predict_age = 0.0;
  predict->add_option("--model", predict_model, "Model file")->required();
  predict->add_option("--hr", predict_hr, "Current heart rate (bpm)")->required();
  predict->add_option("--bt", predict_bt, "Current body temperature (C)")->required();
  predict->add_option("--age-months", predict_age, "Age in months")->required();
  add_common(predict, common);

  // serve
  auto* serve = app.add_subcommand("serve", "HTTP prediction service");
  std::string serve_model, serve_bind = "127.0.0.1:8080";
  serve->add_option("--model", serve_model, "Model file")->required();
  serve->add_option("--bind", serve_bind, "addr:port");
  add_common(serve, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 1;
  }

  try {
    const auto seed = resolve_seed(common);
    const Timer timer(common.deterministic);

    if (*synth) {
      print_config("synth", seed,
                   {{"n", std::to_string(synth_n)},
                    {"slope", vqr::io::exact(synth_slope)},
                    {"noise_sd", vqr::io::exact(synth_noise)},
                    {"heteroscedastic", synth_homo ? "false" : "true"},
                    {"raw", synth_raw ? "true" : "false"},
                    {"out", synth_out}});
      vqr::SynthConfig cfg;
      cfg.n_pairs = synth_n;
      cfg.seed = seed.value;
      cfg.bt_slope_bpm_per_c = synth_slope;
      cfg.noise_sd_bpm = synth_noise;
      cfg.heteroscedastic = !synth_homo;
      cfg.raw_mode = synth_raw;
      const auto cohort = vqr::generate(cfg);
      if (synth_raw) {
        vqr::io::write_cohort(synth_out, cohort.records);
        std::printf("wrote %zu patients to %s\n", cohort.records.size(), synth_out.c_str());
      } else {
        vqr::io::write_pairs(synth_out, cohort.pairs);
        std::printf("wrote %zu pairs to %s\n", cohort.pairs.size(), synth_out.c_str());
      }
    } else if (*prep) {
      print_config("preprocess", seed, {{"in", prep_in}, {"out", prep_out}});
      const auto cohort = vqr::load_cohort(vqr::CohortFiles::in_directory(prep_in));
      const auto& r = cohort.report;
      std::printf("patients read: %zu (excluded %zu)\n", r.patients_read, r.patients_excluded);
      std::printf("rows: %zu total, %zu loaded, %zu excluded, %zu rejected\n", r.rows_total, r.rows_loaded,
                  r.rows_excluded, r.rows_rejected);
      for (const auto& rej : r.rejections) {
        std::fprintf(stderr, "rejected %s:%zu: %s\n", rej.file.c_str(), rej.line, rej.reason.c_str());
      }
      const auto result = vqr::run_pipeline(cohort.records);
      vqr::io::write_pairs(prep_out, result.pairs);
      const auto audit = vqr::format_audit(result.audit);
      std::printf("%s", audit.c_str());
      if (!prep_audit.empty()) vqr::io::write_file(prep_audit, audit);
      std::printf("wrote %zu pairs to %s\n", result.pairs.size(), prep_out.c_str());
    } else if (*train) {
      const auto family = vqr::parse_family(train_family);
      const auto levels = parse_levels(train_levels);
      print_config("train", seed, {{"family", train_family}, {"levels", train_levels}, {"in", train_in}, {"out", train_out}});
      const auto pairs = vqr::io::read_pairs(train_in);
      vqr::TrainOptions opt;
      opt.levels = levels;
      opt.seed = seed.value;
      const auto bundle = vqr::train_bundle(family, pairs, opt);
      vqr::save_model(bundle, train_out);
      std::printf("trained %s on %zu pairs; model id %s\n", train_family.c_str(), pairs.size(),
                  vqr::model_id(bundle).c_str());
    } else if (*eval) {
      vqr::ExperimentConfig cfg;
      cfg.families = parse_families(eval_families);
      cfg.levels = parse_levels(eval_levels);
      cfg.n_experiments = eval_experiments;
      cfg.base_seed = seed.value;
      cfg.split = eval_split;
      cfg.split_by_patient = eval_by_patient;
      cfg.tune = !eval_no_tune;
      cfg.jobs = common.jobs;
      print_config("evaluate", seed,
                   {{"families", eval_families},
                    {"levels", eval_levels},
                    {"experiments", std::to_string(eval_experiments)},
                    {"split", vqr::io::exact(eval_split)},
                    {"split_unit", eval_by_patient ? "patient" : "pair"},
                    {"tune", eval_no_tune ? "false" : "true"},
                    {"in", eval_in}});
      const auto pairs = vqr::io::read_pairs(eval_in);
      const auto report = vqr::run_experiments(cfg, pairs);
      std::printf("%s\n", vqr::format_report(report).c_str());
      if (!eval_csv.empty()) vqr::io::write_file(eval_csv, vqr::format_report_csv(report));
    } else if (*scatter) {
      print_config("export-scatter", seed,
                   {{"model", scatter_model}, {"in", scatter_in}, {"level", vqr::io::exact(scatter_level)}});
      const auto bundle = vqr::load_model(scatter_model);
      const auto pairs = vqr::io::read_pairs(scatter_in);
      const auto text = vqr::format_scatter(vqr::export_quantile_scatter(bundle, pairs, scatter_level));
      if (scatter_out.empty()) {
        std::printf("%s", text.c_str());
      } else {
        vqr::io::write_file(scatter_out, text);
        std::printf("wrote %zu rows to %s\n", pairs.size(), scatter_out.c_str());
      }
    } else if (*predict) {
      print_config("predict", seed,
                   {{"model", predict_model},
                    {"hr", vqr::io::exact(predict_hr)},
                    {"bt", vqr::io::exact(predict_bt)},
                    {"age_months", vqr::io::exact(predict_age)}});
      const auto bundle = vqr::load_model(predict_model);
      const auto resp = vqr::handle_predict({predict_hr, predict_bt, predict_age}, bundle, vqr::model_id(bundle));
      switch (resp.status) {
        case vqr::ResponseStatus::InvalidInput:
          std::fprintf(stderr, "invalid input: %s\n", resp.message.c_str());
          return 2;
        case vqr::ResponseStatus::OutOfDomain:
          std::printf("OUT-OF-DOMAIN: inputs fall outside the training ranges; no prediction\n");
          break;
        case vqr::ResponseStatus::Ok:
          for (const auto& [level, bpm] : resp.quantiles) {
            std::printf("q%-5s %7.1f bpm\n", vqr::io::exact(level).c_str(), bpm);
          }
          std::printf("%s\n", resp.in_range.value_or(false) ? "IN-RANGE" : "OUT-OF-RANGE");
          break;
      }
    } else if (*serve) {
      const auto [host, port] = vqr::parse_bind(serve_bind);
      print_config("serve", seed, {{"model", serve_model}, {"bind", serve_bind}});
      std::fflush(stdout);
      vqr::serve({serve_model, host, port});
    }
    timer.report();
  } catch (const vqr::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
