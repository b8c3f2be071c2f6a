#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "bmid/experiment.hpp"
#include "bmid/verify.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  unsigned threads = 0;
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool needs_config) {
  auto* cfg = cmd->add_option("--config", opts.config_path, "experiment config (JSON)");
  if (needs_config) cfg->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", opts.seed, "override the config seed")->each([&](const std::string&) {
    opts.seed_set = true;
  });
  cmd->add_option("--threads", opts.threads,
                  "worker threads (default: BMID_THREADS env var, then hardware)");
  cmd->add_option("--out", opts.out_dir, "output directory (default: config out_dir)");
}

bmid::ExperimentConfig load_with_overrides(const CommonOpts& opts) {
  auto cfg = bmid::load_config_file(opts.config_path);
  if (opts.seed_set) cfg.seed = opts.seed;
  return cfg;
}

bmid::ExperimentEnv env_from(const CommonOpts& opts) {
  bmid::ExperimentEnv env;
  env.threads = opts.threads;
  if (!opts.out_dir.empty()) env.out_dir = opts.out_dir;
  return env;
}

void print_record_summary(const bmid::RunReport& report) {
  for (const auto& line : report.record.lines) {
    std::string msg = "  ";
    if (line.contains("level")) msg += "level " + std::to_string(line.at("level").get<int>());
    if (line.contains("functional"))
      msg += " " + line.at("functional").get<std::string>();
    if (line.contains("check")) msg += line.at("check").get<std::string>();
    if (line.contains("ks")) msg += "  ks=" + std::to_string(line.at("ks").get<double>());
    if (line.contains("p_value"))
      msg += " p=" + std::to_string(line.at("p_value").get<double>());
    if (line.contains("mean")) msg += "  mean=" + std::to_string(line.at("mean").get<double>());
    std::printf("%s\n", msg.c_str());
  }
  double seconds = 0.0;
  for (const auto& t : report.timings) seconds += t.seconds;
  std::printf("  (%.1f s)\n", seconds);
}

int run_simulate(const CommonOpts& opts) {
  const auto cfg = load_with_overrides(opts);
  const auto env = env_from(opts);
  const auto report = bmid::run_experiment(cfg, env);
  const auto out_dir = env.out_dir.empty() ? std::filesystem::path(cfg.out_dir) : env.out_dir;
  const auto files = bmid::emit_plot_data(report.record, out_dir / "plots");
  std::printf("%s: %zu record lines -> %s\n", bmid::to_string(cfg.kind),
              report.record.lines.size(), (out_dir / "records.jsonl").c_str());
  print_record_summary(report);
  std::printf("  %zu plot files under %s\n", files.size(), (out_dir / "plots").c_str());
  return 0;
}

int run_converge(const CommonOpts& opts) {
  const auto cfg = load_with_overrides(opts);
  if (cfg.kind != bmid::ExperimentKind::bmid_convergence &&
      cfg.kind != bmid::ExperimentKind::reflected_limit) {
    std::fprintf(stderr, "converge needs a level-sweep experiment "
                         "(bmid-convergence or reflected-limit)\n");
    return 2;
  }
  const auto env = env_from(opts);
  const auto report = bmid::run_experiment(cfg, env);
  const auto out_dir = env.out_dir.empty() ? std::filesystem::path(cfg.out_dir) : env.out_dir;
  bmid::emit_plot_data(report.record, out_dir / "plots");

  // Monotone-trend report on the KS statistics, one row per functional.
  for (const auto& f : cfg.functionals) {
    std::string row = f + ": ks by level";
    double prev = -1.0;
    bool monotone = true;
    bool any = false;
    for (const auto& line : report.record.lines) {
      if (!line.contains("functional") || line.at("functional") != f || !line.contains("ks"))
        continue;
      const double ks = line.at("ks").get<double>();
      row += bmid::detail::fmt(" %.4f", ks);
      if (any && ks >= prev) monotone = false;
      prev = ks;
      any = true;
    }
    if (!any) continue;
    row += monotone ? "  -> monotone decrease" : "  -> NOT monotone";
    std::printf("%s\n", row.c_str());
  }
  return 0;
}

int run_verify(std::uint64_t seed, unsigned threads, const std::string& out_dir, double scale) {
  bmid::VerifyOptions opt;
  opt.seed = seed;
  opt.threads = threads;
  opt.scale = scale;
  if (!out_dir.empty()) opt.out_dir = out_dir;
  const auto results = bmid::run_acceptance(opt);
  const int failures = bmid::print_acceptance(results, stdout);
  return failures == 0 ? 0 : 1;
}

int run_plotdata(const std::string& records_path, const std::string& out_dir) {
  const auto record = bmid::load_record_file(records_path);
  const auto files = bmid::emit_plot_data(record, out_dir);
  for (const auto& f : files) std::printf("%s\n", f.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lattice jump processes with history-dependent intensity and their "
               "Brownian-with-inert-drift limit"};
  app.require_subcommand(1);

  CommonOpts sim_opts, conv_opts;
  auto* simulate = app.add_subcommand("simulate", "run one configured experiment");
  add_common(simulate, sim_opts, true);
  auto* converge = app.add_subcommand("converge", "sweep lattice levels and report KS trends");
  add_common(converge, conv_opts, true);

  std::uint64_t verify_seed = 42;
  unsigned verify_threads = 0;
  std::string verify_out = "verify-out";
  double verify_scale = 1.0;
  auto* verify = app.add_subcommand("verify", "run the acceptance suite");
  verify->add_option("--seed", verify_seed, "master seed (default 42)");
  verify->add_option("--threads", verify_threads, "worker threads");
  verify->add_option("--out", verify_out, "output directory");
  verify->add_option("--scale", verify_scale, "replica-count scale factor for quick runs")
      ->check(CLI::PositiveNumber);

  std::string records_path, plot_out = "plots";
  auto* plotdata = app.add_subcommand("plotdata", "re-emit CSV plot data from stored records");
  plotdata->add_option("--records", records_path, "records.jsonl produced by simulate/converge")
      ->required()
      ->check(CLI::ExistingFile);
  plotdata->add_option("--out", plot_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return run_simulate(sim_opts);
    if (converge->parsed()) return run_converge(conv_opts);
    if (verify->parsed()) return run_verify(verify_seed, verify_threads, verify_out, verify_scale);
    if (plotdata->parsed()) return run_plotdata(records_path, plot_out);
  } catch (const bmid::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
