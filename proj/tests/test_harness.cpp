#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <string>

#include "bmid/ensemble.hpp"
#include "bmid/experiment.hpp"

using namespace bmid;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const auto dir = fs::temp_directory_path() / ("bmid-test-" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

ExperimentConfig tiny_convergence_config(std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::bmid_convergence;
  cfg.params = {1.0, 0.5, 1.0};
  cfg.levels = {2, 3};
  cfg.grid_steps = 512;
  cfg.replicas = 300;
  cfg.seed = seed;
  cfg.functionals = {"X(T)", "V(T)"};
  cfg.permutation_resamples = 49;
  return cfg;
}

}  // namespace

TEST_CASE("functional parsing") {
  const auto xt = parse_functional("X(T)");
  REQUIRE(xt.process == 'X');
  REQUIRE(xt.fraction == 1.0);
  const auto xh = parse_functional("X(T/2)");
  REQUIRE(xh.fraction == 0.5);
  const auto mq = parse_functional("M(T/4)");
  REQUIRE(mq.process == 'M');
  REQUIRE(mq.fraction == 0.25);
  REQUIRE_THROWS_AS(parse_functional("Q(T)"), ConfigError);
  REQUIRE_THROWS_AS(parse_functional("X(2T)"), ConfigError);
  REQUIRE_THROWS_AS(parse_functional("X"), ConfigError);
}

TEST_CASE("config parsing reports the offending field") {
  nlohmann::json j;
  j["params"] = {{"coupling", 1.0}};
  try {
    config_from_json(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    REQUIRE(e.field() == "kind");
  }

  j["kind"] = "bmid-convergence";
  j["levels"] = {3};
  j["params"] = {{"coupling", -1.0}};
  try {
    config_from_json(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    REQUIRE(e.field() == "params.coupling");
    REQUIRE(std::string(e.what()).find("params.coupling") != std::string::npos);
  }

  j["params"] = {{"coupling", 0.0}};
  j["kind"] = "reflected-limit";
  j["functionals"] = {"M(T)"};
  try {
    config_from_json(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    REQUIRE(e.field() == "functionals");
  }
}

TEST_CASE("config fingerprint tracks content") {
  auto cfg = tiny_convergence_config(1);
  const auto fp = config_fingerprint(cfg);
  REQUIRE(fp.size() == 16);
  REQUIRE(config_fingerprint(cfg) == fp);
  auto other = cfg;
  other.seed = 2;
  REQUIRE(config_fingerprint(other) != fp);
}

TEST_CASE("ensemble results do not depend on the worker count") {
  const auto kernel = [](std::uint64_t r, RngStream& rng, std::span<double> out) {
    double acc = 0.0;
    for (int i = 0; i < 100; ++i) acc += rng.normal();
    out[0] = acc + static_cast<double>(r);
  };
  EnsembleSpec spec;
  spec.columns = {"value"};
  spec.replicas = 64;
  spec.seed = 9;
  spec.stream_base = 1 << 20;

  spec.threads = 1;
  const auto serial = run_ensemble(kernel, spec);
  spec.threads = 4;
  const auto parallel = run_ensemble(kernel, spec);
  REQUIRE(serial.rows == parallel.rows);
  REQUIRE(serial.complete());
  REQUIRE_THROWS_AS(serial.column("missing"), std::invalid_argument);
}

TEST_CASE("crash-resume completes the ensemble with identical results") {
  const auto dir = temp_dir("resume");
  const auto kernel = [](std::uint64_t, RngStream& rng, std::span<double> out) {
    out[0] = rng.normal();
    out[1] = rng.uniform();
  };
  EnsembleSpec spec;
  spec.columns = {"a", "b"};
  spec.replicas = 50;
  spec.seed = 11;
  spec.threads = 2;

  // Uninterrupted reference run (no persistence).
  const auto reference = run_ensemble(kernel, spec);

  // Interrupted run: stop after 20 completions, then resume.
  spec.partial_path = dir / "partial.jsonl";
  spec.cancel_after = 20;
  const auto partial = run_ensemble(kernel, spec);
  REQUIRE_FALSE(partial.complete());
  REQUIRE(partial.computed >= 20);

  spec.cancel_after = 0;
  const auto resumed = run_ensemble(kernel, spec);
  REQUIRE(resumed.complete());
  REQUIRE(resumed.computed < spec.replicas);  // some replicas came from disk
  REQUIRE(resumed.rows == reference.rows);

  // The partial file is ordered by replica index regardless of scheduling.
  std::size_t expect = 0;
  std::ifstream in(spec.partial_path);
  std::string line;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    REQUIRE(j.at("r").get<std::size_t>() == expect);
    ++expect;
  }
  REQUIRE(expect == spec.replicas);
}

TEST_CASE("experiment records are byte-identical across reruns and thread counts") {
  const auto cfg = tiny_convergence_config(21);
  ExperimentEnv env;
  env.write_outputs = false;
  env.persist_partials = false;

  env.threads = 1;
  const auto a = run_experiment(cfg, env).record.to_jsonl();
  const auto b = run_experiment(cfg, env).record.to_jsonl();
  env.threads = 3;
  const auto c = run_experiment(cfg, env).record.to_jsonl();
  REQUIRE(a == b);
  REQUIRE(a == c);
  REQUIRE(a.find("\"ks\"") != std::string::npos);
}

TEST_CASE("experiment outputs land on disk and reload") {
  const auto dir = temp_dir("outputs");
  auto cfg = tiny_convergence_config(23);
  ExperimentEnv env;
  env.threads = 2;
  env.out_dir = dir;
  const auto report = run_experiment(cfg, env);

  REQUIRE(fs::exists(dir / "records.jsonl"));
  REQUIRE(fs::exists(dir / "timings.csv"));
  const auto reloaded = load_record_file(dir / "records.jsonl");
  REQUIRE(reloaded.to_jsonl() == report.record.to_jsonl());

  // Partial files exist per arm and resume cleanly: a second run must
  // reproduce the same record from the persisted replicas.
  REQUIRE(fs::exists(dir / "partial"));
  const auto again = run_experiment(cfg, env);
  REQUIRE(again.record.to_jsonl() == report.record.to_jsonl());
}

TEST_CASE("single-replica ensembles are flagged, not tested") {
  auto cfg = tiny_convergence_config(25);
  cfg.replicas = 1;
  ExperimentEnv env;
  env.write_outputs = false;
  env.persist_partials = false;
  const auto report = run_experiment(cfg, env);
  for (const auto& line : report.record.lines) {
    REQUIRE(line.value("degenerate", false));
    REQUIRE_FALSE(line.contains("ks"));
  }
}

TEST_CASE("reflected-limit experiment produces analytic-reference KS lines") {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::reflected_limit;
  cfg.params = {0.0, 0.0, 1.0};
  cfg.levels = {2, 4};
  cfg.replicas = 2000;
  cfg.seed = 31;
  cfg.functionals = {"X(T)", "L(T)"};
  ExperimentEnv env;
  env.write_outputs = false;
  env.persist_partials = false;
  const auto report = run_experiment(cfg, env);
  REQUIRE(report.record.lines.size() == 4);
  int ks_lines = 0;
  for (const auto& line : report.record.lines) {
    if (line.contains("ks")) {
      ++ks_lines;
      REQUIRE(line.at("functional") == "X(T)");
      REQUIRE(line.at("reference") == "half-normal");
    }
  }
  REQUIRE(ks_lines == 2);
}

TEST_CASE("coupling-check experiment reports violation counters") {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::coupling_check;
  cfg.params = {1.0, 1.0, 1.0};
  cfg.levels = {3};
  cfg.grid_steps = 256;
  cfg.replicas = 100;
  cfg.seed = 33;
  cfg.permutation_resamples = 19;
  ExperimentEnv env;
  env.write_outputs = false;
  env.persist_partials = false;
  const auto report = run_experiment(cfg, env);
  const auto& line = report.record.lines.front();
  REQUIRE(line.at("z_order_violations").get<double>() == 0.0);
  REQUIRE(line.at("sandwich_violations").get<double>() == 0.0);
  REQUIRE(line.at("occupation_violations").get<double>() == 0.0);
  REQUIRE(line.contains("lprime_ks"));
}

TEST_CASE("lemma-suite experiment emits one line per check") {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::lemma_suite;
  cfg.params = {1.0, 0.0, 1.0};
  cfg.levels = {3};
  cfg.replicas = 2000;
  cfg.seed = 35;
  ExperimentEnv env;
  env.write_outputs = false;
  env.persist_partials = false;
  const auto report = run_experiment(cfg, env);
  std::vector<std::string> checks;
  for (const auto& line : report.record.lines) checks.push_back(line.at("check"));
  REQUIRE(std::count(checks.begin(), checks.end(), "geometric-exponential-sum") == 2);
  REQUIRE(std::count(checks.begin(), checks.end(), "poisson-functional-lln") == 1);
  REQUIRE(std::count(checks.begin(), checks.end(), "clock-inversion") == 1);
  REQUIRE(std::count(checks.begin(), checks.end(), "running-min-moment") == 1);
}

TEST_CASE("plot data emission") {
  const auto dir = temp_dir("plots");

  // Empty functional list: header-only convergence table.
  auto cfg = tiny_convergence_config(41);
  cfg.functionals = {};
  ExperimentEnv env;
  env.write_outputs = false;
  env.persist_partials = false;
  const auto empty_report = run_experiment(cfg, env);
  emit_plot_data(empty_report.record, dir / "empty");
  const auto combined = slurp(dir / "empty" / "convergence.csv");
  REQUIRE(combined == "functional,level,ks,p_value,w1\n");

  // Three levels: three rows per functional, LF endings, and the overlay
  // curves from the recorded seed.
  auto cfg3 = tiny_convergence_config(43);
  cfg3.levels = {2, 3, 4};
  cfg3.functionals = {"X(T)"};
  const auto report = run_experiment(cfg3, env);
  const auto files = emit_plot_data(report.record, dir / "full");
  const auto table = slurp(dir / "full" / "convergence_X_T.csv");
  REQUIRE(std::count(table.begin(), table.end(), '\n') == 4);  // header + 3 rows
  REQUIRE(table.find('\r') == std::string::npos);

  REQUIRE(fs::exists(dir / "full" / "path_reflected.csv"));
  REQUIRE(fs::exists(dir / "full" / "path_bmid.csv"));
  const auto reflected = slurp(dir / "full" / "path_reflected.csv");
  REQUIRE(reflected.rfind("t,value\n", 0) == 0);

  // 17-significant-digit floats round-trip.
  REQUIRE(csv_double(0.1) == "0.10000000000000001");
}
