// qpv: command line front end for the experiment runner.
//
//   qpv run --scenario s.json --experiment pv-attack --trials 10000 --seed 7 --out r.csv
//
// Exit status: 0 ok, 1 an embedded assertion failed, 2 configuration or I/O error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qpv/error.hpp"
#include "qpv/experiment.hpp"
#include "qpv/spacetime.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kAssertionFailed = 1;
constexpr int kConfig = 2;

std::uint64_t seed_from_env() {
  const char* env = std::getenv("QPV_SEED");
  if (!env || !*env) return 0;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(env, &used, 0);
    if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw qpv::ConfigError("QPV_SEED", std::string("not an unsigned 64-bit integer: '") + env + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum position verification experiments"};
  app.set_version_flag("--version", qpv::version_string());
  app.require_subcommand(1);

  std::string scenario_path, experiment, out = "-", format = "csv", transcript;
  std::size_t trials = 1000, workers = 1;
  std::uint64_t seed = 0;
  bool timing = false;

  auto* run = app.add_subcommand("run", "run one experiment over a scenario file");
  run->add_option("--scenario", scenario_path, "scenario JSON file")->required();
  run->add_option("--experiment", experiment, "experiment id")->required()->check(CLI::IsMember(qpv::experiment_ids()));
  run->add_option("--trials", trials, "Monte Carlo trials")->check(CLI::PositiveNumber);
  auto* seed_opt = run->add_option("--seed", seed, "64-bit seed (falls back to $QPV_SEED, then 0)");
  run->add_option("--out", out, "report path, - for stdout");
  run->add_option("--format", format, "report format")->check(CLI::IsMember({"csv", "json"}));
  run->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  run->add_flag("--timing", timing, "add wall time to the report");
  run->add_option("--transcript", transcript, "write trial 0's deliveries as JSON lines (pv experiments)");

  app.add_subcommand("experiments", "list experiment ids")->callback([] {
    for (const auto& id : qpv::experiment_ids()) std::cout << id << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }
  if (!run->parsed()) return kOk;

  try {
    if (!*seed_opt) seed = seed_from_env();
    const qpv::Scenario s = qpv::load_scenario(scenario_path);
    qpv::ExperimentConfig cfg{experiment, trials, seed, workers, timing};
    const auto rows = qpv::run_experiment(cfg, s);
    qpv::write_report_file(rows, format, out);
    if (!transcript.empty()) {
      std::ofstream t(transcript);
      if (!t) throw std::runtime_error("cannot write transcript to " + transcript);
      qpv::write_transcript_jsonl(t, qpv::trial_transcript(cfg, s));
    }
    for (const auto& r : rows) {
      if (r.assertion == "fail") {
        std::cerr << "qpv: assertion failed for " << r.experiment << ": frequency " << r.frequency << " outside ["
                  << (s.expect_min ? std::to_string(*s.expect_min) : "-inf") << ", "
                  << (s.expect_max ? std::to_string(*s.expect_max) : "inf") << "]\n";
        return kAssertionFailed;
      }
    }
    return kOk;
  } catch (const qpv::ConfigError& e) {
    std::cerr << "qpv: invalid configuration: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "qpv: " << e.what() << "\n";
    return kConfig;
  }
}
