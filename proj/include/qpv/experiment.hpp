#pragma once

// Scenario files, the experiment runner behind the qpv command line tool and
// report output.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qpv/auth.hpp"
#include "qpv/protocols.hpp"

namespace qpv {

inline constexpr int kScenarioSchema = 1;

struct Scenario {
  int schema = kScenarioSchema;
  std::string name;
  Layout layout = line_layout();
  TimingConfig timing{1.0, 0.1, 0.0};
  AdversaryModel model = AdversaryModel::NoPE;
  std::string attack = "breidbart";  // pv-attack, pv-sequential, pv-ddim
  std::size_t rounds = 10;           // pv-sequential
  std::size_t rounds_cap = 64;       // inqc, inqc-nparty, generic-attack
  std::size_t n_qubits = 1;          // inqc: size of the teleported register
  std::size_t parties = 3;           // inqc-nparty
  std::string scheme = "bb84";       // generic-attack: bb84 | toy | random_family
  std::size_t split_e0 = 1, split_e1 = 1;  // cit-audit

  // auth
  AuthParams auth{0.01, 8};
  std::size_t ell = 0;  // 0: 4 lambda
  std::size_t mu = 1;
  std::string auth_mode = "honest";  // honest | desync

  // domination: either a balanced repetition code or an explicit pair
  std::size_t dom_ell = 4, dom_mu = 1, dom_lambda = 0;  // 0: ceil(ell / 4)
  std::optional<std::pair<Codeword, Codeword>> dom_pair;
  std::uint64_t dom_budget = 50'000'000;

  // keyex
  KeyExchangeParams keyex;
  bool tamper = false;

  std::optional<double> expect_min, expect_max;  // embedded assertions on the frequency
  std::string source;                            // compact JSON as loaded

  std::size_t auth_ell() const { return ell ? ell : 4 * auth.lambda; }
};

// Throws ConfigError naming the offending field.
Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::string& path);

inline const std::vector<std::string>& experiment_ids() {
  static const std::vector<std::string> ids = {"pv-honest",  "pv-attack",      "pv-sequential", "pv-ddim",
                                               "inqc",       "inqc-nparty",    "generic-attack", "cit-audit",
                                               "auth",       "domination",     "keyex"};
  return ids;
}

struct ExperimentConfig {
  std::string experiment;
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  bool timing = false;  // include wall time (makes reports run-dependent)
};

struct ResultRow {
  std::string experiment;
  std::string params;  // scenario echo
  std::uint64_t seed = 0;
  std::string version;
  std::size_t trials = 0;
  std::size_t successes = 0;
  double frequency = 0.0;
  double stderr_ = 0.0;
  std::optional<double> wall_time;
  std::string assertion = "none";  // none | pass | fail
  std::vector<std::pair<std::string, double>> extra;
  std::string detail;
};

// Checks every scenario constraint the experiment depends on before any
// trial runs. Throws ConfigError.
void validate_for(const Scenario& s, const std::string& experiment);

// Trials are independent: trial i draws from Rng::derive(seed, i), so the
// result does not depend on the worker count.
std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg, const Scenario& s);

// Replays trial 0 of a pv-honest / pv-attack / pv-ddim experiment and
// returns its delivery transcript. Throws ConfigError for other ids.
std::vector<TranscriptEntry> trial_transcript(const ExperimentConfig& cfg, const Scenario& s);

std::string version_string();

// CSV header: experiment,params,seed,version,trials,successes,frequency,stderr,assertion,extra,detail[,wall_time_s]
void write_report(const std::vector<ResultRow>& rows, const std::string& format, std::ostream& os);
void write_report_file(const std::vector<ResultRow>& rows, const std::string& format, const std::string& path);
std::vector<ResultRow> read_report_json(const std::string& text);

}  // namespace qpv
