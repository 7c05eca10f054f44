#include "qpv/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "qpv/adversary.hpp"
#include "qpv/entropy.hpp"
#include "qpv/error.hpp"
#include "qpv/generic.hpp"
#include "qpv/inqc.hpp"
#include "qpv/stats.hpp"

#ifndef QPV_VERSION
#define QPV_VERSION "unknown"
#endif

namespace qpv {

using json = nlohmann::json;

std::string version_string() { return QPV_VERSION; }

// ---------------------------------------------------------------- scenarios

namespace {

template <typename T>
T get(const json& j, const char* key, const T& fallback, const std::string& field) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(field, std::string("wrong type: ") + e.what());
  }
}

Position parse_position(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) throw ConfigError(field, "expected a non-empty array of coordinates");
  std::vector<double> c;
  for (const auto& v : j) {
    if (!v.is_number()) throw ConfigError(field, "coordinates must be numbers");
    c.push_back(v.get<double>());
  }
  return Position(std::move(c));
}

Codeword parse_word(const json& j, const std::string& field) {
  if (!j.is_string()) throw ConfigError(field, "codeword must be a string of 0/1");
  Codeword c;
  for (char ch : j.get<std::string>()) {
    if (ch != '0' && ch != '1') throw ConfigError(field, "codeword must be a string of 0/1");
    c.push_back(ch - '0');
  }
  return c;
}

}  // namespace

Scenario parse_scenario(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError("scenario", std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("scenario", "top level must be an object");
  Scenario s;
  s.source = j.dump();
  if (!j.contains("schema")) throw ConfigError("schema", "missing");
  s.schema = get<int>(j, "schema", 0, "schema");
  if (s.schema != kScenarioSchema) {
    throw ConfigError("schema", "unsupported version " + std::to_string(s.schema));
  }
  s.name = get<std::string>(j, "name", "", "name");
  if (j.contains("layout")) {
    const json& l = j.at("layout");
    if (!l.contains("verifiers") || !l.at("verifiers").is_array()) throw ConfigError("layout.verifiers", "missing");
    s.layout.verifiers.clear();
    for (std::size_t i = 0; i < l.at("verifiers").size(); ++i) {
      s.layout.verifiers.push_back(parse_position(l.at("verifiers")[i], "layout.verifiers[" + std::to_string(i) + "]"));
    }
    if (!l.contains("prover")) throw ConfigError("layout.prover", "missing");
    s.layout.prover = parse_position(l.at("prover"), "layout.prover");
  }
  if (j.contains("timing")) {
    const json& t = j.at("timing");
    s.timing.T = get<double>(t, "T", s.timing.T, "timing.T");
    s.timing.delta = get<double>(t, "delta", s.timing.delta, "timing.delta");
    s.timing.slack = get<double>(t, "slack", s.timing.slack, "timing.slack");
  }
  const std::string model = get<std::string>(j, "model", "no-pe", "model");
  if (model == "no-pe") {
    s.model = AdversaryModel::NoPE;
  } else if (model == "unrestricted") {
    s.model = AdversaryModel::Unrestricted;
  } else {
    throw ConfigError("model", "expected no-pe or unrestricted");
  }
  s.attack = get<std::string>(j, "attack", s.attack, "attack");
  s.rounds = get<std::size_t>(j, "rounds", s.rounds, "rounds");
  s.rounds_cap = get<std::size_t>(j, "rounds_cap", s.rounds_cap, "rounds_cap");
  s.n_qubits = get<std::size_t>(j, "n_qubits", s.n_qubits, "n_qubits");
  s.parties = get<std::size_t>(j, "parties", s.parties, "parties");
  s.scheme = get<std::string>(j, "scheme", s.scheme, "scheme");
  s.split_e0 = get<std::size_t>(j, "split_e0", s.split_e0, "split_e0");
  s.split_e1 = get<std::size_t>(j, "split_e1", s.split_e1, "split_e1");
  if (j.contains("auth")) {
    const json& a = j.at("auth");
    s.auth.q = get<double>(a, "q", s.auth.q, "auth.q");
    s.auth.lambda = get<std::size_t>(a, "lambda", s.auth.lambda, "auth.lambda");
    s.auth.pv_soundness = get<double>(a, "pv_soundness", s.auth.pv_soundness, "auth.pv_soundness");
    s.ell = get<std::size_t>(a, "ell", s.ell, "auth.ell");
    s.mu = get<std::size_t>(a, "mu", s.mu, "auth.mu");
    s.auth_mode = get<std::string>(a, "mode", s.auth_mode, "auth.mode");
  }
  if (j.contains("domination")) {
    const json& d = j.at("domination");
    s.dom_ell = get<std::size_t>(d, "ell", s.dom_ell, "domination.ell");
    s.dom_mu = get<std::size_t>(d, "mu", s.dom_mu, "domination.mu");
    s.dom_lambda = get<std::size_t>(d, "lambda", s.dom_lambda, "domination.lambda");
    s.dom_budget = get<std::uint64_t>(d, "budget", s.dom_budget, "domination.budget");
    if (d.contains("c") || d.contains("c_prime")) {
      if (!d.contains("c") || !d.contains("c_prime")) throw ConfigError("domination.c", "need both c and c_prime");
      s.dom_pair = std::make_pair(parse_word(d.at("c"), "domination.c"), parse_word(d.at("c_prime"), "domination.c_prime"));
    }
  }
  if (j.contains("keyex")) {
    const json& k = j.at("keyex");
    s.keyex.raw_rounds = get<std::size_t>(k, "raw_rounds", s.keyex.raw_rounds, "keyex.raw_rounds");
    s.keyex.ell = get<std::size_t>(k, "ell", s.keyex.ell, "keyex.ell");
    s.keyex.auth.q = get<double>(k, "q", s.keyex.auth.q, "keyex.q");
    s.keyex.auth.lambda = get<std::size_t>(k, "lambda", s.keyex.auth.lambda, "keyex.lambda");
    s.tamper = get<bool>(k, "tamper", s.tamper, "keyex.tamper");
  }
  if (j.contains("expect")) {
    const json& e = j.at("expect");
    if (e.contains("min_frequency")) s.expect_min = get<double>(e, "min_frequency", 0.0, "expect.min_frequency");
    if (e.contains("max_frequency")) s.expect_max = get<double>(e, "max_frequency", 1.0, "expect.max_frequency");
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("scenario", "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

// ---------------------------------------------------------------- validation

namespace {

StrategyFactory strategy_for(const Scenario& s) {
  if (s.attack == "honest") return [] { return std::make_unique<HonestProver>(); };
  return attack_factory(s.attack);
}

void check_positions(const Scenario& s, ProverStrategy& p) {
  if (p.honest()) return;
  for (const auto& pos : p.positions(s.layout)) {
    if (pos.dim() != s.layout.prover.dim()) throw ConfigError("attack", "adversary position has the wrong dimension");
    if (distance(pos, s.layout.prover) < s.timing.delta - 1e-12) {
      throw ConfigError("adversary_pos", "adversary closer than delta to the claimed position");
    }
  }
  if (p.epr_budget() > 0 && s.model == AdversaryModel::NoPE) {
    throw ConfigError("model", "attack '" + p.id() + "' needs pre-shared entanglement; use model unrestricted");
  }
}

// Library validators name bare fields; report them by scenario path.
template <typename F>
void scoped(const std::string& prefix, F&& check) {
  try {
    check();
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    const std::string head = e.field() + ": ";
    if (msg.rfind(head, 0) == 0) msg = msg.substr(head.size());
    throw ConfigError(prefix + "." + e.field(), msg);
  }
}

std::size_t dom_lambda(const Scenario& s) { return s.dom_lambda ? s.dom_lambda : (s.dom_ell + 3) / 4; }

}  // namespace

void validate_for(const Scenario& s, const std::string& experiment) {
  const auto& ids = experiment_ids();
  if (std::find(ids.begin(), ids.end(), experiment) == ids.end()) {
    throw ConfigError("experiment", "unknown id '" + experiment + "'");
  }
  scoped("layout", [&] { s.layout.validate(); });
  scoped("timing", [&] { s.timing.validate(); });
  scoped("layout", [&] { (void)schedule_challenges(s.layout.verifiers, s.layout.prover, s.timing); });  // enclosure

  if (experiment == "pv-attack" || experiment == "pv-sequential" || experiment == "pv-ddim") {
    auto p = strategy_for(s)();
    check_positions(s, *p);
    if (experiment != "pv-ddim" && s.layout.verifiers.size() != 2) {
      throw ConfigError("layout.verifiers", experiment + " uses two verifiers");
    }
  }
  if (experiment == "pv-sequential" && s.rounds < 1) throw ConfigError("rounds", "need at least one round");
  if ((experiment == "inqc" || experiment == "inqc-nparty" || experiment == "generic-attack") && s.rounds_cap < 1) {
    throw ConfigError("rounds_cap", "must be at least 1");
  }
  if (experiment == "inqc" && (s.n_qubits < 1 || s.n_qubits > 4)) throw ConfigError("n_qubits", "must be in 1..4");
  if (experiment == "inqc-nparty" && (s.parties < 2 || s.parties > 4)) throw ConfigError("parties", "must be in 2..4");
  if (experiment == "generic-attack") {
    if (s.scheme != "bb84" && s.scheme != "toy" && s.scheme != "random_family") {
      throw ConfigError("scheme", "expected bb84, toy or random_family");
    }
    if (s.layout.verifiers.size() != 2) throw ConfigError("layout.verifiers", "generic schemes use two verifiers");
  }
  if (experiment == "cit-audit") {
    if (s.split_e0 < 1 || s.split_e1 < 1 || s.split_e0 > SplitStrategy::kMaxQubitsPerSide ||
        s.split_e1 > SplitStrategy::kMaxQubitsPerSide) {
      throw ConfigError("split_e0", "each side holds 1.." + std::to_string(SplitStrategy::kMaxQubitsPerSide) +
                                        " qubits");
    }
  }
  if (experiment == "auth") {
    scoped("auth", [&] { s.auth.validate(); });
    if (s.auth_mode != "honest" && s.auth_mode != "desync") throw ConfigError("auth.mode", "expected honest or desync");
    if (s.mu < 1) throw ConfigError("auth.mu", "must be at least 1");
    if (4 * s.auth.lambda > s.auth_ell()) {
      throw ConfigError("auth.ell", "code is not lambda-dominating (need ell >= 4 lambda)");
    }
    const BalancedRepetitionCode code{s.auth_ell(), s.mu};
    // Short codes are checked outright; longer ones rest on ell >= 4 lambda.
    if (code.length() <= 16) {
      if (code_dominates(code.codewords(), s.auth.lambda).verdict != DominationVerdict::Dominates) {
        throw ConfigError("auth.ell", "code is not lambda-dominating");
      }
    }
    if (s.layout.verifiers.size() != 2 && s.auth_mode == "desync") {
      throw ConfigError("layout.verifiers", "the desync attack uses two verifiers");
    }
  }
  if (experiment == "domination") {
    if (s.dom_pair) {
      if (s.dom_pair->first.size() != s.dom_pair->second.size() || s.dom_pair->first.empty()) {
        throw ConfigError("domination.c_prime", "codewords must be non-empty and of equal length");
      }
    } else if (s.dom_ell < 1 || s.dom_mu < 1 || s.dom_mu > 8) {
      throw ConfigError("domination.ell", "need ell >= 1 and 1 <= mu <= 8");
    }
    if (dom_lambda(s) < 1) throw ConfigError("domination.lambda", "must be at least 1");
  }
  if (experiment == "keyex") {
    scoped("keyex", [&] { s.keyex.auth.validate(); });
    if (s.keyex.raw_rounds < 1) throw ConfigError("keyex.raw_rounds", "must be at least 1");
    if (4 * s.keyex.auth.lambda > s.keyex.ell) throw ConfigError("keyex.ell", "need ell >= 4 lambda");
  }
}

// ---------------------------------------------------------------- runner

namespace {

struct Trial {
  bool success = false;
  std::vector<double> metrics;
  std::vector<int> obs_honest, obs_attack;
  bool conditional = true;  // attack-side precondition (generic-attack)
};

std::vector<Trial> parallel_trials(std::size_t n, std::size_t workers, const std::function<Trial(std::size_t)>& fn) {
  std::vector<Trial> out(n);
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n && !failed; i = next++) {
        try {
          out[i] = fn(i);
        } catch (...) {
          if (!failed.exchange(true)) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

std::size_t count(const std::vector<Trial>& t) {
  std::size_t n = 0;
  for (const auto& x : t) n += x.success ? 1 : 0;
  return n;
}

double mean_metric(const std::vector<Trial>& t, std::size_t k) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& x : t) {
    if (x.metrics.size() > k && !std::isnan(x.metrics[k])) {
      s += x.metrics[k];
      ++n;
    }
  }
  return n ? s / static_cast<double>(n) : std::nan("");
}

double min_metric(const std::vector<Trial>& t, std::size_t k) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& x : t) {
    if (x.metrics.size() > k && !std::isnan(x.metrics[k])) m = std::min(m, x.metrics[k]);
  }
  return m;
}

double max_metric(const std::vector<Trial>& t, std::size_t k) {
  double m = 0.0;
  for (const auto& x : t) {
    if (x.metrics.size() > k && !std::isnan(x.metrics[k])) m = std::max(m, x.metrics[k]);
  }
  return m;
}

Statevector corrected(const InqcResult& r) {
  return apply_correction(r.output, reconcile_corrections(r.transcript));
}

GenericScheme make_scheme(const Scenario& s, std::uint64_t seed) {
  if (s.scheme == "bb84") return bb84_generic_scheme();
  if (s.scheme == "toy") return toy_interleaved_scheme();
  Rng family(splitmix64(seed ^ 0x5eedULL));
  return random_family_scheme(family, splitmix64(seed));
}

}  // namespace

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg, const Scenario& s) {
  validate_for(s, cfg.experiment);
  if (cfg.trials < 1) throw ConfigError("trials", "must be at least 1");
  const auto start = std::chrono::steady_clock::now();
  const std::string& id = cfg.experiment;
  const std::uint64_t seed = cfg.seed;
  ResultRow row;
  row.experiment = id;
  row.params = s.source;
  row.seed = seed;
  row.version = version_string();
  row.trials = cfg.trials;
  std::vector<Trial> trials;

  if (id == "pv-honest") {
    trials = parallel_trials(cfg.trials, cfg.workers, [&](std::size_t i) {
      Rng rng = Rng::derive(seed, i);
      HonestProver p;
      RoundSpec spec;
      spec.shares = s.layout.verifiers.size() - 1;
      return Trial{pv_round(s.layout, p, s.timing, s.model, spec, rng).joint_accept, {}, {}, {}, true};
    });
  } else if (id == "pv-attack" || id == "pv-ddim") {
    const StrategyFactory make = strategy_for(s);
    trials = parallel_trials(cfg.trials, cfg.workers, [&](std::size_t i) {
      Rng rng = Rng::derive(seed, i);
      auto p = make();
      RoundSpec spec;
      spec.shares = s.layout.verifiers.size() - 1;
      const ProtocolVerdict v = id == "pv-ddim" ? pv_ddim_round(s.layout, *p, s.timing, s.model, rng)
                                                : pv_round(s.layout, *p, s.timing, s.model, spec, rng);
      bool all_in_time = true;
      for (const auto& r : v.verifiers) all_in_time = all_in_time && r.reply && r.in_time;
      return Trial{v.joint_accept, {all_in_time ? 1.0 : 0.0}, {}, {}, true};
    });
    row.extra.push_back({"all_in_time_fraction", mean_metric(trials, 0)});
    if (id == "pv-attack" && s.attack == "breidbart") {
      row.extra.push_back({"exact", breidbart_success_exact()});
    }
    row.extra.push_back({"soundness_ceiling", soundness_epsilon()});
  } else if (id == "pv-sequential") {
    const StrategyFactory make = strategy_for(s);
    trials = parallel_trials(cfg.trials, cfg.workers, [&](std::size_t i) {
      Rng rng = Rng::derive(seed, i);
      const SequentialVerdict v = pv_sequential(s.rounds, s.layout, make, s.timing, s.model, rng);
      return Trial{v.joint_accept, {static_cast<double>(v.rounds_run)}, {}, {}, true};
    });
    const double n = static_cast<double>(s.rounds);
    row.extra.push_back({"mean_rounds_run", mean_metric(trials, 0)});
    if (s.attack == "breidbart") row.extra.push_back({"exact", std::pow(breidbart_success_exact(), n)});
    row.extra.push_back({"soundness_ceiling", std::pow(soundness_epsilon(), n)});
  } else if (id == "inqc" || id == "inqc-nparty") {
    // Random family per trial; metrics: first-round success, rounds used,
    // corrected fidelity when the run succeeded.
    const bool two = id == "inqc";
    trials = parallel_trials(cfg.trials, cfg.workers, [&](std::size_t i) {
      Rng rng = Rng::derive(seed, i);
      std::size_t n_a = 1;
      std::vector<std::size_t> n_b;
      if (two) {
        n_b = {s.n_qubits - 1};
      } else {
        n_b.assign(s.parties - 1, 1);
      }
      std::vector<std::size_t> y_counts(n_b.size(), 2);
      const auto fam = UnitaryFamily::random(n_a, n_b, 2, y_counts, rng);
      const std::size_t total = fam.total_qubits();
      const Statevector in = random_state(total, rng);
      const std::size_t x = rng.below(2);
      std::vector<std::size_t> ys;
      for (std::size_t k = 0; k < n_b.size(); ++k) ys.push_back(rng.below(2));
      const InqcResult r = run_inqc_nparty(fam, x, ys, in, s.rounds_cap, rng);
      Trial t;
      t.success = r.transcript.success_round.has_value();
      const double first = r.transcript.success_round && *r.transcript.success_round == 0 ? 1.0 : 0.0;
      double fid = std::nan("");
      if (t.success) {
        std::vector<std::size_t> all(total);
        for (std::size_t k = 0; k < total; ++k) all[k] = k;
        fid = fidelity_up_to_global_phase(corrected(r), apply_gate(in, fam.at(x, ys), all));
      }
      t.metrics = {first, static_cast<double>(r.transcript.rounds.size()), fid,
                   static_cast<double>(r.transcript.epr_consumed), r.transcript.worst_case_epr_log2};
      return t;
    });
    double rounds = 0.0;
    for (const auto& t : trials) rounds += t.metrics[1];
    row.extra.push_back({"first_round_success", mean_metric(trials, 0)});
    row.extra.push_back({"per_round_success", static_cast<double>(count(trials)) / rounds});
    row.extra.push_back({"per_round_law", std::pow(0.25, static_cast<double>(two ? s.n_qubits : s.parties))});
    row.extra.push_back({"mean_rounds", mean_metric(trials, 1)});
    row.extra.push_back({"min_conditional_fidelity", min_metric(trials, 2)});
    row.extra.push_back({"mean_epr_consumed", mean_metric(trials, 3)});
    row.extra.push_back({"worst_case_epr_log2", mean_metric(trials, 4)});
  } else if (id == "generic-attack") {
    const GenericScheme scheme = make_scheme(s, seed);
    const bool family = s.scheme == "random_family";
    trials = parallel_trials(cfg.trials, cfg.workers, [&](std::size_t i) {
      // Random-family trials share the family but draw a fresh verifier.
      const GenericScheme local = family ? [&] {
        Rng fam(splitmix64(seed ^ 0x5eedULL));
        return random_family_scheme(fam, splitmix64(seed + 1 + i));
      }()
                                         : scheme;
      Rng rh = Rng::derive(seed, 2 * i), ra = Rng::derive(seed, 2 * i + 1);
      GenericOutcome h = run_generic_honest(local, s.layout, s.timing, rh);
      GenericOutcome a = run_generic_inqc_attack(local, s.layout, s.timing, s.rounds_cap, ra);
      Trial t;
      t.success = a.accept;
      t.conditional = a.inqc_ok;
      t.obs_honest = h.observation;
      t.obs_attack = a.observation;
      double deviation = std::nan("");
      if (family && a.inqc_ok) {
        const auto sh = random_family_verifier_state(*h.verifier);
        const auto sa = random_family_verifier_state(*a.verifier);
        deviation = sh && sa ? (sh->matrix() - sa->matrix()).norm() : 1.0;
      }
      t.metrics = {h.accept ? 1.0 : 0.0, (h.all_in_time && a.all_in_time) ? 1.0 : 0.0, deviation};
      return t;
    });
    Histogram hh, ha;
    std::size_t ok = 0, ok_acc = 0;
    for (const auto& t : trials) {
      ++hh[t.obs_honest];
      if (t.conditional) {
        ++ok;
        ok_acc += t.success ? 1 : 0;
        ++ha[t.obs_attack];
      }
    }
    row.extra.push_back({"honest_accept", mean_metric(trials, 0)});
    row.extra.push_back({"timing_ok_fraction", mean_metric(trials, 1)});
    row.extra.push_back({"inqc_success_fraction", static_cast<double>(ok) / static_cast<double>(trials.size())});
    row.extra.push_back({"conditional_accept", ok ? static_cast<double>(ok_acc) / static_cast<double>(ok) : 0.0});
    row.extra.push_back({"chi_square_p", chi_square_homogeneity(hh, ha).p_value});
    row.extra.push_back({"failure_bound", generic_failure_bound(scheme, s.rounds_cap)});
    if (family) row.extra.push_back({"max_state_deviation", max_metric(trials, 2)});
  } else if (id == "cit-audit") {
    trials = parallel_trials(cfg.trials, cfg.workers, [&](std::size_t i) {
      Rng rng = Rng::derive(seed, i);
      const SplitStrategy st = SplitStrategy::random(s.split_e0, s.split_e1, rng);
      const CitResult c = check_cit(st.cit_instance());
      return Trial{c.holds, {c.lhs}, {}, {}, true};
    });
    row.extra.push_back({"min_lhs", min_metric(trials, 0)});
  } else if (id == "auth") {
    const BalancedRepetitionCode code{s.auth_ell(), s.mu};
    const bool desync = s.auth_mode == "desync";
    trials = parallel_trials(cfg.trials, cfg.workers, [&](std::size_t i) {
      Rng rng = Rng::derive(seed, i);
      std::vector<int> m(s.mu);
      for (auto& b : m) b = rng.bit();
      std::vector<int> mp = m;
      AuthResult r;
      if (desync) {
        m[0] = 0;
        mp[0] = 1;
        DesyncAdversary adv;
        r = auth_message(m, mp, code, s.auth, desync_schedule(code.length()), &adv, s.layout, s.timing, rng);
      } else {
        r = auth_message(m, mp, code, s.auth, aligned_schedule(code.length()), nullptr, s.layout, s.timing, rng);
      }
      return Trial{r.accept, {static_cast<double>(r.wauth_rounds)}, {}, {}, true};
    });
    const double n = static_cast<double>(code.length());
    row.extra.push_back({"codeword_length", n});
    row.extra.push_back({"completeness_bound", n * std::exp(-2.0 * s.auth.q * static_cast<double>(s.auth.lambda))});
    row.extra.push_back({"wauth_substitution_bound", wauth_substitution_bound(s.auth.q, s.auth.pv_soundness)});
    row.extra.push_back({"mean_wauth_rounds", mean_metric(trials, 0)});
  } else if (id == "domination") {
    const std::size_t lambda = dom_lambda(s);
    DominationResult r;
    if (s.dom_pair) {
      r = dominates(s.dom_pair->first, s.dom_pair->second, lambda, s.dom_budget);
    } else {
      r = code_dominates(BalancedRepetitionCode{s.dom_ell, s.dom_mu}.codewords(), lambda, s.dom_budget);
    }
    Trial t;
    t.success = r.verdict == DominationVerdict::Dominates;
    trials = {t};
    row.trials = 1;
    row.extra.push_back({"lambda", static_cast<double>(lambda)});
    row.extra.push_back({"explored", static_cast<double>(r.explored)});
    json d;
    d["verdict"] = r.verdict == DominationVerdict::Dominates        ? "dominates"
                   : r.verdict == DominationVerdict::Counterexample ? "counterexample"
                                                                    : "budget_exhausted";
    d["method"] = r.method;
    if (r.witness) {
      d["e"] = r.witness->first;
      d["e_prime"] = r.witness->second;
    }
    row.detail = d.dump();
  } else if (id == "keyex") {
    trials = parallel_trials(cfg.trials, cfg.workers, [&](std::size_t i) {
      Rng rng = Rng::derive(seed, i);
      const KeyExchangeResult k = key_exchange(s.layout, s.timing, s.keyex, s.tamper, rng);
      Trial t;
      t.success = s.tamper ? k.verifier_key.empty() : (!k.verifier_key.empty() && k.verifier_key == k.prover_key);
      t.metrics = {static_cast<double>(k.sifted), k.verifier_key == k.prover_key ? 1.0 : 0.0};
      return t;
    });
    row.extra.push_back({"mean_sifted", mean_metric(trials, 0)});
    row.extra.push_back({"key_match_fraction", mean_metric(trials, 1)});
    Rng first = Rng::derive(seed, 0);
    const KeyExchangeResult k0 = key_exchange(s.layout, s.timing, s.keyex, s.tamper, first);
    json d;
    d["trial0_verifier_key"] = to_hex(k0.verifier_key);
    d["trial0_prover_key"] = to_hex(k0.prover_key);
    d["post_processing"] = KeyExchangeResult::kPostProcessing;
    row.detail = d.dump();
  }

  row.successes = count(trials);
  row.frequency = static_cast<double>(row.successes) / static_cast<double>(row.trials);
  row.stderr_ = binomial_stderr(row.frequency, row.trials);
  if (s.expect_min || s.expect_max) {
    const bool ok = (!s.expect_min || row.frequency >= *s.expect_min) && (!s.expect_max || row.frequency <= *s.expect_max);
    row.assertion = ok ? "pass" : "fail";
  }
  if (cfg.timing) {
    row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return {row};
}

std::vector<TranscriptEntry> trial_transcript(const ExperimentConfig& cfg, const Scenario& s) {
  validate_for(s, cfg.experiment);
  if (cfg.experiment != "pv-honest" && cfg.experiment != "pv-attack" && cfg.experiment != "pv-ddim") {
    throw ConfigError("transcript", "only available for pv-honest, pv-attack and pv-ddim");
  }
  Rng rng = Rng::derive(cfg.seed, 0);
  RoundSpec spec;
  spec.shares = s.layout.verifiers.size() - 1;
  spec.keep_transcript = true;
  if (cfg.experiment == "pv-honest") {
    HonestProver p;
    return pv_round(s.layout, p, s.timing, s.model, spec, rng).transcript;
  }
  auto p = strategy_for(s)();
  return pv_round(s.layout, *p, s.timing, s.model, spec, rng).transcript;
}

// ---------------------------------------------------------------- reports

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

json number_json(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return json::parse(num(v));
}

double json_number(const json& j) {
  if (j.is_string()) return std::stod(j.get<std::string>());
  return j.get<double>();
}

}  // namespace

void write_report(const std::vector<ResultRow>& rows, const std::string& format, std::ostream& os) {
  if (rows.empty()) throw std::invalid_argument("write_report: no rows");
  const bool timed = rows.front().wall_time.has_value();
  if (format == "csv") {
    os << "experiment,params,seed,version,trials,successes,frequency,stderr,assertion,extra,detail";
    if (timed) os << ",wall_time_s";
    os << "\n";
    for (const auto& r : rows) {
      std::string extra;
      for (const auto& [k, v] : r.extra) extra += (extra.empty() ? "" : ";") + k + "=" + num(v);
      os << r.experiment << ',' << csv_quote(r.params) << ',' << r.seed << ',' << csv_quote(r.version) << ','
         << r.trials << ',' << r.successes << ',' << num(r.frequency) << ',' << num(r.stderr_) << ',' << r.assertion
         << ',' << csv_quote(extra) << ',' << csv_quote(r.detail);
      if (timed) os << ',' << num(r.wall_time.value_or(0.0));
      os << "\n";
    }
    return;
  }
  if (format != "json") throw ConfigError("format", "expected csv or json");
  json arr = json::array();
  for (const auto& r : rows) {
    json o;
    o["experiment"] = r.experiment;
    o["params"] = r.params.empty() ? json(nullptr) : json::parse(r.params);
    o["seed"] = r.seed;
    o["version"] = r.version;
    o["trials"] = r.trials;
    o["successes"] = r.successes;
    o["frequency"] = number_json(r.frequency);
    o["stderr"] = number_json(r.stderr_);
    o["assertion"] = r.assertion;
    json extra = json::object();
    for (const auto& [k, v] : r.extra) extra[k] = number_json(v);
    o["extra"] = extra;
    o["detail"] = r.detail.empty() ? json(nullptr) : json::parse(r.detail);
    if (r.wall_time) o["wall_time_s"] = number_json(*r.wall_time);
    arr.push_back(o);
  }
  os << arr.dump(2) << "\n";
}

void write_report_file(const std::vector<ResultRow>& rows, const std::string& format, const std::string& path) {
  if (path == "-") {
    write_report(rows, format, std::cout);
    return;
  }
  std::ostringstream buf;
  write_report(rows, format, buf);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write report to " + path);
  out << buf.str();
  if (!out) throw std::runtime_error("cannot write report to " + path);
}

std::vector<ResultRow> read_report_json(const std::string& text) {
  const json arr = json::parse(text);
  std::vector<ResultRow> rows;
  for (const auto& o : arr) {
    ResultRow r;
    r.experiment = o.at("experiment").get<std::string>();
    r.params = o.at("params").is_null() ? "" : o.at("params").dump();
    r.seed = o.at("seed").get<std::uint64_t>();
    r.version = o.at("version").get<std::string>();
    r.trials = o.at("trials").get<std::size_t>();
    r.successes = o.at("successes").get<std::size_t>();
    r.frequency = json_number(o.at("frequency"));
    r.stderr_ = json_number(o.at("stderr"));
    r.assertion = o.at("assertion").get<std::string>();
    for (const auto& [k, v] : o.at("extra").items()) r.extra.push_back({k, json_number(v)});
    r.detail = o.at("detail").is_null() ? "" : o.at("detail").dump();
    if (o.contains("wall_time_s")) r.wall_time = json_number(o.at("wall_time_s"));
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace qpv
