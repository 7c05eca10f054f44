// Acceptance suite: one PASS/FAIL line per criterion.
//
// Exit status is nonzero if any criterion fails that is not listed in
// kKnownFailures; those are printed as FAIL all the same.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include <boost/math/distributions/binomial.hpp>

#include "qpv/adversary.hpp"
#include "qpv/auth.hpp"
#include "qpv/entropy.hpp"
#include "qpv/experiment.hpp"
#include "qpv/generic.hpp"
#include "qpv/inqc.hpp"
#include "qpv/pauli.hpp"
#include "qpv/quantum_store.hpp"
#include "qpv/stats.hpp"

using namespace qpv;

namespace {

// Criterion 7 asks for unconditional acceptance >= 0.999 at rounds_cap 64
// on the two-step toy scheme as well. Its steps act on two qubits, where a
// round succeeds with probability 1/16 and a step fails with probability
// (15/16)^64 ~ 0.016, so the literal threshold cannot be met at that cap.
const std::set<int> kKnownFailures = {7};

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

const TimingConfig kTiming{1.0, 0.1, 0.0};

double extra(const ResultRow& r, const std::string& key) {
  for (const auto& [k, v] : r.extra) {
    if (k == key) return v;
  }
  throw std::runtime_error("missing report field " + key);
}

ResultRow run(const std::string& id, const std::string& scenario_json, std::size_t trials, std::uint64_t seed) {
  return run_experiment({id, trials, seed, 1, false}, parse_scenario(scenario_json)).at(0);
}

// Exact two-sided binomial test: total probability of outcomes no more
// likely than the observed one.
double binomial_two_sided_p(std::size_t k, std::size_t n, double p) {
  if (p <= 0.0) return k == 0 ? 1.0 : 0.0;
  if (p >= 1.0) return k == n ? 1.0 : 0.0;
  const boost::math::binomial_distribution<double> d(static_cast<double>(n), p);
  const double pk = boost::math::pdf(d, static_cast<double>(k));
  double total = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double pi = boost::math::pdf(d, static_cast<double>(i));
    if (pi <= pk * (1.0 + 1e-9)) total += pi;
  }
  return std::min(1.0, total);
}

DensityMatrix random_density(std::size_t dim, Rng& rng) {
  Matrix g(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = cplx(rng.normal(), rng.normal());
  }
  Matrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return DensityMatrix(0.5 * (rho + rho.adjoint()));
}

// ---------------------------------------------------------------- criteria

void c1(Outcome& o) {
  Rng rng(101);
  double worst = 0.0;
  for (int k = 0; k < 4; ++k) {
    for (int s = 0; s < 20; ++s) {
      const Statevector psi = random_state(1, rng);
      QuantumStore store;
      Register data = store.allocate(psi);
      auto [half, partner] = store.allocate_epr();
      const int got = store.bell_measure(std::move(data[0]), std::move(half), rng, k);
      o.require(got == k, "forced outcome");
      store.apply(pauli_matrix(got).adjoint(), partner);
      const QubitId id = partner.id();
      worst = std::max(worst, std::abs(1.0 - store.fidelity(std::span<const QubitId>(&id, 1), psi)));
    }
  }
  o.detail << "80 teleports, max |1-F| = " << fmt(worst);
  o.require(worst <= 1e-9, "fidelity");
}

void c2(Outcome& o) {
  const std::size_t n = 100000;
  const ResultRow r = run("pv-attack", R"({"schema": 1, "attack": "breidbart"})", n, 2);
  const double target = 0.85355, ceiling = soundness_epsilon();
  const double sigma = binomial_stderr(r.frequency, n);
  o.detail << "freq " << fmt(r.frequency) << " (target " << target << " +- 0.01), 1-h^-1(1/2) = " << fmt(ceiling);
  o.require(std::abs(r.frequency - target) <= 0.01, "Breidbart window");
  o.require(std::abs(ceiling - 0.8900) <= 0.001, "entropy ceiling");
  o.require(r.frequency <= ceiling + 3 * sigma, "below ceiling");
}

void c3(Outcome& o) {
  for (const char* id : {"store_and_wait", "forward"}) {
    const auto make = attack_factory(id);
    std::size_t accepted = 0, late_somewhere = 0;
    const std::size_t n = 10000;
    for (std::size_t i = 0; i < n; ++i) {
      Rng rng = Rng::derive(3, i);
      auto p = make();
      const auto v = pv_bb84_round(line_layout(), *p, kTiming, AdversaryModel::NoPE, rng);
      accepted += v.joint_accept ? 1 : 0;
      bool late = false;
      for (const auto& rec : v.verifiers) late = late || !rec.in_time;
      late_somewhere += late ? 1 : 0;
    }
    o.detail << id << " accepted " << accepted << "/" << n << ", late in " << late_somewhere << "; ";
    o.require(accepted == 0, std::string(id) + " accepted");
    o.require(late_somewhere == n, std::string(id) + " timing");
  }
}

void c4(Outcome& o) {
  Rng rng(4);
  int ok = 0, in_time = 0;
  for (int theta = 0; theta < 2; ++theta) {
    for (int x = 0; x < 2; ++x) {
      for (int k = 0; k < 4; ++k) {
        TeleportPreSharedAttack a(k);
        RoundSpec spec;
        spec.forced_theta = theta;
        spec.forced_x = x;
        const auto v = pv_round(line_layout(), a, kTiming, AdversaryModel::Unrestricted, spec, rng);
        ok += v.joint_accept ? 1 : 0;
        in_time += (v.verifiers[0].in_time && v.verifiers[1].in_time) ? 1 : 0;
      }
    }
  }
  o.detail << "accepted " << ok << "/16, in time " << in_time << "/16";
  o.require(ok == 16 && in_time == 16, "exhaustive");
}

void c5(Outcome& o) {
  const std::size_t n = 10000;
  for (std::size_t q : {1u, 2u}) {
    const ResultRow r = run("inqc", R"({"schema": 1, "rounds_cap": 1024, "n_qubits": )" + std::to_string(q) + "}", n, 5);
    const double p = std::pow(0.25, static_cast<double>(q));
    const double f = extra(r, "first_round_success");
    const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(n));
    const double fid = extra(r, "min_conditional_fidelity");
    o.detail << "n=" << q << ": first-round " << fmt(f) << " vs " << p << " (3 sigma " << fmt(3 * sigma)
             << "), min F " << fmt(fid) << ", 1-F " << fmt(1 - fid) << "; ";
    o.require(std::abs(f - p) <= 3 * sigma, "per-round law n=" + std::to_string(q));
    o.require(1 - fid <= 1e-9, "fidelity n=" + std::to_string(q));
  }
}

void c6(Outcome& o) {
  std::size_t successes = 0, batches = 0;
  double worst = 1.0;
  while (successes < 1000) {
    const ResultRow r = run("inqc-nparty", R"({"schema": 1, "parties": 3, "rounds_cap": 1024})",
                            1000 - successes, 6 + batches++);
    successes += r.successes;
    worst = std::min(worst, extra(r, "min_conditional_fidelity"));
  }
  o.detail << successes << " successful 3-party runs, min F " << fmt(worst) << ", 1-F " << fmt(1 - worst);
  o.require(1 - worst <= 1e-9, "fidelity");
}

void c7(Outcome& o) {
  const std::size_t n = 10000;
  for (const char* scheme : {"bb84", "toy"}) {
    const ResultRow r = run("generic-attack", std::string(R"({"schema": 1, "rounds_cap": 64, "scheme": ")") + scheme + "\"}", n, 70);
    const double cond = extra(r, "conditional_accept"), p = extra(r, "chi_square_p");
    o.detail << scheme << ": conditional " << fmt(cond) << ", unconditional " << fmt(r.frequency)
             << " (cap-implied floor " << fmt(1 - extra(r, "failure_bound")) << "), chi2 p " << fmt(p) << "; ";
    o.require(cond == 1.0, std::string(scheme) + " conditional");
    o.require(r.frequency >= 0.999, std::string(scheme) + " unconditional >= 0.999");
    o.require(p > 0.01, std::string(scheme) + " chi-square");
  }
}

void c8(Outcome& o) {
  const std::size_t n = 10000;
  const ResultRow r = run("pv-sequential", R"({"schema": 1, "attack": "breidbart", "rounds": 10})", n, 8);
  const double expect = std::pow(0.85355, 10), ceiling = std::pow(0.89, 10);
  o.detail << "freq " << fmt(r.frequency) << " vs " << fmt(expect) << " +- 0.02, ceiling " << fmt(ceiling);
  o.require(std::abs(r.frequency - expect) <= 0.02, "window");
  o.require(r.frequency <= ceiling, "ceiling");
}

void c9(Outcome& o) {
  Rng rng(9);
  int holds = 0;
  double min_lhs = 1e9;
  for (int i = 0; i < 100; ++i) {
    const std::size_t e0 = 1 + rng.below(2), e1 = 1 + rng.below(2);
    const CitResult r = check_cit(SplitStrategy::random(e0, e1, rng).cit_instance());
    holds += r.lhs >= 1.0 - 1e-7 ? 1 : 0;
    min_lhs = std::min(min_lhs, r.lhs);
  }
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    HybridState h;
    h.dim_a = 1 + rng.below(3);
    h.dim_b = 1 + rng.below(3);
    const std::size_t ny = 1 + rng.below(4);
    double total = 0.0;
    for (std::size_t y = 0; y < ny; ++y) {
      h.weights.push_back(rng.uniform() + 0.05);
      total += h.weights.back();
      h.blocks.push_back(random_density(h.dim_a * h.dim_b, rng));
    }
    for (auto& w : h.weights) w /= total;
    worst = std::max(worst, std::abs(conditional_entropy_hybrid(h) - conditional_entropy_hybrid_assembled(h)));
  }
  o.detail << "CIT holds " << holds << "/100 (min lhs " << fmt(min_lhs) << "), hybrid two-path max diff " << fmt(worst);
  o.require(holds == 100, "CIT");
  o.require(worst <= 1e-8, "two-path");
}

void c10(Outcome& o) {
  struct Case {
    std::size_t ell, mu;
  };
  for (const Case c : {Case{4, 1}, Case{8, 1}, Case{4, 2}}) {
    const std::size_t lambda = (c.ell + 3) / 4;
    const auto code = BalancedRepetitionCode{c.ell, c.mu}.codewords();
    // Exhaustive only up to 2N <= 12, search beyond.
    const DominationResult r = code_dominates(code, lambda, 50'000'000, 12);
    o.detail << "BR(" << c.ell << "," << c.mu << ") lambda " << lambda << ": "
             << (r.verdict == DominationVerdict::Dominates ? "dominates" : "NOT") << " via " << r.method;
    o.require(r.verdict == DominationVerdict::Dominates, "BR domination");
    if (2 * code.front().size() <= kExhaustiveCap) {
      const DominationResult x = code_dominates(code, lambda);
      o.detail << " (exhaustive cross-check " << (x.verdict == DominationVerdict::Dominates ? "agrees" : "DISAGREES")
               << ")";
      o.require(x.verdict == r.verdict, "exhaustive cross-check");
    }
    o.detail << "; ";
  }
  const Codeword c = {1, 0, 1, 0, 1, 0, 1, 0}, cp = {0, 1, 0, 1, 0, 1, 0, 1};
  const DominationResult a = dominates(c, cp, 2);
  o.require(a.verdict == DominationVerdict::Counterexample && a.witness.has_value(), "alternating counterexample");
  if (a.witness) {
    const auto& [e, ep] = *a.witness;
    const bool genuine = is_embedding(e, c) && is_embedding(ep, cp) && !dominance_holds(e, ep, 2);
    o.detail << "alternating lambda 2: counterexample, witness genuine " << (genuine ? "yes" : "no");
    o.require(genuine, "witness");
  }
}

void c11(Outcome& o) {
  const std::size_t n = 10000;
  for (std::size_t lambda : {8u, 16u}) {
    const ResultRow r = run("auth", R"({"schema": 1, "auth": {"q": 0.01, "lambda": )" + std::to_string(lambda) + "}}",
                            n, 11);
    const double fail = 1.0 - r.frequency, bound = extra(r, "completeness_bound");
    o.detail << "lambda " << lambda << ": honest failure " << fmt(fail) << " <= bound " << fmt(bound) << "; ";
    o.require(fail <= bound + 3 * binomial_stderr(fail, n), "completeness lambda " + std::to_string(lambda));
  }
  const std::size_t m = 4000;
  double prev = 2.0, prev_se = 0.0;
  for (std::size_t lambda : {4u, 8u, 16u}) {
    const ResultRow r =
        run("auth", R"({"schema": 1, "auth": {"q": 0.01, "mode": "desync", "lambda": )" + std::to_string(lambda) + "}}",
            m, 111);
    o.detail << "desync lambda " << lambda << ": " << fmt(r.frequency) << "; ";
    o.require(r.frequency < prev, "desync decreasing");
    if (prev <= 1.0) {
      const double z = (prev - r.frequency) / std::sqrt(prev_se * prev_se + r.stderr_ * r.stderr_);
      o.detail << "(drop " << fmt(z) << " sigma) ";
    }
    prev = r.frequency;
    prev_se = r.stderr_;
  }
}

void c12(Outcome& o) {
  const std::size_t n = 1000;
  KeyExchangeParams kp;  // q = 1e-9, lambda = 1, ell = 4, 256 raw rounds
  std::size_t equal = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = Rng::derive(12, i);
    const auto k = key_exchange(line_layout(), kTiming, kp, false, rng);
    equal += (!k.verifier_key.empty() && k.verifier_key == k.prover_key) ? 1 : 0;
  }
  o.detail << "honest equal nonempty keys " << equal << "/" << n << "; ";
  o.require(equal == n, "honest keys");

  // Tampering: the prover authenticates the flipped basis string honestly.
  // Under aligned execution every wAUTH round still passes except when the
  // prover emits an erasure on a 0-bit, so the verifiers abort with
  // probability 1 - (1 - q)^Z, Z = ell * mu zeros in the prover's codeword.
  // The AUTH soundness bound on this event is 1 - delta^lambda, delta the
  // wAUTH substitution bound.
  struct Setting {
    KeyExchangeParams p;
    std::size_t trials;
  };
  KeyExchangeParams hot;
  hot.raw_rounds = 8;
  hot.auth = AuthParams{0.013, 1};
  for (const Setting& s : {Setting{kp, 1000}, Setting{hot, 2000}}) {
    std::size_t aborted = 0;
    for (std::size_t i = 0; i < s.trials; ++i) {
      Rng rng = Rng::derive(1200 + s.p.raw_rounds, i);
      aborted += key_exchange(line_layout(), kTiming, s.p, true, rng).verifier_key.empty() ? 1 : 0;
    }
    const double zeros = static_cast<double>(s.p.ell * 2 * s.p.raw_rounds);
    const double predicted = 1.0 - std::pow(1.0 - s.p.auth.q, zeros);
    const double floor = 1.0 - std::pow(wauth_substitution_bound(s.p.auth.q, s.p.auth.pv_soundness),
                                        static_cast<double>(s.p.auth.lambda));
    const double pv = binomial_two_sided_p(aborted, s.trials, predicted);
    o.detail << "tamper q=" << fmt(s.p.auth.q) << ": empty key " << aborted << "/" << s.trials << " (pred "
             << fmt(predicted) << ", binomial p " << fmt(pv) << ", soundness floor " << fmt(floor) << "); ";
    o.require(pv > 0.01, "tamper consistency q=" + fmt(s.p.auth.q));
    // Detection below the floor would show up as a thin lower tail.
    const double below = boost::math::cdf(
        boost::math::binomial_distribution<double>(static_cast<double>(s.trials), std::min(floor, 1.0)),
        static_cast<double>(aborted));
    o.require(below > 0.01, "soundness floor q=" + fmt(s.p.auth.q));
  }
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<void(Outcome&)> fn;
  };
  const Criterion all[] = {
      {1, "teleportation identity", 1, c1},     {2, "Breidbart window", 30, c2},
      {3, "naive attacks are late", 10, c3},    {4, "pre-shared entanglement break", 1, c4},
      {5, "INQC per-round law", 60, c5},        {6, "N-party INQC", 60, c6},
      {7, "generic attack", 300, c7},           {8, "sequential repetition", 120, c8},
      {9, "CIT audit", 30, c9},                 {10, "domination", 300, c10},
      {11, "AUTH completeness and desync trend", 300, c11},
      {12, "key exchange", 120, c12}};
  // Optional arguments pick criteria by number; default is all of them.
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int unexpected = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.fn(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.require(secs < c.budget_s, "runtime");
    const bool known = kKnownFailures.count(c.id) > 0;
    std::printf("%s %2d %s (%.2fs / %.0fs): %s%s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, c.budget_s,
                o.detail.str().c_str(), !o.pass && known ? " [known]" : "");
    std::fflush(stdout);
    if (!o.pass && !known) ++unexpected;
  }
  return unexpected == 0 ? 0 : 1;
}
