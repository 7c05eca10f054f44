#include "qpv/auth.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <stdexcept>

#include "qpv/adversary.hpp"
#include "qpv/error.hpp"

namespace qpv {

void AuthParams::validate() const {
  if (!(pv_soundness >= 0.0 && pv_soundness < 1.0)) throw ConfigError("pv_soundness", "must lie in [0, 1)");
  const double hi = (1.0 - pv_soundness) / 8.0;
  if (!(q > 0.0 && q < hi)) {
    throw ConfigError("q", "must lie in (0, " + std::to_string(hi) + ") for soundness " + std::to_string(pv_soundness));
  }
  if (lambda < 1) throw ConfigError("lambda", "must be at least 1");
}

AuthParams AuthParams::with_default_q(std::size_t lambda, double pv_soundness) {
  AuthParams p;
  p.lambda = lambda;
  p.pv_soundness = pv_soundness;
  p.q = (1.0 - pv_soundness) / 16.0;
  return p;
}

// ---------------------------------------------------------------- wAUTH

WauthResult wauth_round(int m_verifier, ProverStrategy& prover, const AuthParams& params, const Layout& layout,
                        const TimingConfig& cfg, AdversaryModel model, Rng& rng) {
  (void)params;
  RoundSpec spec;
  spec.shares = layout.verifiers.size() - 1;
  spec.accept_bottom = m_verifier == 0;
  WauthResult r;
  r.verdict = pv_round(layout, prover, cfg, model, spec, rng);
  r.tag = r.verdict.verifiers[0].reply;
  return r;
}

std::unique_ptr<ProverStrategy> wauth_prover(int m, const AuthParams& params) {
  return std::make_unique<HonestProver>(m == 0 ? params.q : 0.0);
}

std::vector<Position> SubstitutionRelay::positions(const Layout& layout) const {
  std::vector<Position> out;
  for (const auto& v : layout.verifiers) {
    std::vector<double> c(v.dim());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = 0.5 * (v.coords[i] + layout.prover.coords[i]);
    out.emplace_back(std::move(c));
  }
  return out;
}

void SubstitutionRelay::install(RoundContext& ctx) {
  const std::size_t n = ctx.layout.verifiers.size();
  ctx.engine.place(kHonestProver, ctx.layout.prover);
  auto received = std::make_shared<std::size_t>(0);
  auto theta = std::make_shared<int>(0);
  auto qubit = std::make_shared<Qubit>();
  const double q = q_;
  ctx.engine.on(kHonestProver, [&ctx, n, received, theta, qubit, q](Delivery& d, EventEngine& e) {
    if (!d.payload.qubits.empty()) *qubit = std::move(d.payload.qubits.front());
    for (int b : d.payload.bits) *theta ^= b;
    if (++*received < n) return;
    int value = ctx.store.measure_bb84(std::move(*qubit), *theta, ctx.rng);
    if (q > 0.0 && ctx.rng.uniform() < q) value = kBottom;
    for (std::size_t i = 0; i < n; ++i) {
      e.send(kHonestProver, kFirstAdversary + static_cast<PartyId>(i), d.arrival_time, Payload{"tag", {value}, {}});
    }
  });
  // Agreed in advance, so every relay substitutes the same bit.
  const int guess = ctx.rng.bit();
  const bool replace = replace_;
  for (std::size_t i = 0; i < n; ++i) {
    const PartyId self = kFirstAdversary + static_cast<PartyId>(i);
    ctx.engine.on(self, [self, i, guess, replace](Delivery& d, EventEngine& e) {
      int value = d.payload.bits.at(0);
      if (value == kBottom && replace) value = guess;
      e.send(self, static_cast<PartyId>(i), d.arrival_time, Payload{"reply", {value}, {}});
    });
  }
}

double wauth_substitution_bound(double q, double eps) {
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("wauth_substitution_bound: q must lie in (0, 1)");
  if (!(eps >= 0.0 && eps < 1.0)) throw std::invalid_argument("wauth_substitution_bound: eps must lie in [0, 1)");
  return 1.0 - q * (1.0 - eps);
}

// ---------------------------------------------------------------- codes

bool is_embedding(const Embedding& e, const Codeword& c) {
  if (e.size() != 2 * c.size()) return false;
  std::size_t k = 0;
  for (int s : e) {
    if (s == kDagger) continue;
    if ((s != 0 && s != 1) || k >= c.size() || c[k] != s) return false;
    ++k;
  }
  return k == c.size();
}

Codeword BalancedRepetitionCode::encode(const std::vector<int>& message) const {
  if (message.size() != mu) throw std::invalid_argument("BalancedRepetitionCode: message length must be mu");
  Codeword out;
  out.reserve(length());
  for (int m : message) {
    if (m != 0 && m != 1) throw std::invalid_argument("BalancedRepetitionCode: message bits must be 0 or 1");
    out.insert(out.end(), ell, m);
    out.insert(out.end(), ell, 1 - m);
  }
  return out;
}

std::vector<Codeword> BalancedRepetitionCode::codewords() const {
  if (mu > 20) throw std::invalid_argument("BalancedRepetitionCode: too many codewords to list");
  std::vector<Codeword> out;
  for (std::uint64_t v = 0; v < (std::uint64_t{1} << mu); ++v) {
    std::vector<int> m(mu);
    for (std::size_t i = 0; i < mu; ++i) m[i] = static_cast<int>((v >> (mu - 1 - i)) & 1U);
    out.push_back(encode(m));
  }
  return out;
}

std::size_t hard_ones(const Embedding& e, const Embedding& e_prime) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < e.size(); ++i) n += (e_prime[i] == 1 && e[i] < 1) ? 1 : 0;
  return n;
}

std::size_t impersonated(const Embedding& e, const Embedding& e_prime) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < e.size(); ++i) n += (e_prime[i] != kDagger && e[i] == kDagger) ? 1 : 0;
  return n;
}

bool dominance_holds(const Embedding& e, const Embedding& e_prime, std::size_t lambda) {
  if (hard_ones(e, e_prime) >= lambda) return true;
  const std::size_t n = e.size() / 2;
  return n >= 4 * lambda && impersonated(e, e_prime) >= lambda;
}

namespace {

void check_pair(const Codeword& c, const Codeword& c_prime, std::size_t lambda) {
  if (c.size() != c_prime.size()) throw std::invalid_argument("dominates: codewords differ in length");
  if (c.empty()) throw std::invalid_argument("dominates: empty codeword");
  if (lambda < 1) throw std::invalid_argument("dominates: lambda must be at least 1");
  for (const auto* w : {&c, &c_prime}) {
    for (int b : *w) {
      if (b != 0 && b != 1) throw std::invalid_argument("dominates: codeword bits must be 0 or 1");
    }
  }
}

struct Placement {
  std::uint32_t used;  // positions carrying a codeword bit
  std::uint32_t ones;
};

std::vector<Placement> placements(const Codeword& c) {
  const std::size_t n = c.size();
  const std::uint32_t full = (std::uint32_t{1} << (2 * n)) - 1;
  std::vector<Placement> out;
  for (std::uint32_t m = 0; m <= full; ++m) {
    if (static_cast<std::size_t>(std::popcount(m)) != n) continue;
    Placement p{m, 0};
    std::size_t k = 0;
    for (std::size_t i = 0; i < 2 * n; ++i) {
      const std::uint32_t bit = std::uint32_t{1} << i;
      if (m & bit) {
        if (c[k++]) p.ones |= bit;
      }
    }
    out.push_back(p);
  }
  return out;
}

Embedding unpack(const Placement& p, std::size_t n) {
  Embedding e(2 * n, kDagger);
  for (std::size_t i = 0; i < 2 * n; ++i) {
    const std::uint32_t bit = std::uint32_t{1} << i;
    if (p.used & bit) e[i] = (p.ones & bit) ? 1 : 0;
  }
  return e;
}

}  // namespace

DominationResult dominates_exhaustive(const Codeword& c, const Codeword& c_prime, std::size_t lambda) {
  check_pair(c, c_prime, lambda);
  const std::size_t n = c.size();
  if (2 * n > 30) throw std::invalid_argument("dominates_exhaustive: codewords too long");
  const auto pe = placements(c);
  const auto pf = placements(c_prime);
  const bool b_possible = n >= 4 * lambda;
  DominationResult r;
  r.method = "exhaustive";
  for (const auto& f : pf) {
    for (const auto& e : pe) {
      ++r.explored;
      const auto a = static_cast<std::size_t>(std::popcount(f.ones & ~e.ones));
      if (a >= lambda) continue;
      if (b_possible && static_cast<std::size_t>(std::popcount(f.used & ~e.used)) >= lambda) continue;
      r.verdict = DominationVerdict::Counterexample;
      r.witness = std::make_pair(unpack(e, n), unpack(f, n));
      return r;
    }
  }
  return r;
}

DominationResult dominates_search(const Codeword& c, const Codeword& c_prime, std::size_t lambda,
                                  std::uint64_t budget) {
  check_pair(c, c_prime, lambda);
  // Scan positions left to right. A state is (i, k, k', a, b): i positions
  // filled, k and k' codeword bits placed, a and b the running counts for
  // conditions (a) and (b). States where either count has reached lambda can
  // no longer lead to a counterexample and are dropped.
  const std::size_t n = c.size();
  const std::size_t len = 2 * n;
  const bool b_possible = n >= 4 * lambda;
  const std::size_t nb = b_possible ? lambda : 1;
  auto index = [&](std::size_t i, std::size_t k, std::size_t kp, std::size_t a, std::size_t b) {
    return (((i * (n + 1) + k) * (n + 1) + kp) * lambda + a) * nb + b;
  };
  const std::size_t total = (len + 1) * (n + 1) * (n + 1) * lambda * nb;
  constexpr std::uint64_t kUnseen = std::numeric_limits<std::uint64_t>::max();
  std::vector<std::uint64_t> parent(total, kUnseen);
  std::vector<std::uint8_t> choice(total, 0);

  DominationResult r;
  r.method = "search";
  std::vector<std::size_t> stack = {index(0, 0, 0, 0, 0)};
  parent[stack[0]] = stack[0];
  std::optional<std::size_t> goal;
  while (!stack.empty()) {
    const std::size_t s = stack.back();
    stack.pop_back();
    if (++r.explored > budget) {
      r.verdict = DominationVerdict::BudgetExhausted;
      return r;
    }
    std::size_t rest = s;
    const std::size_t b = rest % nb;
    rest /= nb;
    const std::size_t a = rest % lambda;
    rest /= lambda;
    const std::size_t kp = rest % (n + 1);
    rest /= n + 1;
    const std::size_t k = rest % (n + 1);
    const std::size_t i = rest / (n + 1);
    if (i == len) {
      if (k == n && kp == n) {
        goal = s;
        break;
      }
      continue;
    }
    for (std::uint8_t ch = 0; ch < 4; ++ch) {
      const bool place_e = ch & 1U, place_f = ch & 2U;
      const std::size_t k2 = k + (place_e ? 1 : 0), kp2 = kp + (place_f ? 1 : 0);
      if (k2 > n || kp2 > n) continue;
      const std::size_t left = len - i - 1;
      if (n - k2 > left || n - kp2 > left) continue;
      const int ei = place_e ? c[k] : kDagger;
      const int fi = place_f ? c_prime[kp] : kDagger;
      const std::size_t a2 = a + ((fi == 1 && ei < 1) ? 1 : 0);
      const std::size_t b2 = b + ((b_possible && fi != kDagger && ei == kDagger) ? 1 : 0);
      if (a2 >= lambda || (b_possible && b2 >= lambda)) continue;
      const std::size_t t = index(i + 1, k2, kp2, a2, b2);
      if (parent[t] != kUnseen) continue;
      parent[t] = s;
      choice[t] = ch;
      stack.push_back(t);
    }
  }
  if (!goal) return r;
  r.verdict = DominationVerdict::Counterexample;
  Embedding e(len, kDagger), f(len, kDagger);
  std::vector<std::uint8_t> path;
  for (std::size_t s = *goal; parent[s] != s; s = parent[s]) path.push_back(choice[s]);
  std::reverse(path.begin(), path.end());
  std::size_t k = 0, kp = 0;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (path[i] & 1U) e[i] = c[k++];
    if (path[i] & 2U) f[i] = c_prime[kp++];
  }
  r.witness = std::make_pair(std::move(e), std::move(f));
  return r;
}

DominationResult dominates(const Codeword& c, const Codeword& c_prime, std::size_t lambda, std::uint64_t budget,
                           std::size_t exhaustive_cap) {
  if (2 * c.size() <= exhaustive_cap) return dominates_exhaustive(c, c_prime, lambda);
  return dominates_search(c, c_prime, lambda, budget);
}

DominationResult code_dominates(const std::vector<Codeword>& code, std::size_t lambda, std::uint64_t budget,
                                std::size_t exhaustive_cap) {
  DominationResult total;
  for (std::size_t a = 0; a < code.size(); ++a) {
    for (std::size_t b = 0; b < code.size(); ++b) {
      if (a == b) continue;
      DominationResult r = dominates(code[a], code[b], lambda, budget, exhaustive_cap);
      total.explored += r.explored;
      total.method = r.method;
      if (r.verdict != DominationVerdict::Dominates) {
        r.explored = total.explored;
        return r;
      }
    }
  }
  return total;
}

// ---------------------------------------------------------------- AUTH

std::unique_ptr<ProverStrategy> DesyncAdversary::impersonate(int, const AuthParams&) {
  return std::make_unique<MeasureAndRelayAttack>(MeasureAndRelayAttack::Basis::Breidbart);
}

std::unique_ptr<ProverStrategy> DesyncAdversary::substitute(int c, int c_prime, const AuthParams& params) {
  return std::make_unique<SubstitutionRelay>(c, params, c_prime == 1);
}

std::size_t n_bottom(const Codeword& c, const std::vector<int>& tags, std::size_t j, std::size_t lambda) {
  if (j < 1 || j > c.size() || tags.size() != c.size()) throw std::out_of_range("n_bottom: index out of range");
  const std::size_t lo = j > 4 * lambda ? j - 4 * lambda : 1;
  std::size_t n = 0;
  for (std::size_t i = lo; i <= j; ++i) n += (c[i - 1] == 0 && tags[i - 1] == kBottom) ? 1 : 0;
  return n;
}

AuthResult auth_run(const Codeword& c, const Codeword& c_prime, const AuthParams& params, const Schedule& schedule,
                    AuthAdversary* adversary, const Layout& layout, const TimingConfig& cfg, Rng& rng) {
  params.validate();
  if (c.size() != c_prime.size() || c.empty()) throw std::invalid_argument("auth_run: codeword lengths differ");
  const std::size_t n = c.size();
  AuthResult r;
  r.tags.assign(n, -1);
  bool alive = true;
  std::size_t j = 0, jp = 0;

  auto verifier_round = [&](ProverStrategy& strategy) {
    const WauthResult w = wauth_round(c_prime[jp], strategy, params, layout, cfg, AdversaryModel::NoPE, rng);
    ++r.wauth_rounds;
    r.tags[jp] = w.tag ? *w.tag : -1;
    const std::size_t idx = jp + 1;
    if (!w.verdict.joint_accept) {
      alive = false;
      r.failed_at = idx;
      r.reason = w.verdict.aborted ? "wAUTH aborted: " + w.verdict.abort_reason : "wAUTH rejected";
      return;
    }
    if (idx > params.window() &&
        static_cast<double>(n_bottom(c_prime, r.tags, idx, params.lambda)) > params.threshold()) {
      alive = false;
      r.failed_at = idx;
      r.reason = "too many erasures in window";
    }
  };

  for (AuthAction act : schedule) {
    switch (act) {
      case AuthAction::Impersonate: {
        if (!adversary) throw std::invalid_argument("auth_run: an honest run cannot impersonate");
        if (jp >= n) throw std::invalid_argument("auth_run: schedule runs past the verifiers' codeword");
        r.e.push_back(kDagger);
        r.e_prime.push_back(c_prime[jp]);
        if (alive) {
          auto s = adversary->impersonate(c_prime[jp], params);
          verifier_round(*s);
        }
        ++jp;
        break;
      }
      case AuthAction::Substitute: {
        if (jp >= n || j >= n) throw std::invalid_argument("auth_run: schedule runs past a codeword");
        r.e.push_back(c[j]);
        r.e_prime.push_back(c_prime[jp]);
        if (alive) {
          auto s = adversary ? adversary->substitute(c[j], c_prime[jp], params) : wauth_prover(c[j], params);
          verifier_round(*s);
        }
        ++j;
        ++jp;
        break;
      }
      case AuthAction::FastForward: {
        if (!adversary) throw std::invalid_argument("auth_run: an honest run cannot fast-forward");
        if (j >= n) throw std::invalid_argument("auth_run: schedule runs past the prover's codeword");
        r.e.push_back(c[j]);
        r.e_prime.push_back(kDagger);
        ++j;
        break;
      }
      default:
        throw std::invalid_argument("auth_run: unknown action");
    }
  }
  for (; j < n; ++j) {
    r.e.push_back(c[j]);
    r.e_prime.push_back(kDagger);
  }
  r.e.resize(2 * n, kDagger);
  r.e_prime.resize(2 * n, kDagger);
  r.completed = jp == n;
  if (alive && !r.completed) r.reason = "verifiers did not finish";
  r.accept = alive && r.completed;
  return r;
}

Schedule aligned_schedule(std::size_t n) { return Schedule(n, AuthAction::Substitute); }

Schedule desync_schedule(std::size_t n) {
  Schedule s = {AuthAction::Impersonate};
  s.insert(s.end(), n - 1, AuthAction::Substitute);
  return s;
}

Schedule random_schedule(std::size_t n, Rng& rng) {
  Schedule s;
  std::size_t j = 0, jp = 0;
  while (j < n || jp < n) {
    std::vector<AuthAction> ok;
    if (jp < n) ok.push_back(AuthAction::Impersonate);
    if (j < n && jp < n) ok.push_back(AuthAction::Substitute);
    if (j < n) ok.push_back(AuthAction::FastForward);
    const AuthAction a = ok[rng.below(ok.size())];
    s.push_back(a);
    if (a != AuthAction::FastForward) ++jp;
    if (a != AuthAction::Impersonate) ++j;
  }
  return s;
}

AuthResult auth_message(const std::vector<int>& m, const std::vector<int>& m_prime,
                        const BalancedRepetitionCode& code, const AuthParams& params, const Schedule& schedule,
                        AuthAdversary* adversary, const Layout& layout, const TimingConfig& cfg, Rng& rng) {
  params.validate();
  if (4 * params.lambda > code.ell) {
    throw ConfigError("lambda", "the balanced repetition code is only ell/4-dominating; need 4 lambda <= ell");
  }
  return auth_run(code.encode(m), code.encode(m_prime), params, schedule, adversary, layout, cfg, rng);
}

// ---------------------------------------------------------------- key exchange

KeyExchangeResult key_exchange(const Layout& layout, const TimingConfig& cfg, const KeyExchangeParams& params,
                               bool tamper, Rng& rng) {
  layout.validate();
  params.auth.validate();
  if (params.raw_rounds < 1) throw ConfigError("raw_rounds", "need at least one raw round");
  const std::size_t n = params.raw_rounds;
  KeyExchangeResult out;

  // Raw phase: V0 sends H^alpha |x> one qubit at a time.
  std::vector<int> x(n), alpha(n), beta(n), y(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.bit();
    alpha[i] = rng.bit();
    beta[i] = rng.bit();
  }
  // One qubit in flight at a time keeps the joint state small.
  QuantumStore store;
  for (std::size_t i = 0; i < n; ++i) {
    EventEngine engine;
    engine.place(0, layout.verifiers[0]);
    engine.place(kHonestProver, layout.prover);
    engine.on(kHonestProver, [&](Delivery& d, EventEngine&) {
      y[i] = store.measure_bb84(std::move(d.payload.qubits.at(0)), beta[i], rng);
    });
    Register q;
    q.push_back(store.allocate_zero());
    if (x[i]) store.apply(gates::pauli_x(), q[0]);
    if (alpha[i]) store.apply(gates::hadamard(), q[0]);
    engine.send(0, kHonestProver, 0.0, Payload{"bb84", {static_cast<int>(i)}, std::move(q)});
    engine.run();
  }

  // V0 announces alpha without authentication.
  std::vector<int> alpha_seen = alpha;
  if (tamper) {
    out.tampered_index = static_cast<std::size_t>(rng.below(n));
    alpha_seen[*out.tampered_index] ^= 1;
  }

  // The prover sends (beta, alpha as received) and authenticates it; the
  // verifiers hold (beta, alpha).
  std::vector<int> m = beta, m_prime = beta;
  m.insert(m.end(), alpha_seen.begin(), alpha_seen.end());
  m_prime.insert(m_prime.end(), alpha.begin(), alpha.end());
  const BalancedRepetitionCode code{params.ell, m.size()};
  const AuthResult auth =
      auth_message(m, m_prime, code, params.auth, aligned_schedule(code.length()), nullptr, layout, cfg, rng);
  out.auth_accept = auth.accept;
  out.wauth_rounds = auth.wauth_rounds;

  for (std::size_t i = 0; i < n; ++i) {
    if (alpha_seen[i] == beta[i]) out.prover_key.push_back(y[i]);
    if (alpha[i] == beta[i]) {
      ++out.sifted;
      if (auth.accept) out.verifier_key.push_back(x[i]);
    }
  }
  return out;
}

std::string to_hex(const std::vector<int>& bits) {
  static const char* kDigits = "0123456789abcdef";
  std::string s;
  for (std::size_t i = 0; i < bits.size(); i += 4) {
    int v = 0;
    for (std::size_t k = 0; k < 4; ++k) v = (v << 1) | (i + k < bits.size() ? (bits[i + k] & 1) : 0);
    s.push_back(kDigits[v]);
  }
  return s;
}

}  // namespace qpv
