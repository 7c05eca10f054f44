#include "qpv/generic.hpp"

#include <cmath>

#include "qpv/error.hpp"
#include "qpv/pauli.hpp"

namespace qpv {

namespace {

constexpr PartyId kAdv0 = kFirstAdversary;
constexpr PartyId kAdv1 = kFirstAdversary + 1;

Position midpoint(const Position& a, const Position& b) {
  std::vector<double> c(a.dim());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = 0.5 * (a.coords[i] + b.coords[i]);
  return Position(std::move(c));
}

Register take(Register& from, std::size_t begin, std::size_t count) {
  Register out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(std::move(from[begin + i]));
  return out;
}

void append(Register& to, Register&& from) {
  for (auto& q : from) to.push_back(std::move(q));
}

std::vector<int> read_out(QuantumStore& store, Register&& reg, Rng& rng) {
  std::vector<int> bits;
  for (auto& q : reg) bits.push_back(store.measure(std::move(q), gates::identity(), rng));
  return bits;
}

// Verifier-side replay shared by the honest run and the attack.
class Replay {
 public:
  Replay(const GenericScheme& scheme, const Layout& layout, const TimingConfig& cfg, Rng& rng)
      : scheme_(scheme), layout_(layout), cfg_(cfg), rng_(rng) {
    scheme.validate();
    layout.validate();
    cfg.validate();
    if (layout.verifiers.size() != 2) throw ConfigError("verifiers", "generic schemes use two verifiers");
    if (is_enclosed(layout.verifiers, layout.prover) != Enclosure::Enclosed) {
      throw ConfigError("prover_pos", "claimed position is not enclosed by the verifiers");
    }
    script_ = scheme.make_verifier();
    engine_.place(0, layout.verifiers[0]);
    engine_.place(1, layout.verifiers[1]);
    for (int v = 0; v < 2; ++v) {
      engine_.on(v, [this, v](Delivery& d, EventEngine&) { on_verifier(v, d); });
    }
  }

  EventEngine& engine() { return engine_; }
  QuantumStore& store() { return store_; }
  Rng& rng() { return rng_; }

  TimingConfig step_timing(std::size_t s) const {
    TimingConfig t = cfg_;
    t.T = cfg_.T + scheme_.steps[s].offset;
    return t;
  }

  // Prepares every step and schedules the inputs towards r0 / r1.
  void send_inputs(PartyId r0, PartyId r1) {
    for (std::size_t s = 0; s < scheme_.steps.size(); ++s) {
      const GenericStep& st = scheme_.steps[s];
      StepInput in = script_->prepare(s, rng_);
      if (in.state.n_qubits() != st.n_a + st.n_b + in.n_e) {
        throw std::invalid_argument("generic scheme: prepared state does not match the step's registers");
      }
      if (in.x >= st.x_count || in.y >= st.y_count) throw std::out_of_range("generic scheme: label out of range");
      Register all = store_.allocate(in.state);
      Register a = take(all, 0, st.n_a);
      Register b = take(all, st.n_a, st.n_b);
      script_->keep(s, take(all, st.n_a + st.n_b, in.n_e));
      const auto emit = schedule_challenges(layout_.verifiers, layout_.prover, step_timing(s));
      const int si = static_cast<int>(s);
      engine_.send(0, r0, emit[0], Payload{"input", {si, static_cast<int>(in.x)}, std::move(a)});
      engine_.send(1, r1, emit[1], Payload{"input", {si, static_cast<int>(in.y)}, std::move(b)});
      if (st.n_a > 0) expected_ += st.a_mode == ReplyMode::QuantumReturn ? 1 : 2;
      if (st.n_b > 0) expected_ += st.b_mode == ReplyMode::QuantumReturn ? 1 : 2;
    }
  }

  GenericOutcome finish() {
    engine_.run();
    script_->finish(store_);
    GenericOutcome out;
    out.all_in_time = all_in_time_;
    out.complete = received_ == expected_ && !malformed_;
    out.accept = out.all_in_time && out.complete && script_->accept();
    out.observation = script_->observation();
    out.transcript = engine_.transcript();
    out.verifier = std::move(script_);
    return out;
  }

 private:
  void on_verifier(int v, Delivery& d) {
    if (d.payload.bits.empty() || d.payload.bits[0] < 0 ||
        static_cast<std::size_t>(d.payload.bits[0]) >= scheme_.steps.size()) {
      malformed_ = true;
      return;
    }
    const auto s = static_cast<std::size_t>(d.payload.bits[0]);
    ++received_;
    if (!in_time(d.arrival_time, layout_.verifiers[static_cast<std::size_t>(v)], layout_.prover, step_timing(s))) {
      all_in_time_ = false;
    }
    if (d.payload.kind == "return") {
      script_->on_return(s, v, std::move(d.payload.qubits), store_, rng_);
    } else if (d.payload.kind == "readout" && d.payload.bits.size() >= 2) {
      const std::vector<int> bits(d.payload.bits.begin() + 2, d.payload.bits.end());
      script_->on_readout(s, d.payload.bits[1], v, bits);
    } else {
      malformed_ = true;
    }
  }

  const GenericScheme& scheme_;
  const Layout& layout_;
  const TimingConfig& cfg_;
  Rng& rng_;
  EventEngine engine_;
  QuantumStore store_;
  std::unique_ptr<VerifierScript> script_;
  std::size_t expected_ = 0;
  std::size_t received_ = 0;
  bool all_in_time_ = true;
  bool malformed_ = false;
};

// Sends register `reg` of `side` back as the step prescribes. Readouts go to
// both verifiers.
void hand_back(EventEngine& e, QuantumStore& store, Rng& rng, PartyId from, ReplyMode mode, int step, int side,
               Register&& reg, double t) {
  if (reg.empty()) return;
  if (mode == ReplyMode::QuantumReturn) {
    e.send(from, side, t, Payload{"return", {step}, std::move(reg)});
    return;
  }
  std::vector<int> bits = {step, side};
  for (int b : read_out(store, std::move(reg), rng)) bits.push_back(b);
  e.send(from, 0, t, Payload{"readout", bits, {}});
  e.send(from, 1, t, Payload{"readout", bits, {}});
}

}  // namespace

void GenericScheme::validate() const {
  if (steps.empty()) throw ConfigError("steps", "scheme has no steps");
  if (!make_verifier) throw ConfigError("verifier", "scheme has no verifier script");
  for (std::size_t s = 0; s < steps.size(); ++s) {
    const GenericStep& st = steps[s];
    if (!st.unitary) throw ConfigError("steps", "step " + std::to_string(s) + " has no unitary family");
    if (st.x_count < 1 || st.y_count < 1) throw ConfigError("steps", "empty label set");
    if (st.n_a + st.n_b + n_r == 0) throw ConfigError("steps", "step acts on no qubits");
    const auto dim = static_cast<Eigen::Index>(std::size_t{1} << (st.n_a + st.n_b + n_r));
    for (std::size_t x = 0; x < st.x_count; ++x) {
      for (std::size_t y = 0; y < st.y_count; ++y) {
        const Matrix u = st.unitary(x, y);
        if (u.rows() != dim || u.cols() != dim || !gates::is_unitary(u)) {
          throw ConfigError("steps", "step " + std::to_string(s) + " member is not a unitary on (A, B, R)");
        }
      }
    }
  }
}

GenericOutcome run_generic_honest(const GenericScheme& scheme, const Layout& layout, const TimingConfig& cfg,
                                  Rng& rng) {
  Replay replay(scheme, layout, cfg, rng);
  struct Pending {
    Register a, b;
    std::size_t x = 0, y = 0;
    int seen = 0;
  };
  auto pending = std::make_shared<std::vector<Pending>>(scheme.steps.size());
  auto r = std::make_shared<Register>(replay.store().allocate(Statevector(scheme.n_r)));
  replay.engine().place(kHonestProver, layout.prover);
  replay.engine().on(kHonestProver, [&, pending, r](Delivery& d, EventEngine& e) {
    const auto s = static_cast<std::size_t>(d.payload.bits.at(0));
    Pending& p = (*pending)[s];
    if (d.from == 0) {
      p.a = std::move(d.payload.qubits);
      p.x = static_cast<std::size_t>(d.payload.bits.at(1));
    } else {
      p.b = std::move(d.payload.qubits);
      p.y = static_cast<std::size_t>(d.payload.bits.at(1));
    }
    if (++p.seen < 2) return;
    const GenericStep& st = scheme.steps[s];
    std::vector<QubitId> ids = ids_of(p.a);
    for (QubitId id : ids_of(p.b)) ids.push_back(id);
    for (QubitId id : ids_of(*r)) ids.push_back(id);
    replay.store().apply(st.unitary(p.x, p.y), ids);
    const int si = static_cast<int>(s);
    hand_back(e, replay.store(), replay.rng(), kHonestProver, st.a_mode, si, 0, std::move(p.a), d.arrival_time);
    hand_back(e, replay.store(), replay.rng(), kHonestProver, st.b_mode, si, 1, std::move(p.b), d.arrival_time);
  });
  replay.send_inputs(kHonestProver, kHonestProver);
  return replay.finish();
}

GenericOutcome run_generic_inqc_attack(const GenericScheme& scheme, const Layout& layout, const TimingConfig& cfg,
                                       std::size_t rounds_cap, Rng& rng) {
  Replay replay(scheme, layout, cfg, rng);
  struct StepState {
    Register a, b;
    std::size_t x = 0, y = 0;
    double t0 = 0.0, t1 = 0.0;
    int seen = 0;
    PauliKey key_a, key_b;
    std::vector<int> raw_a, raw_b;
  };
  struct State {
    Register r;
    PauliKey pending;
    std::vector<StepState> steps;
    std::vector<InqcTranscript> inqc;
    std::vector<bool> success;
  };
  auto st = std::make_shared<State>();
  st->r = replay.store().allocate(Statevector(scheme.n_r));
  st->pending = PauliKey::identity(scheme.n_r);
  st->steps.resize(scheme.steps.size());

  const Position p0 = midpoint(layout.verifiers[0], layout.prover);
  const Position p1 = midpoint(layout.verifiers[1], layout.prover);
  for (const auto& p : {p0, p1}) {
    if (distance(p, layout.prover) < cfg.delta - 1e-12) {
      throw ConfigError("adversary_pos", "adversary closer than delta to the claimed position");
    }
  }
  replay.engine().place(kAdv0, p0);
  replay.engine().place(kAdv1, p1);

  // Both adversaries' local INQC work for step s, evaluated once the later
  // of the two inputs has arrived. Each side's crossing message carries its
  // own trigger time.
  auto joint = [&, st](std::size_t s, EventEngine& e) {
    const GenericStep& gs = scheme.steps[s];
    StepState& ss = st->steps[s];
    const std::size_t dim_ab = std::size_t{1} << (gs.n_a + gs.n_b);
    const Matrix u = gs.unitary(ss.x, ss.y) *
                     gates::kron(gates::identity(dim_ab), pauli_operator(st->pending)).adjoint();
    Register bob = std::move(ss.b);
    append(bob, std::move(st->r));
    std::vector<Register> b;
    b.push_back(std::move(bob));
    InqcRegisters res = inqc_run(replay.store(), std::move(ss.a), std::move(b), u,
                                 "s" + std::to_string(s) + "x" + std::to_string(ss.x), rounds_cap, replay.rng());
    const bool ok = res.transcript.success_round.has_value();
    Correction c;
    if (ok) {
      c = reconcile_corrections(res.transcript);
    } else {
      c.keys = {PauliKey::identity(gs.n_a), PauliKey::identity(gs.n_b + scheme.n_r)};
    }
    st->success.push_back(ok);
    st->inqc.push_back(res.transcript);
    ss.a = std::move(res.a);
    ss.b = take(res.b[0], 0, gs.n_b);
    st->r = take(res.b[0], gs.n_b, scheme.n_r);
    ss.key_a = c.keys[0];
    ss.key_b = c.keys[1].slice(0, gs.n_b);
    st->pending = c.keys[1].slice(gs.n_b, scheme.n_r);
    if (gs.a_mode == ReplyMode::ClassicalReadout) ss.raw_a = read_out(replay.store(), std::move(ss.a), replay.rng());
    if (gs.b_mode == ReplyMode::ClassicalReadout) ss.raw_b = read_out(replay.store(), std::move(ss.b), replay.rng());
    const int si = static_cast<int>(s);
    // Crossing round: each side's Bell records plus any raw readout bits.
    std::vector<int> from0 = {si};
    for (const auto& round : res.transcript.rounds) {
      for (int k : round.k.symbols) from0.push_back(k);
    }
    std::vector<int> from1 = {si};
    for (const auto& round : res.transcript.rounds) {
      for (int l : round.ell.symbols) from1.push_back(l);
    }
    e.send(kAdv0, kAdv1, ss.t0, Payload{"cross", from0, {}});
    e.send(kAdv1, kAdv0, ss.t1, Payload{"cross", from1, {}});
  };

  auto corrected_bits = [](const std::vector<int>& raw, const PauliKey& key) {
    std::vector<int> out = raw;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] ^= key.symbols[i] & 1;
    return out;
  };
  auto send_readout = [](EventEngine& e, PartyId from, PartyId to, int s, int side, const std::vector<int>& bits,
                         double t) {
    std::vector<int> payload = {s, side};
    payload.insert(payload.end(), bits.begin(), bits.end());
    e.send(from, to, t, Payload{"readout", payload, {}});
  };

  for (PartyId self : {kAdv0, kAdv1}) {
    replay.engine().on(self, [&, st, self, joint, corrected_bits, send_readout](Delivery& d, EventEngine& e) {
      const auto s = static_cast<std::size_t>(d.payload.bits.at(0));
      StepState& ss = st->steps[s];
      const GenericStep& gs = scheme.steps[s];
      const int si = static_cast<int>(s);
      if (d.payload.kind == "input") {
        if (self == kAdv0) {
          ss.a = std::move(d.payload.qubits);
          ss.x = static_cast<std::size_t>(d.payload.bits.at(1));
          ss.t0 = d.arrival_time;
        } else {
          ss.b = std::move(d.payload.qubits);
          ss.y = static_cast<std::size_t>(d.payload.bits.at(1));
          ss.t1 = d.arrival_time;
        }
        if (++ss.seen == 2) joint(s, e);
        return;
      }
      if (d.payload.kind != "cross") return;
      // The other side's records are in; fix up and answer this side's verifier.
      const int verifier = self == kAdv0 ? 0 : 1;
      if (self == kAdv0 && gs.n_a > 0) {
        if (gs.a_mode == ReplyMode::QuantumReturn) {
          for (std::size_t i = 0; i < ss.a.size(); ++i) {
            replay.store().apply(pauli_matrix(ss.key_a.symbols[i]).adjoint(), ss.a[i]);
          }
          e.send(kAdv0, 0, d.arrival_time, Payload{"return", {si}, std::move(ss.a)});
        }
      }
      if (self == kAdv1 && gs.n_b > 0) {
        if (gs.b_mode == ReplyMode::QuantumReturn) {
          for (std::size_t i = 0; i < ss.b.size(); ++i) {
            replay.store().apply(pauli_matrix(ss.key_b.symbols[i]).adjoint(), ss.b[i]);
          }
          e.send(kAdv1, 1, d.arrival_time, Payload{"return", {si}, std::move(ss.b)});
        }
      }
      if (gs.n_a > 0 && gs.a_mode == ReplyMode::ClassicalReadout) {
        send_readout(e, self, verifier, si, 0, corrected_bits(ss.raw_a, ss.key_a), d.arrival_time);
      }
      if (gs.n_b > 0 && gs.b_mode == ReplyMode::ClassicalReadout) {
        send_readout(e, self, verifier, si, 1, corrected_bits(ss.raw_b, ss.key_b), d.arrival_time);
      }
    });
  }
  replay.send_inputs(kAdv0, kAdv1);
  GenericOutcome out = replay.finish();
  out.inqc_success = st->success;
  out.inqc = st->inqc;
  for (bool ok : st->success) out.inqc_ok = out.inqc_ok && ok;
  return out;
}

GenericComparison compare_generic(const GenericScheme& scheme, const Layout& layout, const TimingConfig& cfg,
                                  std::size_t rounds_cap, std::size_t trials, std::uint64_t seed) {
  GenericComparison c;
  c.trials = trials;
  Histogram honest, attack;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rh = Rng::derive(seed, 2 * t);
    const GenericOutcome h = run_generic_honest(scheme, layout, cfg, rh);
    Rng ra = Rng::derive(seed, 2 * t + 1);
    const GenericOutcome a = run_generic_inqc_attack(scheme, layout, cfg, rounds_cap, ra);
    c.honest_accepts += h.accept ? 1 : 0;
    c.attack_accepts += a.accept ? 1 : 0;
    c.timing_ok = c.timing_ok && h.all_in_time && a.all_in_time;
    ++honest[h.observation];
    if (a.inqc_ok) {
      ++c.inqc_successes;
      c.attack_accepts_given_success += a.accept ? 1 : 0;
      ++attack[a.observation];
    }
  }
  c.chi_square = chi_square_homogeneity(honest, attack);
  return c;
}

double generic_failure_bound(const GenericScheme& scheme, std::size_t rounds_cap) {
  double total = 0.0;
  for (const auto& st : scheme.steps) {
    const double n = static_cast<double>(st.n_a + st.n_b + scheme.n_r);
    total += std::pow(1.0 - std::pow(4.0, -n), static_cast<double>(rounds_cap));
  }
  return std::min(total, 1.0);
}

// ------------------------------------------------------------ schemes

namespace {

class Bb84Script : public VerifierScript {
 public:
  StepInput prepare(std::size_t, Rng& rng) override {
    theta_ = rng.bit();
    x_ = rng.bit();
    Statevector s = Statevector::basis_state(1, static_cast<std::uint64_t>(x_));
    s.apply(gates::basis_change(theta_), {0});
    return StepInput{s, 0, 0, static_cast<std::size_t>(theta_)};
  }
  void on_return(std::size_t, int, Register, QuantumStore&, Rng&) override { bad_ = true; }
  void on_readout(std::size_t, int side, int verifier, const std::vector<int>& bits) override {
    if (side != 0 || bits.size() != 1 || r_[verifier] >= 0) {
      bad_ = true;
      return;
    }
    r_[verifier] = bits[0];
  }
  bool accept() const override { return !bad_ && r_[0] == x_ && r_[1] == x_; }
  std::vector<int> observation() const override { return {theta_, x_, r_[0], r_[1]}; }

 private:
  int theta_ = 0, x_ = 0;
  int r_[2] = {-1, -1};
  bool bad_ = false;
};

class ToyScript : public VerifierScript {
 public:
  StepInput prepare(std::size_t step, Rng& rng) override {
    if (step == 0) {
      theta_ = rng.bit();
      a_ = rng.bit();
      y1_ = rng.bit();
      Statevector s = Statevector::basis_state(1, static_cast<std::uint64_t>(a_));
      s.apply(gates::basis_change(theta_), {0});
      return StepInput{s, 0, 0, static_cast<std::size_t>(y1_)};
    }
    x2_ = rng.bit();
    y2_ = rng.bit();
    return StepInput{Statevector(1), 0, static_cast<std::size_t>(x2_), static_cast<std::size_t>(y2_)};
  }
  void on_return(std::size_t step, int verifier, Register q, QuantumStore& store, Rng& rng) override {
    if (step != 0 || verifier != 0 || q.size() != 1 || out1_ >= 0) {
      bad_ = true;
      return;
    }
    out1_ = store.measure(std::move(q[0]), gates::basis_change(y1_), rng);
  }
  void on_readout(std::size_t step, int side, int verifier, const std::vector<int>& bits) override {
    if (step != 1 || side != 0 || bits.size() != 1 || r_[verifier] >= 0) {
      bad_ = true;
      return;
    }
    r_[verifier] = bits[0];
  }
  bool accept() const override {
    if (bad_ || out1_ < 0 || r_[0] < 0 || r_[1] < 0 || r_[0] != r_[1]) return false;
    if (r_[0] != (out1_ ^ x2_ ^ y2_)) return false;
    return theta_ == 1 || out1_ == a_;
  }
  std::vector<int> observation() const override { return {theta_, a_, y1_, x2_ ^ y2_, out1_, r_[0], r_[1]}; }

 private:
  int theta_ = 0, a_ = 0, y1_ = 0, x2_ = 0, y2_ = 0;
  int out1_ = -1;
  int r_[2] = {-1, -1};
  bool bad_ = false;
};

class RandomFamilyScript : public VerifierScript {
 public:
  explicit RandomFamilyScript(std::uint64_t seed) : rng_(seed) {}
  StepInput prepare(std::size_t, Rng&) override {
    x_ = static_cast<int>(rng_.below(2));
    y_ = static_cast<int>(rng_.below(2));
    return StepInput{random_state(3, rng_), 1, static_cast<std::size_t>(x_), static_cast<std::size_t>(y_)};
  }
  void keep(std::size_t, Register e) override { e_ = std::move(e); }
  void on_return(std::size_t, int verifier, Register q, QuantumStore&, Rng&) override {
    (verifier == 0 ? a_ : b_) = std::move(q);
  }
  void on_readout(std::size_t, int, int, const std::vector<int>&) override { bad_ = true; }
  void finish(QuantumStore& store) override {
    if (a_.size() != 1 || b_.size() != 1) return;
    std::vector<QubitId> ids = {a_[0].id(), b_[0].id(), e_[0].id()};
    state_ = store.reduced(ids);
  }
  bool accept() const override { return !bad_ && state_.has_value(); }
  std::vector<int> observation() const override { return {x_, y_}; }
  const std::optional<DensityMatrix>& state() const { return state_; }

 private:
  Rng rng_;
  int x_ = 0, y_ = 0;
  Register a_, b_, e_;
  std::optional<DensityMatrix> state_;
  bool bad_ = false;
};

}  // namespace

GenericScheme bb84_generic_scheme() {
  GenericScheme g;
  g.id = "bb84_generic";
  GenericStep st;
  st.n_a = 1;
  st.y_count = 2;
  st.unitary = [](std::size_t, std::size_t y) { return gates::basis_change(static_cast<int>(y)); };
  st.a_mode = ReplyMode::ClassicalReadout;
  g.steps.push_back(st);
  g.make_verifier = [] { return std::make_unique<Bb84Script>(); };
  return g;
}

GenericScheme toy_interleaved_scheme(double step_gap) {
  GenericScheme g;
  g.id = "toy_interleaved";
  g.n_r = 1;
  GenericStep s1;
  s1.n_a = 1;
  s1.y_count = 2;
  // (A, R): copy A into R, then rotate A by H^y1.
  s1.unitary = [](std::size_t, std::size_t y1) {
    return Matrix(gates::kron(gates::basis_change(static_cast<int>(y1)), gates::identity()) * gates::cnot());
  };
  s1.a_mode = ReplyMode::QuantumReturn;
  GenericStep s2;
  s2.offset = step_gap;
  s2.n_a = 1;
  s2.x_count = 2;
  s2.y_count = 2;
  // (A2, R): A2 ^= R, then A2 ^= x2 ^ y2.
  s2.unitary = [](std::size_t x2, std::size_t y2) {
    const Matrix flip = ((x2 ^ y2) & 1U) ? gates::pauli_x() : gates::identity();
    return Matrix(gates::kron(flip, gates::identity()) * gates::swap() * gates::cnot() * gates::swap());
  };
  s2.a_mode = ReplyMode::ClassicalReadout;
  g.steps = {s1, s2};
  g.make_verifier = [] { return std::make_unique<ToyScript>(); };
  return g;
}

GenericScheme random_family_scheme(Rng& family_rng, std::uint64_t verifier_seed) {
  auto members = std::make_shared<std::vector<Matrix>>();
  for (int i = 0; i < 4; ++i) members->push_back(random_unitary(8, family_rng));
  GenericScheme g;
  g.id = "random_family";
  g.n_r = 1;
  GenericStep st;
  st.n_a = 1;
  st.n_b = 1;
  st.x_count = 2;
  st.y_count = 2;
  st.unitary = [members](std::size_t x, std::size_t y) { return (*members)[2 * x + y]; };
  g.steps.push_back(st);
  g.make_verifier = [verifier_seed] { return std::make_unique<RandomFamilyScript>(verifier_seed); };
  return g;
}

std::optional<DensityMatrix> random_family_verifier_state(const VerifierScript& v) {
  const auto* s = dynamic_cast<const RandomFamilyScript*>(&v);
  if (s == nullptr) return std::nullopt;
  return s->state();
}

}  // namespace qpv
