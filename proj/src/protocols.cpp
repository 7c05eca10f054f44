#include "qpv/protocols.hpp"

#include <cmath>

#include "qpv/error.hpp"

namespace qpv {

void Layout::validate() const {
  if (verifiers.size() < 2) throw ConfigError("verifiers", "need at least two verifiers");
  const std::size_t d = prover.dim();
  if (d == 0) throw ConfigError("prover_pos", "empty position");
  for (const auto& v : verifiers) {
    if (v.dim() != d) throw ConfigError("verifiers", "verifier and prover dimensions differ");
    v.validate();
  }
  prover.validate();
}

Layout line_layout(double pos) { return Layout{{Position{0.0}, Position{1.0}}, Position{pos}}; }

std::pair<Qubit, Qubit> RoundContext::share_epr() {
  if (model == AdversaryModel::NoPE) throw ModelViolation("pre-shared entanglement is not allowed in the No-PE model");
  if (epr_used_ >= epr_budget_) throw ModelViolation("strategy exceeded its declared entanglement budget");
  ++epr_used_;
  return store.allocate_epr();
}

std::vector<int> RoundContext::free_shares() const {
  if (challenge_.shares.size() <= 1) return {};
  return std::vector<int>(challenge_.shares.begin() + 1, challenge_.shares.end());
}

PvChallenge draw_challenge(std::size_t shares, Rng& rng, std::optional<int> forced_theta, std::optional<int> forced_x) {
  if (shares < 1) throw std::invalid_argument("draw_challenge: need at least one share");
  PvChallenge c;
  c.theta = rng.bit();
  c.x = rng.bit();
  if (forced_theta) c.theta = *forced_theta & 1;
  if (forced_x) c.x = *forced_x & 1;
  int acc = 0;
  for (std::size_t i = 0; i + 1 < shares; ++i) {
    c.shares.push_back(rng.bit());
    acc ^= c.shares.back();
  }
  c.shares.push_back(c.theta ^ acc);
  return c;
}

void HonestProver::install(RoundContext& ctx) {
  const std::size_t expected = ctx.layout.verifiers.size();
  auto received = std::make_shared<std::size_t>(0);
  auto theta = std::make_shared<int>(0);
  auto qubit = std::make_shared<Qubit>();
  const double q = bottom_probability_;
  ctx.engine.on(kHonestProver, [&ctx, expected, received, theta, qubit, q](Delivery& d, EventEngine& e) {
    if (d.payload.kind != "challenge") return;
    if (!d.payload.qubits.empty()) *qubit = std::move(d.payload.qubits.front());
    for (int b : d.payload.bits) *theta ^= b;
    if (++*received < expected) return;
    int value = ctx.store.measure_bb84(std::move(*qubit), *theta, ctx.rng);
    if (q > 0.0 && ctx.rng.uniform() < q) value = kBottom;
    for (std::size_t i = 0; i < expected; ++i) {
      e.send(kHonestProver, static_cast<PartyId>(i), d.arrival_time, Payload{"reply", {value}, {}});
    }
  });
}

ProtocolVerdict pv_round(const Layout& layout, ProverStrategy& prover, const TimingConfig& cfg,
                         AdversaryModel model, const RoundSpec& spec, Rng& rng) {
  layout.validate();
  cfg.validate();
  const std::size_t n_ver = layout.verifiers.size();
  if (spec.shares + 1 != n_ver) throw ConfigError("verifiers", "verifier count does not match the share count");
  const std::vector<double> emit = schedule_challenges(layout.verifiers, layout.prover, cfg);
  if (model == AdversaryModel::NoPE && prover.epr_budget() > 0) {
    throw ModelViolation("strategy '" + prover.id() + "' declares pre-shared entanglement");
  }
  const std::vector<Position> own = prover.positions(layout);
  if (!prover.honest()) {
    for (const auto& p : own) {
      if (distance(p, layout.prover) < cfg.delta - 1e-12) {
        throw ConfigError("adversary_pos", "adversary closer than delta to the claimed position");
      }
    }
  }

  ProtocolVerdict v;
  v.challenge = draw_challenge(spec.shares, rng, spec.forced_theta, spec.forced_x);
  v.verifiers.resize(n_ver);

  EventEngine engine;
  QuantumStore store;
  for (std::size_t i = 0; i < n_ver; ++i) engine.place(static_cast<PartyId>(i), layout.verifiers[i]);
  if (prover.honest()) {
    engine.place(kHonestProver, layout.prover);
  } else {
    for (std::size_t i = 0; i < own.size(); ++i) engine.place(kFirstAdversary + static_cast<PartyId>(i), own[i]);
  }

  RoundContext ctx(engine, store, rng, layout, cfg, model, prover.epr_budget(), v.challenge);
  prover.install(ctx);

  Qubit kept;  // V0's EPR half in the purified variant
  auto abort = [&v](const std::string& why) {
    if (!v.aborted) {
      v.aborted = true;
      v.abort_reason = why;
    }
  };
  for (std::size_t i = 0; i < n_ver; ++i) {
    engine.on(static_cast<PartyId>(i), [&, i](Delivery& d, EventEngine&) {
      if (d.payload.kind != "reply") {
        abort("unexpected message '" + d.payload.kind + "' at verifier " + std::to_string(i));
        return;
      }
      if (d.payload.bits.size() != 1 || !d.payload.qubits.empty() || d.payload.bits[0] < 0 ||
          d.payload.bits[0] > kBottom) {
        abort("malformed reply at verifier " + std::to_string(i));
        return;
      }
      VerifierRecord& rec = v.verifiers[i];
      if (rec.reply) {
        abort("duplicate reply at verifier " + std::to_string(i));
        return;
      }
      rec.reply = d.payload.bits[0];
      rec.arrival = d.arrival_time;
      rec.in_time = in_time(d.arrival_time, layout.verifiers[i], layout.prover, cfg);
      if (i == 0 && spec.purified && kept.valid()) {
        // Only now does V0 fix x by measuring its half.
        v.v0_reply_arrival = d.arrival_time;
        v.challenge.x = store.measure_bb84(std::move(kept), v.challenge.theta, rng, spec.forced_x);
        v.v0_measure_time = engine.now();
      }
    });
  }

  Register qubit;
  if (spec.purified) {
    auto [a, b] = store.allocate_epr();
    kept = std::move(a);
    qubit.push_back(std::move(b));
  } else {
    qubit.push_back(store.allocate_zero());
    if (v.challenge.x) store.apply(gates::pauli_x(), qubit[0]);
    if (v.challenge.theta) store.apply(gates::hadamard(), qubit[0]);
  }
  engine.send(0, prover.receiver_for(0), emit[0], Payload{"challenge", {}, std::move(qubit)});
  for (std::size_t i = 1; i < n_ver; ++i) {
    engine.send(static_cast<PartyId>(i), prover.receiver_for(i), emit[i],
                Payload{"challenge", {v.challenge.shares[i - 1]}, {}});
  }
  engine.run();
  if (kept.valid()) v.challenge.x = store.measure_bb84(std::move(kept), v.challenge.theta, rng, spec.forced_x);

  bool ok = !v.aborted;
  for (const auto& rec : v.verifiers) {
    if (!ok) break;
    if (!rec.reply || !rec.in_time) {
      ok = false;
    } else if (*rec.reply != *v.verifiers[0].reply) {
      abort("verifiers received different replies");
      ok = false;
    } else {
      ok = *rec.reply == v.challenge.x || (spec.accept_bottom && *rec.reply == kBottom);
    }
  }
  v.joint_accept = ok;
  if (spec.keep_transcript) v.transcript = engine.transcript();
  return v;
}

ProtocolVerdict pv_bb84_round(const Layout& layout, ProverStrategy& prover, const TimingConfig& cfg,
                              AdversaryModel model, Rng& rng) {
  if (layout.verifiers.size() != 2) throw ConfigError("verifiers", "BB84 position verification uses two verifiers");
  return pv_round(layout, prover, cfg, model, RoundSpec{}, rng);
}

ProtocolVerdict pv_bb84_purified_round(const Layout& layout, ProverStrategy& prover, const TimingConfig& cfg,
                                       AdversaryModel model, Rng& rng) {
  if (layout.verifiers.size() != 2) throw ConfigError("verifiers", "BB84 position verification uses two verifiers");
  RoundSpec spec;
  spec.purified = true;
  return pv_round(layout, prover, cfg, model, spec, rng);
}

ProtocolVerdict pv_ddim_round(const Layout& layout, ProverStrategy& prover, const TimingConfig& cfg,
                              AdversaryModel model, Rng& rng) {
  RoundSpec spec;
  spec.shares = layout.verifiers.size() - 1;
  return pv_round(layout, prover, cfg, model, spec, rng);
}

SequentialVerdict pv_sequential(std::size_t n_rounds, const Layout& layout, const StrategyFactory& make,
                                const TimingConfig& cfg, AdversaryModel model, Rng& rng) {
  if (n_rounds < 1) throw ConfigError("rounds", "need at least one round");
  SequentialVerdict out;
  out.joint_accept = true;
  for (std::size_t r = 0; r < n_rounds; ++r) {
    auto strategy = make();
    RoundSpec spec;
    spec.shares = layout.verifiers.size() - 1;
    out.rounds.push_back(pv_round(layout, *strategy, cfg, model, spec, rng));
    ++out.rounds_run;
    if (!out.rounds.back().joint_accept) {
      out.joint_accept = false;
      break;
    }
  }
  return out;
}

}  // namespace qpv
