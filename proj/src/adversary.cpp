#include "qpv/adversary.hpp"

#include <cmath>

#include "qpv/error.hpp"
#include "qpv/pauli.hpp"

namespace qpv {

namespace {

Position lerp(const Position& a, const Position& b, double t) {
  std::vector<double> c(a.dim());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = a.coords[i] + t * (b.coords[i] - a.coords[i]);
  return Position(std::move(c));
}

void reply(EventEngine& e, PartyId from, PartyId verifier, double t, int value) {
  e.send(from, verifier, t, Payload{"reply", {value}, {}});
}

}  // namespace

Matrix breidbart_basis() { return gates::rotation_basis(M_PI / 8.0); }

double breidbart_success_exact() {
  const Matrix b = breidbart_basis();
  double p = 0.0;
  for (int theta = 0; theta < 2; ++theta) {
    for (int x = 0; x < 2; ++x) {
      Statevector s = Statevector::basis_state(1, static_cast<std::uint64_t>(x));
      s.apply(gates::basis_change(theta), {0});
      const cplx overlap = b.col(x).dot(Eigen::Vector2cd(s.amplitude(0), s.amplitude(1)));
      p += 0.25 * std::norm(overlap);
    }
  }
  return p;
}

std::vector<Position> TwoSidedAttack::positions(const Layout& layout) const {
  if (at_) return {(*at_)[0], (*at_)[1]};
  if (layout.verifiers.size() != 2) throw ConfigError("verifiers", "two-sided attacks need exactly two verifiers");
  return {lerp(layout.verifiers[0], layout.prover, 0.5), lerp(layout.verifiers[1], layout.prover, 0.5)};
}

void MeasureAndRelayAttack::install(RoundContext& ctx) {
  const Basis basis = basis_;
  ctx.engine.on(kNear0, [&ctx, basis](Delivery& d, EventEngine& e) {
    if (d.payload.qubits.empty()) return;
    const Matrix m = basis == Basis::Breidbart ? breidbart_basis() : gates::basis_change(ctx.rng.bit());
    const int b = ctx.store.measure(std::move(d.payload.qubits.front()), m, ctx.rng);
    reply(e, kNear0, 0, d.arrival_time, b);
    e.send(kNear0, kNear1, d.arrival_time, Payload{"relay", {b}, {}});
  });
  ctx.engine.on(kNear1, [](Delivery& d, EventEngine& e) {
    if (d.payload.kind == "relay") reply(e, kNear1, 1, d.arrival_time, d.payload.bits.at(0));
  });
}

void StoreAndWaitAttack::install(RoundContext& ctx) {
  auto held = std::make_shared<Qubit>();
  ctx.engine.on(kNear0, [&ctx, held](Delivery& d, EventEngine& e) {
    if (d.payload.kind == "challenge") {
      *held = std::move(d.payload.qubits.at(0));
    } else if (d.payload.kind == "theta") {
      const int x = ctx.store.measure_bb84(std::move(*held), d.payload.bits.at(0), ctx.rng);
      reply(e, kNear0, 0, d.arrival_time, x);
      e.send(kNear0, kNear1, d.arrival_time, Payload{"relay", {x}, {}});
    }
  });
  ctx.engine.on(kNear1, [](Delivery& d, EventEngine& e) {
    if (d.payload.kind == "challenge") {
      e.send(kNear1, kNear0, d.arrival_time, Payload{"theta", {d.payload.bits.at(0)}, {}});
    } else if (d.payload.kind == "relay") {
      reply(e, kNear1, 1, d.arrival_time, d.payload.bits.at(0));
    }
  });
}

void ForwardAttack::install(RoundContext& ctx) {
  struct State {
    Qubit q;
    std::optional<int> theta;
  };
  auto st = std::make_shared<State>();
  ctx.engine.on(kNear0, [](Delivery& d, EventEngine& e) {
    if (d.payload.kind == "challenge") {
      e.send(kNear0, kNear1, d.arrival_time, Payload{"qubit", {}, std::move(d.payload.qubits)});
    } else if (d.payload.kind == "relay") {
      reply(e, kNear0, 0, d.arrival_time, d.payload.bits.at(0));
    }
  });
  ctx.engine.on(kNear1, [&ctx, st](Delivery& d, EventEngine& e) {
    if (d.payload.kind == "challenge") st->theta = d.payload.bits.at(0);
    if (d.payload.kind == "qubit") st->q = std::move(d.payload.qubits.at(0));
    if (!st->theta || !st->q.valid()) return;
    const int x = ctx.store.measure_bb84(std::move(st->q), *st->theta, ctx.rng);
    reply(e, kNear1, 1, d.arrival_time, x);
    e.send(kNear1, kNear0, d.arrival_time, Payload{"relay", {x}, {}});
  });
}

void TeleportPreSharedAttack::install(RoundContext& ctx) {
  struct State {
    Qubit h0, h1;
    int k = 0;
    int x2 = 0;
    int theta = 0;
  };
  auto st = std::make_shared<State>();
  auto [h0, h1] = ctx.share_epr();
  st->h0 = std::move(h0);
  st->h1 = std::move(h1);
  const std::optional<int> forced = forced_k_;
  ctx.engine.on(kNear0, [&ctx, st, forced](Delivery& d, EventEngine& e) {
    if (d.payload.kind == "challenge") {
      st->k = ctx.store.bell_measure(std::move(d.payload.qubits.at(0)), std::move(st->h0), ctx.rng, forced);
      e.send(kNear0, kNear1, d.arrival_time, Payload{"k", {st->k}, {}});
    } else if (d.payload.kind == "xt") {
      const int x2 = d.payload.bits.at(0), theta = d.payload.bits.at(1);
      reply(e, kNear0, 0, d.arrival_time, x2 ^ bb84_flip(st->k, theta));
    }
  });
  ctx.engine.on(kNear1, [&ctx, st](Delivery& d, EventEngine& e) {
    if (d.payload.kind == "challenge") {
      st->theta = d.payload.bits.at(0);
      st->x2 = ctx.store.measure_bb84(std::move(st->h1), st->theta, ctx.rng);
      e.send(kNear1, kNear0, d.arrival_time, Payload{"xt", {st->x2, st->theta}, {}});
    } else if (d.payload.kind == "k") {
      reply(e, kNear1, 1, d.arrival_time, st->x2 ^ bb84_flip(d.payload.bits.at(0), st->theta));
    }
  });
}

void SplitStrategy::validate() const {
  if (n_e0 < 1 || n_e1 < 1 || n_e0 > kMaxQubitsPerSide || n_e1 > kMaxQubitsPerSide) {
    throw ConfigError("split", "each side needs 1.." + std::to_string(kMaxQubitsPerSide) + " qubits");
  }
  const auto dim = static_cast<Eigen::Index>(std::size_t{1} << (n_e0 + n_e1));
  if (isometry.rows() != dim || !gates::is_unitary(isometry)) {
    throw ConfigError("split", "isometry must be a unitary on the input and its ancillas");
  }
  for (int t = 0; t < 2; ++t) {
    if (!gates::is_unitary(measure_e0[t]) || measure_e0[t].rows() != (Eigen::Index{1} << n_e0) ||
        !gates::is_unitary(measure_e1[t]) || measure_e1[t].rows() != (Eigen::Index{1} << n_e1)) {
      throw ConfigError("split", "per-basis measurement must be a unitary on its side");
    }
  }
}

SplitStrategy SplitStrategy::random(std::size_t n_e0, std::size_t n_e1, Rng& rng) {
  SplitStrategy s;
  s.n_e0 = n_e0;
  s.n_e1 = n_e1;
  s.isometry = random_unitary(std::size_t{1} << (n_e0 + n_e1), rng);
  for (int t = 0; t < 2; ++t) {
    s.measure_e0[t] = random_unitary(std::size_t{1} << n_e0, rng);
    s.measure_e1[t] = random_unitary(std::size_t{1} << n_e1, rng);
  }
  s.validate();
  return s;
}

CitInstance SplitStrategy::cit_instance() const {
  Statevector s = make_epr().tensor(Statevector(n_e0 + n_e1 - 1));
  std::vector<std::size_t> targets;
  for (std::size_t q = 1; q <= n_e0 + n_e1; ++q) targets.push_back(q);
  s.apply(isometry, targets);
  return CitInstance{s, 1, n_e0, n_e1, 0};
}

void SplitAttack::install(RoundContext& ctx) {
  struct State {
    Register e0, e1;
    std::optional<int> theta;
  };
  auto st = std::make_shared<State>();
  const SplitStrategy& s = s_;
  auto readout = [&ctx](Register& reg, const Matrix& u) {
    ctx.store.apply(u, reg);
    return ctx.store.measure(std::move(reg.front()), gates::identity(), ctx.rng);
  };
  ctx.engine.on(kNear0, [&ctx, &s, st, readout](Delivery& d, EventEngine& e) {
    if (d.payload.kind == "challenge") {
      Register all;
      all.push_back(std::move(d.payload.qubits.at(0)));
      for (auto& q : ctx.store.allocate(Statevector(s.n_e0 + s.n_e1 - 1))) all.push_back(std::move(q));
      ctx.store.apply(s.isometry, all);
      Register e1;
      for (std::size_t i = 0; i < all.size(); ++i) {
        if (i < s.n_e0) {
          st->e0.push_back(std::move(all[i]));
        } else {
          e1.push_back(std::move(all[i]));
        }
      }
      e.send(kNear0, kNear1, d.arrival_time, Payload{"split", {}, std::move(e1)});
    } else if (d.payload.kind == "theta") {
      const int t = d.payload.bits.at(0);
      reply(e, kNear0, 0, d.arrival_time, readout(st->e0, s.measure_e0[t]));
    }
  });
  ctx.engine.on(kNear1, [&s, st, readout](Delivery& d, EventEngine& e) {
    if (d.payload.kind == "challenge") {
      st->theta = d.payload.bits.at(0);
      e.send(kNear1, kNear0, d.arrival_time, Payload{"theta", {*st->theta}, {}});
    } else if (d.payload.kind == "split") {
      st->e1 = std::move(d.payload.qubits);
    }
    if (st->theta && !st->e1.empty()) {
      reply(e, kNear1, 1, d.arrival_time, readout(st->e1, s.measure_e1[*st->theta]));
      st->e1.clear();
    }
  });
}

std::vector<Position> DdimBreidbartAttack::positions(const Layout& layout) const {
  return {lerp(layout.verifiers.at(0), layout.prover, fraction_)};
}

void DdimBreidbartAttack::install(RoundContext& ctx) {
  // The leaked shares are XOR-independent of theta without V1's share, so
  // they cannot sharpen the measurement; the attack records and ignores them.
  const std::vector<int> leaked = ctx.free_shares();
  (void)leaked;
  const std::size_t n_ver = ctx.layout.verifiers.size();
  ctx.engine.on(kFirstAdversary, [&ctx, n_ver](Delivery& d, EventEngine& e) {
    if (d.payload.qubits.empty()) return;
    const int b = ctx.store.measure(std::move(d.payload.qubits.front()), breidbart_basis(), ctx.rng);
    for (std::size_t i = 0; i < n_ver; ++i) reply(e, kFirstAdversary, static_cast<PartyId>(i), d.arrival_time, b);
  });
}

StrategyFactory attack_factory(const std::string& id) {
  if (id == "honest") return [] { return std::make_unique<HonestProver>(); };
  if (id == "breidbart") {
    return [] { return std::make_unique<MeasureAndRelayAttack>(MeasureAndRelayAttack::Basis::Breidbart); };
  }
  if (id == "random_basis") {
    return [] { return std::make_unique<MeasureAndRelayAttack>(MeasureAndRelayAttack::Basis::Random); };
  }
  if (id == "store_and_wait") return [] { return std::make_unique<StoreAndWaitAttack>(); };
  if (id == "forward") return [] { return std::make_unique<ForwardAttack>(); };
  if (id == "teleport_pre_shared") return [] { return std::make_unique<TeleportPreSharedAttack>(); };
  if (id == "ddim_breidbart") return [] { return std::make_unique<DdimBreidbartAttack>(); };
  throw ConfigError("attack", "unknown attack id '" + id + "'");
}

}  // namespace qpv
