#include "qpv/inqc.hpp"

#include <cmath>
#include <stdexcept>

namespace qpv {

std::size_t UnitaryFamily::total_qubits() const {
  std::size_t n = n_a;
  for (std::size_t b : n_b) n += b;
  return n;
}

std::size_t UnitaryFamily::index(std::size_t x, const std::vector<std::size_t>& ys) const {
  if (ys.size() != y_counts.size()) throw std::invalid_argument("unitary family: wrong number of y inputs");
  if (x >= x_count) throw std::out_of_range("unitary family: x out of range");
  std::size_t idx = x;
  for (std::size_t p = 0; p < ys.size(); ++p) {
    if (ys[p] >= y_counts[p]) throw std::out_of_range("unitary family: y out of range");
    idx = idx * y_counts[p] + ys[p];
  }
  return idx;
}

const Matrix& UnitaryFamily::at(std::size_t x, const std::vector<std::size_t>& ys) const {
  return members.at(index(x, ys));
}

void UnitaryFamily::validate() const {
  if (n_b.size() != y_counts.size()) throw std::invalid_argument("unitary family: n_b and y_counts differ in length");
  std::size_t expected = x_count;
  for (std::size_t c : y_counts) expected *= c;
  if (members.size() != expected) throw std::invalid_argument("unitary family: wrong member count");
  const auto dim = static_cast<Eigen::Index>(std::size_t{1} << total_qubits());
  for (const auto& m : members) {
    if (m.rows() != dim || m.cols() != dim) throw std::invalid_argument("unitary family: member has wrong size");
    if (!gates::is_unitary(m)) throw std::invalid_argument("unitary family: member is not unitary within 1e-9");
  }
}

UnitaryFamily UnitaryFamily::single(Matrix u, std::size_t n_a, std::vector<std::size_t> n_b) {
  UnitaryFamily f;
  f.n_a = n_a;
  f.n_b = std::move(n_b);
  f.y_counts.assign(f.n_b.size(), 1);
  f.members.push_back(std::move(u));
  f.validate();
  return f;
}

UnitaryFamily UnitaryFamily::random(std::size_t n_a, std::vector<std::size_t> n_b, std::size_t x_count,
                                    std::vector<std::size_t> y_counts, Rng& rng) {
  UnitaryFamily f;
  f.n_a = n_a;
  f.n_b = std::move(n_b);
  f.x_count = x_count;
  f.y_counts = std::move(y_counts);
  std::size_t count = x_count;
  for (std::size_t c : f.y_counts) count *= c;
  const std::size_t dim = std::size_t{1} << f.total_qubits();
  for (std::size_t i = 0; i < count; ++i) f.members.push_back(random_unitary(dim, rng));
  f.validate();
  return f;
}

namespace {

double log2_add(double a, double b) {
  if (std::isinf(a) && a < 0) return b;
  if (std::isinf(b) && b < 0) return a;
  const double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log2(1.0 + std::exp2(lo - hi));
}

// log2 of the EPR pairs a literal implementation would hold: every round r
// needs a channel pair for each of the x_count * 4^{n(r-1)} labels Alice
// might hold, plus whatever the nested run costs per label.
double worst_case_log2(std::size_t parties, std::size_t n, std::size_t cap, double log2_labels) {
  if (parties <= 1) return -INFINITY;
  const double nested = worst_case_log2(parties - 1, n, cap, 0.0);
  const double per_label = log2_add(std::log2(2.0 * static_cast<double>(n)), nested);
  double total = -INFINITY;
  for (std::size_t r = 0; r < cap; ++r) {
    total = log2_add(total, log2_labels + 2.0 * static_cast<double>(n * r) + per_label);
  }
  return total;
}

// Polar factor by Newton iteration, w <- (w + w^-+) / 2. The inputs are
// unitary up to rounding, where this converges in one or two steps and is
// much cheaper than an SVD. Falls back to the SVD if it does not settle.
Matrix nearest_unitary(const Matrix& m) {
  const Matrix id = Matrix::Identity(m.rows(), m.cols());
  Matrix w = m;
  for (int it = 0; it < 6; ++it) {
    if ((w.adjoint() * w - id).cwiseAbs2().maxCoeff() < 1e-28) return w;
    w = 0.5 * (w + w.adjoint().partialPivLu().inverse());
  }
  if ((w.adjoint() * w - id).cwiseAbs2().maxCoeff() < 1e-24) return w;
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

// w * pauli(key)^+ as a signed column permutation.
Matrix times_pauli_adjoint(const Matrix& w, const PauliKey& key) {
  const PauliMasks pm = pauli_masks(key);
  Matrix out(w.rows(), w.cols());
  for (Eigen::Index c = 0; c < w.cols(); ++c) {
    const auto u = static_cast<std::uint64_t>(c);
    out.col(static_cast<Eigen::Index>(pm.row(u))) = w.col(c) * pm.sign(u);
  }
  return out;
}

struct CoreOut {
  Register data;
  PauliKey correction;
  bool ok = false;
  std::shared_ptr<InqcTranscript> transcript;
  std::uint64_t epr = 0;
};

CoreOut core(QuantumStore& store, Register data, Matrix w, std::size_t parties, const std::string& label,
             std::size_t cap, Rng& rng, std::optional<int> forced_first_k) {
  const std::size_t n = data.size();
  CoreOut out;
  if (parties == 1) {
    store.apply(w, data);
    out.data = std::move(data);
    out.correction = PauliKey::identity(n);
    out.ok = true;
    return out;
  }
  auto t = std::make_shared<InqcTranscript>();
  t->parties = parties;
  t->n_qubits = n;
  t->rounds_cap = cap;
  std::string current_label = label;
  for (std::size_t r = 0; r < cap; ++r) {
    InqcRound round;
    round.label = current_label;
    // Alice teleports the data to party 1 over the channel named by her label.
    Register bob_side;
    round.k.symbols.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto [ha, hb] = store.allocate_epr();
      std::optional<int> f;
      if (r == 0 && forced_first_k) f = *forced_first_k;
      round.k.symbols[i] = store.bell_measure(std::move(data[i]), std::move(ha), rng, f);
      bob_side.push_back(std::move(hb));
    }
    round.epr_pairs += n;
    // Parties 1..N-1 apply the current unitary to what arrived.
    CoreOut sub = core(store, std::move(bob_side), w, parties - 1, current_label, cap, rng, std::nullopt);
    round.nested = sub.transcript;
    round.epr_pairs += sub.epr;
    // Party 1 teleports the result back to Alice on the return channel.
    Register alice_side;
    round.ell.symbols.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto [hb, ha] = store.allocate_epr();
      round.ell.symbols[i] = store.bell_measure(std::move(sub.data[i]), std::move(hb), rng);
      alice_side.push_back(std::move(ha));
    }
    round.epr_pairs += n;
    data = std::move(alice_side);
    out.epr += round.epr_pairs;
    const bool hit = round.k.is_identity() && sub.ok;
    const PauliKey k = round.k, ell = round.ell, csub = sub.correction;
    current_label += "/" + k.str();
    t->rounds.push_back(std::move(round));
    if (!sub.ok) break;
    if (hit) {
      t->success_round = r;
      out.correction = ell ^ csub;
      out.ok = true;
      break;
    }
    // data = P_ell P_csub W P_k psi and the target is W psi, so the next
    // round must apply W P_k^+ W^+ P_csub^+ P_ell^+.
    w = times_pauli_adjoint(times_pauli_adjoint(times_pauli_adjoint(w, k) * w.adjoint(), csub), ell);
    // w enters its own update twice, so rounding error doubles per round
    // unless w is pulled back onto the unitary group. Every fourth round
    // keeps the drift near 1e-15.
    if (r % 4 == 3) w = nearest_unitary(w);
  }
  t->epr_consumed = out.epr;
  t->worst_case_epr_log2 = worst_case_log2(parties, n, cap, 0.0);
  out.data = std::move(data);
  out.transcript = t;
  return out;
}

}  // namespace

Correction reconcile_corrections(const InqcTranscript& t) {
  if (!t.success_round) throw std::invalid_argument("reconcile_corrections: run did not succeed");
  const InqcRound& r = t.rounds.at(*t.success_round);
  PauliKey c = r.ell;
  if (r.nested) {
    // The nested run's own correction sits on party 1's output before it
    // was teleported back.
    InqcTranscript inner = *r.nested;
    inner.fold_in.clear();
    inner.fold_out.clear();
    inner.n_a = inner.n_qubits;
    inner.n_b.clear();
    c = c ^ reconcile_corrections(inner).keys.at(0);
  }
  Correction out;
  const std::size_t n_a = t.n_b.empty() && t.n_a == 0 ? c.size() : t.n_a;
  out.keys.push_back(c.slice(0, n_a));
  std::size_t offset = n_a;
  for (std::size_t p = 0; p < t.n_b.size(); ++p) {
    PauliKey part = c.slice(offset, t.n_b[p]);
    if (p < t.fold_out.size()) part = part ^ t.fold_out[p];
    out.keys.push_back(part);
    offset += t.n_b[p];
  }
  return out;
}

InqcRegisters inqc_run(QuantumStore& store, Register a, std::vector<Register> b, const Matrix& u,
                       const std::string& x_label, std::size_t rounds_cap, Rng& rng,
                       std::optional<int> forced_first_k) {
  if (rounds_cap < 1) throw std::invalid_argument("inqc: rounds_cap must be >= 1");
  std::size_t total = a.size();
  for (const auto& r : b) total += r.size();
  const auto dim = static_cast<Eigen::Index>(std::size_t{1} << total);
  if (u.rows() != dim || u.cols() != dim) throw std::invalid_argument("inqc: unitary does not match register sizes");
  if (!gates::is_unitary(u)) throw std::invalid_argument("inqc: matrix is not unitary within 1e-9");

  const std::size_t n_a = a.size();
  std::vector<std::size_t> n_b;
  for (const auto& r : b) n_b.push_back(r.size());

  // Each B_p is teleported into Alice's register. Her halves hold
  // pauli(fold_in[p]) B_p, which the unitary undoes first.
  Register data = std::move(a);
  std::vector<PauliKey> fold_in;
  PauliKey undo = PauliKey::identity(n_a);
  std::uint64_t fold_pairs = 0;
  for (auto& reg : b) {
    PauliKey key;
    for (auto& q : reg) {
      auto [hb, ha] = store.allocate_epr();
      key.symbols.push_back(store.bell_measure(std::move(q), std::move(hb), rng));
      data.push_back(std::move(ha));
      ++fold_pairs;
    }
    undo = undo.concat(key);
    fold_in.push_back(std::move(key));
  }
  const Matrix w0 = u * pauli_operator(undo).adjoint();

  CoreOut res = core(store, std::move(data), w0, n_b.empty() ? 2 : n_b.size() + 1, x_label, rounds_cap, rng,
                     forced_first_k);

  // Teleport each B_p slice back to its owner.
  InqcRegisters out;
  std::size_t offset = n_a;
  for (std::size_t i = 0; i < n_a; ++i) out.a.push_back(std::move(res.data[i]));
  std::vector<PauliKey> fold_out;
  for (std::size_t p = 0; p < n_b.size(); ++p) {
    Register back;
    PauliKey key;
    for (std::size_t i = 0; i < n_b[p]; ++i) {
      auto [ha, hb] = store.allocate_epr();
      key.symbols.push_back(store.bell_measure(std::move(res.data[offset + i]), std::move(ha), rng));
      back.push_back(std::move(hb));
      ++fold_pairs;
    }
    offset += n_b[p];
    out.b.push_back(std::move(back));
    fold_out.push_back(std::move(key));
  }

  out.transcript = *res.transcript;
  out.transcript.fold_in = std::move(fold_in);
  out.transcript.fold_out = std::move(fold_out);
  out.transcript.n_a = n_a;
  out.transcript.n_b = n_b;
  out.transcript.epr_consumed += fold_pairs;
  out.transcript.worst_case_epr_log2 =
      log2_add(out.transcript.worst_case_epr_log2, std::log2(static_cast<double>(fold_pairs) + 1e-300));
  return out;
}

namespace {

InqcResult run_on_fresh_store(const UnitaryFamily& family, const Matrix& u, const std::string& label,
                              const Statevector& input, std::size_t rounds_cap, Rng& rng,
                              std::optional<int> forced_first_k) {
  family.validate();
  if (input.n_qubits() != family.total_qubits()) throw std::invalid_argument("inqc: input size mismatch");
  QuantumStore store;
  Register all = store.allocate(input);
  Register a;
  std::vector<Register> b(family.n_b.size());
  std::size_t pos = 0;
  for (std::size_t i = 0; i < family.n_a; ++i) a.push_back(std::move(all[pos++]));
  for (std::size_t p = 0; p < family.n_b.size(); ++p) {
    for (std::size_t i = 0; i < family.n_b[p]; ++i) b[p].push_back(std::move(all[pos++]));
  }
  InqcRegisters r = inqc_run(store, std::move(a), std::move(b), u, label, rounds_cap, rng, forced_first_k);
  std::vector<QubitId> order = ids_of(r.a);
  for (const auto& reg : r.b) {
    for (QubitId id : ids_of(reg)) order.push_back(id);
  }
  return InqcResult{store.state(order), std::move(r.transcript)};
}

}  // namespace

InqcResult run_inqc_2party(const UnitaryFamily& family, std::size_t x, std::size_t y, const Statevector& input,
                           std::size_t rounds_cap, Rng& rng, std::optional<int> forced_first_k) {
  if (family.parties() != 2) throw std::invalid_argument("run_inqc_2party: family must have exactly one B");
  return run_inqc_nparty(family, x, {y}, input, rounds_cap, rng, forced_first_k);
}

InqcResult run_inqc_nparty(const UnitaryFamily& family, std::size_t x, const std::vector<std::size_t>& ys,
                           const Statevector& input, std::size_t rounds_cap, Rng& rng,
                           std::optional<int> forced_first_k) {
  if (family.parties() < 2) throw std::invalid_argument("inqc: need at least two parties");
  return run_on_fresh_store(family, family.at(x, ys), "x" + std::to_string(x), input, rounds_cap, rng,
                            forced_first_k);
}

Statevector apply_correction(const Statevector& s, const Correction& c) {
  PauliKey all;
  for (const auto& k : c.keys) all = all.concat(k);
  if (all.size() != s.n_qubits()) throw std::invalid_argument("apply_correction: size mismatch");
  Statevector out = s;
  for (std::size_t q = 0; q < all.size(); ++q) out.apply(pauli_matrix(all.symbols[q]).adjoint(), {q});
  return out;
}

}  // namespace qpv
