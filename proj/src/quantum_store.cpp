#include "qpv/quantum_store.hpp"

#include <algorithm>
#include <string>

#include "qpv/error.hpp"

namespace qpv {

QubitId Qubit::id() const {
  if (id_ == kNoQubit) throw NoCloningViolation("qubit handle was moved from or already consumed");
  return id_;
}

std::vector<QubitId> ids_of(const Register& r) {
  std::vector<QubitId> out;
  out.reserve(r.size());
  for (const auto& q : r) out.push_back(q.id());
  return out;
}

Register QuantumStore::allocate(const Statevector& init) {
  Register out;
  out.reserve(init.n_qubits());
  joint_ = joint_.tensor(init);
  for (std::size_t i = 0; i < init.n_qubits(); ++i) {
    order_.push_back(next_id_);
    out.push_back(Qubit(next_id_++));
  }
  return out;
}

Qubit QuantumStore::allocate_zero() { return std::move(allocate(Statevector(1))[0]); }

std::pair<Qubit, Qubit> QuantumStore::allocate_epr() {
  static const Statevector epr = make_epr();
  Register r = allocate(epr);
  return {std::move(r[0]), std::move(r[1])};
}

std::size_t QuantumStore::position(QubitId id) const {
  const auto it = std::find(order_.begin(), order_.end(), id);
  if (it == order_.end()) {
    throw NoCloningViolation("qubit " + std::to_string(id) + " is not live in this store");
  }
  return static_cast<std::size_t>(it - order_.begin());
}

std::vector<std::size_t> QuantumStore::positions(std::span<const QubitId> ids) const {
  std::vector<std::size_t> out;
  out.reserve(ids.size());
  for (QubitId id : ids) out.push_back(position(id));
  return out;
}

bool QuantumStore::is_live(QubitId id) const {
  return std::find(order_.begin(), order_.end(), id) != order_.end();
}

void QuantumStore::apply(const Matrix& gate, std::span<const QubitId> ids) {
  const auto pos = positions(ids);
  joint_.apply(gate, pos);
}

void QuantumStore::apply(const Matrix& gate, const Qubit& q) {
  const QubitId id = q.id();
  apply(gate, std::span<const QubitId>(&id, 1));
}

void QuantumStore::apply(const Matrix& gate, const Register& r) { apply(gate, ids_of(r)); }

void QuantumStore::remove(QubitId id, int outcome) {
  const std::size_t p = position(id);
  joint_.discard_collapsed(p, outcome);
  order_.erase(order_.begin() + static_cast<std::ptrdiff_t>(p));
}

int QuantumStore::measure(Qubit&& q, const Matrix& basis, Rng& rng, std::optional<int> forced) {
  Qubit h = std::move(q);
  const QubitId id = h.id();
  const std::size_t p = position(id);
  // Rotate the measured basis onto the computational one, then measure there
  // so the collapsed qubit is a computational basis vector and can be dropped.
  if (!basis.isIdentity(0.0)) joint_.apply(basis.adjoint(), {p});
  const int b = joint_.measure_discard(p, rng, forced);
  order_.erase(order_.begin() + static_cast<std::ptrdiff_t>(p));
  return b;
}

int QuantumStore::measure_bb84(Qubit&& q, int theta, Rng& rng, std::optional<int> forced) {
  return measure(std::move(q), gates::basis_change(theta), rng, forced);
}

int QuantumStore::bell_measure(Qubit&& data, Qubit&& half, Rng& rng, std::optional<int> forced) {
  Qubit d = std::move(data);
  Qubit h = std::move(half);
  const QubitId ids[2] = {d.id(), h.id()};
  if (ids[0] == ids[1]) throw NoCloningViolation("Bell measurement on a single qubit twice");
  static const Matrix cx = gates::cnot(), h2 = gates::hadamard(), id2 = gates::identity(2);
  apply(cx, ids);
  apply(h2, d);
  std::optional<int> fz, fx;
  if (forced) {
    fz = (*forced >> 1) & 1;
    fx = *forced & 1;
  }
  const int z = measure(std::move(d), id2, rng, fz);
  const int x = measure(std::move(h), id2, rng, fx);
  ++bell_count_;
  return x | (z << 1);
}

void QuantumStore::discard(Qubit&& q, Rng& rng) { measure(std::move(q), gates::identity(2), rng); }

Statevector QuantumStore::state(std::span<const QubitId> order) const {
  if (order.size() != order_.size()) {
    throw std::invalid_argument("state(): order must list every live qubit");
  }
  return joint_.permuted(positions(order));
}

DensityMatrix QuantumStore::reduced(std::span<const QubitId> keep) const {
  return partial_trace(joint_, positions(keep));
}

double QuantumStore::fidelity(std::span<const QubitId> ids, const Statevector& target) const {
  if (target.n_qubits() != ids.size()) throw std::invalid_argument("fidelity: target size mismatch");
  const DensityMatrix rho = reduced(ids);
  Eigen::Map<const Eigen::VectorXcd> v(target.amplitudes().data(), static_cast<Eigen::Index>(target.dim()));
  const cplx f = v.adjoint() * rho.matrix() * v;
  return std::clamp(f.real(), 0.0, 1.0);
}

}  // namespace qpv
