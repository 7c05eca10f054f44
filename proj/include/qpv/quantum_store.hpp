#pragma once

// Shared register store. Every qubit that exists in a simulation run lives
// in one joint statevector owned by the store; parties only hold move-only
// handles. Measured qubits are removed from the joint state, so a handle can
// be consumed exactly once.

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "qpv/qsim.hpp"

namespace qpv {

using QubitId = std::uint32_t;
inline constexpr QubitId kNoQubit = std::numeric_limits<QubitId>::max();

class Qubit {
 public:
  Qubit() = default;
  Qubit(const Qubit&) = delete;
  Qubit& operator=(const Qubit&) = delete;
  Qubit(Qubit&& o) noexcept : id_(std::exchange(o.id_, kNoQubit)) {}
  Qubit& operator=(Qubit&& o) noexcept {
    id_ = std::exchange(o.id_, kNoQubit);
    return *this;
  }

  bool valid() const { return id_ != kNoQubit; }
  // Throws NoCloningViolation on a moved-from or consumed handle.
  QubitId id() const;

 private:
  friend class QuantumStore;
  explicit Qubit(QubitId id) : id_(id) {}
  QubitId id_ = kNoQubit;
};

using Register = std::vector<Qubit>;

std::vector<QubitId> ids_of(const Register& r);

class QuantumStore {
 public:
  QuantumStore() = default;
  QuantumStore(const QuantumStore&) = delete;
  QuantumStore& operator=(const QuantumStore&) = delete;

  // Appends `init` to the joint state (as a product) and returns handles to
  // its qubits in order.
  Register allocate(const Statevector& init);
  Qubit allocate_zero();
  std::pair<Qubit, Qubit> allocate_epr();

  void apply(const Matrix& gate, std::span<const QubitId> ids);
  void apply(const Matrix& gate, const Qubit& q);
  void apply(const Matrix& gate, const Register& r);

  // Measures q in the basis given by the columns of `basis` and removes it.
  int measure(Qubit&& q, const Matrix& basis, Rng& rng, std::optional<int> forced = std::nullopt);
  // BB84 measurement in basis H^theta.
  int measure_bb84(Qubit&& q, int theta, Rng& rng, std::optional<int> forced = std::nullopt);

  // Bell measurement of (data, half). Returns the Pauli symbol k with
  // x-bit k & 1 and z-bit k >> 1; the partner of `half` is left holding
  // pauli(k) applied to the former data state. Both handles are consumed.
  int bell_measure(Qubit&& data, Qubit&& half, Rng& rng, std::optional<int> forced = std::nullopt);

  // Traces a qubit out. For a pure joint state this is a measurement whose
  // outcome nobody looks at.
  void discard(Qubit&& q, Rng& rng);

  bool is_live(QubitId id) const;
  std::size_t live_count() const { return order_.size(); }

  // Joint state with qubits listed in `order`; `order` must name every live
  // qubit exactly once.
  Statevector state(std::span<const QubitId> order) const;
  DensityMatrix reduced(std::span<const QubitId> keep) const;
  // <target| rho_ids |target>
  double fidelity(std::span<const QubitId> ids, const Statevector& target) const;

  std::uint64_t bell_measurements() const { return bell_count_; }

 private:
  Statevector joint_{0};
  std::vector<QubitId> order_;  // order_[pos] = id at joint-state position pos
  QubitId next_id_ = 0;
  std::uint64_t bell_count_ = 0;

  std::size_t position(QubitId id) const;
  std::vector<std::size_t> positions(std::span<const QubitId> ids) const;
  void remove(QubitId id, int outcome);
};

}  // namespace qpv
