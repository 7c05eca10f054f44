#pragma once

// Dense pure-state engine. Qubit 0 is the most significant bit of the
// amplitude index: for n qubits, qubit q lives at index bit (n - 1 - q).

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qpv/rng.hpp"

namespace qpv {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

inline constexpr double kUnitaryTolerance = 1e-9;
inline constexpr double kNormTolerance = 1e-9;

// Per-qubit basis choice: 0 = computational, 1 = Hadamard.
struct BasisString {
  std::vector<int> bits;

  std::size_t size() const { return bits.size(); }
  BasisString complement() const;
  static BasisString from_index(std::uint64_t index, std::size_t n);
  bool operator==(const BasisString&) const = default;
};

class Statevector {
 public:
  // |0...0> on n qubits.
  explicit Statevector(std::size_t n_qubits = 0);
  // Throws std::invalid_argument unless amps has length 2^n and unit norm.
  Statevector(std::size_t n_qubits, std::vector<cplx> amps);

  static Statevector basis_state(std::size_t n_qubits, std::uint64_t index);
  // |bits[0] bits[1] ...>, one qubit per entry.
  static Statevector from_bits(std::span<const int> bits);

  std::size_t n_qubits() const { return n_qubits_; }
  std::size_t dim() const { return amps_.size(); }
  std::span<const cplx> amplitudes() const { return amps_; }
  cplx amplitude(std::uint64_t index) const { return amps_.at(index); }
  double norm_squared() const;

  Statevector tensor(const Statevector& other) const;

  // In-place kernels. `gate` must be 2^k x 2^k for k = targets.size(); the
  // first target is the gate's most significant qubit.
  void apply(const Matrix& gate, std::span<const std::size_t> targets);
  void apply(const Matrix& gate, std::initializer_list<std::size_t> targets) {
    apply(gate, std::span<const std::size_t>(targets.begin(), targets.size()));
  }

  // Projective measurement of qubit q in the basis whose vectors are the
  // columns of `basis` (a 2x2 unitary; identity = computational). The state
  // collapses to the observed basis vector on q. `forced` selects the branch
  // instead of sampling and fails if that branch has zero probability.
  int measure(std::size_t q, const Matrix& basis, Rng& rng,
              std::optional<int> forced = std::nullopt);

  // Probability of outcome 1 when measuring q in `basis`.
  double probability_one(std::size_t q, const Matrix& basis) const;

  // Drops qubit q, which must be in a product state |b> on that qubit
  // (for instance right after a computational-basis measurement).
  void discard_collapsed(std::size_t q, int b);

  // Computational-basis measurement of q followed by dropping it, in one
  // pass. Same outcome distribution and RNG use as measure().
  int measure_discard(std::size_t q, Rng& rng, std::optional<int> forced = std::nullopt);

  // Reorders qubits so that new qubit i is old qubit order[i].
  Statevector permuted(std::span<const std::size_t> order) const;

 private:
  std::size_t n_qubits_;
  std::vector<cplx> amps_;

  std::uint64_t mask_of(std::size_t q) const { return std::uint64_t{1} << (n_qubits_ - 1 - q); }
  void check_targets(std::span<const std::size_t> targets) const;
};

// Hermitian, unit-trace, positive semidefinite matrix.
class DensityMatrix {
 public:
  // Validates Hermiticity, trace and eigenvalues against 1e-9.
  explicit DensityMatrix(Matrix m);
  static DensityMatrix from_pure(const Statevector& s);
  static DensityMatrix maximally_mixed(std::size_t dim);

  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  double purity() const;

 private:
  Matrix m_;
};

namespace gates {
Matrix identity(std::size_t dim = 2);
Matrix hadamard();
Matrix pauli_x();
Matrix pauli_z();
Matrix pauli_y();
Matrix cnot();  // control = first target
Matrix swap();
// H^theta: identity for 0, Hadamard for 1.
Matrix basis_change(int theta);
// Basis vectors cos(a)|0> + sin(a)|1>, -sin(a)|0> + cos(a)|1>.
Matrix rotation_basis(double angle);
// Tensor product, first argument acts on the more significant qubits.
Matrix kron(const Matrix& a, const Matrix& b);
bool is_unitary(const Matrix& m, double tol = kUnitaryTolerance);
}  // namespace gates

// Returns a new state with `gate` applied to `targets`. Throws
// std::invalid_argument for a non-unitary gate or bad target list.
Statevector apply_gate(const Statevector& state, const Matrix& gate,
                       std::span<const std::size_t> targets);

struct MeasurementResult {
  std::vector<int> bits;
  Statevector post;
};

// Measures `targets` qubit-wise, target i in basis H^{basis.bits[i]}.
MeasurementResult measure_in_basis(const Statevector& state, const BasisString& basis,
                                   std::span<const std::size_t> targets, Rng& rng);

// (|00> + |11>) / sqrt(2)
Statevector make_epr();

// Reduced state on `keep` (in the given order).
DensityMatrix partial_trace(const Statevector& state, std::span<const std::size_t> keep);

// Partial trace of an operator on a tensor product with arbitrary local
// dimensions `dims` (first entry most significant); keeps `keep` in order.
Matrix reduce(const Matrix& rho, std::span<const std::size_t> dims,
              std::span<const std::size_t> keep);

// |<a|b>|^2. Throws on dimension mismatch.
double fidelity_up_to_global_phase(const Statevector& a, const Statevector& b);

Statevector random_state(std::size_t n_qubits, Rng& rng);
// Haar-random unitary via QR of a complex Gaussian matrix.
Matrix random_unitary(std::size_t dim, Rng& rng);

}  // namespace qpv
