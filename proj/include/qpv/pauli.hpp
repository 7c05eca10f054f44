#pragma once

// Pauli symbols: 0 = I, 1 = X, 2 = Z, 3 = XZ. Bit 0 is the X part, bit 1 the
// Z part; symbol k stands for the operator X^(k&1) Z^(k>>1). Products are
// XOR up to a global phase, and conjugation by H swaps the two bits.

#include <bit>
#include <cstdint>
#include <string>
#include <vector>

#include "qpv/qsim.hpp"

namespace qpv {

struct PauliKey {
  std::vector<int> symbols;

  static PauliKey identity(std::size_t n) { return PauliKey{std::vector<int>(n, 0)}; }
  static PauliKey random(std::size_t n, Rng& rng);

  std::size_t size() const { return symbols.size(); }
  bool is_identity() const;
  // Product up to global phase.
  PauliKey operator^(const PauliKey& o) const;
  PauliKey slice(std::size_t begin, std::size_t count) const;
  PauliKey concat(const PauliKey& o) const;
  std::string str() const;  // e.g. "I.X.XZ"
  bool operator==(const PauliKey&) const = default;
};

Matrix pauli_matrix(int symbol);
// Tensor product over the key, first symbol on the most significant qubit.
Matrix pauli_operator(const PauliKey& key);

// With X applied after Z every key acts as P|c> = (-1)^|c & z| |c ^ x|.
struct PauliMasks {
  std::uint64_t x = 0, z = 0;
  std::uint64_t row(std::uint64_t col) const { return col ^ x; }
  double sign(std::uint64_t col) const { return (std::popcount(col & z) & 1) ? -1.0 : 1.0; }
};
PauliMasks pauli_masks(const PauliKey& key);

inline int pauli_product(int a, int b) { return a ^ b; }
inline int conjugate_by_hadamard(int k) { return ((k & 1) << 1) | ((k >> 1) & 1); }

// Whether the Pauli k flips the outcome of measuring H^theta|x> in basis theta.
inline int bb84_flip(int k, int theta) { return theta == 0 ? (k & 1) : ((k >> 1) & 1); }

// Outcome of measuring pauli(k) H^theta |x> in basis theta.
inline int pauli_effect_on_bb84(int k, int theta, int x) { return x ^ bb84_flip(k, theta); }

}  // namespace qpv
