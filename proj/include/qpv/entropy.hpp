#pragma once

#include <cstddef>
#include <vector>

#include "qpv/qsim.hpp"

namespace qpv {

// Entropies are in bits. Eigenvalues below this are treated as zero.
inline constexpr double kEigenCutoff = 1e-12;

double binary_entropy(double p);
// Unique p in [0, 1/2] with h(p) = y, by bisection to 1e-12.
double binary_entropy_inverse(double y);
// 1 - h^{-1}(1/2): acceptance ceiling for single-round BB84 position
// verification against adversaries without pre-shared entanglement.
double soundness_epsilon();

double von_neumann_entropy(const DensityMatrix& rho);
// Same, on a raw Hermitian matrix (checked for Hermiticity only).
double von_neumann_entropy(const Matrix& rho);

// H(AB) - H(B) for rho on A (x) B.
double conditional_entropy(const DensityMatrix& rho_ab, std::size_t dim_a, std::size_t dim_b);

// Classical-quantum state: weights P(y) and per-y blocks on A (x) B.
struct HybridState {
  std::vector<double> weights;
  std::vector<DensityMatrix> blocks;
  std::size_t dim_a = 1;
  std::size_t dim_b = 1;

  // Throws std::invalid_argument on bad weights or block sizes.
  void validate() const;
  // The block-diagonal matrix sum_y P(y) rho^y (x) |y><y| on A (x) B (x) Y.
  Matrix assemble() const;
};

// Weighted average of per-block conditional entropies.
double conditional_entropy_hybrid(const HybridState& h);
// H(A|BY) computed directly on the assembled state: H(ABY) - H(BY), where
// BY is obtained by a generic partial trace over A.
double conditional_entropy_hybrid_assembled(const HybridState& h);

struct CitInstance {
  Statevector psi;      // qubits ordered A, E, F, then any purifying rest
  std::size_t n_a = 1;
  std::size_t n_e = 0;
  std::size_t n_f = 0;
  std::size_t n_rest = 0;  // traced out, available to neither side

  void validate() const;
};

struct CitResult {
  double h_x_given_theta_e = 0.0;
  double h_x_given_theta_f = 0.0;
  double lhs = 0.0;
  bool holds = false;
};

// H(X|Theta E) + H(X|Theta F) with Theta uniform over {0,1}^n_a and X the
// outcome of measuring A in basis Theta; holds iff lhs >= n_a - 1e-7.
CitResult check_cit(const CitInstance& inst);

// Minimal guessing-error probability q allowed by Fano's inequality for a
// given conditional entropy and alphabet size.
double fano_bound(double cond_entropy, std::size_t alphabet_size);

}  // namespace qpv
