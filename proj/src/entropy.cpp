#include "qpv/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace qpv {

namespace {

double xlog2x(double x) { return x > kEigenCutoff ? x * std::log2(x) : 0.0; }

double spectrum_entropy(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) s -= xlog2x(es.eigenvalues()(i));
  return s;
}

// H(X|S) where X is the computational-basis value of the first n_x qubits
// of psi and S is the set of qubits `side`.
double measured_conditional(const Statevector& psi, std::size_t n_x, const std::vector<std::size_t>& side) {
  std::vector<std::size_t> order;
  for (std::size_t q = 0; q < n_x; ++q) order.push_back(q);
  for (std::size_t q : side) order.push_back(q);
  for (std::size_t q = n_x; q < psi.n_qubits(); ++q) {
    if (std::find(side.begin(), side.end(), q) == side.end()) order.push_back(q);
  }
  const Statevector p = psi.permuted(order);
  const std::size_t dim_x = std::size_t{1} << n_x;
  const auto ds = static_cast<Eigen::Index>(std::size_t{1} << side.size());
  const auto dr = static_cast<Eigen::Index>(p.dim() / dim_x) / ds;
  const auto amps = p.amplitudes();
  Matrix side_total = Matrix::Zero(ds, ds);
  double h_joint = 0.0;
  for (std::size_t x = 0; x < dim_x; ++x) {
    Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
        amps.data() + x * static_cast<std::size_t>(ds * dr), ds, dr);
    // Unnormalized state of S given X = x; the blocks together form the
    // classical-quantum state on XS.
    const Matrix block = m * m.adjoint();
    h_joint += spectrum_entropy(block);
    side_total += block;
  }
  return h_joint - spectrum_entropy(side_total);
}

}  // namespace

double binary_entropy(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("binary_entropy: p outside [0,1]");
  if (p == 0.0 || p == 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

double binary_entropy_inverse(double y) {
  if (!(y >= 0.0 && y <= 1.0)) throw std::invalid_argument("binary_entropy_inverse: y outside [0,1]");
  // h is flat at its maximum, so bisection cannot resolve p there.
  if (y >= 1.0 - 1e-15) return 0.5;
  double lo = 0.0, hi = 0.5;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (binary_entropy(mid) < y) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double soundness_epsilon() { return 1.0 - binary_entropy_inverse(0.5); }

double von_neumann_entropy(const Matrix& rho) {
  if (rho.rows() != rho.cols()) throw std::invalid_argument("von_neumann_entropy: matrix not square");
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-9) {
    throw std::invalid_argument("von_neumann_entropy: matrix not Hermitian");
  }
  return spectrum_entropy(rho);
}

double von_neumann_entropy(const DensityMatrix& rho) { return spectrum_entropy(rho.matrix()); }

double conditional_entropy(const DensityMatrix& rho_ab, std::size_t dim_a, std::size_t dim_b) {
  if (dim_a * dim_b != rho_ab.dim()) {
    throw std::invalid_argument("conditional_entropy: " + std::to_string(dim_a) + " x " + std::to_string(dim_b) +
                                " does not match dimension " + std::to_string(rho_ab.dim()));
  }
  const std::size_t dims[2] = {dim_a, dim_b};
  const std::size_t keep_b[1] = {1};
  return von_neumann_entropy(rho_ab) - spectrum_entropy(reduce(rho_ab.matrix(), dims, keep_b));
}

void HybridState::validate() const {
  if (weights.empty() || weights.size() != blocks.size()) {
    throw std::invalid_argument("hybrid state: need one weight per block");
  }
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw std::invalid_argument("hybrid state: negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("hybrid state: weights do not sum to 1");
  for (const auto& b : blocks) {
    if (b.dim() != dim_a * dim_b) throw std::invalid_argument("hybrid state: inconsistent block dimension");
  }
}

Matrix HybridState::assemble() const {
  validate();
  const std::size_t d = dim_a * dim_b;
  const std::size_t ny = blocks.size();
  const auto full = static_cast<Eigen::Index>(d * ny);
  Matrix out = Matrix::Zero(full, full);
  // Index order (a, b, y) with y least significant.
  for (std::size_t y = 0; y < ny; ++y) {
    const Matrix& m = blocks[y].matrix();
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        out(static_cast<Eigen::Index>(i * ny + y), static_cast<Eigen::Index>(j * ny + y)) =
            weights[y] * m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
    }
  }
  return out;
}

double conditional_entropy_hybrid(const HybridState& h) {
  h.validate();
  double s = 0.0;
  for (std::size_t y = 0; y < h.blocks.size(); ++y) {
    if (h.weights[y] == 0.0) continue;
    s += h.weights[y] * conditional_entropy(h.blocks[y], h.dim_a, h.dim_b);
  }
  return s;
}

double conditional_entropy_hybrid_assembled(const HybridState& h) {
  const Matrix full = h.assemble();
  const std::size_t dims[3] = {h.dim_a, h.dim_b, h.blocks.size()};
  const std::size_t keep_by[2] = {1, 2};
  return spectrum_entropy(full) - spectrum_entropy(reduce(full, dims, keep_by));
}

void CitInstance::validate() const {
  if (n_a == 0) throw std::invalid_argument("CIT instance: register A is empty");
  if (n_a + n_e + n_f + n_rest != psi.n_qubits()) {
    throw std::invalid_argument("CIT instance: register sizes do not partition the state");
  }
}

CitResult check_cit(const CitInstance& inst) {
  inst.validate();
  const std::size_t n_theta = std::size_t{1} << inst.n_a;
  std::vector<std::size_t> e_qubits, f_qubits;
  for (std::size_t q = 0; q < inst.n_e; ++q) e_qubits.push_back(inst.n_a + q);
  for (std::size_t q = 0; q < inst.n_f; ++q) f_qubits.push_back(inst.n_a + inst.n_e + q);
  CitResult r;
  for (std::size_t t = 0; t < n_theta; ++t) {
    Statevector rotated = inst.psi;
    for (std::size_t q = 0; q < inst.n_a; ++q) {
      if ((t >> (inst.n_a - 1 - q)) & 1U) rotated.apply(gates::hadamard(), {q});
    }
    r.h_x_given_theta_e += measured_conditional(rotated, inst.n_a, e_qubits);
    r.h_x_given_theta_f += measured_conditional(rotated, inst.n_a, f_qubits);
  }
  r.h_x_given_theta_e /= static_cast<double>(n_theta);
  r.h_x_given_theta_f /= static_cast<double>(n_theta);
  r.lhs = r.h_x_given_theta_e + r.h_x_given_theta_f;
  r.holds = r.lhs >= static_cast<double>(inst.n_a) - 1e-7;
  return r;
}

double fano_bound(double cond_entropy, std::size_t alphabet_size) {
  if (alphabet_size < 2) throw std::invalid_argument("fano_bound: alphabet needs at least two symbols");
  if (cond_entropy < 0.0) throw std::invalid_argument("fano_bound: negative conditional entropy");
  const double m = static_cast<double>(alphabet_size);
  if (cond_entropy > std::log2(m) + 1e-12) {
    throw std::invalid_argument("fano_bound: conditional entropy exceeds log of alphabet size");
  }
  if (alphabet_size == 2) return binary_entropy_inverse(std::min(cond_entropy, 1.0));
  if (cond_entropy >= std::log2(m) - 1e-15) return (m - 1.0) / m;
  const auto f = [&](double q) { return binary_entropy(q) + q * std::log2(m - 1.0); };
  double lo = 0.0, hi = (m - 1.0) / m;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) < cond_entropy) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace qpv
