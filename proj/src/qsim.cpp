#include "qpv/qsim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace qpv {

namespace {

bool is_power_of_two_length(std::size_t len, std::size_t n) {
  return n < 63 && len == (std::size_t{1} << n);
}

}  // namespace

BasisString BasisString::complement() const {
  BasisString out{bits};
  for (int& b : out.bits) b ^= 1;
  return out;
}

BasisString BasisString::from_index(std::uint64_t index, std::size_t n) {
  BasisString out;
  out.bits.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.bits[i] = static_cast<int>((index >> (n - 1 - i)) & 1U);
  return out;
}

// ---------------------------------------------------------------- Statevector

Statevector::Statevector(std::size_t n_qubits)
    : n_qubits_(n_qubits), amps_(std::size_t{1} << n_qubits, cplx{0.0, 0.0}) {
  amps_[0] = 1.0;
}

Statevector::Statevector(std::size_t n_qubits, std::vector<cplx> amps)
    : n_qubits_(n_qubits), amps_(std::move(amps)) {
  if (!is_power_of_two_length(amps_.size(), n_qubits_)) {
    throw std::invalid_argument("statevector length " + std::to_string(amps_.size()) +
                                " is not 2^" + std::to_string(n_qubits_));
  }
  if (std::abs(norm_squared() - 1.0) > kNormTolerance) {
    throw std::invalid_argument("statevector is not normalized (norm^2 = " +
                                std::to_string(norm_squared()) + ")");
  }
}

Statevector Statevector::basis_state(std::size_t n_qubits, std::uint64_t index) {
  Statevector s(n_qubits);
  if (index >= s.dim()) throw std::out_of_range("basis index out of range");
  s.amps_[0] = 0.0;
  s.amps_[index] = 1.0;
  return s;
}

Statevector Statevector::from_bits(std::span<const int> bits) {
  std::uint64_t index = 0;
  for (int b : bits) index = (index << 1) | static_cast<std::uint64_t>(b & 1);
  return basis_state(bits.size(), index);
}

double Statevector::norm_squared() const {
  double s = 0.0;
  for (const auto& a : amps_) s += std::norm(a);
  return s;
}

Statevector Statevector::tensor(const Statevector& other) const {
  std::vector<cplx> out(dim() * other.dim());
  for (std::size_t i = 0; i < dim(); ++i) {
    for (std::size_t j = 0; j < other.dim(); ++j) out[i * other.dim() + j] = amps_[i] * other.amps_[j];
  }
  Statevector s;
  s.n_qubits_ = n_qubits_ + other.n_qubits_;
  s.amps_ = std::move(out);
  return s;
}

void Statevector::check_targets(std::span<const std::size_t> targets) const {
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] >= n_qubits_) {
      throw std::out_of_range("qubit index " + std::to_string(targets[i]) + " out of range for " +
                              std::to_string(n_qubits_) + " qubits");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (targets[i] == targets[j]) throw std::invalid_argument("duplicate target qubit");
    }
  }
}

void Statevector::apply(const Matrix& gate, std::span<const std::size_t> targets) {
  check_targets(targets);
  const std::size_t k = targets.size();
  const std::size_t sub = std::size_t{1} << k;
  if (static_cast<std::size_t>(gate.rows()) != sub || static_cast<std::size_t>(gate.cols()) != sub) {
    throw std::invalid_argument("gate dimension does not match target count");
  }
  // Gates past 4 qubits are rare; keep the common case off the heap.
  std::array<std::uint64_t, 16> small{};
  std::vector<std::uint64_t> large;
  std::uint64_t* offsets = small.data();
  if (sub > small.size()) {
    large.assign(sub, 0);
    offsets = large.data();
  }
  std::uint64_t target_mask = 0;
  for (std::size_t s = 0; s < sub; ++s) {
    for (std::size_t j = 0; j < k; ++j) {
      if ((s >> (k - 1 - j)) & 1U) offsets[s] |= mask_of(targets[j]);
    }
  }
  for (std::size_t j = 0; j < k; ++j) target_mask |= mask_of(targets[j]);

  // One- and two-qubit gates dominate; keep their coefficients in registers.
  if (k == 1) {
    const cplx g00 = gate(0, 0), g01 = gate(0, 1), g10 = gate(1, 0), g11 = gate(1, 1);
    const std::uint64_t o = offsets[1];
    for (std::uint64_t base = 0; base < amps_.size(); ++base) {
      if (base & target_mask) continue;
      const cplx a0 = amps_[base], a1 = amps_[base | o];
      amps_[base] = g00 * a0 + g01 * a1;
      amps_[base | o] = g10 * a0 + g11 * a1;
    }
    return;
  }
  if (k == 2) {
    cplx g[4][4];
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) g[r][c] = gate(r, c);
    }
    for (std::uint64_t base = 0; base < amps_.size(); ++base) {
      if (base & target_mask) continue;
      cplx a[4];
      for (int c = 0; c < 4; ++c) a[c] = amps_[base | offsets[c]];
      for (int r = 0; r < 4; ++r) amps_[base | offsets[r]] = g[r][0] * a[0] + g[r][1] * a[1] + g[r][2] * a[2] + g[r][3] * a[3];
    }
    return;
  }

  std::vector<cplx> in(sub);
  for (std::uint64_t base = 0; base < amps_.size(); ++base) {
    if (base & target_mask) continue;
    for (std::size_t s = 0; s < sub; ++s) in[s] = amps_[base | offsets[s]];
    for (std::size_t r = 0; r < sub; ++r) {
      cplx acc{0.0, 0.0};
      for (std::size_t c = 0; c < sub; ++c) acc += gate(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) * in[c];
      amps_[base | offsets[r]] = acc;
    }
  }
}

double Statevector::probability_one(std::size_t q, const Matrix& basis) const {
  Statevector tmp = *this;
  tmp.apply(basis.adjoint(), {q});
  const std::uint64_t m = tmp.mask_of(q);
  double p1 = 0.0;
  for (std::uint64_t i = 0; i < tmp.amps_.size(); ++i) {
    if (i & m) p1 += std::norm(tmp.amps_[i]);
  }
  return p1;
}

int Statevector::measure(std::size_t q, const Matrix& basis, Rng& rng, std::optional<int> forced) {
  check_targets(std::span<const std::size_t>(&q, 1));
  const bool computational = basis.isIdentity(0.0);
  if (!computational) apply(basis.adjoint(), {q});
  const std::uint64_t m = mask_of(q);
  double p1 = 0.0;
  for (std::uint64_t i = 0; i < amps_.size(); ++i) {
    if (i & m) p1 += std::norm(amps_[i]);
  }
  int outcome;
  if (forced) {
    outcome = *forced & 1;
  } else {
    outcome = rng.uniform() < p1 ? 1 : 0;
  }
  const double p = outcome ? p1 : 1.0 - p1;
  if (p <= 1e-15) {
    throw std::logic_error("measurement selected a zero-probability branch");
  }
  const double scale = 1.0 / std::sqrt(p);
  for (std::uint64_t i = 0; i < amps_.size(); ++i) {
    const bool one = (i & m) != 0;
    amps_[i] = (one == (outcome == 1)) ? amps_[i] * scale : cplx{0.0, 0.0};
  }
  if (!computational) apply(basis, {q});
  return outcome;
}

void Statevector::discard_collapsed(std::size_t q, int b) {
  check_targets(std::span<const std::size_t>(&q, 1));
  const std::uint64_t m = mask_of(q);
  const std::size_t low_bits = n_qubits_ - 1 - q;
  std::vector<cplx> out(amps_.size() / 2);
  double other = 0.0;
  for (std::uint64_t i = 0; i < amps_.size(); ++i) {
    const bool one = (i & m) != 0;
    if (one != (b == 1)) {
      other += std::norm(amps_[i]);
      continue;
    }
    const std::uint64_t high = i >> (low_bits + 1);
    const std::uint64_t low = i & ((std::uint64_t{1} << low_bits) - 1);
    out[(high << low_bits) | low] = amps_[i];
  }
  if (other > kNormTolerance) throw std::logic_error("discarded qubit was not collapsed");
  amps_ = std::move(out);
  --n_qubits_;
}

int Statevector::measure_discard(std::size_t q, Rng& rng, std::optional<int> forced) {
  check_targets(std::span<const std::size_t>(&q, 1));
  const std::uint64_t m = mask_of(q);
  const std::size_t low_bits = n_qubits_ - 1 - q;
  double p1 = 0.0;
  for (std::uint64_t i = 0; i < amps_.size(); ++i) {
    if (i & m) p1 += std::norm(amps_[i]);
  }
  const int outcome = forced ? (*forced & 1) : (rng.uniform() < p1 ? 1 : 0);
  const double p = outcome ? p1 : 1.0 - p1;
  if (p <= 1e-15) throw std::logic_error("measurement selected a zero-probability branch");
  const double scale = 1.0 / std::sqrt(p);
  const std::uint64_t half = amps_.size() / 2;
  std::vector<cplx> out(half);
  const std::uint64_t low_mask = (std::uint64_t{1} << low_bits) - 1;
  const std::uint64_t bit = outcome ? m : 0;
  for (std::uint64_t j = 0; j < half; ++j) {
    const std::uint64_t i = ((j & ~low_mask) << 1) | bit | (j & low_mask);
    out[j] = amps_[i] * scale;
  }
  amps_ = std::move(out);
  --n_qubits_;
  return outcome;
}

Statevector Statevector::permuted(std::span<const std::size_t> order) const {
  if (order.size() != n_qubits_) throw std::invalid_argument("permutation size mismatch");
  check_targets(order);
  Statevector out(n_qubits_);
  out.amps_.assign(amps_.size(), cplx{0.0, 0.0});
  for (std::uint64_t i = 0; i < amps_.size(); ++i) {
    std::uint64_t j = 0;
    for (std::size_t nq = 0; nq < n_qubits_; ++nq) {
      if (i & mask_of(order[nq])) j |= out.mask_of(nq);
    }
    out.amps_[j] = amps_[i];
  }
  return out;
}

// -------------------------------------------------------------- DensityMatrix

DensityMatrix::DensityMatrix(Matrix m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols() || m_.rows() == 0) throw std::invalid_argument("density matrix must be square");
  if ((m_ - m_.adjoint()).cwiseAbs().maxCoeff() > 1e-9) {
    throw std::invalid_argument("density matrix is not Hermitian");
  }
  if (std::abs(m_.trace() - cplx{1.0, 0.0}) > 1e-9) {
    throw std::invalid_argument("density matrix trace is not 1");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-9) {
    throw std::invalid_argument("density matrix has a negative eigenvalue");
  }
}

DensityMatrix DensityMatrix::from_pure(const Statevector& s) {
  Eigen::Map<const Eigen::VectorXcd> v(s.amplitudes().data(), static_cast<Eigen::Index>(s.dim()));
  return DensityMatrix(v * v.adjoint());
}

DensityMatrix DensityMatrix::maximally_mixed(std::size_t dim) {
  return DensityMatrix(Matrix::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim)) /
                       static_cast<double>(dim));
}

double DensityMatrix::purity() const { return (m_ * m_).trace().real(); }

// ---------------------------------------------------------------------- gates

namespace gates {

Matrix identity(std::size_t dim) {
  return Matrix::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
}

Matrix hadamard() {
  Matrix h(2, 2);
  const double r = 1.0 / std::numbers::sqrt2;
  h << r, r, r, -r;
  return h;
}

Matrix pauli_x() {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

Matrix pauli_z() {
  Matrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

Matrix pauli_y() {
  Matrix m(2, 2);
  m << 0, cplx(0, -1), cplx(0, 1), 0;
  return m;
}

Matrix cnot() {
  Matrix m = Matrix::Zero(4, 4);
  m(0, 0) = m(1, 1) = m(2, 3) = m(3, 2) = 1.0;
  return m;
}

Matrix swap() {
  Matrix m = Matrix::Zero(4, 4);
  m(0, 0) = m(1, 2) = m(2, 1) = m(3, 3) = 1.0;
  return m;
}

Matrix basis_change(int theta) { return theta ? hadamard() : identity(2); }

Matrix rotation_basis(double angle) {
  Matrix m(2, 2);
  m << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return m;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

bool is_unitary(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return (m.adjoint() * m - Matrix::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace gates

// ------------------------------------------------------------ free functions

Statevector apply_gate(const Statevector& state, const Matrix& gate, std::span<const std::size_t> targets) {
  if (!gates::is_unitary(gate)) throw std::invalid_argument("gate matrix is not unitary within 1e-9");
  Statevector out = state;
  out.apply(gate, targets);
  return out;
}

MeasurementResult measure_in_basis(const Statevector& state, const BasisString& basis,
                                   std::span<const std::size_t> targets, Rng& rng) {
  if (basis.size() != targets.size()) throw std::invalid_argument("basis length must equal target count");
  MeasurementResult r{{}, state};
  r.bits.reserve(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    r.bits.push_back(r.post.measure(targets[i], gates::basis_change(basis.bits[i]), rng));
  }
  return r;
}

Statevector make_epr() {
  const double r = 1.0 / std::numbers::sqrt2;
  return Statevector(2, {r, 0.0, 0.0, r});
}

DensityMatrix partial_trace(const Statevector& state, std::span<const std::size_t> keep) {
  if (keep.empty()) throw std::invalid_argument("partial_trace needs at least one kept qubit");
  std::vector<std::size_t> order(keep.begin(), keep.end());
  for (std::size_t q : order) {
    if (q >= state.n_qubits()) throw std::out_of_range("kept qubit out of range");
  }
  for (std::size_t q = 0; q < state.n_qubits(); ++q) {
    if (std::find(keep.begin(), keep.end(), q) == keep.end()) order.push_back(q);
  }
  const Statevector p = state.permuted(order);
  const auto rows = static_cast<Eigen::Index>(std::size_t{1} << keep.size());
  const auto cols = static_cast<Eigen::Index>(p.dim()) / rows;
  // Row-major reshape: kept qubits are the high bits.
  Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
      p.amplitudes().data(), rows, cols);
  Matrix rho = m * m.adjoint();
  return DensityMatrix(rho);
}

Matrix reduce(const Matrix& rho, std::span<const std::size_t> dims, std::span<const std::size_t> keep) {
  std::size_t total = 1;
  for (std::size_t d : dims) total *= d;
  if (static_cast<std::size_t>(rho.rows()) != total || rho.rows() != rho.cols()) {
    throw std::invalid_argument("operator dimension does not match subsystem dimensions");
  }
  const std::size_t parts = dims.size();
  std::vector<bool> kept(parts, false);
  std::size_t keep_dim = 1;
  for (std::size_t k : keep) {
    if (k >= parts || kept[k]) throw std::invalid_argument("invalid kept subsystem list");
    kept[k] = true;
    keep_dim *= dims[k];
  }
  // Decompose every full index into (kept index, traced index).
  std::vector<std::size_t> kept_index(total), traced_index(total);
  std::vector<std::size_t> digits(parts);
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t rem = i;
    for (std::size_t p = parts; p-- > 0;) {
      digits[p] = rem % dims[p];
      rem /= dims[p];
    }
    std::size_t ki = 0;
    for (std::size_t k : keep) ki = ki * dims[k] + digits[k];
    std::size_t ti = 0;
    for (std::size_t p = 0; p < parts; ++p) {
      if (!kept[p]) ti = ti * dims[p] + digits[p];
    }
    kept_index[i] = ki;
    traced_index[i] = ti;
  }
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(keep_dim), static_cast<Eigen::Index>(keep_dim));
  for (std::size_t i = 0; i < total; ++i) {
    for (std::size_t j = 0; j < total; ++j) {
      if (traced_index[i] == traced_index[j]) {
        out(static_cast<Eigen::Index>(kept_index[i]), static_cast<Eigen::Index>(kept_index[j])) +=
            rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
    }
  }
  return out;
}

double fidelity_up_to_global_phase(const Statevector& a, const Statevector& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("fidelity: dimension mismatch");
  cplx ip{0.0, 0.0};
  for (std::size_t i = 0; i < a.dim(); ++i) ip += std::conj(a.amplitude(i)) * b.amplitude(i);
  return std::min(1.0, std::norm(ip));
}

Statevector random_state(std::size_t n_qubits, Rng& rng) {
  std::vector<cplx> amps(std::size_t{1} << n_qubits);
  double norm = 0.0;
  for (auto& a : amps) {
    a = cplx(rng.normal(), rng.normal());
    norm += std::norm(a);
  }
  for (auto& a : amps) a /= std::sqrt(norm);
  return Statevector(n_qubits, std::move(amps));
}

Matrix random_unitary(std::size_t dim, Rng& rng) {
  const auto d = static_cast<Eigen::Index>(dim);
  Matrix z(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) z(i, j) = cplx(rng.normal(), rng.normal()) / std::numbers::sqrt2;
  }
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < d; ++i) {
    const cplx diag = r(i, i);
    const double mag = std::abs(diag);
    q.col(i) *= (mag > 0.0 ? diag / mag : cplx{1.0, 0.0});
  }
  return q;
}

}  // namespace qpv
