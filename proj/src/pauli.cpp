#include "qpv/pauli.hpp"

#include <stdexcept>

namespace qpv {

PauliKey PauliKey::random(std::size_t n, Rng& rng) {
  PauliKey k;
  k.symbols.resize(n);
  for (auto& s : k.symbols) s = static_cast<int>(rng.below(4));
  return k;
}

bool PauliKey::is_identity() const {
  for (int s : symbols) {
    if (s != 0) return false;
  }
  return true;
}

PauliKey PauliKey::operator^(const PauliKey& o) const {
  if (o.size() != size()) throw std::invalid_argument("PauliKey product: length mismatch");
  PauliKey out = *this;
  for (std::size_t i = 0; i < size(); ++i) out.symbols[i] ^= o.symbols[i];
  return out;
}

PauliKey PauliKey::slice(std::size_t begin, std::size_t count) const {
  if (begin + count > size()) throw std::out_of_range("PauliKey slice out of range");
  return PauliKey{std::vector<int>(symbols.begin() + static_cast<std::ptrdiff_t>(begin),
                                   symbols.begin() + static_cast<std::ptrdiff_t>(begin + count))};
}

PauliKey PauliKey::concat(const PauliKey& o) const {
  PauliKey out = *this;
  out.symbols.insert(out.symbols.end(), o.symbols.begin(), o.symbols.end());
  return out;
}

std::string PauliKey::str() const {
  static const char* names[4] = {"I", "X", "Z", "XZ"};
  std::string s;
  for (std::size_t i = 0; i < size(); ++i) {
    if (i) s += '.';
    s += names[symbols[i] & 3];
  }
  return s;
}

Matrix pauli_matrix(int symbol) {
  if (symbol < 0 || symbol > 3) throw std::invalid_argument("Pauli symbol outside {0,1,2,3}");
  Matrix m = gates::identity(2);
  if (symbol & 1) m = gates::pauli_x() * m;
  if (symbol & 2) m = m * gates::pauli_z();
  return m;
}

PauliMasks pauli_masks(const PauliKey& key) {
  PauliMasks m;
  for (int s : key.symbols) {
    if (s < 0 || s > 3) throw std::invalid_argument("Pauli symbol outside {0,1,2,3}");
    m.x = (m.x << 1) | static_cast<std::uint64_t>(s & 1);
    m.z = (m.z << 1) | static_cast<std::uint64_t>((s >> 1) & 1);
  }
  return m;
}

// Monomial, so built column by column rather than by kron.
Matrix pauli_operator(const PauliKey& key) {
  const PauliMasks pm = pauli_masks(key);
  const auto dim = static_cast<Eigen::Index>(std::size_t{1} << key.symbols.size());
  Matrix m = Matrix::Zero(dim, dim);
  for (Eigen::Index col = 0; col < dim; ++col) {
    const auto c = static_cast<std::uint64_t>(col);
    m(static_cast<Eigen::Index>(pm.row(c)), col) = pm.sign(c);
  }
  return m;
}

}  // namespace qpv
