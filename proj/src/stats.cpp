#include "qpv/stats.hpp"

#include <cmath>
#include <set>

#include <boost/math/distributions/chi_squared.hpp>

namespace qpv {

ChiSquareResult chi_square_homogeneity(const Histogram& a, const Histogram& b) {
  std::set<std::vector<int>> cats;
  double na = 0.0, nb = 0.0;
  for (const auto& [k, c] : a) {
    cats.insert(k);
    na += static_cast<double>(c);
  }
  for (const auto& [k, c] : b) {
    cats.insert(k);
    nb += static_cast<double>(c);
  }
  ChiSquareResult r;
  if (na == 0.0 || nb == 0.0 || cats.size() < 2) return r;
  const double n = na + nb;
  for (const auto& k : cats) {
    const auto ia = a.find(k);
    const auto ib = b.find(k);
    const double ca = ia == a.end() ? 0.0 : static_cast<double>(ia->second);
    const double cb = ib == b.end() ? 0.0 : static_cast<double>(ib->second);
    const double col = ca + cb;
    const double ea = col * na / n, eb = col * nb / n;
    r.statistic += (ca - ea) * (ca - ea) / ea + (cb - eb) * (cb - eb) / eb;
  }
  r.dof = cats.size() - 1;
  const boost::math::chi_squared dist(static_cast<double>(r.dof));
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
  return r;
}

double binomial_stderr(double p, std::size_t n) {
  return n == 0 ? 0.0 : std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

}  // namespace qpv
