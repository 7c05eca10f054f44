#pragma once

#include <cstddef>
#include <map>
#include <vector>

namespace qpv {

struct ChiSquareResult {
  double statistic = 0.0;
  std::size_t dof = 0;
  double p_value = 1.0;
};

using Histogram = std::map<std::vector<int>, std::size_t>;

// Pearson test that two samples come from the same discrete distribution
// (2 x K contingency table over the union of observed categories).
ChiSquareResult chi_square_homogeneity(const Histogram& a, const Histogram& b);

// sqrt(p (1 - p) / n)
double binomial_stderr(double p, std::size_t n);

}  // namespace qpv
