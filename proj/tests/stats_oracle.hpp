#pragma once

// Brute-force Mann-Whitney reference: enumerates every assignment of the
// pooled ranks to the first sample.

#include <algorithm>
#include <cstddef>
#include <vector>

namespace pcl::testing::oracle {

/// U of the first sample against the second, distinct values only.
inline double u_statistic(const std::vector<double>& a, const std::vector<double>& b) {
  double u = 0.0;
  for (double x : a)
    for (double y : b) u += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
  return u;
}

/// Two-sided exact p: twice the smaller tail of the permutation distribution.
inline double mann_whitney_exact_p(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n1 = a.size(), n = a.size() + b.size();
  const double observed = u_statistic(a, b);
  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(n1), true);
  double total = 0.0, low = 0.0, high = 0.0;
  do {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < n; ++i) (pick[i] ? x : y).push_back(static_cast<double>(i));
    const double u = u_statistic(x, y);
    total += 1.0;
    low += u <= observed;
    high += u >= observed;
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return std::min(1.0, 2.0 * std::min(low, high) / total);
}

}  // namespace pcl::testing::oracle
