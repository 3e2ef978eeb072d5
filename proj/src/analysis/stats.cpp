#include "pcl/analysis/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "pcl/core/errors.hpp"

namespace pcl::analysis {

namespace {

struct Ranked {
  std::vector<double> ranks;  // ranks of a then b in the pooled sample
  double tie_term = 0.0;      // sum over tie groups of t^3 - t
  bool ties = false;
};

Ranked pooled_ranks(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size() + b.size();
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return pooled[i] < pooled[j]; });
  Ranked r;
  r.ranks.assign(n, 0.0);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r.ranks[order[k]] = avg;
    const double t = static_cast<double>(j - i + 1);
    if (t > 1) {
      r.ties = true;
      r.tie_term += t * t * t - t;
    }
    i = j + 1;
  }
  return r;
}

}  // namespace

std::string to_string(MwMethod m) {
  switch (m) {
    case MwMethod::automatic: return "automatic";
    case MwMethod::exact: return "exact";
    case MwMethod::normal_approx: return "normal-approx";
  }
  return "unknown";
}

std::vector<double> mann_whitney_null_counts(int n1, int n2) {
  // f[i][j][u]: arrangements of i first-sample and j second-sample ranks with statistic u.
  const int max_u = n1 * n2;
  std::vector<std::vector<std::vector<double>>> f(
      static_cast<std::size_t>(n1 + 1),
      std::vector<std::vector<double>>(static_cast<std::size_t>(n2 + 1), std::vector<double>(static_cast<std::size_t>(max_u + 1), 0.0)));
  for (int i = 0; i <= n1; ++i) {
    for (int j = 0; j <= n2; ++j) {
      auto& cell = f[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (i == 0 || j == 0) {
        cell[0] = 1.0;
        continue;
      }
      // The largest pooled value belongs either to the first sample (beating all j) or to the second.
      const auto& take_a = f[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j)];
      const auto& take_b = f[static_cast<std::size_t>(i)][static_cast<std::size_t>(j - 1)];
      for (int u = 0; u <= i * j; ++u) {
        double c = take_b[static_cast<std::size_t>(u)];
        if (u >= j) c += take_a[static_cast<std::size_t>(u - j)];
        cell[static_cast<std::size_t>(u)] = c;
      }
    }
  }
  return f[static_cast<std::size_t>(n1)][static_cast<std::size_t>(n2)];
}

SignificanceResult mann_whitney_u(std::span<const double> a, std::span<const double> b, MwMethod method) {
  if (a.empty() || b.empty()) throw ContractError("Mann-Whitney U needs two non-empty samples");
  const double n1 = static_cast<double>(a.size());
  const double n2 = static_cast<double>(b.size());
  const Ranked r = pooled_ranks(a, b);
  const double rank_sum = std::accumulate(r.ranks.begin(), r.ranks.begin() + static_cast<std::ptrdiff_t>(a.size()), 0.0);

  SignificanceResult res;
  res.u = rank_sum - n1 * (n1 + 1.0) / 2.0;
  const double mu = n1 * n2 / 2.0;
  if (method == MwMethod::automatic) {
    method = (a.size() + b.size() <= 16 && !r.ties) ? MwMethod::exact : MwMethod::normal_approx;
  }
  if (method == MwMethod::exact && r.ties) throw ContractError("exact Mann-Whitney p requires distinct values");
  res.method = method;

  if (method == MwMethod::exact) {
    const std::vector<double> counts = mann_whitney_null_counts(static_cast<int>(a.size()), static_cast<int>(b.size()));
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    const auto u = static_cast<std::size_t>(std::llround(res.u));
    const std::size_t mirrored = counts.size() - 1 - u;
    const std::size_t lower = std::min(u, mirrored);
    // The null distribution is symmetric, so the lower tail of min(U, n1 n2 - U) is the one-sided p.
    const double tail = std::accumulate(counts.begin(), counts.begin() + static_cast<std::ptrdiff_t>(lower) + 1, 0.0);
    res.p_value = std::min(1.0, 2.0 * tail / total);
    return res;
  }

  const double n = n1 + n2;
  const double var = n1 * n2 / 12.0 * ((n + 1.0) - r.tie_term / (n * (n - 1.0)));
  if (!(var > 0.0)) {
    res.p_value = 1.0;
    return res;
  }
  const double z = std::max(0.0, std::abs(res.u - mu) - 0.5) / std::sqrt(var);
  res.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return res;
}

double t_critical_95(int dof) {
  if (dof < 1) throw ContractError("t quantile needs at least one degree of freedom");
  return boost::math::quantile(boost::math::students_t_distribution<double>(dof), 0.975);
}

MeanCi mean_ci95(std::span<const double> samples) {
  const std::size_t n = samples.size();
  if (n < 2) throw ContractError("a confidence interval needs at least 2 samples");
  MeanCi ci;
  if (std::all_of(samples.begin(), samples.end(), [&](double x) { return x == samples[0]; })) {
    ci.mean = samples[0];
    return ci;
  }
  ci.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double x : samples) ss += (x - ci.mean) * (x - ci.mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  ci.half_width = t_critical_95(static_cast<int>(n - 1)) * sd / std::sqrt(static_cast<double>(n));
  return ci;
}

std::vector<double> average_ranks(std::span<const double> scores) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return scores[i] > scores[j]; });
  std::vector<double> ranks(n, 0.0);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

std::string significance_csv_header() { return "u,p_value,method,alpha,significant"; }

std::string significance_csv_row(const SignificanceResult& r) {
  std::ostringstream os;
  os.precision(17);
  os << r.u << ',' << r.p_value << ',' << to_string(r.method) << ',' << r.alpha << ',' << (r.significant() ? 1 : 0);
  return os.str();
}

}  // namespace pcl::analysis
