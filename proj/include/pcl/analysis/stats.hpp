#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pcl::analysis {

enum class MwMethod { automatic, exact, normal_approx };

std::string to_string(MwMethod m);

struct SignificanceResult {
  /// U of the first sample: pairs (a_i, b_j) with a_i > b_j, ties counting 1/2.
  double u = 0.0;
  double p_value = 1.0;
  /// Method actually used; never `automatic`.
  MwMethod method = MwMethod::exact;
  double alpha = 0.05;

  bool significant() const { return p_value < alpha; }
};

/// Two-sided Mann-Whitney U test. `automatic` uses the exact null
/// distribution when n1 + n2 <= 16 and no ties occur, otherwise the normal
/// approximation with tie-corrected variance and continuity correction.
/// Requesting `exact` with ties throws ContractError.
SignificanceResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                                  MwMethod method = MwMethod::automatic);

/// Number of ways n1 of n1 + n2 distinct ranks produce each U in 0..n1*n2.
std::vector<double> mann_whitney_null_counts(int n1, int n2);

struct MeanCi {
  double mean = 0.0;
  double half_width = 0.0;
};

/// Student-t 95% interval with n - 1 degrees of freedom.
MeanCi mean_ci95(std::span<const double> samples);

/// Two-sided 95% critical value of Student's t.
double t_critical_95(int dof);

/// Rank 1 for the largest score; tied scores share the mean of their ranks.
std::vector<double> average_ranks(std::span<const double> scores);

/// CSV header `u,p_value,method,alpha,significant`.
std::string significance_csv_header();
std::string significance_csv_row(const SignificanceResult& r);

}  // namespace pcl::analysis
