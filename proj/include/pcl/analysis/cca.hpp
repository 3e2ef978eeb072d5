#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pcl/core/tensor.hpp"

namespace pcl::analysis {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kCcaRankTol = 1e-6;

struct CcaResult {
  /// Canonical correlations, descending, clipped to [0, 1].
  VectorXd rho;
  /// Directions in the original (centered) feature spaces; column i of
  /// `wx` and `wy` pairs with rho[i].
  MatrixXd wx;
  MatrixXd wy;
  Index rank_x = 0;
  Index rank_y = 0;
};

/// Canonical correlation analysis of the rows of X [N, d1] and Y [N, d2].
/// Each view is whitened through its thin SVD, dropping singular values
/// below rank_tol * sigma_max.
CcaResult cca(const MatrixXd& x, const MatrixXd& y, double rank_tol = kCcaRankTol);

struct AlignmentReport {
  VectorXd rho;
  /// Normalized projection weights, one per canonical pair.
  VectorXd alpha;
  double score = 0.0;
  Index effective_rank = 0;
};

/// Projection-weighted CCA. X is the weighting view: variates h_i = X w_i
/// are weighted by sum_j |<h_i, x_j>| over the centered columns of X.
AlignmentReport pwcca(const MatrixXd& x, const MatrixXd& y, double rank_tol = kCcaRankTol);

/// Flattens [N, ...] to an N x rest double matrix.
MatrixXd to_matrix(const TensorF& t);

/// The weighting view column always names view_a. CSV header:
/// `view_a,view_b,weighting_view,score,n_rho,effective_rank,max_rho`.
std::string alignment_csv_header();
std::string alignment_csv_row(const std::string& view_a, const std::string& view_b, const AlignmentReport& report);

}  // namespace pcl::analysis
