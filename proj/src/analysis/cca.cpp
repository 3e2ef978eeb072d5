#include "pcl/analysis/cca.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/SVD>

namespace pcl::analysis {

namespace {

struct Whitened {
  MatrixXd basis;  // N x r orthonormal
  MatrixXd to_original;  // d x r, maps whitened coordinates back: X_c * to_original = basis
};

Whitened whiten(const MatrixXd& centered, double rank_tol, const char* which) {
  Eigen::BDCSVD<MatrixXd> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd& s = svd.singularValues();
  if (s.size() == 0 || !(s(0) > 0.0)) throw DegenerateInputError(std::string("view ") + which + " has zero variance");
  Index r = 0;
  while (r < s.size() && s(r) > rank_tol * s(0)) ++r;
  Whitened w;
  w.basis = svd.matrixU().leftCols(r);
  w.to_original = svd.matrixV().leftCols(r) * s.head(r).cwiseInverse().asDiagonal();
  return w;
}

MatrixXd center(const MatrixXd& m) { return m.rowwise() - m.colwise().mean(); }

}  // namespace

CcaResult cca(const MatrixXd& x, const MatrixXd& y, double rank_tol) {
  if (x.rows() != y.rows()) {
    throw ShapeError("cca needs row-aligned inputs, got " + std::to_string(x.rows()) + " and " + std::to_string(y.rows()));
  }
  if (x.rows() < 2) throw ContractError("cca needs at least 2 observations");
  const Whitened wx = whiten(center(x), rank_tol, "a");
  const Whitened wy = whiten(center(y), rank_tol, "b");
  const MatrixXd cross = wx.basis.transpose() * wy.basis;
  Eigen::JacobiSVD<MatrixXd> svd(cross, Eigen::ComputeThinU | Eigen::ComputeThinV);

  CcaResult out;
  out.rank_x = wx.basis.cols();
  out.rank_y = wy.basis.cols();
  out.rho = svd.singularValues().cwiseMax(0.0).cwiseMin(1.0);
  out.wx = wx.to_original * svd.matrixU();
  out.wy = wy.to_original * svd.matrixV();
  return out;
}

AlignmentReport pwcca(const MatrixXd& x, const MatrixXd& y, double rank_tol) {
  const CcaResult c = cca(x, y, rank_tol);
  const MatrixXd xc = center(x);
  const MatrixXd h = xc * c.wx;  // canonical variates, N x k
  const VectorXd raw = (h.transpose() * xc).cwiseAbs().rowwise().sum();
  AlignmentReport rep;
  rep.rho = c.rho;
  rep.effective_rank = c.rho.size();
  const double total = raw.sum();
  rep.alpha = total > 0.0 ? VectorXd(raw / total) : VectorXd::Constant(raw.size(), 1.0 / static_cast<double>(raw.size()));
  rep.score = rep.alpha.dot(rep.rho);
  return rep;
}

MatrixXd to_matrix(const TensorF& t) {
  if (t.rank() < 1 || t.size() == 0) throw ShapeError("expected a non-empty [N, ...] tensor, got " + shape_str(t.shape()));
  return t.matrix().cast<double>();
}

std::string alignment_csv_header() { return "view_a,view_b,weighting_view,score,n_rho,effective_rank,max_rho"; }

std::string alignment_csv_row(const std::string& view_a, const std::string& view_b, const AlignmentReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << view_a << ',' << view_b << ',' << view_a << ',' << r.score << ','
     << r.rho.size() << ',' << r.effective_rank << ',' << (r.rho.size() ? r.rho(0) : 0.0);
  return os.str();
}

}  // namespace pcl::analysis
