#pragma once

#include <Eigen/Core>
#include <span>

namespace steinsim {

// Entrywise sign(x) * max(|x| - t, 0); exact zeros where |x| <= t.
double soft_threshold(double x, double t);
Eigen::VectorXd soft_threshold(const Eigen::VectorXd& v, double t);
Eigen::MatrixXd soft_threshold(const Eigen::MatrixXd& a, double t);

// Singular value soft-thresholding U max(S - t, 0) V^T.
// rank_out, when non-null, receives the number of surviving singular values.
Eigen::MatrixXd svt(const Eigen::MatrixXd& a, double t, Eigen::Index* rank_out = nullptr);

// Eigendecomposition of a symmetric matrix: values descending, each vector's
// first coordinate of nonneglible magnitude made positive so results are
// reproducible up to eigenvalue multiplicity.
struct EigenPairs {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;  // columns, aligned with values
};
EigenPairs sym_eig(const Eigen::MatrixXd& a);

// First k columns of sym_eig(w).vectors.
Eigen::MatrixXd leading_eigvecs(const Eigen::MatrixXd& w, Eigen::Index k);

// Euclidean projection onto {W : 0 <= W <= I, trace W = k} (symmetric input).
// Eigenvalues are shifted by a scalar theta found by bisection and clamped to [0,1];
// the projection is unique even where theta is not.
Eigen::MatrixXd fantope_project(const Eigen::MatrixXd& a, Eigen::Index k);

// Order-4 cubical tensor, row-major storage (last index fastest).
struct Tensor4 {
  Eigen::Index d = 0;
  Eigen::VectorXd data;  // d^4 entries

  Tensor4() = default;
  explicit Tensor4(Eigen::Index dim);
  double& at(Eigen::Index j1, Eigen::Index j2, Eigen::Index j3, Eigen::Index j4);
  double at(Eigen::Index j1, Eigen::Index j2, Eigen::Index j3, Eigen::Index j4) const;
};

// Square matricization of a d^4 tensor into d^2 x d^2: entry (j1 + j2 d, j3 + j4 d)
// holds Z(j1,j2,j3,j4), pairing the first two and last two modes column-major so a
// separable u (x) v (x) s (x) t maps to vec(u v^T) vec(s t^T)^T.
Eigen::MatrixXd square_unfold(const Tensor4& z);
Eigen::MatrixXd square_unfold(std::span<const double> flat_row_major, Eigen::Index d);

}  // namespace steinsim
