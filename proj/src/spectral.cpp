#include "steinsim/spectral.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace steinsim {

double soft_threshold(double x, double t) {
  const double m = std::abs(x) - t;
  return m > 0 ? (x > 0 ? m : -m) : 0.0;
}

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& v, double t) {
  return v.unaryExpr([t](double x) { return soft_threshold(x, t); });
}

Eigen::MatrixXd soft_threshold(const Eigen::MatrixXd& a, double t) {
  return a.unaryExpr([t](double x) { return soft_threshold(x, t); });
}

Eigen::MatrixXd svt(const Eigen::MatrixXd& a, double t, Eigen::Index* rank_out) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::VectorXd sv = svd.singularValues();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    sv[i] = std::max(sv[i] - t, 0.0);
    if (sv[i] > 0) ++rank;
  }
  if (rank_out) *rank_out = rank;
  return svd.matrixU() * sv.asDiagonal() * svd.matrixV().transpose();
}

namespace {

void fix_sign(Eigen::Ref<Eigen::MatrixXd> vectors) {
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    auto col = vectors.col(c);
    const double thresh = 1e-12 * col.cwiseAbs().maxCoeff();
    for (Eigen::Index r = 0; r < col.size(); ++r) {
      if (std::abs(col[r]) > thresh) {
        if (col[r] < 0) col = -col;
        break;
      }
    }
  }
}

}  // namespace

EigenPairs sym_eig(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("sym_eig: matrix must be square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success) throw std::runtime_error("sym_eig: eigendecomposition failed");
  EigenPairs p;
  p.values = es.eigenvalues().reverse();
  p.vectors = es.eigenvectors().rowwise().reverse();
  fix_sign(p.vectors);
  return p;
}

Eigen::MatrixXd leading_eigvecs(const Eigen::MatrixXd& w, Eigen::Index k) {
  if (k < 1 || k > w.rows()) throw std::invalid_argument("leading_eigvecs: k out of range");
  return sym_eig(w).vectors.leftCols(k);
}

Eigen::MatrixXd fantope_project(const Eigen::MatrixXd& a, Eigen::Index k) {
  const Eigen::Index d = a.rows();
  if (a.cols() != d) throw std::invalid_argument("fantope_project: matrix must be square");
  if (k < 1 || k > d) throw std::invalid_argument("fantope_project: k out of range");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("fantope_project: eigendecomposition failed");
  const Eigen::VectorXd& lam = es.eigenvalues();

  const auto trace_at = [&](double theta) {
    double s = 0;
    for (Eigen::Index i = 0; i < d; ++i)
      s += std::clamp(lam[i] - theta, 0.0, 1.0);
    return s;
  };

  // trace_at is continuous and nonincreasing, from d at lo to 0 at hi.
  double lo = lam.minCoeff() - 1.0;
  double hi = lam.maxCoeff();
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (trace_at(mid) > static_cast<double>(k))
      lo = mid;
    else
      hi = mid;
  }
  const double theta = 0.5 * (lo + hi);

  Eigen::VectorXd gamma(d);
  for (Eigen::Index i = 0; i < d; ++i) gamma[i] = std::clamp(lam[i] - theta, 0.0, 1.0);
  return es.eigenvectors() * gamma.asDiagonal() * es.eigenvectors().transpose();
}

Tensor4::Tensor4(Eigen::Index dim) : d(dim), data(Eigen::VectorXd::Zero(dim * dim * dim * dim)) {
  if (dim <= 0) throw std::invalid_argument("Tensor4: dim must be > 0");
}

double& Tensor4::at(Eigen::Index j1, Eigen::Index j2, Eigen::Index j3, Eigen::Index j4) {
  return data[((j1 * d + j2) * d + j3) * d + j4];
}

double Tensor4::at(Eigen::Index j1, Eigen::Index j2, Eigen::Index j3, Eigen::Index j4) const {
  return data[((j1 * d + j2) * d + j3) * d + j4];
}

Eigen::MatrixXd square_unfold(std::span<const double> flat_row_major, Eigen::Index d) {
  const auto expect = static_cast<std::size_t>(d) * d * d * d;
  if (flat_row_major.size() != expect)
    throw std::invalid_argument("square_unfold: flat size is not d^4");
  Eigen::MatrixXd m(d * d, d * d);
  std::size_t idx = 0;
  for (Eigen::Index j1 = 0; j1 < d; ++j1)
    for (Eigen::Index j2 = 0; j2 < d; ++j2)
      for (Eigen::Index j3 = 0; j3 < d; ++j3)
        for (Eigen::Index j4 = 0; j4 < d; ++j4)
          m(j1 + j2 * d, j3 + j4 * d) = flat_row_major[idx++];
  return m;
}

Eigen::MatrixXd square_unfold(const Tensor4& z) {
  return square_unfold({z.data.data(), static_cast<std::size_t>(z.data.size())}, z.d);
}

}  // namespace steinsim
