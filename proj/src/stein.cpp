#include "steinsim/stein.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace steinsim {

Eigen::VectorXd score_vec(const ScoreModel& model, const Eigen::VectorXd& x) {
  Eigen::VectorXd s(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    try {
      s[j] = model.score(x[j]);
    } catch (const std::domain_error& e) {
      std::ostringstream os;
      os << e.what() << " [coordinate " << j << "]";
      throw std::domain_error(os.str());
    }
  }
  return s;
}

Eigen::MatrixXd score_mat2(const ScoreModel& model, const Eigen::VectorXd& x) {
  const Eigen::VectorXd s = score_vec(model, x);
  Eigen::MatrixXd t = s * s.transpose();
  for (Eigen::Index j = 0; j < x.size(); ++j) t(j, j) -= model.score_deriv(x[j]);
  return t;
}

SteinCheck1Result stein_check1(
    const ScoreModel& model, Eigen::Index dim,
    const std::function<double(const Eigen::VectorXd&)>& g,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad_g,
    std::size_t n, std::uint64_t seed) {
  if (dim <= 0) throw std::invalid_argument("stein_check1: dim must be > 0");
  if (n == 0) throw std::invalid_argument("stein_check1: n must be > 0");
  std::mt19937_64 rng(seed);
  Eigen::VectorXd x(dim);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd sumsq = Eigen::VectorXd::Zero(dim);
  for (std::size_t i = 0; i < n; ++i) {
    model.sample_into(rng, {x.data(), static_cast<std::size_t>(dim)});
    const Eigen::VectorXd diff = g(x) * score_vec(model, x) - grad_g(x);
    sum += diff;
    sumsq += diff.cwiseAbs2();
  }
  SteinCheck1Result r;
  r.n = n;
  r.residual = sum / static_cast<double>(n);
  const Eigen::VectorXd var =
      (sumsq / static_cast<double>(n) - r.residual.cwiseAbs2()).cwiseMax(0.0);
  r.std_error = (var / static_cast<double>(n)).cwiseSqrt();
  return r;
}

SteinCheck2Result stein_check2(
    const ScoreModel& model, Eigen::Index dim,
    const std::function<double(const Eigen::VectorXd&)>& g,
    const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& hess_g,
    std::size_t n, std::uint64_t seed) {
  if (dim <= 0) throw std::invalid_argument("stein_check2: dim must be > 0");
  if (n == 0) throw std::invalid_argument("stein_check2: n must be > 0");
  std::mt19937_64 rng(seed);
  Eigen::VectorXd x(dim);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::MatrixXd sumsq = Eigen::MatrixXd::Zero(dim, dim);
  for (std::size_t i = 0; i < n; ++i) {
    model.sample_into(rng, {x.data(), static_cast<std::size_t>(dim)});
    const Eigen::MatrixXd diff = g(x) * score_mat2(model, x) - hess_g(x);
    sum += diff;
    sumsq += diff.cwiseAbs2();
  }
  SteinCheck2Result r;
  r.n = n;
  r.residual = sum / static_cast<double>(n);
  const Eigen::MatrixXd var =
      (sumsq / static_cast<double>(n) - r.residual.cwiseAbs2()).cwiseMax(0.0);
  r.std_error = (var / static_cast<double>(n)).cwiseSqrt();
  return r;
}

}  // namespace steinsim
