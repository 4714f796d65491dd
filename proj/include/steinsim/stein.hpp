#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>

#include "steinsim/score_model.hpp"

namespace steinsim {

// Entrywise first-order score S(x), S_j = s0(x_j).
// Domain errors carry the offending coordinate index.
Eigen::VectorXd score_vec(const ScoreModel& model, const Eigen::VectorXd& x);

// Second-order score T(x) = S(x) S(x)^T - diag(s0'(x_j)); symmetric by construction.
Eigen::MatrixXd score_mat2(const ScoreModel& model, const Eigen::VectorXd& x);

struct SteinCheck1Result {
  Eigen::VectorXd residual;  // E_n[g(X) S(X)] - E_n[grad g(X)]
  Eigen::VectorXd std_error; // per-entry standard error of the residual
  std::size_t n = 0;
};

struct SteinCheck2Result {
  Eigen::MatrixXd residual;  // E_n[g(X) T(X)] - E_n[hess g(X)]
  Eigen::MatrixXd std_error;
  std::size_t n = 0;
};

// Monte Carlo check of E[g(X) S(X)] = E[grad g(X)] for X with i.i.d. model coordinates.
// Both sides share the same sample, so the residual is mean of the paired differences.
SteinCheck1Result stein_check1(
    const ScoreModel& model, Eigen::Index dim,
    const std::function<double(const Eigen::VectorXd&)>& g,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad_g,
    std::size_t n, std::uint64_t seed);

// Monte Carlo check of E[g(X) T(X)] = E[hess g(X)].
SteinCheck2Result stein_check2(
    const ScoreModel& model, Eigen::Index dim,
    const std::function<double(const Eigen::VectorXd&)>& g,
    const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& hess_g,
    std::size_t n, std::uint64_t seed);

}  // namespace steinsim
