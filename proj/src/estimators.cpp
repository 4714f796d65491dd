#include "steinsim/estimators.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "steinsim/spectral.hpp"

namespace steinsim {

namespace {

Eigen::Index count_nonzero(const Eigen::MatrixXd& m) {
  Eigen::Index c = 0;
  for (Eigen::Index j = 0; j < m.size(); ++j)
    if (m.data()[j] != 0.0) ++c;
  return c;
}

double nuclear_norm(const Eigen::MatrixXd& m) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues().sum();
}

void finish_direction(SimEstimate& e) {
  const double nrm = e.raw.norm();
  if (nrm > 0) {
    e.direction = e.raw / nrm;
    e.direction_defined = true;
  } else {
    e.direction = Eigen::MatrixXd::Zero(e.raw.rows(), e.raw.cols());
    e.direction_defined = false;
  }
}

void require_tau(const TruncationSchedule& s, const char* who) {
  if (!s.tau) throw std::invalid_argument(std::string(who) + ": schedule must set tau");
}

void require_kappa(const TruncationSchedule& s, const char* who) {
  if (!s.kappa) throw std::invalid_argument(std::string(who) + ": schedule must set kappa");
}

}  // namespace

SimEstimate fit_sim1_sparse(const SimDataset& data, const ScoreModel& model,
                            const TruncationSchedule& schedule) {
  schedule.validate();
  require_tau(schedule, "fit_sim1_sparse");
  const TruncatedMoment m = truncated_first_moment(data, model, *schedule.tau);
  SimEstimate e;
  e.schedule = schedule;
  e.dims = data.dims;
  e.raw = soft_threshold(Eigen::MatrixXd(m.value), schedule.lambda / 2.0);
  e.diag.support_size = count_nonzero(e.raw);
  e.diag.estimated_rank = e.raw.squaredNorm() > 0 ? 1 : 0;
  e.diag.clip_fraction = m.clip_fraction;
  e.diag.objective = e.raw.squaredNorm() - 2.0 * (m.value.transpose() * e.raw)(0, 0) +
                     schedule.lambda * e.raw.cwiseAbs().sum();
  finish_direction(e);
  return e;
}

SimEstimate fit_sim1_sparse_iterative(const SimDataset& data, const ScoreModel& model,
                                      const TruncationSchedule& schedule, int iters,
                                      double step) {
  schedule.validate();
  require_tau(schedule, "fit_sim1_sparse_iterative");
  if (iters < 1 || !(step > 0) || !(step < 1))
    throw std::invalid_argument("fit_sim1_sparse_iterative: need iters >= 1, step in (0,1)");
  const TruncatedMoment m = truncated_first_moment(data, model, *schedule.tau);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(m.value.size());
  for (int t = 0; t < iters; ++t)
    beta = soft_threshold(Eigen::VectorXd(beta - step * 2.0 * (beta - m.value)),
                          step * schedule.lambda);
  SimEstimate e;
  e.schedule = schedule;
  e.dims = data.dims;
  e.raw = beta;
  e.diag.support_size = count_nonzero(e.raw);
  e.diag.estimated_rank = e.raw.squaredNorm() > 0 ? 1 : 0;
  e.diag.clip_fraction = m.clip_fraction;
  e.diag.iterations = iters;
  e.diag.objective = beta.squaredNorm() - 2.0 * m.value.dot(beta) +
                     schedule.lambda * beta.cwiseAbs().sum();
  finish_direction(e);
  return e;
}

namespace {

SimEstimate lowrank_from_moment(const TruncatedMomentMatrix& a,
                                const TruncationSchedule& schedule,
                                const std::vector<Eigen::Index>& dims) {
  SimEstimate e;
  e.schedule = schedule;
  e.dims = dims;
  Eigen::Index rank = 0;
  e.raw = svt(a.value, schedule.lambda / 2.0, &rank);
  e.diag.estimated_rank = rank;
  e.diag.support_size = count_nonzero(e.raw);
  e.diag.clip_fraction = a.clip_fraction;
  e.diag.objective = e.raw.squaredNorm() - 2.0 * (a.value.cwiseProduct(e.raw)).sum() +
                     schedule.lambda * nuclear_norm(e.raw);
  finish_direction(e);
  return e;
}

}  // namespace

SimEstimate fit_sim1_lowrank(const SimDataset& data, const ScoreModel& model,
                             const TruncationSchedule& schedule) {
  schedule.validate();
  require_kappa(schedule, "fit_sim1_lowrank");
  const TruncatedMomentMatrix a = truncated_mean_matrix(data, model, *schedule.kappa);
  return lowrank_from_moment(a, schedule, data.dims);
}

SimEstimate fit_sim1_lowrank_iterative(const SimDataset& data, const ScoreModel& model,
                                       const TruncationSchedule& schedule, int iters,
                                       double step) {
  schedule.validate();
  require_kappa(schedule, "fit_sim1_lowrank_iterative");
  if (iters < 1 || !(step > 0) || !(step < 1))
    throw std::invalid_argument("fit_sim1_lowrank_iterative: need iters >= 1, step in (0,1)");
  const TruncatedMomentMatrix a = truncated_mean_matrix(data, model, *schedule.kappa);
  Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(a.value.rows(), a.value.cols());
  Eigen::Index rank = 0;
  for (int t = 0; t < iters; ++t)
    beta = svt(beta - step * 2.0 * (beta - a.value), step * schedule.lambda, &rank);
  SimEstimate e;
  e.schedule = schedule;
  e.dims = data.dims;
  e.raw = beta;
  e.diag.estimated_rank = rank;
  e.diag.support_size = count_nonzero(e.raw);
  e.diag.clip_fraction = a.clip_fraction;
  e.diag.iterations = iters;
  e.diag.objective = beta.squaredNorm() - 2.0 * (a.value.cwiseProduct(beta)).sum() +
                     schedule.lambda * nuclear_norm(beta);
  finish_direction(e);
  return e;
}

SimEstimate fit_sim1_tensor(const SimDataset& data, const ScoreModel& model,
                            const TruncationSchedule& schedule) {
  data.validate();
  if (data.dims.size() != 4 || data.dims[0] != data.dims[1] ||
      data.dims[0] != data.dims[2] || data.dims[0] != data.dims[3])
    throw std::invalid_argument("fit_sim1_tensor: cubical order-4 covariates required");
  const Eigen::Index d = data.dims[0], dd = d * d;
  SimDataset unfolded;
  unfolded.dims = {dd, dd};
  unfolded.responses = data.responses;
  unfolded.covariates.resize(data.sample_count(), dd * dd);
  Eigen::VectorXd row(d * d * dd);
  for (Eigen::Index i = 0; i < data.sample_count(); ++i) {
    row = data.covariates.row(i);  // contiguous copy; matrix storage is column-major
    const Eigen::MatrixXd m =
        square_unfold({row.data(), static_cast<std::size_t>(row.size())}, d);
    for (Eigen::Index r = 0; r < dd; ++r)
      for (Eigen::Index c = 0; c < dd; ++c)
        unfolded.covariates(i, r * dd + c) = m(r, c);
  }
  SimEstimate e = fit_sim1_lowrank(unfolded, model, schedule);
  e.dims = data.dims;  // report the original tensor shape, not the unfolding
  return e;
}

void AdmmOptions::validate() const {
  if (!(rho > 0) || !(tol > 0) || max_iter < 1)
    throw std::invalid_argument("admm options: need rho > 0, tol > 0, max_iter >= 1");
}

FantopeSolution admm_fantope(const Eigen::MatrixXd& sigma, double lambda, Eigen::Index k,
                             const AdmmOptions& opts) {
  opts.validate();
  const Eigen::Index d = sigma.rows();
  if (sigma.cols() != d) throw std::invalid_argument("admm_fantope: sigma must be square");
  if (k < 1 || k > d) throw std::invalid_argument("admm_fantope: k out of range");
  if (lambda < 0) throw std::invalid_argument("admm_fantope: lambda must be >= 0");

  FantopeSolution sol;
  sol.k = k;
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(d, d);
  for (int it = 0; it < opts.max_iter; ++it) {
    w = fantope_project(z - u + sigma / opts.rho, k);
    const Eigen::MatrixXd z_prev = z;
    z = soft_threshold(Eigen::MatrixXd(w + u), lambda / opts.rho);
    u += w - z;
    const double primal = (w - z).norm();
    const double dual = opts.rho * (z - z_prev).norm();
    sol.primal_residuals.push_back(primal);
    sol.dual_residuals.push_back(dual);
    sol.iterations = it + 1;
    if (primal <= opts.tol && dual <= opts.tol) {
      sol.converged = true;
      break;
    }
  }
  sol.w = w;
  sol.extracted = leading_eigvecs(w, k);
  sol.objective = (sigma.cwiseProduct(w)).sum() - lambda * w.cwiseAbs().sum();
  return sol;
}

SubspaceEstimate fit_sim2_sparse(const SimDataset& data, const ScoreModel& model,
                                 const TruncationSchedule& schedule, const AdmmOptions& opts) {
  return fit_mim2(data, model, schedule, 1, opts);
}

SubspaceEstimate fit_mim2(const SimDataset& data, const ScoreModel& model,
                          const TruncationSchedule& schedule, Eigen::Index k,
                          const AdmmOptions& opts) {
  schedule.validate();
  require_tau(schedule, "fit_mim2");
  const TruncatedMomentMatrix sig = truncated_second_moment(data, model, *schedule.tau);
  SubspaceEstimate e;
  e.schedule = schedule;
  e.clip_fraction = sig.clip_fraction;
  e.fantope = admm_fantope(sig.value, schedule.lambda, k, opts);
  e.basis = e.fantope.extracted;
  return e;
}

SubspaceEstimate fit_spca_heavy(const Eigen::MatrixXd& rows, const TruncationSchedule& schedule,
                                Eigen::Index k, const AdmmOptions& opts) {
  schedule.validate();
  require_tau(schedule, "fit_spca_heavy");
  const TruncatedMomentMatrix sig = truncated_covariance(rows, *schedule.tau);
  SubspaceEstimate e;
  e.schedule = schedule;
  e.clip_fraction = sig.clip_fraction;
  e.fantope = admm_fantope(sig.value, schedule.lambda, k, opts);
  e.basis = e.fantope.extracted;
  return e;
}

}  // namespace steinsim
