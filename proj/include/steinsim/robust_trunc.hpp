#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>

#include "steinsim/dataset.hpp"
#include "steinsim/score_model.hpp"

namespace steinsim {

// sign(y) * min(|y|, tau); requires tau > 0 where used below.
double clip(double y, double tau);

// Odd influence function sign(x) log(1 + |x| + x^2/2); |psi(x) - x| <= |x|^3 on |x| <= 1/2.
double psi_catoni(double x);

// Spectral extension of psi_catoni to a rectangular d1 x d2 matrix via the symmetric
// dilation [[0, A], [A^T, 0]]: apply psi to the dilation's eigenvalues and return the
// top-right block of the reassembled matrix.
Eigen::MatrixXd psi_matrix(const Eigen::MatrixXd& a);

enum class ScheduleSource { TheoremFormula, ExperimentDefault, Manual };

// Tuning bundle for the robust estimators. tau (entrywise clip level) and kappa
// (psi scale) are present only where the target estimator uses them; set fields
// must be positive and lambda always is.
struct TruncationSchedule {
  std::optional<double> tau;
  std::optional<double> kappa;
  double lambda = 0.0;
  ScheduleSource source = ScheduleSource::Manual;
  double moment_bound = 1.0;

  void validate() const;  // throws std::invalid_argument
};

TruncationSchedule manual_schedule(std::optional<double> tau, std::optional<double> kappa,
                                   double lambda, double moment_bound = 1.0);

// Rate-driven settings. TheoremFormula uses the analysis constants; ExperimentDefault
// swaps in the reference experiment values where the source defines them and keeps
// the formula values elsewhere. All require n >= 1 and an ambient dimension >= 2.
TruncationSchedule schedule_first_sparse(MomentBound m, Eigen::Index n, Eigen::Index d,
                                         ScheduleSource source = ScheduleSource::TheoremFormula);
TruncationSchedule schedule_first_lowrank(MomentBound m, Eigen::Index n, Eigen::Index d1,
                                          Eigen::Index d2,
                                          ScheduleSource source = ScheduleSource::TheoremFormula);
TruncationSchedule schedule_second(MomentBound m, Eigen::Index n, Eigen::Index d,
                                   ScheduleSource source = ScheduleSource::TheoremFormula);
TruncationSchedule schedule_tensor(MomentBound m, Eigen::Index n, Eigen::Index d,
                                   ScheduleSource source = ScheduleSource::TheoremFormula);
TruncationSchedule schedule_spca_heavy(MomentBound m, Eigen::Index n, Eigen::Index d,
                                       ScheduleSource source = ScheduleSource::TheoremFormula);

struct TruncatedMoment {
  Eigen::VectorXd value;
  std::size_t n_used = 0;
  double clip_fraction = 0.0;  // clipped entries / inspected entries
};

struct TruncatedMomentMatrix {
  Eigen::MatrixXd value;
  std::size_t n_used = 0;
  double clip_fraction = 0.0;
};

// (1/n) sum clip(Y_i, tau) * clip(S(X_i), tau) entrywise; every term bounded by tau^2.
// shards > 1 splits the sample into contiguous blocks accumulated in fixed order,
// so results are reproducible for a given shard count.
TruncatedMoment truncated_first_moment(const SimDataset& data, const ScoreModel& model,
                                       double tau, int shards = 1);

// (1/(kappa n)) sum psi_matrix(kappa Y_i S(X_i)) for matrix covariates.
// clip_fraction reports the share of dilation eigenvalues with |lambda| > 1/2,
// i.e. outside psi's cubic-accuracy regime.
TruncatedMomentMatrix truncated_mean_matrix(const SimDataset& data, const ScoreModel& model,
                                            double kappa, int shards = 1);

// (1/n) sum clip(Y_i, tau) * clip(T(X_i), tau^2) entrywise, T the second-order score.
TruncatedMomentMatrix truncated_second_moment(const SimDataset& data, const ScoreModel& model,
                                              double tau, int shards = 1);

// (1/n) sum Xbar_i Xbar_i^T with Xbar the entrywise clip of each row at tau.
TruncatedMomentMatrix truncated_covariance(const Eigen::MatrixXd& rows, double tau,
                                           int shards = 1);

}  // namespace steinsim
