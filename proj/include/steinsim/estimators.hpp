#pragma once

#include <Eigen/Core>
#include <vector>

#include "steinsim/dataset.hpp"
#include "steinsim/robust_trunc.hpp"
#include "steinsim/score_model.hpp"

namespace steinsim {

struct SimDiagnostics {
  Eigen::Index support_size = 0;    // exact nonzeros (entrywise-thresholded fits)
  Eigen::Index estimated_rank = 0;  // surviving singular values (spectral fits)
  double objective = 0.0;           // penalized surrogate loss at raw
  double clip_fraction = 0.0;
  int iterations = 0;               // iterative mode only
  bool converged = true;
};

// Output of the index-direction fits. raw estimates mu * beta with mu the unknown
// link slope, so only direction (raw normalized to unit Frobenius norm) is
// identified. raw == 0 leaves direction zero with direction_defined == false.
struct SimEstimate {
  Eigen::MatrixXd raw;        // d x 1 for vector estimands, else d1 x d2
  Eigen::MatrixXd direction;
  bool direction_defined = false;
  std::vector<Eigen::Index> dims;
  TruncationSchedule schedule;
  SimDiagnostics diag;
};

// Closed-form minimizer of ||b||^2 - 2<m,b> + lambda ||b||_1 with m the truncated
// first moment: entrywise soft threshold of m at lambda/2.
SimEstimate fit_sim1_sparse(const SimDataset& data, const ScoreModel& model,
                            const TruncationSchedule& schedule);

// Proximal-gradient route to the same objective, kept as a fidelity check on the
// closed form; contraction factor |1 - 2 step| per iteration.
SimEstimate fit_sim1_sparse_iterative(const SimDataset& data, const ScoreModel& model,
                                      const TruncationSchedule& schedule, int iters = 2000,
                                      double step = 0.05);

// Nuclear-norm variant: singular value soft threshold of the psi-truncated mean
// matrix at lambda/2.
SimEstimate fit_sim1_lowrank(const SimDataset& data, const ScoreModel& model,
                             const TruncationSchedule& schedule);
SimEstimate fit_sim1_lowrank_iterative(const SimDataset& data, const ScoreModel& model,
                                       const TruncationSchedule& schedule, int iters = 2000,
                                       double step = 0.05);

// Order-4 cubical covariates: square-unfold every sample, then run the matrix
// pipeline; the result equals fit_sim1_lowrank on the pre-unfolded data exactly.
SimEstimate fit_sim1_tensor(const SimDataset& data, const ScoreModel& model,
                            const TruncationSchedule& schedule);

struct AdmmOptions {
  double rho = 1.0;
  double tol = 1e-6;
  int max_iter = 5000;
  void validate() const;
};

// maximize <W, Sigma> - lambda ||W||_1 over the Fantope {0 <= W <= I, tr W = k},
// scaled ADMM with splitting W = Z. w is the Fantope-feasible iterate.
struct FantopeSolution {
  Eigen::MatrixXd w;
  Eigen::MatrixXd extracted;  // d x k leading eigenvectors of w
  Eigen::Index k = 0;
  double objective = 0.0;     // evaluated at w
  std::vector<double> primal_residuals;  // ||W - Z||_F per iteration
  std::vector<double> dual_residuals;    // rho ||Z - Z_prev||_F per iteration
  int iterations = 0;
  bool converged = false;
};

FantopeSolution admm_fantope(const Eigen::MatrixXd& sigma, double lambda, Eigen::Index k,
                             const AdmmOptions& opts = {});

// Subspace-valued fits built on the Fantope program.
struct SubspaceEstimate {
  Eigen::MatrixXd basis;  // d x k, orthonormal columns, sign-normalized
  FantopeSolution fantope;
  TruncationSchedule schedule;
  double clip_fraction = 0.0;
};

// Second-order single-index fit: Fantope program on the truncated second moment, k = 1.
SubspaceEstimate fit_sim2_sparse(const SimDataset& data, const ScoreModel& model,
                                 const TruncationSchedule& schedule,
                                 const AdmmOptions& opts = {});

// Multiple-index extension: same program with trace k.
SubspaceEstimate fit_mim2(const SimDataset& data, const ScoreModel& model,
                          const TruncationSchedule& schedule, Eigen::Index k,
                          const AdmmOptions& opts = {});

// Heavy-tailed sparse PCA: Fantope program on the entrywise-clipped covariance.
SubspaceEstimate fit_spca_heavy(const Eigen::MatrixXd& rows, const TruncationSchedule& schedule,
                                Eigen::Index k, const AdmmOptions& opts = {});

}  // namespace steinsim
