#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "steinsim/dataset.hpp"
#include "steinsim/estimators.hpp"
#include "steinsim/robust_trunc.hpp"
#include "steinsim/score_model.hpp"

namespace steinsim {

// Scalar link for single-index responses. df/d2f are null for the nonsmooth |u|.
struct LinkFunction {
  std::string name;
  std::function<double(double)> f;
  std::function<double(double)> df;
  std::function<double(double)> d2f;

  bool smooth() const { return static_cast<bool>(df); }
  double operator()(double u) const { return f(u); }

  // "f1".."f5" or "identity"; throws std::invalid_argument on unknown names.
  static const LinkFunction& from_name(const std::string& name);
};

// k-argument link for multiple-index responses.
struct MultiLink {
  std::string name;
  std::function<double(const Eigen::VectorXd&)> f;
  static MultiLink sum_of_squares();  // f(u) = sum_j u_j^2
  static MultiLink from_name(const std::string& name);
};

// Planted index parameter, unit Frobenius norm, stored as its row-major flattening.
struct GroundTruth {
  Eigen::VectorXd beta_flat;
  std::vector<Eigen::Index> dims;
  Eigen::Index sparsity_or_rank = 0;
  Eigen::MatrixXd as_matrix() const;  // requires dims.size() == 2
};

// Uniform-random support, entries +-1/sqrt(s*) with Rademacher signs.
GroundTruth gen_sparse_beta(Eigen::Index d, Eigen::Index s_star, std::uint64_t seed);

// Random orthonormal factors; all r* singular values equal 1/sqrt(r*).
GroundTruth gen_lowrank_beta(Eigen::Index d1, Eigen::Index d2, Eigen::Index r_star,
                             std::uint64_t seed);

// Y_i = f(<X_i, beta*>) + noise_stddev * N(0,1), covariate entries i.i.d. model draws.
SimDataset gen_sim_data(const ScoreModel& model, const GroundTruth& truth,
                        const LinkFunction& link, double noise_stddev, Eigen::Index n,
                        std::uint64_t seed);

// Y_i = f(B*^T x_i) + noise; b_star columns orthonormal.
SimDataset gen_mim_data(const ScoreModel& model, const Eigen::MatrixXd& b_star,
                        const MultiLink& link, double noise_stddev, Eigen::Index n,
                        std::uint64_t seed);

// Covariate-only spiked rows X_i = spike_scale * z_i * v_star + w_i with z_i drawn
// from spike and w_i entries i.i.d. from noise.
Eigen::MatrixXd gen_spiked_data(const ScoreModel& spike, const ScoreModel& noise,
                                const Eigen::VectorXd& v_star, double spike_scale,
                                Eigen::Index n, std::uint64_t seed);

// 1 - |<a,b>| / (||a|| ||b||), Frobenius inner products; throws on zero input.
double cosine_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// Orthogonal-Procrustes-minimal Frobenius distance between orthonormal bases,
// sqrt(2k - 2 sum sigma_i(A^T B)).
double subspace_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// Per-cell seed: splitmix64 finalizer chained over (master, n, trial), so adding
// grid cells or trials never perturbs existing cells.
std::uint64_t cell_seed(std::uint64_t master, std::uint64_t n, std::uint64_t trial);

enum class SweepEstimator { Sim1, Sim2, Mim, Spca };
std::string to_string(SweepEstimator kind);

// "auto" resolves the theorem formulas; "paper-default" the reference experiment
// values; a numeric literal overrides that field and marks the schedule Manual.
struct SchedulePolicy {
  std::string lambda = "auto";
  std::string tau = "auto";
  std::string kappa = "auto";
  double moment_bound = 1.0;
};

TruncationSchedule resolve_schedule(SweepEstimator kind, const SchedulePolicy& policy,
                                    Eigen::Index n, const std::vector<Eigen::Index>& dims);

struct SweepConfig {
  // [model]
  std::string dist = "gaussian:0,1";
  double noise_stddev = 1.0;
  // [truth]
  std::vector<Eigen::Index> dims;  // {d}, {d1,d2}, or {d,d,d,d}
  Eigen::Index s_or_r = 1;
  std::string spike_dist = "gaussian:0,1";
  double spike_scale = 2.23606797749979;  // sqrt(5)
  // [estimator]
  SweepEstimator estimator = SweepEstimator::Sim1;
  std::string link = "f1";
  Eigen::Index k = 1;
  SchedulePolicy policy;
  AdmmOptions admm;
  // [grid]
  std::vector<Eigen::Index> n_grid;
  int trials = 1;
  std::uint64_t master_seed = 0;
  int jobs = 1;

  void validate() const;  // throws std::invalid_argument with the offending key
};

SweepConfig parse_sweep_config(const std::string& text);
SweepConfig read_sweep_config(const std::string& path);

struct SweepRow {
  std::uint64_t seed = 0;
  Eigen::Index n = 0;
  std::string dims_label;  // "200", "20x20", ...
  Eigen::Index s_or_r = 0;
  std::string link;
  std::string dist;
  std::string estimator;
  double signal_strength = 0.0;
  double cosine_distance = 0.0;  // nan marks a failed trial
  double wall_time_ms = 0.0;
  bool failed = false;
  std::string error;  // not serialized; CSV schema is fixed
};

// Deterministic row order (n-grid outer, trial inner); failures become rows with a
// nan metric, never aborting the sweep.
std::vector<SweepRow> run_sweep(const SweepConfig& config);

// Fixed header seed,n,d,s_or_r,link,dist,estimator,signal_strength,cosine_distance,wall_time_ms.
// Timings are nondeterministic, so the column is zeroed unless include_timing is set;
// everything else is a pure function of config + master seed.
std::string sweep_rows_to_csv(const std::vector<SweepRow>& rows, bool include_timing = false);
std::vector<SweepRow> parse_sweep_csv(const std::string& text);

}  // namespace steinsim
