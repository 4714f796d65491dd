#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "steinsim/dataset.hpp"
#include "steinsim/estimators.hpp"
#include "steinsim/simlab.hpp"
#include "steinsim/stein.hpp"
#include "steinsim/svg_plot.hpp"

namespace {

using namespace steinsim;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string dims_header(const std::vector<Eigen::Index>& dims) {
  std::string out = "#dims=";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(dims[i]);
  }
  return out;
}

std::string source_name(ScheduleSource s) {
  switch (s) {
    case ScheduleSource::TheoremFormula: return "theorem";
    case ScheduleSource::ExperimentDefault: return "paper-default";
    case ScheduleSource::Manual: return "manual";
  }
  return "?";
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string schedule_lines(const TruncationSchedule& s) {
  std::string out;
  out += "lambda: " + fmt(s.lambda) + "\n";
  out += "tau: " + (s.tau ? fmt(*s.tau) : std::string("none")) + "\n";
  out += "kappa: " + (s.kappa ? fmt(*s.kappa) : std::string("none")) + "\n";
  out += "moment_bound: " + fmt(s.moment_bound) + "\n";
  out += "schedule_source: " + source_name(s.source) + "\n";
  return out;
}

// flattened row-major walk of the estimate; tensor shapes map through the square
// unfolding (row j1+j2*d, column j3+j4*d)
std::string sim1_estimate_csv(const SimEstimate& est) {
  std::string out = dims_header(est.dims) + "\n";
  out += "index,raw,direction\n";
  const auto emit = [&](Eigen::Index idx, double raw, double dir) {
    out += std::to_string(idx) + "," + fmt(raw) + "," + fmt(dir) + "\n";
  };
  if (est.dims.size() == 4) {
    const Eigen::Index d = est.dims[0];
    Eigen::Index idx = 0;
    for (Eigen::Index j1 = 0; j1 < d; ++j1)
      for (Eigen::Index j2 = 0; j2 < d; ++j2)
        for (Eigen::Index j3 = 0; j3 < d; ++j3)
          for (Eigen::Index j4 = 0; j4 < d; ++j4) {
            const Eigen::Index r = j1 + j2 * d, c = j3 + j4 * d;
            emit(idx++, est.raw(r, c), est.direction(r, c));
          }
  } else {
    Eigen::Index idx = 0;
    for (Eigen::Index r = 0; r < est.raw.rows(); ++r)
      for (Eigen::Index c = 0; c < est.raw.cols(); ++c)
        emit(idx++, est.raw(r, c), est.direction(r, c));
  }
  return out;
}

std::string subspace_estimate_csv(const SubspaceEstimate& est,
                                  const std::vector<Eigen::Index>& dims) {
  std::string out = dims_header(dims) + "\n";
  out += "index";
  for (Eigen::Index c = 0; c < est.basis.cols(); ++c) out += ",b" + std::to_string(c);
  out += "\n";
  for (Eigen::Index r = 0; r < est.basis.rows(); ++r) {
    out += std::to_string(r);
    for (Eigen::Index c = 0; c < est.basis.cols(); ++c) out += "," + fmt(est.basis(r, c));
    out += "\n";
  }
  return out;
}

struct FitFlags {
  std::string data_path;
  std::string out_path;
  std::string dist = "gaussian:0,1";
  std::string lambda = "auto";
  std::string tau = "auto";
  std::string kappa = "auto";
  double moment_bound = 1.0;
  double rho = 1.0;
  double tol = 1e-6;
  int max_iter = 5000;
  int k = 1;
  bool iterative = false;
};

void add_schedule_flags(CLI::App* cmd, FitFlags& f) {
  cmd->add_option("--lambda", f.lambda, "Penalty level: auto|paper-default|<number>")
      ->capture_default_str();
  cmd->add_option("--tau", f.tau, "Clip level: auto|paper-default|<number>")
      ->capture_default_str();
  cmd->add_option("--kappa", f.kappa, "Matrix influence scale: auto|<number>")
      ->capture_default_str();
  cmd->add_option("--moment-bound", f.moment_bound, "Moment bound M for the schedules")
      ->capture_default_str();
}

void add_admm_flags(CLI::App* cmd, FitFlags& f) {
  cmd->add_option("--rho", f.rho, "ADMM penalty parameter")->capture_default_str();
  cmd->add_option("--tol", f.tol, "ADMM residual tolerance")->capture_default_str();
  cmd->add_option("--max-iter", f.max_iter, "ADMM iteration cap")->capture_default_str();
}

SchedulePolicy policy_of(const FitFlags& f) {
  SchedulePolicy p;
  p.lambda = f.lambda;
  p.tau = f.tau;
  p.kappa = f.kappa;
  p.moment_bound = f.moment_bound;
  return p;
}

int run_fit_sim1(const FitFlags& f) {
  const SimDataset data = read_dataset_csv(f.data_path, true);
  const ScoreModel model = ScoreModel::parse(f.dist);
  const TruncationSchedule schedule =
      resolve_schedule(SweepEstimator::Sim1, policy_of(f), data.sample_count(), data.dims);
  SimEstimate est;
  if (data.dims.size() == 1)
    est = f.iterative ? fit_sim1_sparse_iterative(data, model, schedule)
                      : fit_sim1_sparse(data, model, schedule);
  else if (data.dims.size() == 2)
    est = f.iterative ? fit_sim1_lowrank_iterative(data, model, schedule)
                      : fit_sim1_lowrank(data, model, schedule);
  else
    est = fit_sim1_tensor(data, model, schedule);

  write_text(f.out_path, sim1_estimate_csv(est));
  std::string diag;
  diag += std::string("estimator: sim1-") +
          (data.dims.size() == 1 ? "sparse" : data.dims.size() == 2 ? "lowrank" : "tensor") +
          "\n";
  diag += "n: " + std::to_string(data.sample_count()) + "\n";
  diag += schedule_lines(est.schedule);
  diag += "support_size: " + std::to_string(est.diag.support_size) + "\n";
  diag += "estimated_rank: " + std::to_string(est.diag.estimated_rank) + "\n";
  diag += "objective: " + fmt(est.diag.objective) + "\n";
  diag += "clip_fraction: " + fmt(est.diag.clip_fraction) + "\n";
  diag += "iterations: " + std::to_string(est.diag.iterations) + "\n";
  diag += std::string("converged: ") + (est.diag.converged ? "true" : "false") + "\n";
  diag += std::string("direction_defined: ") + (est.direction_defined ? "true" : "false") + "\n";
  write_text(f.out_path + ".diag", diag);
  if (!est.diag.converged) {
    std::cerr << "warning: fit did not converge; estimate written anyway\n";
    return 2;
  }
  return 0;
}

int run_fit_subspace(const FitFlags& f, const std::string& name) {
  const bool spca = name == "spca";
  const SimDataset data = read_dataset_csv(f.data_path, !spca);
  if (data.dims.size() != 1)
    throw std::invalid_argument(name + " fits need vector covariates (#dims=d)");
  AdmmOptions opts;
  opts.rho = f.rho;
  opts.tol = f.tol;
  opts.max_iter = f.max_iter;
  const SweepEstimator kind = spca              ? SweepEstimator::Spca
                              : name == "sim2" ? SweepEstimator::Sim2
                                               : SweepEstimator::Mim;
  const TruncationSchedule schedule =
      resolve_schedule(kind, policy_of(f), data.sample_count(), data.dims);
  SubspaceEstimate est;
  if (spca) {
    est = fit_spca_heavy(data.covariates, schedule, f.k, opts);
  } else {
    const ScoreModel model = ScoreModel::parse(f.dist);
    est = name == "sim2" ? fit_sim2_sparse(data, model, schedule, opts)
                         : fit_mim2(data, model, schedule, f.k, opts);
  }
  write_text(f.out_path, subspace_estimate_csv(est, data.dims));
  std::string diag;
  diag += "estimator: " + name + "\n";
  diag += "n: " + std::to_string(data.sample_count()) + "\n";
  diag += "k: " + std::to_string(est.fantope.k) + "\n";
  diag += schedule_lines(est.schedule);
  diag += "objective: " + fmt(est.fantope.objective) + "\n";
  diag += "clip_fraction: " + fmt(est.clip_fraction) + "\n";
  diag += "iterations: " + std::to_string(est.fantope.iterations) + "\n";
  diag += std::string("converged: ") + (est.fantope.converged ? "true" : "false") + "\n";
  if (!est.fantope.primal_residuals.empty()) {
    diag += "primal_residual: " + fmt(est.fantope.primal_residuals.back()) + "\n";
    diag += "dual_residual: " + fmt(est.fantope.dual_residuals.back()) + "\n";
  }
  write_text(f.out_path + ".diag", diag);
  if (!est.fantope.converged) {
    std::cerr << "warning: ADMM did not converge; estimate written anyway\n";
    return 2;
  }
  return 0;
}

struct SweepFlags {
  std::string config_path;
  std::string out_path;
  int jobs = 0;          // 0 keeps the config value
  bool timing = false;
  std::int64_t seed = -1;  // < 0 keeps the config value
};

int run_sweep_cmd(const SweepFlags& f) {
  SweepConfig cfg = read_sweep_config(f.config_path);
  if (f.jobs > 0) cfg.jobs = f.jobs;
  if (f.seed >= 0) cfg.master_seed = static_cast<std::uint64_t>(f.seed);
  const std::vector<SweepRow> rows = run_sweep(cfg);
  write_text(f.out_path, sweep_rows_to_csv(rows, f.timing));
  std::size_t failures = 0;
  for (const auto& r : rows)
    if (r.failed) ++failures;
  std::cerr << "sweep: " << rows.size() << " rows, " << failures << " failed trials\n";
  return 0;
}

struct PlotFlags {
  std::string in_path;
  std::string out_path;
  std::string title;
  int width = 760;
  int height = 520;
};

int run_plot(const PlotFlags& f) {
  std::ifstream in(f.in_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open sweep csv: " + f.in_path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::vector<SweepRow> rows = parse_sweep_csv(ss.str());
  PlotOptions opts;
  opts.width = f.width;
  opts.height = f.height;
  opts.title = f.title;
  write_text(f.out_path, render_sweep_plot_svg(rows, opts));
  return 0;
}

struct SteinCheckFlags {
  std::string dist = "gaussian:0,1";
  std::string link = "f1";
  int dim = 5;
  std::size_t n = 100000;
  std::uint64_t seed = 0;
  std::string order = "both";
};

int run_stein_check(const SteinCheckFlags& f) {
  if (f.order != "1" && f.order != "2" && f.order != "both")
    throw std::invalid_argument("--order must be 1, 2, or both");
  const ScoreModel model = ScoreModel::parse(f.dist);
  const LinkFunction& link = LinkFunction::from_name(f.link);
  if (!link.smooth())
    throw std::invalid_argument("link " + f.link +
                                " is not differentiable; pick a smooth link");
  const GroundTruth truth = gen_sparse_beta(f.dim, f.dim, cell_seed(f.seed, 0, 7));
  const Eigen::VectorXd beta = truth.beta_flat;
  const auto g = [&](const Eigen::VectorXd& x) { return link.f(x.dot(beta)); };

  std::printf("%-12s %-24s %-24s\n", "order", "residual_norm", "std_error");
  if (f.order != "2") {
    const auto grad = [&](const Eigen::VectorXd& x) {
      return Eigen::VectorXd(link.df(x.dot(beta)) * beta);
    };
    const SteinCheck1Result r = stein_check1(model, f.dim, g, grad, f.n, f.seed);
    std::printf("%-12s %-24.6g %-24.6g\n", "first", r.residual.norm(), r.std_error.norm());
  }
  if (f.order != "1") {
    const auto hess = [&](const Eigen::VectorXd& x) {
      return Eigen::MatrixXd(link.d2f(x.dot(beta)) * beta * beta.transpose());
    };
    const SteinCheck2Result r = stein_check2(model, f.dim, g, hess, f.n, f.seed + 1);
    std::printf("%-12s %-24.6g %-24.6g\n", "second", r.residual.norm(), r.std_error.norm());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Index-model estimation with truncated score moments"};
  app.require_subcommand(1);
  int rc = 0;

  FitFlags sim1;
  CLI::App* c1 = app.add_subcommand("fit-sim1", "First-order single index fit");
  c1->add_option("dataset", sim1.data_path, "Dataset CSV with a #dims= header")->required();
  c1->add_option("--dist", sim1.dist, "Covariate distribution, e.g. gamma:5,1")
      ->capture_default_str();
  c1->add_option("--out", sim1.out_path, "Estimate CSV path")->required();
  c1->add_flag("--iterative", sim1.iterative, "Use the proximal-gradient route");
  add_schedule_flags(c1, sim1);
  c1->callback([&] { rc = run_fit_sim1(sim1); });

  FitFlags sim2;
  CLI::App* c2 = app.add_subcommand("fit-sim2", "Second-order single index fit");
  c2->add_option("dataset", sim2.data_path, "Dataset CSV with a #dims= header")->required();
  c2->add_option("--dist", sim2.dist, "Covariate distribution")->capture_default_str();
  c2->add_option("--out", sim2.out_path, "Estimate CSV path")->required();
  add_schedule_flags(c2, sim2);
  add_admm_flags(c2, sim2);
  c2->callback([&] { rc = run_fit_subspace(sim2, "sim2"); });

  FitFlags mim;
  CLI::App* c3 = app.add_subcommand("fit-mim", "Multiple index subspace fit");
  c3->add_option("dataset", mim.data_path, "Dataset CSV with a #dims= header")->required();
  c3->add_option("--dist", mim.dist, "Covariate distribution")->capture_default_str();
  c3->add_option("--k", mim.k, "Subspace dimension")->capture_default_str();
  c3->add_option("--out", mim.out_path, "Estimate CSV path")->required();
  add_schedule_flags(c3, mim);
  add_admm_flags(c3, mim);
  c3->callback([&] { rc = run_fit_subspace(mim, "mim"); });

  FitFlags spca;
  CLI::App* c4 = app.add_subcommand("fit-spca", "Heavy-tailed sparse PCA fit");
  c4->add_option("dataset", spca.data_path, "Covariate-only CSV with a #dims= header")
      ->required();
  c4->add_option("--k", spca.k, "Number of principal components")->capture_default_str();
  c4->add_option("--out", spca.out_path, "Estimate CSV path")->required();
  add_schedule_flags(c4, spca);
  add_admm_flags(c4, spca);
  c4->callback([&] { rc = run_fit_subspace(spca, "spca"); });

  SweepFlags sweep;
  CLI::App* c5 = app.add_subcommand("sweep", "Run a simulation sweep from a config file");
  c5->add_option("--config", sweep.config_path, "Sweep config (INI sections)")->required();
  c5->add_option("--out", sweep.out_path, "Sweep CSV path")->required();
  c5->add_option("--jobs", sweep.jobs, "Worker threads (overrides config)");
  c5->add_option("--seed", sweep.seed, "Master seed (overrides config)");
  c5->add_flag("--timing", sweep.timing, "Record wall times (breaks byte reproducibility)");
  c5->callback([&] { rc = run_sweep_cmd(sweep); });

  PlotFlags plot;
  CLI::App* c6 = app.add_subcommand("plot", "Render a sweep CSV as an SVG figure");
  c6->add_option("--in", plot.in_path, "Sweep CSV path")->required();
  c6->add_option("--out", plot.out_path, "SVG output path")->required();
  c6->add_option("--title", plot.title, "Figure title");
  c6->add_option("--width", plot.width, "SVG width in px")->capture_default_str();
  c6->add_option("--height", plot.height, "SVG height in px")->capture_default_str();
  c6->callback([&] { rc = run_plot(plot); });

  SteinCheckFlags sc;
  CLI::App* c7 = app.add_subcommand("stein-check", "Monte Carlo score-identity check");
  sc.dim = 5;
  c7->add_option("--dist", sc.dist, "Covariate distribution")->capture_default_str();
  c7->add_option("--link", sc.link, "Smooth link (f1, f2, f3, f5, identity)")
      ->capture_default_str();
  c7->add_option("--dim", sc.dim, "Ambient dimension")->capture_default_str();
  c7->add_option("--n", sc.n, "Monte Carlo sample size")->capture_default_str();
  c7->add_option("--seed", sc.seed, "RNG seed")->capture_default_str();
  c7->add_option("--order", sc.order, "Identity order: 1, 2, or both")->capture_default_str();
  c7->callback([&] { rc = run_stein_check(sc); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}
