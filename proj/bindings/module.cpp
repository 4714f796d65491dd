#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "steinsim/dataset.hpp"
#include "steinsim/estimators.hpp"
#include "steinsim/robust_trunc.hpp"
#include "steinsim/score_model.hpp"
#include "steinsim/simlab.hpp"
#include "steinsim/spectral.hpp"
#include "steinsim/stein.hpp"
#include "steinsim/svg_plot.hpp"

namespace py = pybind11;
using namespace steinsim;

namespace {

ScheduleSource source_of(const std::string& s) {
  if (s == "theorem") return ScheduleSource::TheoremFormula;
  if (s == "paper-default") return ScheduleSource::ExperimentDefault;
  if (s == "manual") return ScheduleSource::Manual;
  throw std::invalid_argument("schedule source must be theorem|paper-default|manual");
}

std::string source_name(ScheduleSource s) {
  switch (s) {
    case ScheduleSource::TheoremFormula: return "theorem";
    case ScheduleSource::ExperimentDefault: return "paper-default";
    case ScheduleSource::Manual: return "manual";
  }
  return "?";
}

SimDataset make_dataset(const Eigen::MatrixXd& covariates,
                        const std::optional<Eigen::VectorXd>& responses,
                        const std::vector<Eigen::Index>& dims) {
  SimDataset d;
  d.covariates = covariates;
  if (responses) d.responses = *responses;
  d.dims = dims;
  d.validate();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Truncated score-moment estimators for high-dimensional index models";

  py::class_<ScoreModel>(m, "ScoreModel")
      .def_static("parse", &ScoreModel::parse, py::arg("spec"),
                  "Build from a spec string such as 'gaussian:0,1' or 'gamma:5,1'")
      .def_static("gaussian", &ScoreModel::gaussian, py::arg("mean"), py::arg("stddev"))
      .def_static("gamma", &ScoreModel::gamma, py::arg("shape"), py::arg("scale"))
      .def_static("student_t", &ScoreModel::student_t, py::arg("dof"))
      .def_static("rayleigh", &ScoreModel::rayleigh, py::arg("scale"))
      .def("density", &ScoreModel::density, py::arg("x"))
      .def("score", &ScoreModel::score, py::arg("x"))
      .def("score_deriv", &ScoreModel::score_deriv, py::arg("x"))
      .def("sample", &ScoreModel::sample, py::arg("seed"), py::arg("n"))
      .def("name", &ScoreModel::name);

  py::class_<SimDataset>(m, "SimDataset")
      .def(py::init(&make_dataset), py::arg("covariates"),
           py::arg("responses") = std::nullopt, py::arg("dims"))
      .def_readonly("covariates", &SimDataset::covariates)
      .def_readonly("responses", &SimDataset::responses)
      .def_readonly("dims", &SimDataset::dims)
      .def("sample_count", &SimDataset::sample_count)
      .def("ambient_dim", &SimDataset::ambient_dim)
      .def("has_responses", &SimDataset::has_responses);
  m.def("read_dataset_csv", &read_dataset_csv, py::arg("path"), py::arg("expect_responses"));
  m.def("write_dataset_csv", &write_dataset_csv, py::arg("path"), py::arg("data"));

  m.def("score_vec", &score_vec, py::arg("model"), py::arg("x"));
  m.def("score_mat2", &score_mat2, py::arg("model"), py::arg("x"));
  m.def(
      "stein_check",
      [](const ScoreModel& model, Eigen::Index dim, const std::string& link_name,
         std::size_t n, std::uint64_t seed, int order) {
        const LinkFunction& link = LinkFunction::from_name(link_name);
        if (!link.smooth())
          throw std::invalid_argument("link " + link_name + " is not differentiable");
        const Eigen::VectorXd beta = gen_sparse_beta(dim, dim, cell_seed(seed, 0, 7)).beta_flat;
        const auto g = [&](const Eigen::VectorXd& x) { return link.f(x.dot(beta)); };
        if (order == 1) {
          const auto grad = [&](const Eigen::VectorXd& x) {
            return Eigen::VectorXd(link.df(x.dot(beta)) * beta);
          };
          const auto r = stein_check1(model, dim, g, grad, n, seed);
          return py::make_tuple(r.residual.norm(), r.std_error.norm());
        }
        if (order == 2) {
          const auto hess = [&](const Eigen::VectorXd& x) {
            return Eigen::MatrixXd(link.d2f(x.dot(beta)) * beta * beta.transpose());
          };
          const auto r = stein_check2(model, dim, g, hess, n, seed);
          return py::make_tuple(r.residual.norm(), r.std_error.norm());
        }
        throw std::invalid_argument("order must be 1 or 2");
      },
      py::arg("model"), py::arg("dim"), py::arg("link"), py::arg("n"), py::arg("seed"),
      py::arg("order"),
      "Monte Carlo residual of the order-1 or order-2 score identity; returns "
      "(residual_norm, std_error_norm)");

  m.def("clip", &clip, py::arg("y"), py::arg("tau"));
  m.def("psi_catoni", &psi_catoni, py::arg("x"));
  m.def("psi_matrix", &psi_matrix, py::arg("a"));

  py::class_<TruncationSchedule>(m, "TruncationSchedule")
      .def_readwrite("tau", &TruncationSchedule::tau)
      .def_readwrite("kappa", &TruncationSchedule::kappa)
      .def_readwrite("lambda_", &TruncationSchedule::lambda)
      .def_readwrite("moment_bound", &TruncationSchedule::moment_bound)
      .def_property(
          "source",
          [](const TruncationSchedule& s) { return source_name(s.source); },
          [](TruncationSchedule& s, const std::string& v) { s.source = source_of(v); })
      .def("validate", &TruncationSchedule::validate);
  m.def("manual_schedule", &manual_schedule, py::arg("tau"), py::arg("kappa"),
        py::arg("lambda_"), py::arg("moment_bound") = 1.0);
  const auto sched = [](auto fn) {
    return [fn](double m_, Eigen::Index n, Eigen::Index d, const std::string& src) {
      return fn(MomentBound(m_), n, d, source_of(src));
    };
  };
  m.def("schedule_first_sparse", sched(&schedule_first_sparse), py::arg("moment_bound"),
        py::arg("n"), py::arg("d"), py::arg("source") = "theorem");
  m.def(
      "schedule_first_lowrank",
      [](double m_, Eigen::Index n, Eigen::Index d1, Eigen::Index d2, const std::string& src) {
        return schedule_first_lowrank(MomentBound(m_), n, d1, d2, source_of(src));
      },
      py::arg("moment_bound"), py::arg("n"), py::arg("d1"), py::arg("d2"),
      py::arg("source") = "theorem");
  m.def("schedule_second", sched(&schedule_second), py::arg("moment_bound"), py::arg("n"),
        py::arg("d"), py::arg("source") = "theorem");
  m.def("schedule_tensor", sched(&schedule_tensor), py::arg("moment_bound"), py::arg("n"),
        py::arg("d"), py::arg("source") = "theorem");
  m.def("schedule_spca_heavy", sched(&schedule_spca_heavy), py::arg("moment_bound"),
        py::arg("n"), py::arg("d"), py::arg("source") = "theorem");

  py::class_<TruncatedMoment>(m, "TruncatedMoment")
      .def_readonly("value", &TruncatedMoment::value)
      .def_readonly("n_used", &TruncatedMoment::n_used)
      .def_readonly("clip_fraction", &TruncatedMoment::clip_fraction);
  py::class_<TruncatedMomentMatrix>(m, "TruncatedMomentMatrix")
      .def_readonly("value", &TruncatedMomentMatrix::value)
      .def_readonly("n_used", &TruncatedMomentMatrix::n_used)
      .def_readonly("clip_fraction", &TruncatedMomentMatrix::clip_fraction);
  m.def("truncated_first_moment", &truncated_first_moment, py::arg("data"), py::arg("model"),
        py::arg("tau"), py::arg("shards") = 1);
  m.def("truncated_mean_matrix", &truncated_mean_matrix, py::arg("data"), py::arg("model"),
        py::arg("kappa"), py::arg("shards") = 1);
  m.def("truncated_second_moment", &truncated_second_moment, py::arg("data"), py::arg("model"),
        py::arg("tau"), py::arg("shards") = 1);
  m.def("truncated_covariance", &truncated_covariance, py::arg("rows"), py::arg("tau"),
        py::arg("shards") = 1);

  m.def("soft_threshold",
        py::overload_cast<const Eigen::MatrixXd&, double>(&soft_threshold), py::arg("a"),
        py::arg("t"));
  m.def("soft_threshold_scalar", py::overload_cast<double, double>(&soft_threshold),
        py::arg("x"), py::arg("t"));
  m.def(
      "svt",
      [](const Eigen::MatrixXd& a, double t) {
        Eigen::Index rank = 0;
        Eigen::MatrixXd out = svt(a, t, &rank);
        return py::make_tuple(out, rank);
      },
      py::arg("a"), py::arg("t"), "Returns (thresholded matrix, surviving rank)");
  py::class_<EigenPairs>(m, "EigenPairs")
      .def_readonly("values", &EigenPairs::values)
      .def_readonly("vectors", &EigenPairs::vectors);
  m.def("sym_eig", &sym_eig, py::arg("a"));
  m.def("leading_eigvecs", &leading_eigvecs, py::arg("w"), py::arg("k"));
  m.def("fantope_project", &fantope_project, py::arg("a"), py::arg("k"));
  m.def(
      "square_unfold",
      [](const Eigen::VectorXd& flat, Eigen::Index d) {
        return square_unfold({flat.data(), static_cast<std::size_t>(flat.size())}, d);
      },
      py::arg("flat_row_major"), py::arg("d"));

  py::class_<AdmmOptions>(m, "AdmmOptions")
      .def(py::init([](double rho, double tol, int max_iter) {
             AdmmOptions o;
             o.rho = rho;
             o.tol = tol;
             o.max_iter = max_iter;
             o.validate();
             return o;
           }),
           py::arg("rho") = 1.0, py::arg("tol") = 1e-6, py::arg("max_iter") = 5000)
      .def_readwrite("rho", &AdmmOptions::rho)
      .def_readwrite("tol", &AdmmOptions::tol)
      .def_readwrite("max_iter", &AdmmOptions::max_iter);
  py::class_<FantopeSolution>(m, "FantopeSolution")
      .def_readonly("w", &FantopeSolution::w)
      .def_readonly("extracted", &FantopeSolution::extracted)
      .def_readonly("k", &FantopeSolution::k)
      .def_readonly("objective", &FantopeSolution::objective)
      .def_readonly("primal_residuals", &FantopeSolution::primal_residuals)
      .def_readonly("dual_residuals", &FantopeSolution::dual_residuals)
      .def_readonly("iterations", &FantopeSolution::iterations)
      .def_readonly("converged", &FantopeSolution::converged);
  m.def("admm_fantope", &admm_fantope, py::arg("sigma"), py::arg("lambda_"), py::arg("k"),
        py::arg("options") = AdmmOptions{});

  py::class_<SimDiagnostics>(m, "SimDiagnostics")
      .def_readonly("support_size", &SimDiagnostics::support_size)
      .def_readonly("estimated_rank", &SimDiagnostics::estimated_rank)
      .def_readonly("objective", &SimDiagnostics::objective)
      .def_readonly("clip_fraction", &SimDiagnostics::clip_fraction)
      .def_readonly("iterations", &SimDiagnostics::iterations)
      .def_readonly("converged", &SimDiagnostics::converged);
  py::class_<SimEstimate>(m, "SimEstimate")
      .def_readonly("raw", &SimEstimate::raw)
      .def_readonly("direction", &SimEstimate::direction)
      .def_readonly("direction_defined", &SimEstimate::direction_defined)
      .def_readonly("dims", &SimEstimate::dims)
      .def_readonly("schedule", &SimEstimate::schedule)
      .def_readonly("diag", &SimEstimate::diag);
  m.def("fit_sim1_sparse", &fit_sim1_sparse, py::arg("data"), py::arg("model"),
        py::arg("schedule"));
  m.def("fit_sim1_sparse_iterative", &fit_sim1_sparse_iterative, py::arg("data"),
        py::arg("model"), py::arg("schedule"), py::arg("iters") = 2000, py::arg("step") = 0.05);
  m.def("fit_sim1_lowrank", &fit_sim1_lowrank, py::arg("data"), py::arg("model"),
        py::arg("schedule"));
  m.def("fit_sim1_lowrank_iterative", &fit_sim1_lowrank_iterative, py::arg("data"),
        py::arg("model"), py::arg("schedule"), py::arg("iters") = 2000, py::arg("step") = 0.05);
  m.def("fit_sim1_tensor", &fit_sim1_tensor, py::arg("data"), py::arg("model"),
        py::arg("schedule"));

  py::class_<SubspaceEstimate>(m, "SubspaceEstimate")
      .def_readonly("basis", &SubspaceEstimate::basis)
      .def_readonly("fantope", &SubspaceEstimate::fantope)
      .def_readonly("schedule", &SubspaceEstimate::schedule)
      .def_readonly("clip_fraction", &SubspaceEstimate::clip_fraction);
  m.def("fit_sim2_sparse", &fit_sim2_sparse, py::arg("data"), py::arg("model"),
        py::arg("schedule"), py::arg("options") = AdmmOptions{});
  m.def("fit_mim2", &fit_mim2, py::arg("data"), py::arg("model"), py::arg("schedule"),
        py::arg("k"), py::arg("options") = AdmmOptions{});
  m.def("fit_spca_heavy", &fit_spca_heavy, py::arg("rows"), py::arg("schedule"), py::arg("k"),
        py::arg("options") = AdmmOptions{});

  py::class_<GroundTruth>(m, "GroundTruth")
      .def_readonly("beta_flat", &GroundTruth::beta_flat)
      .def_readonly("dims", &GroundTruth::dims)
      .def_readonly("sparsity_or_rank", &GroundTruth::sparsity_or_rank);
  m.def("gen_sparse_beta", &gen_sparse_beta, py::arg("d"), py::arg("s_star"), py::arg("seed"));
  m.def("gen_lowrank_beta", &gen_lowrank_beta, py::arg("d1"), py::arg("d2"), py::arg("r_star"),
        py::arg("seed"));
  m.def(
      "gen_sim_data",
      [](const ScoreModel& model, const GroundTruth& truth, const std::string& link,
         double noise_stddev, Eigen::Index n, std::uint64_t seed) {
        return gen_sim_data(model, truth, LinkFunction::from_name(link), noise_stddev, n,
                            seed);
      },
      py::arg("model"), py::arg("truth"), py::arg("link"), py::arg("noise_stddev"),
      py::arg("n"), py::arg("seed"));
  m.def(
      "gen_mim_data",
      [](const ScoreModel& model, const Eigen::MatrixXd& b_star, const std::string& link,
         double noise_stddev, Eigen::Index n, std::uint64_t seed) {
        return gen_mim_data(model, b_star, MultiLink::from_name(link), noise_stddev, n, seed);
      },
      py::arg("model"), py::arg("b_star"), py::arg("link"), py::arg("noise_stddev"),
      py::arg("n"), py::arg("seed"));
  m.def("gen_spiked_data", &gen_spiked_data, py::arg("spike"), py::arg("noise"),
        py::arg("v_star"), py::arg("spike_scale"), py::arg("n"), py::arg("seed"));
  m.def("cosine_distance", &cosine_distance, py::arg("a"), py::arg("b"));
  m.def("subspace_distance", &subspace_distance, py::arg("a"), py::arg("b"));
  m.def("cell_seed", &cell_seed, py::arg("master"), py::arg("n"), py::arg("trial"));

  m.def(
      "run_sweep_csv",
      [](const std::string& config_text, bool include_timing) {
        return sweep_rows_to_csv(run_sweep(parse_sweep_config(config_text)), include_timing);
      },
      py::arg("config_text"), py::arg("include_timing") = false,
      "Run a sweep from config text and return the result CSV");
  m.def(
      "render_sweep_svg",
      [](const std::string& csv_text, const std::string& title) {
        PlotOptions opts;
        opts.title = title;
        return render_sweep_plot_svg(parse_sweep_csv(csv_text), opts);
      },
      py::arg("csv_text"), py::arg("title") = "",
      "Render a sweep CSV as an SVG figure and return the SVG text");
}
