#include "steinsim/robust_trunc.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <future>
#include <stdexcept>
#include <vector>

namespace steinsim {

double clip(double y, double tau) {
  if (y > tau) return tau;
  if (y < -tau) return -tau;
  return y;
}

double psi_catoni(double x) {
  const double ax = std::abs(x);
  const double v = std::log1p(ax + 0.5 * x * x);
  return x < 0 ? -v : v;
}

namespace {

Eigen::MatrixXd psi_matrix_impl(const Eigen::MatrixXd& a, std::size_t* large_eigs,
                                std::size_t* total_eigs) {
  const Eigen::Index d1 = a.rows(), d2 = a.cols();
  Eigen::MatrixXd dil = Eigen::MatrixXd::Zero(d1 + d2, d1 + d2);
  dil.topRightCorner(d1, d2) = a;
  dil.bottomLeftCorner(d2, d1) = a.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dil);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("psi_matrix: eigendecomposition failed");
  Eigen::VectorXd lam = es.eigenvalues();
  if (large_eigs) {
    for (Eigen::Index i = 0; i < lam.size(); ++i)
      if (std::abs(lam[i]) > 0.5) ++*large_eigs;
    *total_eigs += static_cast<std::size_t>(lam.size());
  }
  for (Eigen::Index i = 0; i < lam.size(); ++i) lam[i] = psi_catoni(lam[i]);
  const Eigen::MatrixXd b =
      es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
  return b.topRightCorner(d1, d2);
}

void require_positive(double v, const char* what) {
  if (!(v > 0) || std::isnan(v)) throw std::invalid_argument(std::string(what) + " must be > 0");
}

void require_grid(Eigen::Index n, Eigen::Index d, const char* who) {
  if (n < 1) throw std::invalid_argument(std::string(who) + ": n must be >= 1");
  if (d < 2) throw std::invalid_argument(std::string(who) + ": dimension must be >= 2");
}

// Runs fn(lo, hi) over contiguous shard ranges and folds the results in shard order.
template <typename Part, typename Fn, typename Fold>
Part sharded_reduce(Eigen::Index n, int shards, Fn fn, Fold fold) {
  if (shards < 1) throw std::invalid_argument("shards must be >= 1");
  if (shards == 1 || n < shards) return fn(Eigen::Index{0}, n);
  std::vector<std::future<Part>> futs;
  futs.reserve(static_cast<std::size_t>(shards));
  for (int s = 0; s < shards; ++s) {
    const Eigen::Index lo = n * s / shards;
    const Eigen::Index hi = n * (s + 1) / shards;
    futs.push_back(std::async(std::launch::async, fn, lo, hi));
  }
  Part acc = futs[0].get();
  for (std::size_t s = 1; s < futs.size(); ++s) acc = fold(std::move(acc), futs[s].get());
  return acc;
}

}  // namespace

Eigen::MatrixXd psi_matrix(const Eigen::MatrixXd& a) {
  return psi_matrix_impl(a, nullptr, nullptr);
}

void TruncationSchedule::validate() const {
  if (tau) require_positive(*tau, "schedule tau");
  if (kappa) require_positive(*kappa, "schedule kappa");
  require_positive(lambda, "schedule lambda");
  require_positive(moment_bound, "schedule moment bound");
}

TruncationSchedule manual_schedule(std::optional<double> tau, std::optional<double> kappa,
                                   double lambda, double moment_bound) {
  TruncationSchedule s;
  s.tau = tau;
  s.kappa = kappa;
  s.lambda = lambda;
  s.source = ScheduleSource::Manual;
  s.moment_bound = moment_bound;
  s.validate();
  return s;
}

TruncationSchedule schedule_first_sparse(MomentBound m, Eigen::Index n, Eigen::Index d,
                                         ScheduleSource source) {
  require_grid(n, d, "schedule_first_sparse");
  const double nn = static_cast<double>(n), logd = std::log(static_cast<double>(d));
  TruncationSchedule s;
  s.source = source;
  s.moment_bound = m.value;
  s.tau = 2.0 * std::pow(m.value * nn / logd, 0.25);
  s.lambda = source == ScheduleSource::ExperimentDefault
                 ? 4.0 * std::sqrt(logd / nn)
                 : std::sqrt(m.value * logd / nn);
  s.validate();
  return s;
}

TruncationSchedule schedule_first_lowrank(MomentBound m, Eigen::Index n, Eigen::Index d1,
                                          Eigen::Index d2, ScheduleSource source) {
  require_grid(n, d1 + d2, "schedule_first_lowrank");
  const double nn = static_cast<double>(n);
  const double dd = static_cast<double>(d1 + d2), logdd = std::log(dd);
  TruncationSchedule s;
  s.source = source;
  s.moment_bound = m.value;
  s.kappa = 2.0 * std::sqrt(nn * logdd) / std::sqrt(dd * m.value);
  s.lambda = source == ScheduleSource::ExperimentDefault
                 ? 2.0 * std::sqrt(dd * logdd / nn)
                 : std::sqrt(m.value * dd * logdd / nn);
  s.validate();
  return s;
}

TruncationSchedule schedule_second(MomentBound m, Eigen::Index n, Eigen::Index d,
                                   ScheduleSource source) {
  require_grid(n, d, "schedule_second");
  const double nn = static_cast<double>(n), logd = std::log(static_cast<double>(d));
  TruncationSchedule s;
  s.source = source;
  s.moment_bound = m.value;
  if (source == ScheduleSource::ExperimentDefault) {
    s.tau = 20.0;
    s.lambda = 4.0 * std::sqrt(logd / nn);
  } else {
    s.tau = std::pow(1.5 * m.value * nn / logd, 1.0 / 6.0);
    s.lambda = 10.0 * std::sqrt(m.value * logd / nn);
  }
  s.validate();
  return s;
}

TruncationSchedule schedule_tensor(MomentBound m, Eigen::Index n, Eigen::Index d,
                                   ScheduleSource source) {
  require_grid(n, d, "schedule_tensor");
  const double nn = static_cast<double>(n), logd = std::log(static_cast<double>(d));
  const double dd = 2.0 * static_cast<double>(d) * static_cast<double>(d);
  TruncationSchedule s;
  s.source = source;  // no experiment values exist for this route; formulas apply to both
  s.moment_bound = m.value;
  s.kappa = 2.0 * std::sqrt(2.0 * nn * logd) / std::sqrt(dd * m.value);
  s.lambda = std::sqrt(2.0 * m.value * dd * logd / nn);
  s.validate();
  return s;
}

TruncationSchedule schedule_spca_heavy(MomentBound m, Eigen::Index n, Eigen::Index d,
                                       ScheduleSource source) {
  require_grid(n, d, "schedule_spca_heavy");
  const double nn = static_cast<double>(n), logd = std::log(static_cast<double>(d));
  TruncationSchedule s;
  s.source = source;
  s.moment_bound = m.value;
  s.tau = std::pow(m.value * nn / logd, 0.25);
  s.lambda = source == ScheduleSource::ExperimentDefault
                 ? 4.0 * std::sqrt(logd / nn)
                 : std::sqrt(m.value * logd / nn);
  s.validate();
  return s;
}

TruncatedMoment truncated_first_moment(const SimDataset& data, const ScoreModel& model,
                                       double tau, int shards) {
  data.validate();
  require_positive(tau, "tau");
  if (!data.has_responses())
    throw std::invalid_argument("truncated_first_moment: dataset has no responses");
  if (data.dims.size() != 1)
    throw std::invalid_argument("truncated_first_moment: vector covariates required");
  const Eigen::Index n = data.sample_count(), d = data.ambient_dim();

  struct Part {
    Eigen::VectorXd sum;
    std::size_t clipped = 0;
  };
  auto body = [&](Eigen::Index lo, Eigen::Index hi) {
    Part p{Eigen::VectorXd::Zero(d), 0};
    for (Eigen::Index i = lo; i < hi; ++i) {
      const double y = data.responses[i];
      const double yc = clip(y, tau);
      if (yc != y) ++p.clipped;
      for (Eigen::Index j = 0; j < d; ++j) {
        const double s = model.score(data.covariates(i, j));
        const double sc = clip(s, tau);
        if (sc != s) ++p.clipped;
        p.sum[j] += yc * sc;
      }
    }
    return p;
  };
  Part total = sharded_reduce<Part>(n, shards, body, [](Part a, Part b) {
    a.sum += b.sum;
    a.clipped += b.clipped;
    return a;
  });

  TruncatedMoment out;
  out.value = total.sum / static_cast<double>(n);
  out.n_used = static_cast<std::size_t>(n);
  out.clip_fraction =
      static_cast<double>(total.clipped) / (static_cast<double>(n) * (1.0 + static_cast<double>(d)));
  return out;
}

TruncatedMomentMatrix truncated_mean_matrix(const SimDataset& data, const ScoreModel& model,
                                            double kappa, int shards) {
  data.validate();
  require_positive(kappa, "kappa");
  if (!data.has_responses())
    throw std::invalid_argument("truncated_mean_matrix: dataset has no responses");
  if (data.dims.size() != 2)
    throw std::invalid_argument("truncated_mean_matrix: matrix covariates required");
  const Eigen::Index n = data.sample_count();
  const Eigen::Index d1 = data.dims[0], d2 = data.dims[1];

  struct Part {
    Eigen::MatrixXd sum;
    std::size_t large = 0, eigs = 0;
  };
  auto body = [&](Eigen::Index lo, Eigen::Index hi) {
    Part p{Eigen::MatrixXd::Zero(d1, d2), 0, 0};
    Eigen::MatrixXd s(d1, d2);
    for (Eigen::Index i = lo; i < hi; ++i) {
      for (Eigen::Index r = 0; r < d1; ++r)
        for (Eigen::Index c = 0; c < d2; ++c)
          s(r, c) = model.score(data.covariates(i, r * d2 + c));
      p.sum += psi_matrix_impl(kappa * data.responses[i] * s, &p.large, &p.eigs);
    }
    return p;
  };
  Part total = sharded_reduce<Part>(n, shards, body, [](Part a, Part b) {
    a.sum += b.sum;
    a.large += b.large;
    a.eigs += b.eigs;
    return a;
  });

  TruncatedMomentMatrix out;
  out.value = total.sum / (kappa * static_cast<double>(n));
  out.n_used = static_cast<std::size_t>(n);
  out.clip_fraction =
      total.eigs ? static_cast<double>(total.large) / static_cast<double>(total.eigs) : 0.0;
  return out;
}

TruncatedMomentMatrix truncated_second_moment(const SimDataset& data, const ScoreModel& model,
                                              double tau, int shards) {
  data.validate();
  require_positive(tau, "tau");
  if (!data.has_responses())
    throw std::invalid_argument("truncated_second_moment: dataset has no responses");
  if (data.dims.size() != 1)
    throw std::invalid_argument("truncated_second_moment: vector covariates required");
  const Eigen::Index n = data.sample_count(), d = data.ambient_dim();
  const double tau2 = tau * tau;

  struct Part {
    Eigen::MatrixXd sum;
    std::size_t clipped = 0;
  };
  auto body = [&](Eigen::Index lo, Eigen::Index hi) {
    Part p{Eigen::MatrixXd::Zero(d, d), 0};
    Eigen::VectorXd s(d), sd(d);
    for (Eigen::Index i = lo; i < hi; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) {
        const double x = data.covariates(i, j);
        s[j] = model.score(x);
        sd[j] = model.score_deriv(x);
      }
      const double y = data.responses[i];
      const double yc = clip(y, tau);
      if (yc != y) ++p.clipped;
      for (Eigen::Index j = 0; j < d; ++j) {
        for (Eigen::Index k = j; k < d; ++k) {
          const double t = s[j] * s[k] - (j == k ? sd[j] : 0.0);
          const double tc = clip(t, tau2);
          if (tc != t) p.clipped += (j == k ? 1 : 2);
          p.sum(j, k) += yc * tc;
          if (k != j) p.sum(k, j) += yc * tc;
        }
      }
    }
    return p;
  };
  Part total = sharded_reduce<Part>(n, shards, body, [](Part a, Part b) {
    a.sum += b.sum;
    a.clipped += b.clipped;
    return a;
  });

  TruncatedMomentMatrix out;
  out.value = total.sum / static_cast<double>(n);
  out.n_used = static_cast<std::size_t>(n);
  out.clip_fraction = static_cast<double>(total.clipped) /
                      (static_cast<double>(n) * (1.0 + static_cast<double>(d) * static_cast<double>(d)));
  return out;
}

TruncatedMomentMatrix truncated_covariance(const Eigen::MatrixXd& rows, double tau, int shards) {
  require_positive(tau, "tau");
  if (rows.rows() < 1) throw std::invalid_argument("truncated_covariance: empty sample");
  const Eigen::Index n = rows.rows(), d = rows.cols();

  struct Part {
    Eigen::MatrixXd sum;
    std::size_t clipped = 0;
  };
  auto body = [&](Eigen::Index lo, Eigen::Index hi) {
    Part p{Eigen::MatrixXd::Zero(d, d), 0};
    Eigen::VectorXd xb(d);
    for (Eigen::Index i = lo; i < hi; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) {
        const double x = rows(i, j);
        xb[j] = clip(x, tau);
        if (xb[j] != x) ++p.clipped;
      }
      p.sum.selfadjointView<Eigen::Lower>().rankUpdate(xb);
    }
    return p;
  };
  Part total = sharded_reduce<Part>(n, shards, body, [](Part a, Part b) {
    a.sum += b.sum;
    a.clipped += b.clipped;
    return a;
  });

  TruncatedMomentMatrix out;
  out.value = Eigen::MatrixXd(total.sum.selfadjointView<Eigen::Lower>()) / static_cast<double>(n);
  out.n_used = static_cast<std::size_t>(n);
  out.clip_fraction = static_cast<double>(total.clipped) /
                      (static_cast<double>(n) * static_cast<double>(d));
  return out;
}

}  // namespace steinsim
