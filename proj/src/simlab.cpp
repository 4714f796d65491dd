#include "steinsim/simlab.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace steinsim {

namespace {

const std::map<std::string, LinkFunction>& link_registry() {
  static const std::map<std::string, LinkFunction> reg = [] {
    std::map<std::string, LinkFunction> r;
    r["f1"] = {"f1", [](double u) { return 3.0 * u + 10.0 * std::sin(u); },
               [](double u) { return 3.0 + 10.0 * std::cos(u); },
               [](double u) { return -10.0 * std::sin(u); }};
    r["f2"] = {"f2",
               [](double u) { return std::numbers::sqrt2 * u + 4.0 * std::exp(-2.0 * u * u); },
               [](double u) { return std::numbers::sqrt2 - 16.0 * u * std::exp(-2.0 * u * u); },
               [](double u) { return (64.0 * u * u - 16.0) * std::exp(-2.0 * u * u); }};
    r["f3"] = {"f3", [](double u) { return u * u; }, [](double u) { return 2.0 * u; },
               [](double) { return 2.0; }};
    r["f4"] = {"f4", [](double u) { return std::abs(u); }, nullptr, nullptr};
    r["f5"] = {"f5", [](double u) { return 4.0 * u * u + 3.0 * std::cos(u); },
               [](double u) { return 8.0 * u - 3.0 * std::sin(u); },
               [](double u) { return 8.0 - 3.0 * std::cos(u); }};
    r["identity"] = {"identity", [](double u) { return u; }, [](double) { return 1.0; },
                     [](double) { return 0.0; }};
    return r;
  }();
  return reg;
}

std::uint64_t sm64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Eigen::VectorXd flatten_row_major(const Eigen::MatrixXd& m) {
  Eigen::VectorXd v(m.size());
  Eigen::Index idx = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) v[idx++] = m(r, c);
  return v;
}

}  // namespace

const LinkFunction& LinkFunction::from_name(const std::string& name) {
  const auto& reg = link_registry();
  const auto it = reg.find(name);
  if (it == reg.end()) throw std::invalid_argument("unknown link function: " + name);
  return it->second;
}

MultiLink MultiLink::sum_of_squares() {
  return {"sum_of_squares", [](const Eigen::VectorXd& u) { return u.squaredNorm(); }};
}

MultiLink MultiLink::from_name(const std::string& name) {
  if (name == "sum_of_squares") return sum_of_squares();
  throw std::invalid_argument("unknown multi-index link: " + name);
}

Eigen::MatrixXd GroundTruth::as_matrix() const {
  if (dims.size() != 2) throw std::logic_error("GroundTruth::as_matrix: not a matrix truth");
  Eigen::MatrixXd m(dims[0], dims[1]);
  for (Eigen::Index r = 0; r < dims[0]; ++r)
    for (Eigen::Index c = 0; c < dims[1]; ++c) m(r, c) = beta_flat[r * dims[1] + c];
  return m;
}

GroundTruth gen_sparse_beta(Eigen::Index d, Eigen::Index s_star, std::uint64_t seed) {
  if (s_star < 1 || s_star > d) throw std::invalid_argument("gen_sparse_beta: need 1 <= s* <= d");
  std::mt19937_64 rng(seed);
  // partial Fisher-Yates: first s_star entries form a uniform support
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(d));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  for (Eigen::Index i = 0; i < s_star; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, d - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  std::sort(idx.begin(), idx.begin() + s_star);
  GroundTruth t;
  t.dims = {d};
  t.sparsity_or_rank = s_star;
  t.beta_flat = Eigen::VectorXd::Zero(d);
  const double mag = 1.0 / std::sqrt(static_cast<double>(s_star));
  std::bernoulli_distribution sign(0.5);
  for (Eigen::Index i = 0; i < s_star; ++i)
    t.beta_flat[idx[static_cast<std::size_t>(i)]] = sign(rng) ? mag : -mag;
  return t;
}

GroundTruth gen_lowrank_beta(Eigen::Index d1, Eigen::Index d2, Eigen::Index r_star,
                             std::uint64_t seed) {
  if (r_star < 1 || r_star > std::min(d1, d2))
    throw std::invalid_argument("gen_lowrank_beta: need 1 <= r* <= min(d1,d2)");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto random_orthonormal = [&](Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd g(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) g(r, c) = gauss(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    return Eigen::MatrixXd(qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols));
  };
  const Eigen::MatrixXd u = random_orthonormal(d1, r_star);
  const Eigen::MatrixXd v = random_orthonormal(d2, r_star);
  GroundTruth t;
  t.dims = {d1, d2};
  t.sparsity_or_rank = r_star;
  t.beta_flat =
      flatten_row_major(u * v.transpose() / std::sqrt(static_cast<double>(r_star)));
  return t;
}

SimDataset gen_sim_data(const ScoreModel& model, const GroundTruth& truth,
                        const LinkFunction& link, double noise_stddev, Eigen::Index n,
                        std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("gen_sim_data: n must be >= 1");
  if (noise_stddev < 0) throw std::invalid_argument("gen_sim_data: noise_stddev must be >= 0");
  const Eigen::Index p = truth.beta_flat.size();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  SimDataset data;
  data.dims = truth.dims;
  data.covariates.resize(n, p);
  data.responses.resize(n);
  Eigen::VectorXd row(p);
  for (Eigen::Index i = 0; i < n; ++i) {
    model.sample_into(rng, {row.data(), static_cast<std::size_t>(p)});
    data.covariates.row(i) = row;
    data.responses[i] = link.f(row.dot(truth.beta_flat)) + noise_stddev * gauss(rng);
  }
  data.validate();
  return data;
}

SimDataset gen_mim_data(const ScoreModel& model, const Eigen::MatrixXd& b_star,
                        const MultiLink& link, double noise_stddev, Eigen::Index n,
                        std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("gen_mim_data: n must be >= 1");
  if (noise_stddev < 0) throw std::invalid_argument("gen_mim_data: noise_stddev must be >= 0");
  const Eigen::Index d = b_star.rows(), k = b_star.cols();
  if ((b_star.transpose() * b_star - Eigen::MatrixXd::Identity(k, k)).norm() > 1e-8)
    throw std::invalid_argument("gen_mim_data: b_star columns must be orthonormal");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  SimDataset data;
  data.dims = {d};
  data.covariates.resize(n, d);
  data.responses.resize(n);
  Eigen::VectorXd row(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    model.sample_into(rng, {row.data(), static_cast<std::size_t>(d)});
    data.covariates.row(i) = row;
    data.responses[i] = link.f(b_star.transpose() * row) + noise_stddev * gauss(rng);
  }
  data.validate();
  return data;
}

Eigen::MatrixXd gen_spiked_data(const ScoreModel& spike, const ScoreModel& noise,
                                const Eigen::VectorXd& v_star, double spike_scale,
                                Eigen::Index n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("gen_spiked_data: n must be >= 1");
  if (!(spike_scale > 0)) throw std::invalid_argument("gen_spiked_data: spike_scale must be > 0");
  const Eigen::Index d = v_star.size();
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd rows(n, d);
  Eigen::VectorXd w(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = spike.sample_one(rng);
    noise.sample_into(rng, {w.data(), static_cast<std::size_t>(d)});
    rows.row(i) = spike_scale * z * v_star + w;
  }
  return rows;
}

double cosine_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("cosine_distance: shape mismatch");
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine_distance: zero input");
  const double c = 1.0 - std::abs((a.cwiseProduct(b)).sum()) / (na * nb);
  return std::clamp(c, 0.0, 1.0);
}

double subspace_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("subspace_distance: shape mismatch");
  const Eigen::VectorXd sv =
      Eigen::JacobiSVD<Eigen::MatrixXd>(a.transpose() * b).singularValues();
  const double k = static_cast<double>(a.cols());
  return std::sqrt(std::max(0.0, 2.0 * k - 2.0 * sv.sum()));
}

std::uint64_t cell_seed(std::uint64_t master, std::uint64_t n, std::uint64_t trial) {
  return sm64(sm64(sm64(master) ^ n) ^ trial);
}

std::string to_string(SweepEstimator kind) {
  switch (kind) {
    case SweepEstimator::Sim1: return "sim1";
    case SweepEstimator::Sim2: return "sim2";
    case SweepEstimator::Mim: return "mim";
    case SweepEstimator::Spca: return "spca";
  }
  return "?";
}

namespace {

// numeric literal, or nullopt for a recognized keyword
std::optional<double> parse_override(const std::string& s, bool allow_paper_default,
                                     const char* field) {
  if (s == "auto") return std::nullopt;
  if (s == "paper-default") {
    if (allow_paper_default) return std::nullopt;
    throw std::invalid_argument(std::string(field) + ": 'paper-default' not supported here");
  }
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw std::invalid_argument(std::string(field) + ": expected auto|paper-default|number, got '" + s + "'");
}

}  // namespace

TruncationSchedule resolve_schedule(SweepEstimator kind, const SchedulePolicy& policy,
                                    Eigen::Index n, const std::vector<Eigen::Index>& dims) {
  const bool experiment =
      policy.lambda == "paper-default" || policy.tau == "paper-default" || policy.kappa == "paper-default";
  const ScheduleSource src =
      experiment ? ScheduleSource::ExperimentDefault : ScheduleSource::TheoremFormula;
  const MomentBound m(policy.moment_bound);

  TruncationSchedule s;
  switch (kind) {
    case SweepEstimator::Sim1:
      if (dims.size() == 1)
        s = schedule_first_sparse(m, n, dims[0], src);
      else if (dims.size() == 2)
        s = schedule_first_lowrank(m, n, dims[0], dims[1], src);
      else if (dims.size() == 4)
        s = schedule_tensor(m, n, dims[0], src);
      else
        throw std::invalid_argument("resolve_schedule: sim1 dims must have 1, 2, or 4 axes");
      break;
    case SweepEstimator::Sim2:
    case SweepEstimator::Mim:
      if (dims.size() != 1)
        throw std::invalid_argument("resolve_schedule: vector covariates required");
      s = schedule_second(m, n, dims[0], src);
      break;
    case SweepEstimator::Spca:
      if (dims.size() != 1)
        throw std::invalid_argument("resolve_schedule: vector covariates required");
      s = schedule_spca_heavy(m, n, dims[0], src);
      break;
  }

  bool manual = false;
  if (const auto v = parse_override(policy.lambda, true, "lambda")) {
    s.lambda = *v;
    manual = true;
  }
  if (const auto v = parse_override(policy.tau, true, "tau")) {
    s.tau = *v;
    manual = true;
  }
  if (const auto v = parse_override(policy.kappa, true, "kappa")) {
    s.kappa = *v;
    manual = true;
  }
  if (manual) s.source = ScheduleSource::Manual;
  s.validate();
  return s;
}

void SweepConfig::validate() const {
  ScoreModel::parse(dist);
  if (noise_stddev < 0) throw std::invalid_argument("sweep config: noise must be >= 0");
  if (dims.empty()) throw std::invalid_argument("sweep config: truth dimensions missing");
  for (Eigen::Index d : dims)
    if (d < 2) throw std::invalid_argument("sweep config: dimensions must be >= 2");
  Eigen::Index min_dim = dims[0];
  for (Eigen::Index d : dims) min_dim = std::min(min_dim, d);
  if (s_or_r < 1 || s_or_r > min_dim)
    throw std::invalid_argument("sweep config: s (or r) out of range");
  switch (estimator) {
    case SweepEstimator::Sim1:
      if (dims.size() != 1 && dims.size() != 2)
        throw std::invalid_argument("sweep config: sim1 sweeps support vector or matrix truths");
      LinkFunction::from_name(link);
      break;
    case SweepEstimator::Sim2:
      if (dims.size() != 1) throw std::invalid_argument("sweep config: sim2 needs a vector truth");
      LinkFunction::from_name(link);
      break;
    case SweepEstimator::Mim:
      if (dims.size() != 1) throw std::invalid_argument("sweep config: mim needs a vector truth");
      MultiLink::from_name(link);
      if (k < 1 || k * s_or_r > dims[0])
        throw std::invalid_argument("sweep config: need k >= 1 and k*s <= d");
      break;
    case SweepEstimator::Spca:
      if (dims.size() != 1) throw std::invalid_argument("sweep config: spca needs a vector truth");
      if (k != 1) throw std::invalid_argument("sweep config: spca sweeps support k=1");
      ScoreModel::parse(spike_dist);
      if (!(spike_scale > 0)) throw std::invalid_argument("sweep config: spike_scale must be > 0");
      break;
  }
  if (n_grid.empty()) throw std::invalid_argument("sweep config: n grid missing");
  for (Eigen::Index n : n_grid)
    if (n < 1) throw std::invalid_argument("sweep config: n values must be >= 1");
  if (trials < 1) throw std::invalid_argument("sweep config: trials must be >= 1");
  if (jobs < 1) throw std::invalid_argument("sweep config: jobs must be >= 1");
  admm.validate();
  MomentBound(policy.moment_bound);
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

long to_long(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos == v.size()) return x;
  } catch (const std::exception&) {
  }
  throw std::invalid_argument("sweep config: bad integer for '" + key + "': " + v);
}

double to_double(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos == v.size()) return x;
  } catch (const std::exception&) {
  }
  throw std::invalid_argument("sweep config: bad number for '" + key + "': " + v);
}

}  // namespace

SweepConfig parse_sweep_config(const std::string& text) {
  SweepConfig cfg;
  std::string section;
  std::string truth_kind = "sparse";
  std::optional<Eigen::Index> d, d1, d2;
  std::istringstream is(text);
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = line.substr(1, line.size() - 2);
      if (section != "model" && section != "truth" && section != "estimator" && section != "grid")
        throw std::invalid_argument("sweep config: unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("sweep config: expected key=value at line " +
                                  std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (section == "model") {
      if (key == "dist") cfg.dist = val;
      else if (key == "noise") cfg.noise_stddev = to_double(val, key);
      else throw std::invalid_argument("sweep config: unknown key '" + key + "' in [model]");
    } else if (section == "truth") {
      if (key == "kind") truth_kind = val;
      else if (key == "d") d = to_long(val, key);
      else if (key == "d1") d1 = to_long(val, key);
      else if (key == "d2") d2 = to_long(val, key);
      else if (key == "s" || key == "r") cfg.s_or_r = to_long(val, key);
      else if (key == "spike_scale") cfg.spike_scale = to_double(val, key);
      else if (key == "spike_dist") cfg.spike_dist = val;
      else throw std::invalid_argument("sweep config: unknown key '" + key + "' in [truth]");
    } else if (section == "estimator") {
      if (key == "id") {
        if (val == "sim1") cfg.estimator = SweepEstimator::Sim1;
        else if (val == "sim2") cfg.estimator = SweepEstimator::Sim2;
        else if (val == "mim") cfg.estimator = SweepEstimator::Mim;
        else if (val == "spca") cfg.estimator = SweepEstimator::Spca;
        else throw std::invalid_argument("sweep config: unknown estimator id: " + val);
      } else if (key == "link") cfg.link = val;
      else if (key == "k") cfg.k = to_long(val, key);
      else if (key == "lambda") cfg.policy.lambda = val;
      else if (key == "tau") cfg.policy.tau = val;
      else if (key == "kappa") cfg.policy.kappa = val;
      else if (key == "moment_bound") cfg.policy.moment_bound = to_double(val, key);
      else if (key == "rho") cfg.admm.rho = to_double(val, key);
      else if (key == "tol") cfg.admm.tol = to_double(val, key);
      else if (key == "max_iter") cfg.admm.max_iter = static_cast<int>(to_long(val, key));
      else throw std::invalid_argument("sweep config: unknown key '" + key + "' in [estimator]");
    } else if (section == "grid") {
      if (key == "n") {
        cfg.n_grid.clear();
        std::istringstream ns(val);
        std::string tok;
        while (std::getline(ns, tok, ',')) cfg.n_grid.push_back(to_long(trim(tok), key));
      } else if (key == "trials") cfg.trials = static_cast<int>(to_long(val, key));
      else if (key == "seed") cfg.master_seed = static_cast<std::uint64_t>(to_long(val, key));
      else if (key == "jobs") cfg.jobs = static_cast<int>(to_long(val, key));
      else throw std::invalid_argument("sweep config: unknown key '" + key + "' in [grid]");
    } else {
      throw std::invalid_argument("sweep config: key outside any section at line " +
                                  std::to_string(lineno));
    }
  }

  if (truth_kind == "sparse" || truth_kind == "spike") {
    if (!d) throw std::invalid_argument("sweep config: [truth] d required");
    cfg.dims = {*d};
  } else if (truth_kind == "lowrank") {
    if (!d1 || !d2) throw std::invalid_argument("sweep config: [truth] d1 and d2 required");
    cfg.dims = {*d1, *d2};
  } else {
    throw std::invalid_argument("sweep config: unknown truth kind: " + truth_kind);
  }
  cfg.validate();
  return cfg;
}

SweepConfig read_sweep_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sweep config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_sweep_config(ss.str());
}

namespace {

std::string dims_label(const std::vector<Eigen::Index>& dims) {
  std::string out;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(dims[i]);
  }
  return out;
}

double signal_strength_of(const SweepConfig& cfg, Eigen::Index n) {
  const double nn = static_cast<double>(n);
  const double s = static_cast<double>(cfg.s_or_r);
  switch (cfg.estimator) {
    case SweepEstimator::Sim1: {
      if (cfg.dims.size() == 1)
        return std::sqrt(s * std::log(static_cast<double>(cfg.dims[0])) / nn);
      const double dd = static_cast<double>(cfg.dims[0] + cfg.dims[1]);
      return std::sqrt(s * dd * std::log(dd) / nn);
    }
    case SweepEstimator::Sim2:
    case SweepEstimator::Mim:
    case SweepEstimator::Spca:
      return s * std::sqrt(std::log(static_cast<double>(cfg.dims[0])) / nn);
  }
  return 0.0;
}

std::string estimator_label(const SweepConfig& cfg) {
  if (cfg.estimator == SweepEstimator::Sim1)
    return cfg.dims.size() == 1 ? "sim1-sparse" : "sim1-lowrank";
  return to_string(cfg.estimator);
}

// disjoint-support sparse orthonormal columns, each s entries of +-1/sqrt(s)
Eigen::MatrixXd gen_mim_truth(Eigen::Index d, Eigen::Index s, Eigen::Index k,
                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(d));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  for (Eigen::Index i = 0; i < s * k; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, d - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(d, k);
  const double mag = 1.0 / std::sqrt(static_cast<double>(s));
  std::bernoulli_distribution sign(0.5);
  for (Eigen::Index c = 0; c < k; ++c)
    for (Eigen::Index i = 0; i < s; ++i)
      b(idx[static_cast<std::size_t>(c * s + i)], c) = sign(rng) ? mag : -mag;
  return b;
}

SweepRow run_trial(const SweepConfig& cfg, Eigen::Index n, int trial) {
  SweepRow row;
  row.seed = cell_seed(cfg.master_seed, static_cast<std::uint64_t>(n),
                       static_cast<std::uint64_t>(trial));
  row.n = n;
  row.dims_label = dims_label(cfg.dims);
  row.s_or_r = cfg.s_or_r;
  row.link = cfg.estimator == SweepEstimator::Spca ? "none" : cfg.link;
  // the CSV schema is comma-delimited, so the label form of "gamma:5,1" is "gamma:5;1"
  row.dist = cfg.dist;
  std::replace(row.dist.begin(), row.dist.end(), ',', ';');
  row.estimator = estimator_label(cfg);
  row.signal_strength = signal_strength_of(cfg, n);
  const std::uint64_t truth_seed = cell_seed(row.seed, 0, 1);
  const std::uint64_t data_seed = cell_seed(row.seed, 0, 2);

  const auto t0 = std::chrono::steady_clock::now();
  try {
    const ScoreModel model = ScoreModel::parse(cfg.dist);
    const TruncationSchedule schedule =
        resolve_schedule(cfg.estimator, cfg.policy, n, cfg.dims);
    switch (cfg.estimator) {
      case SweepEstimator::Sim1: {
        const GroundTruth truth =
            cfg.dims.size() == 1
                ? gen_sparse_beta(cfg.dims[0], cfg.s_or_r, truth_seed)
                : gen_lowrank_beta(cfg.dims[0], cfg.dims[1], cfg.s_or_r, truth_seed);
        const LinkFunction& link = LinkFunction::from_name(cfg.link);
        const SimDataset data =
            gen_sim_data(model, truth, link, cfg.noise_stddev, n, data_seed);
        const SimEstimate est = cfg.dims.size() == 1
                                    ? fit_sim1_sparse(data, model, schedule)
                                    : fit_sim1_lowrank(data, model, schedule);
        if (!est.direction_defined) throw std::runtime_error("estimate is zero");
        row.cosine_distance =
            cosine_distance(flatten_row_major(est.direction), truth.beta_flat);
        break;
      }
      case SweepEstimator::Sim2: {
        const GroundTruth truth = gen_sparse_beta(cfg.dims[0], cfg.s_or_r, truth_seed);
        const LinkFunction& link = LinkFunction::from_name(cfg.link);
        const SimDataset data =
            gen_sim_data(model, truth, link, cfg.noise_stddev, n, data_seed);
        const SubspaceEstimate est = fit_sim2_sparse(data, model, schedule, cfg.admm);
        row.cosine_distance = cosine_distance(est.basis, truth.beta_flat);
        break;
      }
      case SweepEstimator::Mim: {
        const Eigen::MatrixXd b_star =
            gen_mim_truth(cfg.dims[0], cfg.s_or_r, cfg.k, truth_seed);
        const MultiLink link = MultiLink::from_name(cfg.link);
        const SimDataset data =
            gen_mim_data(model, b_star, link, cfg.noise_stddev, n, data_seed);
        const SubspaceEstimate est = fit_mim2(data, model, schedule, cfg.k, cfg.admm);
        // normalized so the row invariant cosine_distance in [0,1] holds for k > 1
        row.cosine_distance = subspace_distance(est.basis, b_star) /
                              std::sqrt(2.0 * static_cast<double>(cfg.k));
        break;
      }
      case SweepEstimator::Spca: {
        const GroundTruth truth = gen_sparse_beta(cfg.dims[0], cfg.s_or_r, truth_seed);
        const ScoreModel spike = ScoreModel::parse(cfg.spike_dist);
        const Eigen::MatrixXd rows = gen_spiked_data(spike, model, truth.beta_flat,
                                                     cfg.spike_scale, n, data_seed);
        const SubspaceEstimate est = fit_spca_heavy(rows, schedule, 1, cfg.admm);
        row.cosine_distance = cosine_distance(est.basis, truth.beta_flat);
        break;
      }
    }
  } catch (const std::exception& e) {
    row.failed = true;
    row.error = e.what();
    row.cosine_distance = std::numeric_limits<double>::quiet_NaN();
  }
  row.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

}  // namespace

std::vector<SweepRow> run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  struct Cell {
    Eigen::Index n;
    int trial;
  };
  std::vector<Cell> cells;
  for (Eigen::Index n : cfg.n_grid)
    for (int t = 0; t < cfg.trials; ++t) cells.push_back({n, t});
  std::vector<SweepRow> rows(cells.size());

  if (cfg.jobs == 1) {
    for (std::size_t i = 0; i < cells.size(); ++i)
      rows[i] = run_trial(cfg, cells[i].n, cells[i].trial);
    return rows;
  }
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      rows[i] = run_trial(cfg, cells[i].n, cells[i].trial);
    }
  };
  std::vector<std::thread> pool;
  const int nw = std::min<int>(cfg.jobs, static_cast<int>(cells.size()));
  pool.reserve(static_cast<std::size_t>(nw));
  for (int w = 0; w < nw; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return rows;
}

std::string sweep_rows_to_csv(const std::vector<SweepRow>& rows, bool include_timing) {
  std::string out =
      "seed,n,d,s_or_r,link,dist,estimator,signal_strength,cosine_distance,wall_time_ms\n";
  char buf[64];
  for (const auto& r : rows) {
    out += std::to_string(r.seed);
    out += ",";
    out += std::to_string(r.n);
    out += ",";
    out += r.dims_label;
    out += ",";
    out += std::to_string(r.s_or_r);
    out += ",";
    out += r.link + "," + r.dist + "," + r.estimator + ",";
    std::snprintf(buf, sizeof buf, "%.17g", r.signal_strength);
    out += buf;
    out += ",";
    std::snprintf(buf, sizeof buf, "%.17g", r.cosine_distance);
    out += buf;
    out += ",";
    std::snprintf(buf, sizeof buf, "%.3f", include_timing ? r.wall_time_ms : 0.0);
    out += buf;
    out += "\n";
  }
  return out;
}

std::vector<SweepRow> parse_sweep_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) ||
      trim(line) !=
          "seed,n,d,s_or_r,link,dist,estimator,signal_strength,cosine_distance,wall_time_ms")
    throw std::invalid_argument("sweep csv: missing or wrong header");
  std::vector<SweepRow> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    std::string tok;
    while (std::getline(ls, tok, ',')) f.push_back(tok);
    if (f.size() != 10)
      throw std::invalid_argument("sweep csv: expected 10 fields at line " +
                                  std::to_string(lineno));
    SweepRow r;
    r.seed = static_cast<std::uint64_t>(std::stoull(f[0]));
    r.n = to_long(f[1], "n");
    r.dims_label = f[2];
    r.s_or_r = to_long(f[3], "s_or_r");
    r.link = f[4];
    r.dist = f[5];
    r.estimator = f[6];
    r.signal_strength = to_double(f[7], "signal_strength");
    r.cosine_distance = f[8] == "nan" || f[8] == "-nan"
                            ? std::numeric_limits<double>::quiet_NaN()
                            : to_double(f[8], "cosine_distance");
    r.failed = std::isnan(r.cosine_distance);
    r.wall_time_ms = to_double(f[9], "wall_time_ms");
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace steinsim
