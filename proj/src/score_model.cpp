#include "steinsim/score_model.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace steinsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void domain_fail(const std::string& name, double x) {
  std::ostringstream os;
  os << name << ": score undefined at x=" << x << " (outside open support)";
  throw std::domain_error(os.str());
}

}  // namespace

ScoreModel ScoreModel::gaussian(double mean, double stddev) {
  if (!(stddev > 0)) throw std::invalid_argument("gaussian: stddev must be > 0");
  ScoreModel m;
  m.family_ = Family::Gaussian;
  m.support_ = {-kInf, kInf};
  m.a_ = mean;
  m.b_ = stddev;
  std::ostringstream os;
  os << "gaussian:" << mean << "," << stddev;
  m.name_ = os.str();
  return m;
}

ScoreModel ScoreModel::gamma(double shape, double scale) {
  if (!(shape > 0) || !(scale > 0)) throw std::invalid_argument("gamma: shape and scale must be > 0");
  ScoreModel m;
  m.family_ = Family::Gamma;
  m.support_ = {0.0, kInf};
  m.a_ = shape;
  m.b_ = scale;
  std::ostringstream os;
  os << "gamma:" << shape << "," << scale;
  m.name_ = os.str();
  return m;
}

ScoreModel ScoreModel::student_t(double dof) {
  if (!(dof > 0)) throw std::invalid_argument("t: dof must be > 0");
  ScoreModel m;
  m.family_ = Family::StudentT;
  m.support_ = {-kInf, kInf};
  m.a_ = dof;
  std::ostringstream os;
  os << "t:" << dof;
  m.name_ = os.str();
  return m;
}

ScoreModel ScoreModel::rayleigh(double scale) {
  if (!(scale > 0)) throw std::invalid_argument("rayleigh: scale must be > 0");
  ScoreModel m;
  m.family_ = Family::Rayleigh;
  m.support_ = {0.0, kInf};
  m.a_ = scale;
  std::ostringstream os;
  os << "rayleigh:" << scale;
  m.name_ = os.str();
  return m;
}

ScoreModel ScoreModel::custom(Support support,
                              std::function<double(double)> density,
                              std::function<double(double)> score,
                              std::function<double(double)> score_deriv,
                              std::function<double(std::mt19937_64&)> sampler,
                              std::string name) {
  if (!density || !score || !score_deriv || !sampler)
    throw std::invalid_argument("custom: all four callables are required");
  ScoreModel m;
  m.family_ = Family::Custom;
  m.support_ = support;
  m.name_ = std::move(name);
  m.custom_density_ = std::move(density);
  m.custom_score_ = std::move(score);
  m.custom_score_deriv_ = std::move(score_deriv);
  m.custom_sampler_ = std::move(sampler);
  return m;
}

ScoreModel ScoreModel::parse(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string head = spec.substr(0, colon);
  std::vector<double> args;
  if (colon != std::string::npos) {
    std::string rest = spec.substr(colon + 1);
    std::istringstream is(rest);
    std::string tok;
    while (std::getline(is, tok, ',')) {
      std::size_t pos = 0;
      double v;
      try {
        v = std::stod(tok, &pos);
      } catch (const std::exception&) {
        throw std::invalid_argument("bad distribution spec: " + spec);
      }
      if (pos != tok.size()) throw std::invalid_argument("bad distribution spec: " + spec);
      args.push_back(v);
    }
  }
  auto want = [&](std::size_t n) {
    if (args.size() != n) throw std::invalid_argument("bad distribution spec: " + spec);
  };
  if (head == "gaussian" || head == "normal") {
    want(2);
    return gaussian(args[0], args[1]);
  }
  if (head == "gamma") {
    want(2);
    return gamma(args[0], args[1]);
  }
  if (head == "t" || head == "student" || head == "student_t") {
    want(1);
    return student_t(args[0]);
  }
  if (head == "rayleigh") {
    want(1);
    return rayleigh(args[0]);
  }
  throw std::invalid_argument("unknown distribution family: " + spec);
}

double ScoreModel::density(double x) const {
  if (!std::isfinite(x) || !support_.contains(x)) return 0.0;
  switch (family_) {
    case Family::Gaussian: {
      const double z = (x - a_) / b_;
      return std::exp(-0.5 * z * z) / (b_ * std::sqrt(2.0 * std::numbers::pi));
    }
    case Family::Gamma: {
      const double k = a_, th = b_;
      return std::exp((k - 1.0) * std::log(x) - x / th - std::lgamma(k) - k * std::log(th));
    }
    case Family::StudentT: {
      const double nu = a_;
      const double lognorm = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                             0.5 * std::log(nu * std::numbers::pi);
      return std::exp(lognorm - 0.5 * (nu + 1.0) * std::log1p(x * x / nu));
    }
    case Family::Rayleigh: {
      const double s2 = a_ * a_;
      return (x / s2) * std::exp(-0.5 * x * x / s2);
    }
    case Family::Custom:
      return custom_density_(x);
  }
  return 0.0;
}

double ScoreModel::score(double x) const {
  if (!std::isfinite(x) || !support_.contains(x)) domain_fail(name_, x);
  switch (family_) {
    case Family::Gaussian:
      return (x - a_) / (b_ * b_);
    case Family::Gamma:
      return 1.0 / b_ - (a_ - 1.0) / x;
    case Family::StudentT:
      return (a_ + 1.0) * x / (a_ + x * x);
    case Family::Rayleigh:
      return x / (a_ * a_) - 1.0 / x;
    case Family::Custom:
      return custom_score_(x);
  }
  return 0.0;
}

double ScoreModel::score_deriv(double x) const {
  if (!std::isfinite(x) || !support_.contains(x)) domain_fail(name_, x);
  switch (family_) {
    case Family::Gaussian:
      return 1.0 / (b_ * b_);
    case Family::Gamma:
      return (a_ - 1.0) / (x * x);
    case Family::StudentT: {
      const double nu = a_, q = nu + x * x;
      return (nu + 1.0) * (nu - x * x) / (q * q);
    }
    case Family::Rayleigh:
      return 1.0 / (a_ * a_) + 1.0 / (x * x);
    case Family::Custom:
      return custom_score_deriv_(x);
  }
  return 0.0;
}

double ScoreModel::sample_one(std::mt19937_64& rng) const {
  switch (family_) {
    case Family::Gaussian: {
      std::normal_distribution<double> d(a_, b_);
      return d(rng);
    }
    case Family::Gamma: {
      std::gamma_distribution<double> d(a_, b_);
      return d(rng);
    }
    case Family::StudentT: {
      std::student_t_distribution<double> d(a_);
      return d(rng);
    }
    case Family::Rayleigh: {
      // inverse transform; 1-U lies in (0,1] so the log is finite
      std::uniform_real_distribution<double> u(0.0, 1.0);
      return a_ * std::sqrt(-2.0 * std::log1p(-u(rng)));
    }
    case Family::Custom:
      return custom_sampler_(rng);
  }
  return 0.0;
}

void ScoreModel::sample_into(std::mt19937_64& rng, std::span<double> out) const {
  for (double& v : out) v = sample_one(rng);
}

std::vector<double> ScoreModel::sample(std::uint64_t seed, std::size_t n) const {
  std::mt19937_64 rng(seed);
  std::vector<double> out(n);
  sample_into(rng, out);
  return out;
}

MomentBound::MomentBound(double m) : value(m) {
  if (!(m > 0) || !std::isfinite(m)) throw std::invalid_argument("moment bound must be finite and > 0");
}

}  // namespace steinsim
