#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace steinsim {

enum class Family { Gaussian, Gamma, StudentT, Rayleigh, Custom };

// Open support interval; densities vanish outside, scores are defined strictly inside.
struct Support {
  double lo;
  double hi;
  bool contains(double x) const { return x > lo && x < hi; }
};

// Known product-density coordinate law with score s0(x) = -p0'(x)/p0(x).
// Sampling is deterministic given (seed, n) for a fixed build of the library.
class ScoreModel {
 public:
  static ScoreModel gaussian(double mean, double stddev);
  static ScoreModel gamma(double shape, double scale);
  static ScoreModel student_t(double dof);
  static ScoreModel rayleigh(double scale);
  static ScoreModel custom(Support support,
                           std::function<double(double)> density,
                           std::function<double(double)> score,
                           std::function<double(double)> score_deriv,
                           std::function<double(std::mt19937_64&)> sampler,
                           std::string name = "custom");

  // Accepts "gaussian:m,s", "gamma:k,theta", "t:nu", "rayleigh:sigma".
  // Throws std::invalid_argument on malformed input.
  static ScoreModel parse(const std::string& spec);

  Family family() const { return family_; }
  const Support& support() const { return support_; }
  const std::string& name() const { return name_; }

  double density(double x) const;  // 0 outside the support
  double score(double x) const;        // throws std::domain_error off support interior
  double score_deriv(double x) const;  // throws std::domain_error off support interior

  std::vector<double> sample(std::uint64_t seed, std::size_t n) const;
  double sample_one(std::mt19937_64& rng) const;
  void sample_into(std::mt19937_64& rng, std::span<double> out) const;

 private:
  ScoreModel() = default;

  Family family_ = Family::Custom;
  Support support_{-std::numeric_limits<double>::infinity(),
                   std::numeric_limits<double>::infinity()};
  std::string name_;
  double a_ = 0.0;  // mean | shape | dof | sigma
  double b_ = 1.0;  // stddev | scale | unused | unused
  std::function<double(double)> custom_density_;
  std::function<double(double)> custom_score_;
  std::function<double(double)> custom_score_deriv_;
  std::function<double(std::mt19937_64&)> custom_sampler_;
};

// Upper bound M on the relevant moments of Y and the scores; schedules scale with it.
struct MomentBound {
  double value;
  explicit MomentBound(double m);  // throws std::invalid_argument unless m > 0
};

}  // namespace steinsim
