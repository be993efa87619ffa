#pragma once

#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace npamp {

using Rng = std::mt19937_64;

struct NormalLaw {
  double mean = 0.0;
  double sd = 1.0;
};

struct StudentTLaw {
  double dof = 3.0;  // must exceed 2 for a finite variance
};

struct LaplaceLaw {
  double location = 0.0;
  double scale = 1.0;
};

struct MixtureNormalLaw {
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> variances;
};

struct EmpiricalLaw {
  std::vector<double> samples;
};

/// A regression error law. When `post_scale_sd` is set, draws are centered
/// and rescaled to that standard deviation, and every derived quantity
/// (moments, partial moments, expectiles) refers to the rescaled law.
class ErrorDistribution {
 public:
  using Kind = std::variant<NormalLaw, StudentTLaw, LaplaceLaw, MixtureNormalLaw, EmpiricalLaw>;

  ErrorDistribution() : ErrorDistribution(NormalLaw{}) {}
  explicit ErrorDistribution(Kind kind, std::optional<double> post_scale_sd = std::nullopt);

  const Kind& kind() const { return kind_; }
  std::optional<double> post_scale_sd() const { return post_scale_sd_; }
  std::string name() const;

  double mean() const;
  double sd() const;

  /// E[(eps - u)_+] for the (possibly rescaled) law.
  double upper_partial_moment(double u) const;

  double sample(Rng& rng) const;

 private:
  double raw_mean() const;
  double raw_sd() const;
  double raw_upper_partial_moment(double v) const;
  double raw_sample(Rng& rng) const;

  Kind kind_;
  std::optional<double> post_scale_sd_;
};

/// The tau-expectile u of the law: the root of
///   u - E(eps) = (2 tau - 1)/(1 - tau) * E[(eps - u)_+],
/// found by bisection. Throws NumericalError if no bracket is found.
double distribution_expectile(const ErrorDistribution& dist, double tau);

}  // namespace npamp
