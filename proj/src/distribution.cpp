#include "npamp/distribution.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>
#include <sstream>

#include "npamp/errors.hpp"
#include "npamp/normal.hpp"

namespace npamp {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// E[(X - v)_+] for X ~ N(mean, sd^2).
double normal_upper_partial(double mean, double sd, double v) {
  const double d = (v - mean) / sd;
  return sd * normal_pdf(d) + (mean - v) * normal_sf(d);
}

void validate_kind(const ErrorDistribution::Kind& kind) {
  std::visit(Overloaded{
                 [](const NormalLaw& law) {
                   require(std::isfinite(law.mean) && law.sd > 0.0,
                           "normal error law needs finite mean and sd > 0");
                 },
                 [](const StudentTLaw& law) {
                   require(law.dof > 2.0, "Student-t error law needs dof > 2 (finite variance)");
                 },
                 [](const LaplaceLaw& law) {
                   require(std::isfinite(law.location) && law.scale > 0.0,
                           "Laplace error law needs finite location and scale > 0");
                 },
                 [](const MixtureNormalLaw& law) {
                   require(!law.weights.empty() && law.weights.size() == law.means.size() &&
                               law.weights.size() == law.variances.size(),
                           "mixture error law needs equally sized weights/means/variances");
                   double total = 0.0;
                   for (std::size_t k = 0; k < law.weights.size(); ++k) {
                     require(law.weights[k] >= 0.0, "mixture weights must be nonnegative");
                     require(law.variances[k] > 0.0, "mixture variances must be positive");
                     total += law.weights[k];
                   }
                   require(std::fabs(total - 1.0) < 1e-9, "mixture weights must sum to 1");
                 },
                 [](const EmpiricalLaw& law) {
                   require(law.samples.size() >= 2, "empirical error law needs >= 2 samples");
                   for (double v : law.samples) require(std::isfinite(v), "empirical samples must be finite");
                 },
             },
             kind);
}

}  // namespace

ErrorDistribution::ErrorDistribution(Kind kind, std::optional<double> post_scale_sd)
    : kind_(std::move(kind)), post_scale_sd_(post_scale_sd) {
  validate_kind(kind_);
  if (post_scale_sd_) {
    require(*post_scale_sd_ > 0.0, "post-scaling standard deviation must be positive");
    require(raw_sd() > 0.0, "cannot rescale a degenerate error law");
  }
}

std::string ErrorDistribution::name() const {
  std::ostringstream os;
  std::visit(Overloaded{
                 [&](const NormalLaw& l) { os << "normal(" << l.mean << "," << l.sd << ")"; },
                 [&](const StudentTLaw& l) { os << "student_t(" << l.dof << ")"; },
                 [&](const LaplaceLaw& l) { os << "laplace(" << l.location << "," << l.scale << ")"; },
                 [&](const MixtureNormalLaw& l) { os << "mixture_normal[" << l.weights.size() << "]"; },
                 [&](const EmpiricalLaw& l) { os << "empirical[" << l.samples.size() << "]"; },
             },
             kind_);
  if (post_scale_sd_) os << " scaled to sd " << *post_scale_sd_;
  return os.str();
}

double ErrorDistribution::raw_mean() const {
  return std::visit(Overloaded{
                        [](const NormalLaw& l) { return l.mean; },
                        [](const StudentTLaw&) { return 0.0; },
                        [](const LaplaceLaw& l) { return l.location; },
                        [](const MixtureNormalLaw& l) {
                          return std::inner_product(l.weights.begin(), l.weights.end(),
                                                    l.means.begin(), 0.0);
                        },
                        [](const EmpiricalLaw& l) {
                          return std::accumulate(l.samples.begin(), l.samples.end(), 0.0) /
                                 static_cast<double>(l.samples.size());
                        },
                    },
                    kind_);
}

double ErrorDistribution::raw_sd() const {
  const double mu = raw_mean();
  const double var = std::visit(
      Overloaded{
          [](const NormalLaw& l) { return l.sd * l.sd; },
          [](const StudentTLaw& l) { return l.dof / (l.dof - 2.0); },
          [](const LaplaceLaw& l) { return 2.0 * l.scale * l.scale; },
          [mu](const MixtureNormalLaw& l) {
            double second = 0.0;
            for (std::size_t k = 0; k < l.weights.size(); ++k) {
              second += l.weights[k] * (l.variances[k] + l.means[k] * l.means[k]);
            }
            return second - mu * mu;
          },
          [mu](const EmpiricalLaw& l) {
            double ss = 0.0;
            for (double v : l.samples) ss += (v - mu) * (v - mu);
            return ss / static_cast<double>(l.samples.size());
          },
      },
      kind_);
  return std::sqrt(std::max(var, 0.0));
}

double ErrorDistribution::raw_upper_partial_moment(double v) const {
  return std::visit(
      Overloaded{
          [v](const NormalLaw& l) { return normal_upper_partial(l.mean, l.sd, v); },
          [v](const StudentTLaw& l) {
            // int_v^inf t f(t) dt = (dof + v^2)/(dof - 1) f(v) for the t law.
            const boost::math::students_t_distribution<double> t(l.dof);
            return (l.dof + v * v) / (l.dof - 1.0) * boost::math::pdf(t, v) -
                   v * boost::math::cdf(boost::math::complement(t, v));
          },
          [v](const LaplaceLaw& l) {
            const double d = v - l.location;
            if (d >= 0.0) return 0.5 * l.scale * std::exp(-d / l.scale);
            return -d + 0.5 * l.scale * std::exp(d / l.scale);
          },
          [v](const MixtureNormalLaw& l) {
            double total = 0.0;
            for (std::size_t k = 0; k < l.weights.size(); ++k) {
              total += l.weights[k] * normal_upper_partial(l.means[k], std::sqrt(l.variances[k]), v);
            }
            return total;
          },
          [v](const EmpiricalLaw& l) {
            double total = 0.0;
            for (double s : l.samples) {
              if (s > v) total += s - v;
            }
            return total / static_cast<double>(l.samples.size());
          },
      },
      kind_);
}

double ErrorDistribution::raw_sample(Rng& rng) const {
  return std::visit(
      Overloaded{
          [&rng](const NormalLaw& l) { return std::normal_distribution<double>(l.mean, l.sd)(rng); },
          [&rng](const StudentTLaw& l) { return std::student_t_distribution<double>(l.dof)(rng); },
          [&rng](const LaplaceLaw& l) {
            // Inverse CDF on a symmetric uniform.
            const double w = std::uniform_real_distribution<double>(-0.5, 0.5)(rng);
            const double mag = -l.scale * std::log1p(-2.0 * std::fabs(w));
            return l.location + (w < 0.0 ? -mag : mag);
          },
          [&rng](const MixtureNormalLaw& l) {
            std::discrete_distribution<std::size_t> pick(l.weights.begin(), l.weights.end());
            const std::size_t k = pick(rng);
            return std::normal_distribution<double>(l.means[k], std::sqrt(l.variances[k]))(rng);
          },
          [&rng](const EmpiricalLaw& l) {
            std::uniform_int_distribution<std::size_t> pick(0, l.samples.size() - 1);
            return l.samples[pick(rng)];
          },
      },
      kind_);
}

double ErrorDistribution::mean() const { return post_scale_sd_ ? 0.0 : raw_mean(); }

double ErrorDistribution::sd() const { return post_scale_sd_ ? *post_scale_sd_ : raw_sd(); }

double ErrorDistribution::upper_partial_moment(double u) const {
  if (!post_scale_sd_) return raw_upper_partial_moment(u);
  // eps = c (X - m), so E[(eps - u)_+] = c E[(X - (m + u/c))_+].
  const double c = *post_scale_sd_ / raw_sd();
  return c * raw_upper_partial_moment(raw_mean() + u / c);
}

double ErrorDistribution::sample(Rng& rng) const {
  const double x = raw_sample(rng);
  if (!post_scale_sd_) return x;
  return (x - raw_mean()) * (*post_scale_sd_ / raw_sd());
}

double distribution_expectile(const ErrorDistribution& dist, double tau) {
  require(tau > 0.0 && tau < 1.0, "distribution_expectile: tau must lie in (0, 1)");
  const double mu = dist.mean();
  if (tau == 0.5) return mu;
  const double sd = dist.sd();
  const double k = (2.0 * tau - 1.0) / (1.0 - tau);
  auto defining = [&](double u) { return u - mu - k * dist.upper_partial_moment(u); };

  // Strictly increasing in u; widen mean +/- 10 sd geometrically until the
  // root is bracketed.
  double half_width = 10.0 * sd;
  double lo = mu - half_width;
  double hi = mu + half_width;
  int expansions = 0;
  while (!(defining(lo) <= 0.0 && defining(hi) >= 0.0)) {
    if (++expansions > 60) {
      throw NumericalError("distribution_expectile: failed to bracket the root for " + dist.name());
    }
    half_width *= 2.0;
    lo = mu - half_width;
    hi = mu + half_width;
  }
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= 1e-13 * std::max(1.0, std::fabs(mid)) || mid <= lo || mid >= hi) break;
    if (defining(mid) > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  const double root = 0.5 * (lo + hi);
  if (std::fabs(defining(root)) > 1e-10 * std::max(1.0, sd)) {
    throw NumericalError("distribution_expectile: bisection did not converge for " + dist.name());
  }
  return root;
}

}  // namespace npamp
