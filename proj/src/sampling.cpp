// Copyright 2026 The kacchaos Authors
// SPDX-License-Identifier: Apache-2.0
#include "kac/sampling.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <optional>

#include "kac/error.hpp"
#include "kac/jump.hpp"
#include "kac/numerics.hpp"

namespace kac::sampling {

namespace {

constexpr double kPi = 3.14159265358979323846;

double binomial(int n, int k) {
  return std::tgamma(n + 1.0) / (std::tgamma(k + 1.0) * std::tgamma(n - k + 1.0));
}

double double_factorial_odd(int l) {  // (l - 1)!! for even l, E[Z^l]
  double r = 1.0;
  for (int t = l - 1; t > 1; t -= 2) r *= t;
  return r;
}

double param(const std::map<std::string, double>& params, const std::string& key,
             double fallback) {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

}  // namespace

ReferenceDensity ReferenceDensity::uniform_ball(int d, double radius) {
  require(d >= 1 && radius > 0.0, "uniform ball: need d >= 1 and radius > 0");
  ReferenceDensity f(DensityKind::kUniformBall, d);
  f.radius_ = radius;
  return f;
}

ReferenceDensity ReferenceDensity::truncated_gaussian(int d, double sigma, double radius) {
  require(d >= 1 && sigma > 0.0 && radius > 0.0,
          "truncated gaussian: need d >= 1, sigma > 0 and radius > 0");
  ReferenceDensity f(DensityKind::kTruncatedGaussian, d);
  f.sigma_ = sigma;
  f.radius_ = radius;
  f.truncated_mass_ = boost::math::gamma_p(0.5 * d, radius * radius / (2.0 * sigma * sigma));
  require(f.truncated_mass_ > 1e-12, "truncated gaussian: truncation radius too small");
  return f;
}

ReferenceDensity ReferenceDensity::two_point(int d, double a, int axis) {
  require(d >= 1 && a >= 0.0 && axis >= 0 && axis < d,
          "two-point law: need a >= 0 and 0 <= axis < d");
  ReferenceDensity f(DensityKind::kTwoPoint, d);
  f.shift_ = a;
  f.axis_ = axis;
  return f;
}

ReferenceDensity ReferenceDensity::bimodal(int d, double separation, double sigma, int axis) {
  require(d >= 1 && separation >= 0.0 && sigma > 0.0 && axis >= 0 && axis < d,
          "bimodal law: need separation >= 0, sigma > 0 and 0 <= axis < d");
  ReferenceDensity f(DensityKind::kBimodal, d);
  f.shift_ = separation;
  f.sigma_ = sigma;
  f.axis_ = axis;
  return f;
}

ReferenceDensity ReferenceDensity::gaussian(int d, double sigma) {
  require(d >= 1 && sigma > 0.0, "gaussian: need d >= 1 and sigma > 0");
  ReferenceDensity f(DensityKind::kGaussian, d);
  f.sigma_ = sigma;
  return f;
}

ReferenceDensity ReferenceDensity::from_name(const std::string& name, int d,
                                             const std::map<std::string, double>& params) {
  if (name == "uniform_ball") return uniform_ball(d, param(params, "radius", 1.0));
  if (name == "trunc_gauss") {
    return truncated_gaussian(d, param(params, "sigma", 1.0), param(params, "radius", 3.0));
  }
  if (name == "two_point") {
    return two_point(d, param(params, "a", 1.0), static_cast<int>(param(params, "axis", 0)));
  }
  if (name == "bimodal") {
    return bimodal(d, param(params, "separation", 1.0), param(params, "sigma", 0.5),
                   static_cast<int>(param(params, "axis", 0)));
  }
  if (name == "gauss") return gaussian(d, param(params, "sigma", 1.0));
  throw Error("unknown reference density '" + name +
              "' (expected uniform_ball, trunc_gauss, two_point, bimodal or gauss)");
}

std::string ReferenceDensity::name() const {
  switch (kind_) {
    case DensityKind::kUniformBall:
      return "uniform_ball";
    case DensityKind::kTruncatedGaussian:
      return "trunc_gauss";
    case DensityKind::kTwoPoint:
      return "two_point";
    case DensityKind::kBimodal:
      return "bimodal";
    case DensityKind::kGaussian:
      return "gauss";
  }
  return "unknown";
}

bool ReferenceDensity::compact_support() const {
  return kind_ == DensityKind::kUniformBall || kind_ == DensityKind::kTruncatedGaussian ||
         kind_ == DensityKind::kTwoPoint;
}

double ReferenceDensity::support_radius() const {
  switch (kind_) {
    case DensityKind::kUniformBall:
    case DensityKind::kTruncatedGaussian:
      return radius_;
    case DensityKind::kTwoPoint:
      return shift_;
    default:
      return std::numeric_limits<double>::infinity();
  }
}

double ReferenceDensity::moment(int p) const {
  require(p >= 0, "moment: order must be nonnegative");
  const double d = d_;
  switch (kind_) {
    case DensityKind::kUniformBall:
      return d * std::pow(radius_, p) / (d + p);
    case DensityKind::kTwoPoint:
      return p == 0 ? 1.0 : std::pow(shift_, p);
    case DensityKind::kGaussian:
      return std::pow(sigma_, p) * std::pow(2.0, 0.5 * p) * std::tgamma(0.5 * (d + p)) /
             std::tgamma(0.5 * d);
    case DensityKind::kTruncatedGaussian: {
      const double x = radius_ * radius_ / (2.0 * sigma_ * sigma_);
      return std::pow(sigma_, p) * std::pow(2.0, 0.5 * p) *
             std::exp(std::lgamma(0.5 * (d + p)) - std::lgamma(0.5 * d)) *
             boost::math::gamma_p(0.5 * (d + p), x) / truncated_mass_;
    }
    case DensityKind::kBimodal: {
      require(p % 2 == 0, "bimodal moment: only even orders are available");
      // |v|^2 = (m + sigma Z1)^2 + sigma^2 W with W ~ chi^2_{d-1}.
      const int j = p / 2;
      double total = 0.0;
      for (int i = 0; i <= j; ++i) {
        double along = 0.0;  // E (m + sigma Z)^{2i}
        for (int l = 0; l <= 2 * i; l += 2) {
          along += binomial(2 * i, l) * std::pow(shift_, 2 * i - l) * std::pow(sigma_, l) *
                   double_factorial_odd(l);
        }
        double chi = 1.0;  // E W^{j-i}
        for (int t = 0; t < j - i; ++t) chi *= (d - 1.0 + 2.0 * t);
        total += binomial(j, i) * along * std::pow(sigma_, 2 * (j - i)) * chi;
      }
      return total;
    }
  }
  return 0.0;
}

double ReferenceDensity::density(std::span<const double> v) const {
  require(static_cast<int>(v.size()) == d_, "density: dimension mismatch");
  const double r2 = dot(v, v);
  const double d = d_;
  switch (kind_) {
    case DensityKind::kUniformBall:
      return r2 <= radius_ * radius_ ? 1.0 / (metrics::ball_volume(d_) * std::pow(radius_, d))
                                     : 0.0;
    case DensityKind::kGaussian:
      return std::exp(-0.5 * r2 / (sigma_ * sigma_)) /
             std::pow(2.0 * kPi * sigma_ * sigma_, 0.5 * d);
    case DensityKind::kTruncatedGaussian:
      return r2 <= radius_ * radius_
                 ? std::exp(-0.5 * r2 / (sigma_ * sigma_)) /
                       (std::pow(2.0 * kPi * sigma_ * sigma_, 0.5 * d) * truncated_mass_)
                 : 0.0;
    case DensityKind::kBimodal: {
      const double a = v[axis_];
      const double rest = r2 - a * a;
      const double norm = std::pow(2.0 * kPi * sigma_ * sigma_, 0.5 * d);
      const double s2 = 2.0 * sigma_ * sigma_;
      return 0.5 *
             (std::exp(-(rest + (a - shift_) * (a - shift_)) / s2) +
              std::exp(-(rest + (a + shift_) * (a + shift_)) / s2)) /
             norm;
    }
    case DensityKind::kTwoPoint:
      break;
  }
  throw Error("density: the two-point law has no Lebesgue density");
}

double ReferenceDensity::truncated_radial_density(double r) const {
  const double d = d_;
  const double z = std::pow(sigma_, d) * std::pow(2.0, 0.5 * d - 1.0) * std::tgamma(0.5 * d) *
                   truncated_mass_;
  return std::pow(r, d - 1.0) * std::exp(-0.5 * r * r / (sigma_ * sigma_)) / z;
}

metrics::CharacteristicFunction ReferenceDensity::characteristic() const {
  using metrics::CharacteristicFunction;
  using Tag = CharacteristicFunction::Tag;
  metrics::WeightedPointMeasure origin(d_);
  origin.add(Velocity(d_, 0.0), 1.0);
  switch (kind_) {
    case DensityKind::kUniformBall:
      return CharacteristicFunction::uniform_ball(d_, radius_);
    case DensityKind::kGaussian:
      return CharacteristicFunction::gaussian(d_, sigma_ * sigma_);
    case DensityKind::kTwoPoint:
      return CharacteristicFunction::two_point(d_, shift_, axis_);
    case DensityKind::kBimodal: {
      metrics::WeightedPointMeasure shifts(d_);
      Velocity e(d_, 0.0);
      e[axis_] = shift_;
      shifts.add(e, 0.5);
      e[axis_] = -shift_;
      shifts.add(e, 0.5);
      const double var = sigma_ * sigma_;
      return CharacteristicFunction::custom(
          d_, [var](double r) { return std::exp(-0.5 * var * r * r); }, std::move(shifts),
          std::sqrt(80.0 / var), Tag::kCustom);
    }
    case DensityKind::kTruncatedGaussian: {
      const ReferenceDensity self = *this;
      const int d = d_;
      const double radius = radius_;
      auto envelope = [self, d, radius](double rho) {
        if (rho == 0.0) return 1.0;
        const int panels = 4 + static_cast<int>(std::ceil(radius * rho / 2.0));
        std::vector<double> edges(panels + 1);
        for (int k = 0; k <= panels; ++k) edges[k] = radius * k / panels;
        const auto rule = composite_gauss(edges, 12);
        double sum = 0.0;
        for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
          const double r = rule.nodes[k];
          sum += rule.weights[k] * self.truncated_radial_density(r) *
                 metrics::angular_average_cos(d, r * rho);
        }
        return sum;
      };
      return CharacteristicFunction::custom(d_, envelope, std::move(origin),
                                            2.0 * std::sqrt(80.0) / sigma_, Tag::kCustom);
    }
  }
  throw Error("characteristic: unknown density");
}

void ReferenceDensity::sample_into(std::span<double> out, RandomStream& rng) const {
  require(static_cast<int>(out.size()) == d_, "sample: dimension mismatch");
  switch (kind_) {
    case DensityKind::kUniformBall: {
      const auto dir = random_unit(d_, rng);
      const double r = radius_ * std::pow(rng.uniform(), 1.0 / d_);
      for (int c = 0; c < d_; ++c) out[c] = r * dir[c];
      return;
    }
    case DensityKind::kTruncatedGaussian: {
      const auto dir = random_unit(d_, rng);
      const double u = rng.uniform_pos() * truncated_mass_;
      const double r =
          sigma_ * std::sqrt(2.0 * boost::math::gamma_p_inv(0.5 * d_, std::min(u, 1.0)));
      for (int c = 0; c < d_; ++c) out[c] = std::min(r, radius_) * dir[c];
      return;
    }
    case DensityKind::kTwoPoint: {
      std::fill(out.begin(), out.end(), 0.0);
      out[axis_] = rng.uniform() < 0.5 ? shift_ : -shift_;
      return;
    }
    case DensityKind::kBimodal: {
      const double centre = rng.uniform() < 0.5 ? shift_ : -shift_;
      for (int c = 0; c < d_; ++c) out[c] = sigma_ * rng.normal();
      out[axis_] += centre;
      return;
    }
    case DensityKind::kGaussian:
      for (int c = 0; c < d_; ++c) out[c] = sigma_ * rng.normal();
      return;
  }
}

Velocity ReferenceDensity::sample(RandomStream& rng) const {
  Velocity v(d_);
  sample_into(v, rng);
  return v;
}

ParticleState sample_tensorized(const ReferenceDensity& f0, std::size_t n, RandomStream& rng) {
  require(n >= 1, "sample_tensorized: need N >= 1");
  const int d = f0.dimension();
  std::vector<double> flat(n * d);
  for (std::size_t i = 0; i < n; ++i) f0.sample_into({flat.data() + i * d, std::size_t(d)}, rng);
  return ParticleState(d, std::move(flat));
}

bool project_to_sphere(std::span<double> flat, int d, double energy) {
  require(d >= 1 && flat.size() % d == 0, "project_to_sphere: size not a multiple of d");
  require(energy > 0.0, "project_to_sphere: energy must be positive");
  const std::size_t n = flat.size() / d;
  Velocity mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < d; ++c) mean[c] += flat[i * d + c];
  }
  for (double& m : mean) m /= static_cast<double>(n);
  KahanSum e;
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < d; ++c) {
      flat[i * d + c] -= mean[c];
      e.add(flat[i * d + c] * flat[i * d + c]);
    }
  }
  const double centred = e.value() / static_cast<double>(n);
  if (!(centred >= 1e-6 * energy)) return false;
  const double scale = std::sqrt(energy / centred);
  for (double& x : flat) x *= scale;
  return true;
}

ParticleState sample_sphere_conditioned(const ReferenceDensity& f0, std::size_t n, double energy,
                                        RandomStream& rng) {
  require(n >= 2, "sample_sphere_conditioned: need N >= 2");
  for (int attempt = 0; attempt <= 100; ++attempt) {
    auto state = sample_tensorized(f0, n, rng);
    std::vector<double> flat(state.data().begin(), state.data().end());
    if (project_to_sphere(flat, f0.dimension(), energy)) {
      return ParticleState(f0.dimension(), std::move(flat));
    }
  }
  throw Error("sample_sphere_conditioned: more than 100 consecutive degenerate draws from " +
              f0.name());
}

ParticleState sample_uniform_sphere(std::size_t n, double energy, int d, RandomStream& rng) {
  require(n >= 2 && d >= 1, "sample_uniform_sphere: need N >= 2 and d >= 1");
  std::vector<double> flat(n * d);
  for (int attempt = 0; attempt <= 100; ++attempt) {
    for (double& x : flat) x = rng.normal();
    if (project_to_sphere(flat, d, energy)) return ParticleState(d, std::move(flat));
  }
  throw Error("sample_uniform_sphere: degenerate draws");
}

BaselineEstimate chaos_baseline(const ReferenceDensity& f0, std::size_t n, std::size_t replicas,
                                const BaselineOptions& options) {
  require(n >= 1 && replicas >= 1, "chaos_baseline: need N >= 1 and M >= 1");
  BaselineEstimate out;
  out.samples.assign(replicas, 0.0);
  const auto cf = options.metric == BaselineMetric::kSobolevSquared
                      ? std::optional(f0.characteristic())
                      : std::nullopt;
  jump::parallel_for(replicas, options.threads, [&](std::size_t r) {
    RandomStream rng(options.seed, r, Channel::kInitial);
    const auto mu = metrics::WeightedPointMeasure::empirical(sample_tensorized(f0, n, rng));
    if (options.metric == BaselineMetric::kWasserstein1) {
      RandomStream ref(options.seed, r, Channel::kReference);
      const auto nu = metrics::WeightedPointMeasure::empirical(sample_tensorized(f0, n, ref));
      out.samples[r] = metrics::wasserstein_empirical(mu, nu, 1);
    } else {
      out.samples[r] = metrics::sobolev_neg_norm_squared(mu, *cf, options.sobolev_order);
    }
  });
  out.mean = mean(out.samples);
  out.std_error = replicas > 1 ? std::sqrt(variance(out.samples) / replicas) : 0.0;
  return out;
}

}  // namespace kac::sampling
