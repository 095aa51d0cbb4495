// Copyright 2026 The kacchaos Authors
// SPDX-License-Identifier: Apache-2.0
#include <boost/math/special_functions/gamma.hpp>
#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "kac/error.hpp"
#include "kac/numerics.hpp"
#include "kac/sampling.hpp"

using namespace kac;
using namespace kac::sampling;

namespace {

// Kolmogorov-Smirnov statistic of xs against a CDF.
template <class F>
double ks_statistic(std::vector<double> xs, F&& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double c = cdf(xs[k]);
    d = std::max({d, std::abs((k + 1) / n - c), std::abs(c - k / n)});
  }
  return d;
}

double two_sample_ks(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
  }
  return d;
}

// Monte Carlo moment of |v|^p from n draws.
double sampled_moment(const ReferenceDensity& f, int p, int n, RandomStream& rng) {
  double s = 0.0;
  for (int k = 0; k < n; ++k) {
    const auto v = f.sample(rng);
    s += std::pow(norm(v), p);
  }
  return s / n;
}

}  // namespace

TEST_CASE("reference densities: closed-form moments match sampling") {
  RandomStream rng(1, 0);
  const std::vector<ReferenceDensity> library{
      ReferenceDensity::uniform_ball(3, 1.5), ReferenceDensity::truncated_gaussian(3, 1.0, 1.7),
      ReferenceDensity::two_point(2, 0.8), ReferenceDensity::bimodal(3, 1.2, 0.4),
      ReferenceDensity::gaussian(1, 0.9)};
  for (const auto& f : library) {
    for (int p : {2, 4, 6}) {
      const int n = 200000;
      const double exact = f.moment(p);
      const double sd = std::sqrt(std::max(f.moment(2 * p) - exact * exact, 1e-300));
      CHECK(std::abs(sampled_moment(f, p, n, rng) - exact) <= 4 * sd / std::sqrt(n) + 1e-12);
    }
    CHECK(f.energy() > 0.0);
  }
  CHECK(ReferenceDensity::uniform_ball(3, 1.0).moment(2) == doctest::Approx(0.6));
  CHECK(ReferenceDensity::gaussian(3, 1.0).moment(2) == doctest::Approx(3.0));
  CHECK(ReferenceDensity::bimodal(2, 1.0, 0.5).energy() == doctest::Approx(1.5));
  CHECK_THROWS_AS(ReferenceDensity::from_name("cauchy", 3, {}), Error);
  CHECK(ReferenceDensity::from_name("trunc_gauss", 3, {{"sigma", 2.0}, {"radius", 1.0}}).name() ==
        "trunc_gauss");
}

TEST_CASE("reference densities integrate to one and match their characteristic functions") {
  // Radial integration of the density in d = 3.
  for (const auto& f : {ReferenceDensity::uniform_ball(3, 1.5),
                        ReferenceDensity::truncated_gaussian(3, 1.0, 1.7),
                        ReferenceDensity::gaussian(3, 0.7)}) {
    const auto rule = gauss_legendre(200, 0.0, std::min(f.support_radius(), 10.0));
    double mass = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      const double r = rule.nodes[k];
      mass += rule.weights[k] * 4 * M_PI * r * r * f.density(std::vector<double>{r, 0, 0});
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
  }
  // Bimodal density in d = 2 on a grid.
  const auto bi = ReferenceDensity::bimodal(2, 1.0, 0.5);
  double mass = 0.0;
  for (int i = -400; i <= 400; ++i) {
    for (int j = -400; j <= 400; ++j) mass += bi.density(std::vector<double>{i * 0.01, j * 0.01});
  }
  CHECK(mass * 1e-4 == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_THROWS_AS(ReferenceDensity::two_point(1, 1.0).density(std::vector<double>{1.0}), Error);

  // Characteristic functions against Monte Carlo averages of cos(v . xi).
  RandomStream rng(2, 0);
  const std::vector<double> xi{0.7, -0.4, 0.2};
  for (const auto& f : {ReferenceDensity::uniform_ball(3, 1.5),
                        ReferenceDensity::truncated_gaussian(3, 1.0, 1.7),
                        ReferenceDensity::bimodal(3, 1.2, 0.4), ReferenceDensity::gaussian(3, 0.7),
                        ReferenceDensity::two_point(3, 0.9, 1)}) {
    const int n = 200000;
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += std::cos(dot(f.sample(rng), xi));
    CHECK(std::abs(f.characteristic()(xi).real() - s / n) < 4 / std::sqrt(double(n)));
    CHECK(std::abs(f.characteristic()(xi).imag()) < 1e-12);
  }
}

TEST_CASE("tensorized sampling") {
  RandomStream rng(3, 0);
  const auto tp = ReferenceDensity::two_point(1, 1.0);
  const auto s = sample_tensorized(tp, 4, rng);
  for (double x : s.data()) CHECK(std::abs(x) == 1.0);

  const auto g = ReferenceDensity::gaussian(1, 1.0);
  double sum = 0.0;
  const auto big = sample_tensorized(g, 100000, rng);
  for (double x : big.data()) sum += x;
  CHECK(std::abs(sum / 1e5) < 3 / std::sqrt(1e5));

  // Variance of (1/N) sum |v_i|^2 scales like 1/N.
  const auto ball = ReferenceDensity::uniform_ball(3, 1.0);
  std::vector<double> variances;
  for (std::size_t n : {10, 100, 1000}) {
    std::vector<double> energies;
    for (int r = 0; r < 2000; ++r) energies.push_back(sample_tensorized(ball, n, rng).energy());
    variances.push_back(variance(energies));
  }
  CHECK(variances[0] / variances[1] == doctest::Approx(10.0).epsilon(0.3));
  CHECK(variances[1] / variances[2] == doctest::Approx(10.0).epsilon(0.3));
}

TEST_CASE("sphere-conditioned sampling") {
  RandomStream rng(4, 0);
  const auto ball = ReferenceDensity::uniform_ball(3, 1.0);
  const SphereConstraint sphere(2.0, 3);
  for (int r = 0; r < 200; ++r) {
    const auto s = sample_sphere_conditioned(ball, 50, 2.0, rng);
    CHECK(sphere.satisfied_by(s, 1e-12));
  }
  // Two particles in d = 1 from the two-point law.
  const auto tp = ReferenceDensity::two_point(1, 1.0);
  for (int r = 0; r < 100; ++r) {
    const auto s = sample_sphere_conditioned(tp, 2, 4.0, rng);
    CHECK(std::abs(std::abs(s.data()[0]) - 2.0) < 1e-12);
    CHECK(std::abs(s.data()[0] + s.data()[1]) < 1e-12);
  }
  std::vector<double> flat{1.0, 1.0};
  CHECK_FALSE(project_to_sphere(flat, 1, 1.0));
  CHECK_THROWS_AS(sample_sphere_conditioned(ReferenceDensity::two_point(1, 0.0), 5, 1.0, rng),
                  Error);

  // Pooled marginal of N = 100 against f0 (matched energy): W1 below three
  // bootstrap standard errors of the W1 between independent f0 clouds.
  const auto f0 = ReferenceDensity::uniform_ball(1, std::sqrt(3.0));
  std::vector<double> pooled;
  for (int r = 0; r < 100; ++r) {
    const auto s = sample_sphere_conditioned(f0, 100, f0.energy(), rng);
    pooled.insert(pooled.end(), s.data().begin(), s.data().end());
  }
  const auto reference = sample_tensorized(f0, pooled.size(), rng);
  const double w = metrics::wasserstein_empirical(
      metrics::WeightedPointMeasure::empirical(1, pooled),
      metrics::WeightedPointMeasure::empirical(reference), 1);
  std::vector<double> floor;
  for (int b = 0; b < 50; ++b) {
    floor.push_back(metrics::wasserstein_empirical(
        metrics::WeightedPointMeasure::empirical(sample_tensorized(f0, pooled.size(), rng)),
        metrics::WeightedPointMeasure::empirical(sample_tensorized(f0, pooled.size(), rng)), 1));
  }
  CHECK(w < mean(floor) + 3 * std::sqrt(variance(floor)));
}

TEST_CASE("uniform sphere sampling") {
  RandomStream rng(5, 0);
  const SphereConstraint sphere(3.0, 3);
  for (int r = 0; r < 100; ++r) CHECK(sphere.satisfied_by(sample_uniform_sphere(40, 3.0, 3, rng), 1e-12));
  int positive = 0;
  for (int r = 0; r < 10000; ++r) {
    const auto s = sample_uniform_sphere(2, 1.0, 1, rng);
    CHECK(std::abs(std::abs(s.data()[0]) - 1.0) < 1e-12);
    if (s.data()[0] > 0) ++positive;
  }
  CHECK(std::abs(positive - 5000) <= 3 * 50);

  // Marginal of N = 10^4, E = 3: |v| is chi with three degrees of freedom.
  const auto big = sample_uniform_sphere(10000, 3.0, 3, rng);
  std::vector<double> speeds;
  for (std::size_t i = 0; i < big.size(); ++i) speeds.push_back(norm(big.velocity(i)));
  const double ks = ks_statistic(speeds, [](double r) {
    return boost::math::gamma_p(1.5, 0.5 * r * r);
  });
  CHECK(ks < 1.628 / std::sqrt(10000.0));

  // Exchangeability: first-coordinate marginal of particle 0 vs particle 7.
  std::vector<double> a, b;
  for (int r = 0; r < 4000; ++r) {
    const auto s = sample_uniform_sphere(8, 1.0, 2, rng);
    a.push_back(s.velocity(0)[0]);
    b.push_back(s.velocity(7)[0]);
  }
  CHECK(two_sample_ks(a, b) < 1.628 * std::sqrt(2.0 / 4000));
}

TEST_CASE("chaos baseline") {
  const auto point = ReferenceDensity::two_point(3, 0.0);
  CHECK(chaos_baseline(point, 20, 10).mean == 0.0);

  BaselineOptions sob;
  sob.metric = BaselineMetric::kSobolevSquared;
  sob.seed = 11;
  const auto g = ReferenceDensity::gaussian(1, 1.0);
  const auto e100 = chaos_baseline(g, 100, 600, sob);
  CHECK(std::abs(e100.mean - 2 * std::sqrt(M_PI) / 100) < 3 * e100.std_error);
  const auto e200 = chaos_baseline(g, 200, 600, sob);
  const double ratio_se = std::hypot(e100.std_error, 2 * e200.std_error);
  CHECK(std::abs(e100.mean - 2 * e200.mean) < 3 * ratio_se);

  // W1 baseline decays like N^{-1/2} in one dimension.
  const auto u = ReferenceDensity::uniform_ball(1, 1.0);
  std::vector<double> logn, logw;
  for (std::size_t n : {100, 1000, 10000}) {
    const auto est = chaos_baseline(u, n, 100, {BaselineMetric::kWasserstein1, 1.0, 3, 1});
    logn.push_back(std::log(double(n)));
    logw.push_back(std::log(est.mean));
  }
  const double slope = fitted_slope(logn, logw);
  CHECK(slope > -0.6);
  CHECK(slope < -0.4);
}
