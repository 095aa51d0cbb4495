// Copyright 2026 The kacchaos Authors
// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "kac/error.hpp"
#include "kac/limit.hpp"
#include "kac/metrics.hpp"
#include "kac/numerics.hpp"
#include "kac/sampling.hpp"

using namespace kac;
using namespace kac::limit;

namespace {

constexpr double kPi = std::numbers::pi;

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Isotropic two-Gaussian mixture with mean square speed E in R^d.
GridDensity gaussian_mixture(double weight, double var1, double energy, int d) {
  const double var2 = (energy / d - weight * var1) / (1.0 - weight);
  REQUIRE(var2 > 0.0);
  const double var = energy / d;
  return GridDensity::radial_fourier(
      [=](double r) {
        return weight * std::exp(-0.5 * var1 * r * r) +
               (1.0 - weight) * std::exp(-0.5 * var2 * r * r);
      },
      d, 16.0 / std::sqrt(var), 512);
}

// Fourier transform of the uniform law on the ball of radius R in R^3.
double ball_transform(double r) {
  if (r < 1e-3) return 1.0 - r * r / 10.0 + std::pow(r, 4) / 280.0;
  return 3.0 * (std::sin(r) - r * std::cos(r)) / (r * r * r);
}

// Anisotropic centred Gaussian: variance a across the axis, c along it.
GridDensity anisotropic_gaussian(double a, double c, int degree = 12) {
  return GridDensity::axisymmetric_fourier(
      [=](double rho, double mu) {
        return std::exp(-0.5 * rho * rho * (a * (1.0 - mu * mu) + c * mu * mu));
      },
      degree, 16.0, 256);
}

}  // namespace

TEST_CASE("maxwellian density on the default grid") {
  for (int d : {1, 2, 3}) {
    const GridDensity g = maxwellian_density(static_cast<double>(d), d);
    CHECK(g.representation() == Representation::kVelocityGrid);
    const std::size_t c = (g.nodes() - 1) / 2;
    std::size_t flat = 0;
    for (int a = 0; a < d; ++a) flat = flat * g.nodes() + c;
    CHECK(std::abs(g.values()[flat] - std::pow(2.0 * kPi, -0.5 * d)) < 1e-12);
    CHECK(std::abs(g.mass() - 1.0) < 1e-8);
    CHECK(std::abs(g.energy() - d) < 1e-6);
  }
  const GridDensity g = maxwellian_density(2.5, 3);
  CHECK(std::abs(g.energy() - 2.5) < 1e-6);
  CHECK(std::abs(g.extent() - 8.0 * std::sqrt(2.5 / 3.0)) < 1e-14);
  for (double p : g.momentum()) CHECK(std::abs(p) < 1e-12);
  CHECK_THROWS_AS(maxwellian_density(0.0, 3), Error);
}

TEST_CASE("fourier forms carry mass and energy") {
  const GridDensity f = maxwellian_fourier(2.0, 3);
  CHECK(f.mass() == 1.0);
  CHECK(std::abs(f.energy() - 2.0) < 1e-8);
  CHECK(std::abs(f.extent() - 16.0 / std::sqrt(2.0 / 3.0)) < 1e-12);
  CHECK(f.nodes() == 512);
  const std::vector<double> xi{0.3, -0.2, 0.5};
  CHECK(std::abs(f.fourier_value(xi) - std::exp(-(1.0 / 3.0) * 0.38)) < 1e-9);

  const GridDensity aniso = anisotropic_gaussian(0.5, 2.0);
  CHECK(std::abs(aniso.energy() - 3.0) < 1e-7);
  const auto m = fourier_moments(aniso, 2);
  CHECK(std::abs(m.at({0, 0, 2}) - 2.0) < 1e-7);
  CHECK(std::abs(m.at({2, 0, 0}) - 0.5) < 1e-7);
  CHECK(std::abs(m.at({1, 0, 1})) < 1e-14);
  CHECK(std::abs(aniso.fourier_value(std::vector<double>{0.4, 0.1, 0.7}) -
                 std::exp(-0.5 * (0.5 * 0.17 + 2.0 * 0.49))) < 1e-8);

  const GridDensity full = GridDensity::full_fourier(
      [](std::span<const double> x) { return std::exp(-0.5 * (x[0] * x[0] + 2.0 * x[1] * x[1])); },
      2, 6.0, 121);
  const auto mf = fourier_moments(full, 2);
  CHECK(std::abs(mf.at({2, 0}) - 1.0) < 1e-4);
  CHECK(std::abs(mf.at({0, 2}) - 2.0) < 5e-4);
  CHECK(std::abs(mf.at({1, 1})) < 1e-10);
  CHECK_THROWS_AS(GridDensity::full_fourier([](auto) { return 1.0; }, 2, 4.0, 40), Error);
}

TEST_CASE("gain operator: equilibrium, unit transform and mass") {
  for (int d : {2, 3}) {
    for (const auto& kernel :
         {CollisionKernel::grad_maxwell(d), CollisionKernel::true_maxwell(d, 0.05)}) {
      const double mass = kernel.angular_mass();
      const GridDensity gamma = maxwellian_fourier(static_cast<double>(d), d);
      const GridDensity gain = qhat_gain(gamma, kernel);
      double worst = 0.0;
      for (std::size_t k = 0; k < gamma.nodes(); ++k) {
        worst = std::max(worst, std::abs(gain.values()[k] - mass * gamma.values()[k]));
      }
      CHECK(worst < 1e-6);
      CHECK(std::abs(gain.values()[0] - mass) < 1e-12);
      CHECK_FALSE(gain.truncated);

      const GridDensity one = GridDensity::radial_fourier([](double) { return 1.0; }, d, 10.0, 64);
      const GridDensity g1 = qhat_gain(one, kernel);
      for (double v : g1.values()) CHECK(std::abs(v - mass) < 1e-12);
    }
  }
  CHECK(std::abs(CollisionKernel::grad_maxwell(3).angular_mass() - 2.0 * kPi) < 1e-12);

  // Axisymmetric layout.
  const auto gmm = CollisionKernel::grad_maxwell(3);
  const GridDensity iso = anisotropic_gaussian(1.0, 1.0);
  const GridDensity g = qhat_gain(iso, gmm);
  const std::size_t n = iso.nodes();
  double worst = 0.0;
  for (std::size_t i = 0; i < g.values().size(); ++i) {
    worst = std::max(worst, std::abs(g.values()[i] - 2.0 * kPi * iso.values()[i]));
  }
  CHECK(worst < 1e-6);
  CHECK(std::abs(g.values()[0] - 2.0 * kPi) < 1e-12);
  for (std::size_t m = 1; m < g.modes(); ++m) CHECK(std::abs(g.values()[m * n]) < 1e-12);

  // Full grid: F = 1 is reproduced, the Gaussian up to linear interpolation.
  const GridDensity one = GridDensity::full_fourier([](auto) { return 1.0; }, 2, 4.0, 21);
  const GridDensity g1 = qhat_gain(one, CollisionKernel::grad_maxwell(2));
  CHECK(g1.truncated);
  for (std::size_t i = 0; i < g1.values().size(); ++i) {
    const double x = one.coordinate(i / 21), y = one.coordinate(i % 21);
    if (std::hypot(x, y) <= 4.0) CHECK(std::abs(g1.values()[i] - kPi) < 1e-11);
  }
  const GridDensity gauss2 = GridDensity::full_fourier(
      [](std::span<const double> x) { return std::exp(-0.5 * (x[0] * x[0] + x[1] * x[1])); }, 2,
      8.0, 81);
  const GridDensity g2 = qhat_gain(gauss2, CollisionKernel::grad_maxwell(2));
  double full_worst = 0.0;
  for (std::size_t i = 0; i < g2.values().size(); ++i) {
    full_worst = std::max(full_worst, std::abs(g2.values()[i] - kPi * gauss2.values()[i]));
  }
  CHECK(full_worst < 5e-2);
  CHECK_THROWS_AS(qhat_gain(maxwellian_fourier(1.0, 3), CollisionKernel::hard_spheres(3)), Error);
}

TEST_CASE("evolve_fourier: equilibrium, energy and stability bound") {
  const auto kernel = CollisionKernel::grad_maxwell(3);
  const GridDensity gamma = maxwellian_fourier(3.0, 3);
  const auto traj = evolve_fourier(gamma, kernel, 2.0, 0.05, 10);
  CHECK(traj.times.size() == 5);
  CHECK(std::abs(traj.times.back() - 2.0) < 1e-12);
  for (const auto& s : traj.states) {
    CHECK(max_abs_diff(s.values(), gamma.values()) < 1e-6);
    CHECK(s.values()[0] == 1.0);
  }

  // Uniform ball of radius 2: energy 3 R^2 / 5.
  const GridDensity ball =
      GridDensity::radial_fourier([](double r) { return ball_transform(2.0 * r); }, 3, 40.0, 1024);
  const double e0 = ball.energy();
  CHECK(std::abs(e0 - 12.0 / 5.0) < 1e-7);
  const auto bt = evolve_fourier(ball, kernel, 3.0, 0.05, 20);
  for (const auto& s : bt.states) {
    CHECK(std::abs(s.energy() - e0) < 1e-6 * (1.0 + s.time));
  }
  // Relaxes toward the Maxwellian with the same energy.
  const GridDensity target =
      GridDensity::radial_fourier([](double r) { return std::exp(-0.4 * r * r); }, 3, 40.0, 1024);
  CHECK(fourier_grid_distance(bt.states.back(), target, 2.0) <
        0.05 * fourier_grid_distance(ball, target, 2.0));

  CHECK_THROWS_AS(evolve_fourier(gamma, kernel, 1.0, 0.5 / (2.0 * kPi) * 1.01), Error);
  CHECK_NOTHROW(evolve_fourier(gamma, kernel, 0.1, 0.5 / (2.0 * kPi)));
  CHECK_THROWS_AS(evolve_fourier(gamma, CollisionKernel::hard_spheres(3), 1.0, 0.01), Error);
}

TEST_CASE("evolve_fourier contracts the Fourier distance of matched-energy data") {
  const auto kernel = CollisionKernel::grad_maxwell(3);
  RandomStream rng(17, 0, Channel::kAuxiliary);
  for (int pair = 0; pair < 3; ++pair) {
    const double w1 = 0.2 + 0.6 * rng.uniform();
    const double w2 = 0.2 + 0.6 * rng.uniform();
    const GridDensity f = gaussian_mixture(w1, 0.2 + 0.6 * rng.uniform(), 3.0, 3);
    const GridDensity g = gaussian_mixture(w2, 0.1 + 0.5 * rng.uniform(), 3.0, 3);
    const auto tf = evolve_fourier(f, kernel, 2.0, 0.05);
    const auto tg = evolve_fourier(g, kernel, 2.0, 0.05);
    double previous = fourier_grid_distance(f, g, 2.0);
    const double initial = previous;
    CHECK(initial > 1e-3);
    for (std::size_t i = 1; i < tf.states.size(); ++i) {
      const double now = fourier_grid_distance(tf.states[i], tg.states[i], 2.0);
      CHECK(now <= previous + 1e-3);
      previous = now;
    }
    CHECK(previous < initial);
  }
}

TEST_CASE("axisymmetric solver: energy, isotropic consistency and traceless decay") {
  const auto kernel = CollisionKernel::grad_maxwell(3);
  const GridDensity aniso = anisotropic_gaussian(0.7, 1.6);
  const auto traj = evolve_fourier(aniso, kernel, 1.0, 0.05, 4);
  std::vector<double> t, log_t;
  for (const auto& s : traj.states) {
    CHECK(std::abs(s.energy() - 3.0) < 1e-6);
    const auto m = fourier_moments(s, 2);
    const double traceless = m.at({0, 0, 2}) - m.at({2, 0, 0});
    t.push_back(s.time);
    log_t.push_back(std::log(traceless));
  }
  // The traceless second moment of Maxwell molecules in R^3 decays at rate pi.
  CHECK(std::abs(fitted_slope(t, log_t) + kPi) < 1e-4);

  // The l = 0 mode of isotropic data follows the radial solver.
  const GridDensity mix = gaussian_mixture(0.4, 0.3, 3.0, 3);
  const GridDensity axis = GridDensity::axisymmetric_fourier(
      [&](double rho, double) { return mix.mode(0, rho); }, 4, mix.extent(), mix.nodes());
  const auto ta = evolve_fourier(axis, kernel, 0.5, 0.05);
  const auto tr = evolve_fourier(mix, kernel, 0.5, 0.05);
  const std::size_t n = mix.nodes();
  CHECK(max_abs_diff(ta.states.back().values().subspan(0, n), tr.states.back().values()) < 1e-10);
  CHECK(std::abs(ta.states.back().values()[n + 7]) < 1e-10);
}

TEST_CASE("inverse transform recovers the Maxwellian") {
  for (int d : {1, 2, 3}) {
    const GridDensity f = maxwellian_fourier(static_cast<double>(d), d);
    const GridDensity v = to_velocity_grid(f, 8.0, 33);
    const GridDensity exact = maxwellian_density(static_cast<double>(d), d, 33);
    CHECK(max_abs_diff(v.values(), exact.values()) < 1e-9);
  }
  // Strong anisotropy needs many Legendre modes at large |xi|.
  const GridDensity aniso = anisotropic_gaussian(0.5, 2.0, 40);
  const InverseTransform inverse(aniso, 8.0, 161);
  const PolarDensity p = inverse.apply(aniso);
  for (double r : {0.0, 0.4, 1.1, 2.5}) {
    for (double mu : {0.0, 0.3, 1.0}) {
      const double perp2 = r * r * (1.0 - mu * mu), par2 = r * r * mu * mu;
      const double exact = std::pow(2.0 * kPi, -1.5) / std::sqrt(0.5 * 0.5 * 2.0) *
                           std::exp(-0.5 * (perp2 / 0.5 + par2 / 2.0));
      CHECK(std::abs(p(r, mu) - exact) < 2e-4 * exact + 1e-9);
    }
  }
}

TEST_CASE("moment coefficients: conservation and the Maxwell rate") {
  const auto kernel = CollisionKernel::grad_maxwell(3);
  const auto c = moment_ode_coefficients(kernel, 3);
  const auto& idx = c.indices();
  for (std::size_t a = 0; a < idx.size(); ++a) {
    int order = 0;
    for (int x : idx[a]) order += x;
    if (order <= 1) CHECK(c.row(a).empty());
    if (order >= 2) CHECK(c.diagonal(idx[a]) < 0.0);
  }
  CHECK(std::abs(c.diagonal({1, 1, 0}) + kPi) < 1e-9);
  CHECK(std::abs(c.diagonal({0, 1, 1}) + kPi) < 1e-9);

  // The energy row vanishes for arbitrary moment data.
  RandomStream rng(5, 0, Channel::kAuxiliary);
  std::vector<double> m(idx.size()), out(idx.size());
  for (double& x : m) x = rng.normal();
  m[0] = 1.0;
  c.rhs(m, out);
  double energy_rate = 0.0;
  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (int axis = 0; axis < 3; ++axis) {
      std::vector<int> e(3, 0);
      e[axis] = 2;
      if (idx[a] == e) energy_rate += out[a];
    }
  }
  CHECK(std::abs(energy_rate) < 1e-9);
  for (std::size_t a = 0; a < 4; ++a) CHECK(out[a] == 0.0);

  // Triangularity: each row couples orders summing to its own.
  for (std::size_t a = 0; a < idx.size(); ++a) {
    int order = 0;
    for (int x : idx[a]) order += x;
    for (const auto& term : c.row(a)) {
      int ob = 0, og = 0;
      for (int x : idx[term.beta]) ob += x;
      for (int x : idx[term.gamma]) og += x;
      CHECK(ob + og == order);
    }
  }

  const auto c2 = moment_ode_coefficients(CollisionKernel::grad_maxwell(2), 2);
  CHECK(std::abs(c2.diagonal({1, 1}) + 0.5 * kPi) < 1e-9);
  CHECK_THROWS_AS(moment_ode_coefficients(CollisionKernel::hard_spheres(3), 2), Error);
}

TEST_CASE("moment ODE matches the spectral solver") {
  const auto kernel = CollisionKernel::grad_maxwell(3);
  const auto coeffs = moment_ode_coefficients(kernel, 3);

  const auto eq = evolve_moments(MomentVector::maxwellian(3.0, 3, 3), coeffs, 2.0, 0.05);
  for (const auto& s : eq.states) {
    CHECK(max_abs_diff(s.values(), eq.states.front().values()) < 1e-12);
  }

  const GridDensity aniso = anisotropic_gaussian(0.6, 1.8);
  const auto spectral = evolve_fourier(aniso, kernel, 2.0, 0.05, 5);
  const auto ode = evolve_moments(fourier_moments(aniso, 3), coeffs, 2.0, 0.05);
  for (std::size_t i = 0; i < spectral.states.size(); ++i) {
    const auto& s = spectral.states[i];
    const auto step = static_cast<std::size_t>(std::lround(s.time / 0.05));
    const auto ms = fourier_moments(s, 3);
    CHECK(ode.states[step].values()[0] == 1.0);
    CHECK(max_abs_diff(ms.values(), ode.states[step].values()) < 1e-4);
  }
}

TEST_CASE("moment vector bookkeeping") {
  const auto idx = moment_indices(3, 2);
  CHECK(idx.size() == 10);
  CHECK(idx[1] == std::vector<int>{1, 0, 0});
  CHECK(idx[4] == std::vector<int>{2, 0, 0});
  CHECK(idx[9] == std::vector<int>{0, 0, 2});
  CHECK(moment_indices(3, 3).size() == 20);
  const auto m = MomentVector::maxwellian(3.0, 3, 3);
  CHECK(m.at({0, 0, 0}) == 1.0);
  CHECK(m.at({2, 0, 0}) == doctest::Approx(1.0));
  CHECK(m.at({1, 1, 0}) == 0.0);
  CHECK_THROWS_AS(m.at({2, 2, 0}), Error);

  metrics::WeightedPointMeasure mu(2);
  mu.add(std::vector<double>{1.0, 2.0}, 0.5);
  mu.add(std::vector<double>{-1.0, 0.0}, 0.5);
  const auto mm = MomentVector::from_measure(mu, 2);
  CHECK(mm.at({1, 0}) == doctest::Approx(0.0));
  CHECK(mm.at({0, 1}) == doctest::Approx(1.0));
  CHECK(mm.at({1, 1}) == doctest::Approx(1.0));
  CHECK(mm.at({0, 2}) == doctest::Approx(2.0));
}

TEST_CASE("hard-spheres oracle") {
  const auto f0 = sampling::ReferenceDensity::uniform_ball(3, 1.0);
  OracleOptions opt;
  opt.particles = 1000;
  opt.replicas = 4;
  opt.seed = 9;
  const std::vector<double> checkpoints{0.0, 10.0};
  const auto oracle = hs_limit_oracle(f0, 1.0, 10.0, checkpoints, opt);
  CHECK(oracle.stream_seed != oracle.seed);
  CHECK(oracle.marginals.size() == 2);
  for (const auto& mu : oracle.marginals) {
    CHECK(mu.size() == 4000);
    double e = 0.0;
    for (std::size_t a = 0; a < mu.size(); ++a) e += mu.weight(a) * std::pow(kac::norm(mu.atom(a)), 2);
    CHECK(std::abs(e - 1.0) < 1e-9);
  }
  // At time 0 the samples sit in the initial ball (rescaled to energy 1).
  double r_max = 0.0;
  for (std::size_t a = 0; a < 4000; ++a) r_max = std::max(r_max, kac::norm(oracle.marginals[0].atom(a)));
  CHECK(r_max < 1.4);

  // At t = 10 the oracle is indistinguishable from the Maxwellian at W1.
  constexpr std::size_t kCloud = 400;
  const auto gauss = sampling::ReferenceDensity::gaussian(3, std::sqrt(1.0 / 3.0));
  auto maxwell_cloud = [&](std::uint64_t id) {
    RandomStream rng(123, id, Channel::kReference);
    return metrics::WeightedPointMeasure::empirical(sampling::sample_tensorized(gauss, kCloud, rng));
  };
  std::vector<double> floor;
  for (std::uint64_t r = 0; r < 8; ++r) {
    floor.push_back(metrics::wasserstein_empirical(maxwell_cloud(2 * r), maxwell_cloud(2 * r + 1), 1));
  }
  const auto& late = oracle.marginals[1];
  std::vector<double> sub;
  for (std::size_t a = 0; a < kCloud; ++a) {
    const auto x = late.atom(a * 10);
    sub.insert(sub.end(), x.begin(), x.end());
  }
  const double w = metrics::wasserstein_empirical(metrics::WeightedPointMeasure::empirical(3, sub),
                                                  maxwell_cloud(99), 1);
  CHECK(w < mean(floor) + 3.0 * std::sqrt(variance(floor)));
  // The start is far from the Maxwellian on the same scale.
  std::vector<double> early;
  for (std::size_t a = 0; a < kCloud; ++a) {
    const auto x = oracle.marginals[0].atom(a * 10);
    early.insert(early.end(), x.begin(), x.end());
  }
  CHECK(metrics::wasserstein_empirical(metrics::WeightedPointMeasure::empirical(3, early),
                                       maxwell_cloud(99), 1) > w);
}

TEST_CASE("grid serialization") {
  const GridDensity f = maxwellian_fourier(1.0, 2, 8);
  std::ostringstream csv, meta;
  write_grid_csv(csv, f);
  write_grid_metadata(meta, f);
  const std::string text = csv.str();
  CHECK(text.rfind("rho,value\n0,1\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 9);
  const auto j = nlohmann::json::parse(meta.str());
  CHECK(j["representation"] == "radial_fourier");
  CHECK(j["d"] == 2);
  CHECK(j["nodes"] == 8);

  std::ostringstream box;
  write_grid_csv(box, maxwellian_density(1.0, 2, 5));
  CHECK(box.str().rfind("v1,v2,value\n", 0) == 0);
  std::ostringstream axis;
  write_grid_csv(axis, anisotropic_gaussian(1.0, 2.0, 2));
  CHECK(axis.str().rfind("rho,degree,value\n", 0) == 0);
}
