// Copyright 2026 The kacchaos Authors
// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "kac/error.hpp"
#include "kac/metrics.hpp"
#include "kac/numerics.hpp"

using namespace kac;
using namespace kac::metrics;

namespace {

WeightedPointMeasure cloud(int d, std::vector<double> flat) {
  return WeightedPointMeasure::empirical(d, flat);
}

WeightedPointMeasure atoms1d(std::vector<std::pair<double, double>> xs) {
  WeightedPointMeasure h(1);
  for (auto [x, w] : xs) h.add(std::vector<double>{x}, w);
  return h;
}

WeightedPointMeasure random_cloud(int d, std::size_t n, RandomStream& rng, double half_width) {
  std::vector<double> flat(n * d);
  for (double& x : flat) x = half_width * (2.0 * rng.uniform() - 1.0);
  return cloud(d, flat);
}

// Brute-force minimum over permutations.
double brute_force_w(const WeightedPointMeasure& a, const WeightedPointMeasure& b, int q) {
  std::vector<std::size_t> perm(a.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = 1e300;
  do {
    double cost = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) {
      double d2 = 0.0;
      for (int c = 0; c < a.dimension(); ++c) {
        const double diff = a.atom(i)[c] - b.atom(perm[i])[c];
        d2 += diff * diff;
      }
      cost += q == 1 ? std::sqrt(d2) : d2;
    }
    best = std::min(best, cost / perm.size());
  } while (std::next_permutation(perm.begin(), perm.end()));
  return q == 1 ? best : std::sqrt(best);
}

// Dense linear scan of |hat h(xi)| / xi^s on (0, xi_max] in d = 1.
double dense_sup_1d(const WeightedPointMeasure& h, double s, double xi_max, int n) {
  double best = 0.0;
  for (int k = 1; k <= n; ++k) {
    const double xi = xi_max * k / n;
    const std::vector<double> v{xi};
    best = std::max(best, std::abs(h.transform(v)) / std::pow(xi, s));
  }
  return best;
}

// Direct quadrature of int_R |hat h|^2 |xi|^{-2s} in d = 1, no closed forms.
template <class F>
double quadrature_sobolev_1d(F&& hhat_sq, double s, double tail_level, double length) {
  std::vector<double> edges;
  for (int k = 0; k <= 40; ++k) edges.push_back(1e-9 * std::pow(1e9 * 0.05, k / 40.0));
  for (double x = 0.1; x <= length + 1e-12; x += 0.05) edges.push_back(x);
  const auto rule = composite_gauss(edges, 10);
  KahanSum sum;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    sum.add(rule.weights[k] * hhat_sq(rule.nodes[k]) * std::pow(rule.nodes[k], -2.0 * s));
  }
  const double tail = tail_level * std::pow(length, 1.0 - 2.0 * s) / (2.0 * s - 1.0);
  return 2.0 * (sum.value() + tail);
}

}  // namespace

TEST_CASE("wasserstein worked examples") {
  const auto mu = cloud(1, {0, 1});
  const auto nu = cloud(1, {0, 2});
  CHECK(wasserstein_empirical(mu, nu, 1) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(wasserstein_empirical(mu, nu, 2) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
  const auto a = cloud(2, {0, 0, 1, 0});
  const auto b = cloud(2, {0, 1, 1, 1});
  CHECK(wasserstein_empirical(a, b, 1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(wasserstein_empirical(a, cloud(2, {0, 0}), 1), Error);
  CHECK_THROWS_AS(wasserstein_empirical(mu, nu, 3), Error);
  // Weighted one-dimensional case: 0.3 at 0 and 0.7 at 1 against 0.5.
  CHECK(wasserstein_empirical(atoms1d({{0, 0.3}, {1, 0.7}}), atoms1d({{0.5, 1.0}}), 1) ==
        doctest::Approx(0.5));
}

TEST_CASE("assignment solver matches brute force") {
  RandomStream rng(2, 0);
  for (int trial = 0; trial < 40; ++trial) {
    const int d = 1 + trial % 3;
    const std::size_t n = 2 + trial % 6;
    const auto a = random_cloud(d, n, rng, 2.0);
    const auto b = random_cloud(d, n, rng, 2.0);
    for (int q : {1, 2}) {
      CHECK(assignment_wasserstein(a, b, q) ==
            doctest::Approx(brute_force_w(a, b, q)).epsilon(1e-12));
    }
  }
}

TEST_CASE("one-dimensional quantile and assignment formulas agree") {
  RandomStream rng(3, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = random_cloud(1, 60, rng, 3.0);
    const auto b = random_cloud(1, 60, rng, 3.0);
    for (int q : {1, 2}) {
      CHECK(std::abs(wasserstein_empirical(a, b, q) - assignment_wasserstein(a, b, q)) <= 1e-12);
    }
  }
}

TEST_CASE("wasserstein metric axioms and translation invariance") {
  RandomStream rng(4, 0);
  for (int trial = 0; trial < 30; ++trial) {
    const int d = trial % 2 == 0 ? 1 : 3;
    const auto a = random_cloud(d, 25, rng, 1.0);
    const auto b = random_cloud(d, 25, rng, 1.0);
    const auto c = random_cloud(d, 25, rng, 1.0);
    const double ab = wasserstein_empirical(a, b, 1);
    CHECK(ab >= 0.0);
    CHECK(ab == doctest::Approx(wasserstein_empirical(b, a, 1)).epsilon(1e-12));
    CHECK(wasserstein_empirical(a, a, 1) <= 1e-12);
    CHECK(ab <= wasserstein_empirical(a, c, 1) + wasserstein_empirical(c, b, 1) + 1e-12);
    // Shift both clouds by the same vector.
    std::vector<double> fa(a.points().begin(), a.points().end());
    std::vector<double> fb(b.points().begin(), b.points().end());
    for (std::size_t k = 0; k < fa.size(); ++k) {
      fa[k] += 0.7 * (k % d + 1);
      fb[k] += 0.7 * (k % d + 1);
    }
    CHECK(wasserstein_empirical(cloud(d, fa), cloud(d, fb), 2) ==
          doctest::Approx(wasserstein_empirical(a, b, 2)).epsilon(1e-10));
  }
}

TEST_CASE("fourier norm worked examples against a dense-grid oracle") {
  const auto dipole = atoms1d({{1, 1}, {-1, -1}});
  CHECK(fourier_norm(dipole, 1.0) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(fourier_norm(dipole, 1.0) == doctest::Approx(dense_sup_1d(dipole, 1.0, 20, 200000)).epsilon(1e-4));
  const auto second = atoms1d({{1, 1}, {-1, 1}, {0, -2}});
  CHECK(fourier_norm(second, 2.0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(fourier_norm(WeightedPointMeasure(1), 1.0) == 0.0);
  CHECK_THROWS_AS(fourier_norm(atoms1d({{1, 1}}), 1.0), Error);
  CHECK_THROWS_AS(fourier_norm(atoms1d({{1, 1}, {0, -1}}), 1.5), Error);

  RandomStream rng(5, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const auto f = random_cloud(1, 8, rng, 3.0);
    const auto g = random_cloud(1, 8, rng, 3.0);
    const auto h = f.minus(g);
    for (double s : {0.5, 1.0}) {
      const double oracle = dense_sup_1d(h, s, 40, 400000);
      CHECK(fourier_norm(h, s) >= 0.99 * oracle);
      CHECK(fourier_norm(h, s) <= 1.01 * oracle);
    }
  }
}

TEST_CASE("fourier norm of a point measure minus a characteristic function") {
  // Two-point law represented both ways gives the same distance.
  const auto cf = CharacteristicFunction::two_point(1, 1.0);
  const auto mu = atoms1d({{0.5, 0.5}, {-1.0, 0.5}});
  const auto direct = mu.minus(atoms1d({{1, 0.5}, {-1, 0.5}}));
  CHECK(fourier_norm(mu, cf, 0.5) == doctest::Approx(fourier_norm(direct, 0.5)).epsilon(1e-12));
  const std::vector<double> xi{0.3};
  CHECK(std::abs(cf(xi) - std::cos(0.3)) < 1e-15);
}

TEST_CASE("collision increments shrink quadratically in the deviation angle") {
  const std::vector<double> v{1.0, 0.2, -0.4}, w{-0.6, 0.8, 0.1};
  Velocity u(3);
  for (int c = 0; c < 3; ++c) u[c] = v[c] - w[c];
  const double un = norm(u);
  for (double& x : u) x /= un;
  // Orthonormal partner of u.
  Velocity e{-u[1], u[0], 0.0};
  const double en = norm(e);
  for (double& x : e) x /= en;
  auto increment = [&](double theta) {
    Velocity sigma(3);
    for (int c = 0; c < 3; ++c) sigma[c] = std::cos(theta) * u[c] + std::sin(theta) * e[c];
    const auto [vs, ws] = collide_pair(v, w, sigma);
    WeightedPointMeasure h(3);
    h.add(v, 1.0);
    h.add(w, 1.0);
    h.add(vs, -1.0);
    h.add(ws, -1.0);
    return fourier_norm(h, 2.0);
  };
  for (double theta : {0.4, 0.2, 0.1, 0.05}) {
    const double ratio = increment(theta / 2) / increment(theta);
    CHECK(ratio <= 0.6);
  }
}

TEST_CASE("modified fourier norm") {
  const auto second = atoms1d({{1, 1}, {-1, 1}, {0, -2}});
  CHECK(toscani_modified_norm(second, 2) ==
        doctest::Approx(fourier_norm(second, 2.0)).epsilon(1e-9));
  // Unit point mass at the origin, k = 2: the compensator is chi, so the
  // value is 1 + sup (1 - chi(r)) / r^2, scanned directly.
  const auto delta = atoms1d({{0.0, 1.0}});
  double oracle = 0.0;
  for (int k = 0; k <= 200000; ++k) {
    const double r = 1.0 + 4.0 * k / 200000.0;
    oracle = std::max(oracle, (1.0 - cutoff(r)) / (r * r));
  }
  CHECK(toscani_modified_norm(delta, 2) == doctest::Approx(1.0 + oracle).epsilon(1e-4));
  RandomStream rng(6, 0);
  for (int trial = 0; trial < 20; ++trial) {
    WeightedPointMeasure h(2);
    for (int a = 0; a < 4; ++a) {
      h.add(std::vector<double>{rng.normal(), rng.normal()}, rng.normal());
    }
    CHECK(toscani_modified_norm(h, 2) > 0.0);
  }
  CHECK(toscani_modified_norm(WeightedPointMeasure(2), 2) == 0.0);
}

TEST_CASE("cutoff function shape") {
  CHECK(cutoff(0.3) == 1.0);
  CHECK(cutoff(1.0) == 1.0);
  CHECK(cutoff(2.0) == 0.0);
  CHECK(cutoff(1.5) == doctest::Approx(0.5).epsilon(1e-12));
  double previous = 1.0;
  for (int k = 0; k <= 1000; ++k) {
    const double value = cutoff(1.0 + k / 1000.0);
    CHECK(value <= previous + 1e-15);
    previous = value;
  }
  // Derivative agrees with a central difference.
  const double r = 1.37, h = 1e-6;
  CHECK(cutoff_derivative(r) ==
        doctest::Approx((cutoff(r + h) - cutoff(r - h)) / (2 * h)).epsilon(1e-6));
  CHECK(cutoff_lipschitz_constant() >= 1.0);
}

TEST_CASE("negative sobolev norm examples and oracles") {
  CHECK(riesz_constant(1, 1.0) == doctest::Approx(M_PI));
  CHECK(riesz_constant(3, 2.0) == doctest::Approx(M_PI * M_PI));
  const auto dipole = atoms1d({{1, 1}, {-1, -1}});
  CHECK(sobolev_neg_norm(dipole, 1.0) == doctest::Approx(std::sqrt(4 * M_PI)).epsilon(1e-12));
  CHECK(sobolev_neg_norm(WeightedPointMeasure(1), 1.0) == 0.0);
  CHECK(sobolev_neg_norm(dipole.scaled(2.5), 1.0) ==
        doctest::Approx(2.5 * sobolev_neg_norm(dipole, 1.0)).epsilon(1e-10));
  CHECK_THROWS_AS(sobolev_neg_norm(dipole, 0.4), Error);
  CHECK_THROWS_AS(sobolev_neg_norm(atoms1d({{1, 1}}), 1.0), Error);

  RandomStream rng(7, 0);
  for (int trial = 0; trial < 4; ++trial) {
    const auto h = random_cloud(1, 5, rng, 2.0).minus(random_cloud(1, 5, rng, 2.0));
    double tail = 0.0;
    for (double w : h.weights()) tail += w * w;
    for (double s : {1.0, 1.25}) {
      const double oracle = quadrature_sobolev_1d(
          [&](double xi) { return std::norm(h.transform(std::vector<double>{xi})); }, s, tail,
          400.0);
      CHECK(sobolev_neg_norm_squared(h, s) == doctest::Approx(oracle).epsilon(1e-4));
    }
  }
}

TEST_CASE("three-dimensional sobolev norm against direct spherical quadrature") {
  WeightedPointMeasure h(3);
  h.add(std::vector<double>{0.5, 0, 0}, 1.0);
  h.add(std::vector<double>{0, 0.3, -0.2}, -1.0);
  const double s = 2.0;
  const auto dirs = grid_directions(3, 2000);
  std::vector<double> edges;
  for (int k = 0; k <= 30; ++k) edges.push_back(1e-6 * std::pow(1e6, k / 30.0));
  for (double x = 1.25; x <= 400.0; x += 0.25) edges.push_back(x);
  const auto rule = composite_gauss(edges, 8);
  KahanSum sum;
  std::vector<double> xi(3);
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    double avg = 0.0;
    for (const auto& e : dirs) {
      for (int c = 0; c < 3; ++c) xi[c] = rule.nodes[k] * e[c];
      avg += std::norm(h.transform(xi));
    }
    avg /= dirs.size();
    sum.add(rule.weights[k] * avg * std::pow(rule.nodes[k], 2.0 - 2.0 * s));
  }
  const double oracle = 4 * M_PI * (sum.value() + 2.0 / 400.0);
  CHECK(sobolev_neg_norm_squared(h, s) == doctest::Approx(oracle).epsilon(2e-3));
}

TEST_CASE("sobolev distance to a gaussian against direct quadrature") {
  const auto gauss = CharacteristicFunction::gaussian(1, 1.0);
  RandomStream rng(8, 0);
  std::vector<double> flat(20);
  for (double& x : flat) x = rng.normal();
  const auto mu = cloud(1, flat);
  double tail = 0.0;
  for (double w : mu.weights()) tail += w * w;
  const double oracle = quadrature_sobolev_1d(
      [&](double xi) {
        const std::vector<double> v{xi};
        return std::norm(mu.transform(v) - std::exp(-0.5 * xi * xi));
      },
      1.0, tail, 400.0);
  CHECK(sobolev_neg_norm_squared(mu, gauss, 1.0) == doctest::Approx(oracle).epsilon(1e-4));

  const auto wide = CharacteristicFunction::gaussian(1, 2.0);
  const double cf_oracle = quadrature_sobolev_1d(
      [](double xi) {
        const double diff = std::exp(-0.5 * xi * xi) - std::exp(-xi * xi);
        return diff * diff;
      },
      1.0, 0.0, 40.0);
  CHECK(sobolev_neg_norm(gauss, wide, 1.0) == doctest::Approx(std::sqrt(cf_oracle)).epsilon(1e-6));

  // Two-point law as a characteristic function equals the atomic route.
  const auto tp = CharacteristicFunction::two_point(1, 1.0);
  const auto nu = atoms1d({{0.2, 0.5}, {-0.7, 0.5}});
  CHECK(sobolev_neg_norm(nu, tp, 1.0) ==
        doctest::Approx(sobolev_neg_norm(nu.minus(atoms1d({{1, 0.5}, {-1, 0.5}})), 1.0)));
}

TEST_CASE("sobolev distance to a uniform ball in three dimensions") {
  const auto ball = CharacteristicFunction::uniform_ball(3, 1.0);
  const std::vector<double> xi{0.0, 0.0, 2.0};
  const double x = 2.0;
  CHECK(ball(xi).real() == doctest::Approx(3 * (std::sin(x) - x * std::cos(x)) / (x * x * x)));
  // Distance from a small centred cloud to the ball is finite and positive.
  const auto mu = cloud(3, {0.1, 0, 0, -0.1, 0, 0});
  const double value = sobolev_neg_norm(mu, ball, 2.0);
  CHECK(value > 0.0);
  CHECK(std::isfinite(value));
}

TEST_CASE("comparison suite") {
  const auto mu = cloud(1, {0, 1});
  const auto nu = cloud(1, {0, 2});
  const auto same = check_comparisons(mu, mu);
  CHECK(same.all_pass());
  const auto report = check_comparisons(mu, nu);
  CHECK(report.all_pass());
  CHECK(report.rows[0].item == "i.lower");
  CHECK(report.rows[0].lhs == doctest::Approx(0.5));
  CHECK(report.rows[0].rhs == doctest::Approx(std::sqrt(0.5)));

  RandomStream rng(9, 0);
  int violations = 0;
  ComparisonOptions only_ii;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(50);
    const auto f = random_cloud(1, n, rng, 3.0);
    const auto g = random_cloud(1, n, rng, 3.0);
    const double w1 = wasserstein_empirical(f, g, 1);
    for (double s : {0.5, 1.0}) {
      FourierGrid grid;
      grid.radii = 200;
      if (fourier_norm(f.minus(g), s, grid) > std::pow(2.0, 1.0 - s) * std::pow(w1, s) + 1e-12) {
        ++violations;
      }
    }
  }
  CHECK(violations == 0);

  for (int trial = 0; trial < 20; ++trial) {
    const int d = trial % 2 == 0 ? 1 : 3;
    const auto f = random_cloud(d, 20, rng, 3.0);
    const auto g = random_cloud(d, 20, rng, 3.0);
    const auto r = check_comparisons(f, g);
    CHECK(r.all_pass());
  }
  std::ostringstream csv;
  write_report_csv(csv, report);
  CHECK(csv.str().rfind("item,lhs,rhs,slack,pass\n", 0) == 0);
}
