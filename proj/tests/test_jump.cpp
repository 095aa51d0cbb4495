// Copyright 2026 The kacchaos Authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "kac/error.hpp"
#include "kac/jump.hpp"
#include "kac/numerics.hpp"

using namespace kac;
using namespace kac::jump;

namespace {

ParticleState gaussian_state(int d, std::size_t n, RandomStream& rng) {
  std::vector<double> flat(n * d);
  for (double& x : flat) x = rng.normal();
  return ParticleState(d, flat);
}

}  // namespace

TEST_CASE("total_rate worked examples") {
  const auto gmm = CollisionKernel::grad_maxwell(3);
  const auto hs = CollisionKernel::hard_spheres(3);
  CHECK(total_rate(ParticleState(3, {1, 0, 0, -1, 0, 0}), gmm) == doctest::Approx(M_PI));
  CHECK(total_rate(ParticleState(3, std::vector<double>(30, 0.5)), gmm) ==
        doctest::Approx(9 * M_PI));
  CHECK(total_rate(ParticleState(3, {1, 0, 0, -1, 0, 0}), hs) == doctest::Approx(2 * M_PI));
  CHECK_THROWS_AS(total_rate(ParticleState(3, {1, 0, 0}), gmm), Error);
}

TEST_CASE("GMM waiting times are exponential with rate pi for N = 2") {
  const auto gmm = CollisionKernel::grad_maxwell(3);
  ParticleState s(3, {1, 0, 0, -1, 0, 0});
  RandomStream rng(11, 0);
  const int n = 10000;
  double sum = 0.0, now = 0.0;
  for (int k = 0; k < n; ++k) {
    const double before = now;
    const auto ev = step(s, gmm, rng, now);
    REQUIRE(ev.has_value());
    now = ev->time;
    sum += now - before;
  }
  CHECK(std::abs(sum / n - 1 / M_PI) < 3 / (std::sqrt(static_cast<double>(n)) * M_PI));
}

TEST_CASE("single steps conserve energy and momentum for every kernel") {
  RandomStream rng(3, 0);
  const double eps = std::numeric_limits<double>::epsilon();
  for (const auto& kernel : {CollisionKernel::grad_maxwell(3), CollisionKernel::hard_spheres(3),
                             CollisionKernel::true_maxwell(3, 0.2)}) {
    auto s = gaussian_state(3, 20, rng);
    for (int k = 0; k < 100; ++k) {
      const double e0 = s.recomputed_energy();
      const auto m0 = s.recomputed_momentum();
      REQUIRE(step(s, kernel, rng).has_value());
      CHECK(std::abs(s.recomputed_energy() - e0) <= 16 * eps * e0);
      const auto m1 = s.recomputed_momentum();
      for (int c = 0; c < 3; ++c) CHECK(std::abs(m1[c] - m0[c]) <= 16 * eps * std::sqrt(e0));
    }
  }
}

TEST_CASE("hard-sphere pair weights follow relative speeds") {
  // |v1 - v2| = 2, |v1 - v3| = 1, |v2 - v3| = 1: pair (0,1) has weight 1/2.
  const auto hs = CollisionKernel::hard_spheres(3);
  const ParticleState start(3, {1, 0, 0, -1, 0, 0, 0, 0, 0});
  RandomStream rng(17, 0);
  const int n = 10000;
  int hits = 0;
  for (int k = 0; k < n; ++k) {
    ParticleState s = start;
    const auto ev = step(s, hs, rng);
    if (ev->i == 0 && ev->j == 1) ++hits;
  }
  CHECK(std::abs(hits - n / 2) <= 3 * std::sqrt(n * 0.25));

  // The stateful simulator in both modes agrees with the same law.
  for (auto mode : {PairSampling::kExactTable, PairSampling::kRejection}) {
    int hit = 0;
    for (int k = 0; k < n; ++k) {
      Simulator sim(start, hs, RandomStream(23, k), mode);
      const auto ev = sim.next();
      if (ev->i == 0 && ev->j == 1) ++hit;
    }
    CHECK(std::abs(hit - n / 2) <= 3 * std::sqrt(n * 0.25));
  }
}

TEST_CASE("rate table stays consistent through many updates") {
  RandomStream rng(8, 0);
  const auto hs = CollisionKernel::hard_spheres(3);
  Simulator sim(gaussian_state(3, 40, rng), hs, RandomStream(8, 1), PairSampling::kExactTable);
  for (int k = 0; k < 5000; ++k) sim.next();
  const RateTable fresh(sim.state(), hs);
  CHECK(total_rate(sim.state(), hs) ==
        doctest::Approx(fresh.total() * hs.angular_mass() / 40).epsilon(1e-9));
}

TEST_CASE("hard-sphere modes give matching collision rates") {
  RandomStream rng(31, 0);
  const auto hs = CollisionKernel::hard_spheres(3);
  const auto start = gaussian_state(3, 32, rng);
  const std::vector<double> cps{1.0};
  std::vector<double> exact, rejection;
  for (int r = 0; r < 300; ++r) {
    exact.push_back(static_cast<double>(
        simulate(start, hs, 1.0, cps, RandomStream(5, r), {PairSampling::kExactTable}).collisions));
    rejection.push_back(static_cast<double>(
        simulate(start, hs, 1.0, cps, RandomStream(6, r), {PairSampling::kRejection}).collisions));
  }
  const double se = std::sqrt(variance(exact) / 300 + variance(rejection) / 300);
  CHECK(std::abs(mean(exact) - mean(rejection)) < 4 * se);
}

TEST_CASE("absorbed hard-sphere states freeze") {
  const auto hs = CollisionKernel::hard_spheres(3);
  ParticleState s(3, std::vector<double>(12, 0.25));
  RandomStream rng(1, 0);
  CHECK_FALSE(step(s, hs, rng).has_value());
  const std::vector<double> cps{0.0, 1.0};
  for (auto mode : {PairSampling::kExactTable, PairSampling::kRejection}) {
    const auto rec = simulate(s, hs, 2.0, cps, RandomStream(1, 1), {mode});
    CHECK(rec.absorbed);
    CHECK(rec.collisions == 0);
    CHECK(rec.snapshots.back() == s);
  }
}

TEST_CASE("simulate honours checkpoints and horizon") {
  const auto gmm = CollisionKernel::grad_maxwell(3);
  RandomStream rng(4, 0);
  const auto start = gaussian_state(3, 10, rng);
  const std::vector<double> zero{0.0};
  const auto rec0 = simulate(start, gmm, 0.0, zero, RandomStream(4, 1));
  REQUIRE(rec0.snapshots.size() == 1);
  CHECK(rec0.snapshots[0] == start);

  const std::vector<double> bad{0.5, 0.2};
  CHECK_THROWS_AS(simulate(start, gmm, 1.0, bad, RandomStream(4, 1)), Error);
  const std::vector<double> outside{2.0};
  CHECK_THROWS_AS(simulate(start, gmm, 1.0, outside, RandomStream(4, 1)), Error);

  // Deterministic given (initial, kernel, stream).
  const std::vector<double> cps{0.25, 0.5, 1.0};
  const auto a = simulate(start, gmm, 1.0, cps, RandomStream(9, 3));
  const auto b = simulate(start, gmm, 1.0, cps, RandomStream(9, 3));
  CHECK(a.collisions == b.collisions);
  for (std::size_t k = 0; k < cps.size(); ++k) CHECK(a.snapshots[k] == b.snapshots[k]);
}

TEST_CASE("GMM collision counts are Poisson(9 pi) for N = 10 on [0, 1]") {
  const auto gmm = CollisionKernel::grad_maxwell(3);
  const ParticleState start(3, std::vector<double>(30, 0.0));
  const std::vector<double> cps{1.0};
  std::vector<double> counts;
  for (int r = 0; r < 1000; ++r) {
    counts.push_back(static_cast<double>(simulate(start, gmm, 1.0, cps, RandomStream(77, r)).collisions));
  }
  const double lambda = 9 * M_PI;
  CHECK(std::abs(mean(counts) - lambda) < 3 * std::sqrt(lambda / 1000));
}

TEST_CASE("ensembles are reproducible and match single simulations") {
  const auto gmm = CollisionKernel::grad_maxwell(3);
  const InitialSampler sampler = [](RandomStream& rng) { return gaussian_state(3, 8, rng); };
  const std::vector<double> cps{0.0, 0.5, 1.0};
  const auto a = run_ensemble(sampler, gmm, 1.0, cps, 6, 1234, {{}, 1});
  const auto b = run_ensemble(sampler, gmm, 1.0, cps, 6, 1234, {{}, 3});
  for (std::size_t r = 0; r < 6; ++r) {
    for (std::size_t k = 0; k < cps.size(); ++k) {
      CHECK(a.replicas[r].snapshots[k] == b.replicas[r].snapshots[k]);
    }
  }
  const auto single = run_ensemble(sampler, gmm, 1.0, cps, 1, 55);
  RandomStream init(55, 0, Channel::kInitial);
  const auto direct = simulate(sampler(init), gmm, 1.0, cps, RandomStream(55, 0, Channel::kDynamics));
  CHECK(single.replicas[0].snapshots.back() == direct.snapshots.back());
  CHECK(a.checkpoint_index(0.5) == 1);
  CHECK_THROWS_AS(a.checkpoint_index(0.7), Error);
}

TEST_CASE("pooled first coordinates at t = 0 reproduce the initial mean") {
  const auto gmm = CollisionKernel::grad_maxwell(3);
  const InitialSampler sampler = [](RandomStream& rng) {
    std::vector<double> flat(3 * 5);
    for (double& x : flat) x = 1.0 + rng.normal();
    return ParticleState(3, flat);
  };
  const std::vector<double> cps{0.0};
  const auto ens = run_ensemble(sampler, gmm, 0.0, cps, 2000, 8);
  std::vector<double> xs;
  for (const auto& rec : ens.replicas) xs.push_back(rec.snapshots[0].velocity(0)[0]);
  CHECK(std::abs(mean(xs) - 1.0) < 3 / std::sqrt(2000.0));
}

TEST_CASE("long GMM runs conserve invariants and the sphere") {
  const auto gmm = CollisionKernel::grad_maxwell(3);
  RandomStream rng(12, 0);
  auto s = gaussian_state(3, 64, rng);
  const double e0 = s.recomputed_energy();
  const auto m0 = s.recomputed_momentum();
  Simulator sim(s, gmm, RandomStream(12, 1));
  for (int k = 0; k < 200000; ++k) sim.next();
  CHECK(std::abs(sim.state().recomputed_energy() - e0) <= 1e-9 * e0);
  const auto m1 = sim.state().recomputed_momentum();
  for (int c = 0; c < 3; ++c) CHECK(std::abs(m1[c] - m0[c]) <= 1e-9 * std::sqrt(e0));
}

TEST_CASE("GMM jump counts have unit dispersion on disjoint intervals") {
  const auto gmm = CollisionKernel::grad_maxwell(3);
  const ParticleState start(3, std::vector<double>(12, 0.0));
  std::vector<double> first, second;
  for (int r = 0; r < 2000; ++r) {
    Simulator sim(start, gmm, RandomStream(90, r));
    int a = 0, b = 0;
    while (auto t = sim.peek()) {
      if (*t > 1.0) break;
      sim.next();
      (*t <= 0.5 ? a : b)++;
    }
    first.push_back(a);
    second.push_back(b);
  }
  const double lambda = 0.5 * 1.5 * 2 * M_PI;  // 1.5 = (N-1)/2, N = 4
  CHECK(std::abs(mean(first) - lambda) < 3 * std::sqrt(lambda / 2000));
  const double dispersion = variance(first) / mean(first);
  CHECK(std::abs(dispersion - 1.0) < 3 * std::sqrt(2.0 / 1999));
  // Independence: sample correlation near zero.
  double cov = 0.0;
  const double ma = mean(first), mb = mean(second);
  for (int r = 0; r < 2000; ++r) cov += (first[r] - ma) * (second[r] - mb);
  cov /= 1999;
  CHECK(std::abs(cov / std::sqrt(variance(first) * variance(second))) < 3 / std::sqrt(2000.0));
}

TEST_CASE("snapshot binary format round-trips and is little-endian") {
  const ParticleState s(2, {1.5, -2.0, 0.25, 3.0});
  std::stringstream buf;
  write_snapshot(buf, s, 0.75);
  const std::string bytes = buf.str();
  REQUIRE(bytes.size() == 4 + 2 + 2 + 8 + 8 + 8 + 4 * 8);
  CHECK(bytes.substr(0, 4) == "KACS");
  CHECK(static_cast<unsigned char>(bytes[4]) == 1);
  CHECK(static_cast<unsigned char>(bytes[6]) == 2);
  CHECK(static_cast<unsigned char>(bytes[8]) == 2);
  double t = 0, e = 0;
  const auto back = read_snapshot(buf, &t, &e);
  CHECK(back == s);
  CHECK(t == 0.75);
  CHECK(e == doctest::Approx(s.energy()));
  std::stringstream junk("NOPE");
  CHECK_THROWS_AS(read_snapshot(junk), Error);
}
