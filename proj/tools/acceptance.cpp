// Copyright 2026 The kacchaos Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one PASS/FAIL line per criterion. Arguments select a
// subset by number (e.g. `kac-acceptance 3 7`); no arguments run all twelve.
// The exit status is 0 iff every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kac/chaos.hpp"
#include "kac/entropy.hpp"
#include "kac/jump.hpp"
#include "kac/limit.hpp"
#include "kac/metrics.hpp"
#include "kac/model.hpp"
#include "kac/numerics.hpp"
#include "kac/sampling.hpp"

using namespace kac;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> body;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome conservation() {
  const int d = 3;
  const auto kernel = CollisionKernel::grad_maxwell(d);
  RandomStream init(101, 0, Channel::kInitial);
  const auto state =
      sampling::sample_tensorized(sampling::ReferenceDensity::bimodal(d, 1.5, 0.5), 64, init);
  const double e0 = state.recomputed_energy();
  const auto p0 = state.recomputed_momentum();
  jump::Simulator sim(state, kernel, RandomStream(101, 0, Channel::kDynamics));
  for (int k = 0; k < 1000000; ++k) {
    if (!sim.next()) return {false, "process absorbed before 10^6 events"};
  }
  const double e1 = sim.state().recomputed_energy();
  const auto p1 = sim.state().recomputed_momentum();
  const double energy_drift = std::abs(e1 - e0) / e0;
  double momentum_drift = 0.0;
  for (int a = 0; a < d; ++a) {
    momentum_drift = std::max(momentum_drift, std::abs(p1[a] - p0[a]) / std::abs(p0[a]));
  }
  return {energy_drift <= 1e-9 && momentum_drift <= 1e-9,
          fmt("10^6 events, energy drift %.2e, max momentum drift %.2e (relative)",
              energy_drift, momentum_drift)};
}

Outcome sphere_invariance() {
  const auto kernel = CollisionKernel::hard_spheres(3);
  std::vector<double> cps;
  for (int k = 0; k <= 20; ++k) cps.push_back(0.5 * k);
  const auto ens = jump::run_ensemble(
      [](RandomStream& rng) { return sampling::sample_uniform_sphere(128, 1.0, 3, rng); }, kernel,
      10.0, cps, 4, 202);
  const SphereConstraint sphere(1.0, 3);
  double worst_energy = 0.0, worst_momentum = 0.0;
  bool all = true;
  std::uint64_t collisions = 0;
  for (const auto& rec : ens.replicas) {
    collisions += rec.collisions;
    for (const auto& s : rec.snapshots) {
      all = all && sphere.satisfied_by(s, 1e-9);
      worst_energy = std::max(worst_energy, std::abs(s.recomputed_energy() - 1.0));
      for (double p : s.recomputed_momentum()) worst_momentum = std::max(worst_momentum, std::abs(p));
    }
  }
  return {all, fmt("4 replicas x 21 checkpoints, %llu events; max |E-1| %.2e, max |P| %.2e",
                   static_cast<unsigned long long>(collisions), worst_energy, worst_momentum)};
}

Outcome poisson_clock() {
  const auto kernel = CollisionKernel::grad_maxwell(3);
  const std::vector<double> cps{1.0};
  const std::size_t m = 10000;
  const auto ens = jump::run_ensemble(
      [](RandomStream& rng) {
        return sampling::sample_tensorized(sampling::ReferenceDensity::gaussian(3, 1.0), 10, rng);
      },
      kernel, 1.0, cps, m, 303);
  std::vector<double> counts;
  for (const auto& rec : ens.replicas) counts.push_back(static_cast<double>(rec.collisions));
  const double mu = mean(counts);
  const double expected = 9.0 * kPi;
  const double se = std::sqrt(expected / static_cast<double>(m));
  const double dispersion = variance(counts) / mu;
  return {std::abs(mu - expected) <= 3.0 * se && dispersion >= 0.94 && dispersion <= 1.06,
          fmt("mean %.4f vs 9 pi = %.4f (%.2f se), dispersion index %.4f", mu, expected,
              (mu - expected) / se, dispersion)};
}

Outcome lln_identity() {
  sampling::BaselineOptions o;
  o.metric = sampling::BaselineMetric::kSobolevSquared;
  o.sobolev_order = 1.0;
  o.seed = 404;
  const auto est = sampling::chaos_baseline(sampling::ReferenceDensity::gaussian(1, 1.0), 100, 2000, o);
  const double exact = 2.0 * std::sqrt(kPi) / 100.0;
  return {std::abs(est.mean - exact) <= 3.0 * est.std_error,
          fmt("E||mu^N - f0||^2 = %.6f +- %.6f vs %.6f (%.2f se)", est.mean, est.std_error, exact,
              (est.mean - exact) / est.std_error)};
}

Outcome lln_w1_rate() {
  sampling::BaselineOptions o;
  o.seed = 505;
  const std::vector<std::size_t> schedule{100, 1000, 10000};
  const auto res =
      chaos::lln_rate_experiment(sampling::ReferenceDensity::uniform_ball(1, 1.0), schedule, 500, o);
  std::string rows;
  for (const auto& r : res.rows) rows += fmt(" N=%zu: %.5f", r.n, r.mean);
  return {!res.degenerate && res.slope >= -0.6 && res.slope <= -0.4,
          fmt("slope %.4f;", res.slope) + rows};
}

// Isotropic two-Gaussian mixture with mean square speed 3 in R^3.
limit::GridDensity mixture(double weight, double var1) {
  const double var2 = (1.0 - weight * var1) / (1.0 - weight);
  return limit::GridDensity::radial_fourier(
      [=](double r) {
        return weight * std::exp(-0.5 * var1 * r * r) + (1.0 - weight) * std::exp(-0.5 * var2 * r * r);
      },
      3, 16.0, 512);
}

Outcome fourier_contraction() {
  const auto kernel = CollisionKernel::grad_maxwell(3);
  RandomStream rng(606, 0, Channel::kAuxiliary);
  double worst_excess = -1e300;
  std::string details;
  for (int pair = 0; pair < 5; ++pair) {
    const auto f = mixture(0.2 + 0.6 * rng.uniform(), 0.1 + 0.8 * rng.uniform());
    const auto g = mixture(0.2 + 0.6 * rng.uniform(), 0.1 + 0.8 * rng.uniform());
    const auto tf = limit::evolve_fourier(f, kernel, 5.0, 0.05);
    const auto tg = limit::evolve_fourier(g, kernel, 5.0, 0.05);
    const double initial = limit::fourier_grid_distance(f, g, 2.0);
    double sup = 0.0;
    for (std::size_t i = 0; i < tf.states.size(); ++i) {
      sup = std::max(sup, limit::fourier_grid_distance(tf.states[i], tg.states[i], 2.0));
    }
    worst_excess = std::max(worst_excess, sup - initial);
    details += fmt(" %.4f/%.4f", sup, initial);
  }
  return {worst_excess <= 1e-3,
          fmt("max(sup_t - initial) = %.2e; sup/initial:", worst_excess) + details};
}

Outcome moment_decay() {
  const auto kernel = CollisionKernel::grad_maxwell(3);
  const auto coeffs = limit::moment_ode_coefficients(kernel, 3);
  const double rate = -coeffs.diagonal({1, 1, 0});
  const auto f0 = limit::GridDensity::axisymmetric_fourier(
      [](double rho, double mu) { return std::exp(-0.5 * rho * rho * (0.6 * (1.0 - mu * mu) + 1.8 * mu * mu)); },
      12, 16.0, 256);
  const auto spectral = limit::evolve_fourier(f0, kernel, 2.0, 0.05, 2);
  const auto ode = limit::evolve_moments(limit::fourier_moments(f0, 3), coeffs, 2.0, 0.05);
  std::vector<double> t, log_traceless;
  double worst = 0.0;
  for (const auto& s : spectral.states) {
    const auto ms = limit::fourier_moments(s, 3);
    t.push_back(s.time);
    log_traceless.push_back(std::log(ms.at({0, 0, 2}) - ms.at({2, 0, 0})));
    const auto step = static_cast<std::size_t>(std::lround(s.time / 0.05));
    const auto mo = ode.states[step].values();
    for (std::size_t a = 0; a < mo.size(); ++a) worst = std::max(worst, std::abs(ms.values()[a] - mo[a]));
  }
  const double fitted = -fitted_slope(t, log_traceless);
  const double rel = std::abs(fitted - rate) / rate;
  return {rel <= 0.05 && worst <= 1e-4,
          fmt("fitted rate %.6f vs -a_(1,1,0) = %.6f (rel %.1e); spectral vs ODE moments max diff %.2e",
              fitted, rate, rel, worst)};
}

Outcome chaos_trend() {
  const int d = 3;
  const auto kernel = CollisionKernel::grad_maxwell(d);
  const auto f0 = sampling::ReferenceDensity::bimodal(d, 1.5, 0.3);
  const std::vector<double> cps{0.0, 0.25, 0.5, 0.75, 1.0};
  limit::OracleOptions oo;
  oo.particles = 2000;
  oo.replicas = 5;
  oo.seed = 808;
  const auto oracle = limit::particle_limit_oracle(f0, kernel, f0.energy(), 1.0, cps, oo);
  const std::vector<std::size_t> ns{16, 32, 64, 128};
  std::vector<double> sup, sup_se;
  std::string details;
  chaos::MetricOptions mo;
  mo.bootstrap = 16;
  mo.floor_draws = 4;
  mo.seed = 808;
  double floor = 0.0;
  for (std::size_t n : ns) {
    const auto ens = jump::run_ensemble(
        [&](RandomStream& rng) { return sampling::sample_tensorized(f0, n, rng); }, kernel, 1.0,
        cps, 500, 8080 + n);
    const auto series = chaos::chaos_series(
        ens,
        [&](double t) { return chaos::pool_source(oracle.marginals[ens.checkpoint_index(t)], 1); },
        1, mo);
    std::size_t arg = 0;
    for (std::size_t k = 1; k < series.estimates.size(); ++k) {
      if (series.estimates[k].value > series.estimates[arg].value) arg = k;
    }
    sup.push_back(series.estimates[arg].value);
    sup_se.push_back(series.estimates[arg].std_error);
    floor = std::max(floor, series.estimates[arg].noise_floor);
    details += fmt(" N=%zu: %.4f+-%.4f", n, sup.back(), sup_se.back());
  }
  int inversions = 0;
  bool inversions_small = true;
  for (std::size_t k = 1; k < sup.size(); ++k) {
    if (sup[k] > sup[k - 1]) {
      ++inversions;
      inversions_small = inversions_small && sup[k] - sup[k - 1] <= 3.0 * std::hypot(sup_se[k], sup_se[k - 1]);
    }
  }
  const bool ratio = sup.back() < 0.5 * sup.front();
  return {inversions <= 1 && inversions_small && ratio,
          fmt("sup_t W1:%s; inversions %d; N=128/N=16 = %.3f (need < 0.5); two-sample floor %.4f",
              details.c_str(), inversions, sup.back() / sup.front(), floor)};
}

Outcome relaxation() {
  const auto kernel = CollisionKernel::hard_spheres(3);
  const auto f0 = sampling::ReferenceDensity::two_point(3, 1.0);
  const std::vector<double> cps{0.0, 1.0, 2.0, 5.0};
  chaos::MetricOptions mo;
  mo.bootstrap = 8;
  mo.floor_draws = 2;
  mo.seed = 909;
  std::vector<std::vector<double>> profiles;
  std::string details;
  bool decay = true;
  for (std::size_t n : {32, 128}) {
    const auto ens = jump::run_ensemble(
        [&](RandomStream& rng) { return sampling::sample_sphere_conditioned(f0, n, 1.0, rng); },
        kernel, 5.0, cps, 2000, 9090 + n);
    const auto series = chaos::relaxation_series(ens, 1, mo);
    std::vector<double> v;
    for (const auto& e : series.estimates) v.push_back(e.value);
    decay = decay && v.back() < 0.2 * v.front();
    details += fmt(" N=%zu: [%.4f %.4f %.4f %.4f] ratio %.3f floor %.4f;", n, v[0], v[1], v[2],
                   v[3], v.back() / v.front(), series.estimates.back().noise_floor);
    profiles.push_back(std::move(v));
  }
  double worst = 1.0;
  for (std::size_t k = 0; k < cps.size(); ++k) {
    const double r = profiles[0][k] / profiles[1][k];
    worst = std::max({worst, r, 1.0 / r});
  }
  return {decay && worst <= 2.0, "W1 to the uniform sphere marginal:" + details +
                                     fmt(" max profile ratio %.3f", worst)};
}

Outcome h_theorem() {
  const auto kernel = CollisionKernel::grad_maxwell(3);
  const double a = 0.8, c = 1.4, energy = 2.0 * a + c;
  const auto f0 = limit::GridDensity::axisymmetric_fourier(
      [=](double rho, double mu) { return std::exp(-0.5 * rho * rho * (a * (1.0 - mu * mu) + c * mu * mu)); },
      12, 16.0, 256);
  const auto traj = limit::evolve_fourier(f0, kernel, 10.0, 0.05);
  const limit::InverseTransform inverse(f0, 8.5 * std::sqrt(energy / 3.0), 401);
  double previous = 1e300, worst_increase = 0.0, h0 = 0.0, h = 0.0;
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    h = entropy::relative_entropy(inverse.apply(traj.states[k]), energy);
    if (k == 0) h0 = h;
    worst_increase = std::max(worst_increase, h - previous);
    previous = h;
  }
  return {worst_increase <= 1e-8 && h < 1e-3,
          fmt("%zu steps; H(0) = %.4e, H(10) = %.3e, largest step increase %.2e",
              traj.states.size(), h0, h, worst_increase)};
}

Outcome entropic_chaos() {
  const auto kernel = CollisionKernel::hard_spheres(3);
  const auto f0 = sampling::ReferenceDensity::bimodal(3, 1.5, 0.3);
  const std::vector<double> cps{0.0, 0.25, 0.5, 1.0, 2.0};
  const auto ens = jump::run_ensemble(
      [&](RandomStream& rng) { return sampling::sample_sphere_conditioned(f0, 128, 1.0, rng); },
      kernel, 2.0, cps, 20, 1111);
  entropy::KnnOptions ko;
  ko.seed = 1111;
  std::vector<entropy::KnnEstimate> est;
  std::string details;
  for (std::size_t c = 0; c < cps.size(); ++c) {
    std::vector<double> pooled;
    for (const auto& rec : ens.replicas) {
      pooled.insert(pooled.end(), rec.snapshots[c].data().begin(), rec.snapshots[c].data().end());
    }
    est.push_back(entropy::marginal_entropy_estimate(
        metrics::WeightedPointMeasure::empirical(3, pooled), 1.0, ko));
    details += fmt(" %.4f[%.4f,%.4f]", est.back().value, est.back().lower, est.back().upper);
  }
  int exceeding = 0;
  for (std::size_t k = 1; k < est.size(); ++k) {
    if (est[k].value > est[k - 1].upper) ++exceeding;
  }
  const bool down = est.back().value < est.front().value;
  return {down && exceeding <= 1,
          "kNN H(marginal | gamma):" + details + fmt("; CI-exceeding increases %d", exceeding)};
}

Outcome metric_suite() {
  RandomStream rng(1212, 0, Channel::kAuxiliary);
  std::size_t required = 0, violations = 0, item_iv = 0, iv_violations = 0;
  for (int p = 0; p < 1000; ++p) {
    const int d = p % 2 == 0 ? 1 : 3;
    const std::size_t n = 2 + static_cast<std::size_t>(rng.below(49));
    const double scale = 0.5 + 2.5 * rng.uniform();
    const double shift = rng.normal();
    std::vector<double> a(n * d), b(n * d);
    for (double& x : a) x = scale * rng.normal();
    for (double& x : b) x = shift + scale * (2.0 * rng.uniform() - 1.0);
    const auto report = metrics::check_comparisons(metrics::WeightedPointMeasure::empirical(d, a),
                                                   metrics::WeightedPointMeasure::empirical(d, b));
    for (const auto& row : report.rows) {
      if (row.item == "iv") {
        ++item_iv;
        if (!row.pass) ++iv_violations;
        continue;
      }
      ++required;
      if (!row.pass) ++violations;
    }
  }
  return {violations == 0,
          fmt("1000 pairs, %zu checks of items i, ii, iii, v: %zu violations (item iv: %zu/%zu)",
              required, violations, iv_violations, item_iv)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "conservation", 60, conservation},
      {2, "sphere invariance", 60, sphere_invariance},
      {3, "Poisson clock", 120, poisson_clock},
      {4, "exact LLN identity", 120, lln_identity},
      {5, "LLN W1 rate", 300, lln_w1_rate},
      {6, "Fourier contraction", 180, fourier_contraction},
      {7, "moment decay", 120, moment_decay},
      {8, "propagation of chaos trend", 900, chaos_trend},
      {9, "N-uniform relaxation", 900, relaxation},
      {10, "H-theorem", 120, h_theorem},
      {11, "entropic chaos proxy", 600, entropic_chaos},
      {12, "metric comparison suite", 180, metric_suite},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0, run = 0;
  for (const auto& c : all) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    ++run;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.body();
    } catch (const std::exception& e) {
      out = {false, std::string("error: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = seconds <= c.budget_seconds;
    const bool pass = out.pass && in_time;
    if (!pass) ++failed;
    std::printf("[%s] %2d %s: %s (%.1f s of %.0f s%s)\n", pass ? "PASS" : "FAIL", c.id, c.name,
                out.detail.c_str(), seconds, c.budget_seconds, in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  std::printf("%d of %d criteria passed\n", run - failed, run);
  return failed == 0 ? 0 : 1;
}
