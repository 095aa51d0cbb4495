// Copyright 2026 The kacchaos Authors
// SPDX-License-Identifier: Apache-2.0
#include "kac/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "kac/error.hpp"
#include "kac/numerics.hpp"

namespace kac::metrics {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) s += (a[c] - b[c]) * (a[c] - b[c]);
  return std::sqrt(s);
}

double ipow(double x, int q) { return q == 1 ? x : (q == 2 ? x * x : std::pow(x, q)); }

}  // namespace

// ---------------------------------------------------------------------------
// WeightedPointMeasure

WeightedPointMeasure WeightedPointMeasure::empirical(int d, std::span<const double> flat) {
  require(d >= 1 && flat.size() % d == 0, "empirical measure: flat size not a multiple of d");
  WeightedPointMeasure mu(d);
  const std::size_t n = flat.size() / d;
  require(n > 0, "empirical measure: no points");
  mu.points_.assign(flat.begin(), flat.end());
  mu.weights_.assign(n, 1.0 / static_cast<double>(n));
  mu.total_ = 1.0;
  return mu;
}

WeightedPointMeasure WeightedPointMeasure::empirical(const ParticleState& state) {
  return empirical(state.dimension(), state.data());
}

void WeightedPointMeasure::add(std::span<const double> x, double weight) {
  require(static_cast<int>(x.size()) == d_, "point measure: atom dimension mismatch");
  require(std::isfinite(weight), "point measure: non-finite weight");
  for (double c : x) require(std::isfinite(c), "point measure: non-finite atom");
  points_.insert(points_.end(), x.begin(), x.end());
  weights_.push_back(weight);
  total_ += weight;
}

bool WeightedPointMeasure::is_probability(double tol) const {
  KahanSum sum;
  for (double w : weights_) {
    if (w < 0.0) return false;
    sum.add(w);
  }
  return std::abs(sum.value() - 1.0) <= tol;
}

double WeightedPointMeasure::total_variation() const {
  double s = 0.0;
  for (double w : weights_) s += std::abs(w);
  return s;
}

Velocity WeightedPointMeasure::first_moment() const {
  Velocity m(d_, 0.0);
  for (std::size_t a = 0; a < size(); ++a) {
    for (int c = 0; c < d_; ++c) m[c] += weights_[a] * points_[a * d_ + c];
  }
  return m;
}

double WeightedPointMeasure::moment(std::span<const int> alpha) const {
  require(static_cast<int>(alpha.size()) == d_, "moment: multi-index dimension mismatch");
  KahanSum sum;
  for (std::size_t a = 0; a < size(); ++a) {
    double term = weights_[a];
    for (int c = 0; c < d_; ++c) term *= std::pow(points_[a * d_ + c], alpha[c]);
    sum.add(term);
  }
  return sum.value();
}

double WeightedPointMeasure::weighted_moment(double p) const {
  double s = 0.0;
  for (std::size_t a = 0; a < size(); ++a) {
    const auto x = atom(a);
    s += std::abs(weights_[a]) * std::pow(1.0 + kac::dot(x, x), 0.5 * p);
  }
  return s;
}

Complex WeightedPointMeasure::transform(std::span<const double> xi) const {
  double re = 0.0, im = 0.0;
  for (std::size_t a = 0; a < size(); ++a) {
    double phase = 0.0;
    for (int c = 0; c < d_; ++c) phase += points_[a * d_ + c] * xi[c];
    re += weights_[a] * std::cos(phase);
    im -= weights_[a] * std::sin(phase);
  }
  return {re, im};
}

WeightedPointMeasure WeightedPointMeasure::scaled(double c) const {
  WeightedPointMeasure out = *this;
  for (double& w : out.weights_) w *= c;
  out.total_ *= c;
  return out;
}

WeightedPointMeasure WeightedPointMeasure::minus(const WeightedPointMeasure& other) const {
  require(other.d_ == d_, "point measure difference: dimension mismatch");
  WeightedPointMeasure out = *this;
  out.points_.insert(out.points_.end(), other.points_.begin(), other.points_.end());
  for (double w : other.weights_) out.weights_.push_back(-w);
  out.total_ -= other.total_;
  return out;
}

// ---------------------------------------------------------------------------
// CharacteristicFunction

CharacteristicFunction::CharacteristicFunction(Tag tag, std::function<double(double)> envelope,
                                               WeightedPointMeasure shifts, double decay_radius)
    : tag_(tag),
      envelope_(std::move(envelope)),
      shifts_(std::move(shifts)),
      decay_radius_(decay_radius) {}

CharacteristicFunction CharacteristicFunction::gaussian(int d, double variance) {
  require(variance > 0.0, "gaussian characteristic function: variance must be positive");
  WeightedPointMeasure origin(d);
  origin.add(Velocity(d, 0.0), 1.0);
  return {Tag::kGaussian, [variance](double r) { return std::exp(-0.5 * variance * r * r); },
          std::move(origin), std::sqrt(80.0 / variance)};
}

CharacteristicFunction CharacteristicFunction::uniform_ball(int d, double radius) {
  require(radius > 0.0, "uniform ball: radius must be positive");
  WeightedPointMeasure origin(d);
  origin.add(Velocity(d, 0.0), 1.0);
  auto envelope = [d, radius](double rho) {
    const double x = radius * rho;
    if (x < 1e-6) return 1.0 - x * x / (2.0 * (d + 2));
    const double nu = 0.5 * d;
    return std::tgamma(nu + 1.0) * std::pow(2.0 / x, nu) * std::cyl_bessel_j(nu, x);
  };
  return {Tag::kUniformBall, envelope, std::move(origin), 2000.0 / radius};
}

CharacteristicFunction CharacteristicFunction::two_point(int d, double a, int axis) {
  require(axis >= 0 && axis < d, "two-point law: axis out of range");
  WeightedPointMeasure atoms(d);
  Velocity e(d, 0.0);
  e[axis] = a;
  atoms.add(e, 0.5);
  e[axis] = -a;
  atoms.add(e, 0.5);
  return {Tag::kTwoPoint, [](double) { return 1.0; }, std::move(atoms), kInf};
}

CharacteristicFunction CharacteristicFunction::custom(int d,
                                                      std::function<double(double)> envelope,
                                                      WeightedPointMeasure shifts,
                                                      double decay_radius, Tag tag) {
  require(shifts.dimension() == d, "characteristic function: shift dimension mismatch");
  require(std::abs(envelope(0.0) - 1.0) < 1e-12, "characteristic function: envelope(0) != 1");
  return {tag, std::move(envelope), std::move(shifts), decay_radius};
}

bool CharacteristicFunction::atomic() const { return std::isinf(decay_radius_); }

Complex CharacteristicFunction::operator()(std::span<const double> xi) const {
  return envelope_(kac::norm(xi)) * shifts_.transform(xi);
}

double angular_average_cos(int d, double r) {
  r = std::abs(r);
  switch (d) {
    case 1:
      return std::cos(r);
    case 2:
      return std::cyl_bessel_j(0.0, r);
    case 3:
      return r < 1e-4 ? 1.0 - r * r / 6.0 : std::sin(r) / r;
    default: {
      if (r < 1e-6) return 1.0 - r * r / (2.0 * d);
      const double nu = 0.5 * d - 1.0;
      return std::tgamma(0.5 * d) * std::pow(2.0 / r, nu) * std::cyl_bessel_j(nu, r);
    }
  }
}

double ball_volume(int d) { return std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d + 1.0); }

// ---------------------------------------------------------------------------
// Wasserstein

std::vector<std::size_t> solve_assignment(std::span<const double> cost, std::size_t n) {
  require(cost.size() == n * n, "assignment: cost matrix size mismatch");
  // Shortest augmenting paths with row/column potentials (1-based indices,
  // column 0 is the virtual source).
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      const double* row = cost.data() + (i0 - 1) * n;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = row[j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> assignment(n);
  for (std::size_t j = 1; j <= n; ++j) assignment[p[j] - 1] = j - 1;
  return assignment;
}

double assignment_wasserstein(const WeightedPointMeasure& mu, const WeightedPointMeasure& nu,
                              int q) {
  require(q == 1 || q == 2, "wasserstein: q must be 1 or 2");
  require(mu.dimension() == nu.dimension(), "wasserstein: dimension mismatch");
  const std::size_t n = mu.size();
  require(n == nu.size(),
          "wasserstein: clouds of different sizes; resample both to a common size");
  require(n > 0, "wasserstein: empty cloud");
  require(n <= kAssignmentLimit, "wasserstein: cloud larger than the assignment limit; subsample");
  const double w = 1.0 / static_cast<double>(n);
  for (std::size_t a = 0; a < n; ++a) {
    require(std::abs(mu.weight(a) - w) < 1e-12 && std::abs(nu.weight(a) - w) < 1e-12,
            "wasserstein: exact assignment needs uniform weights");
  }
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      cost[i * n + j] = ipow(distance(mu.atom(i), nu.atom(j)), q);
    }
  }
  const auto sigma = solve_assignment(cost, n);
  KahanSum total;
  for (std::size_t i = 0; i < n; ++i) total.add(cost[i * n + sigma[i]]);
  const double mean_cost = total.value() / static_cast<double>(n);
  return q == 1 ? mean_cost : std::sqrt(mean_cost);
}

namespace {

double quantile_wasserstein(const WeightedPointMeasure& mu, const WeightedPointMeasure& nu,
                            int q) {
  auto sorted = [](const WeightedPointMeasure& m) {
    std::vector<std::pair<double, double>> atoms;
    atoms.reserve(m.size());
    for (std::size_t a = 0; a < m.size(); ++a) atoms.emplace_back(m.atom(a)[0], m.weight(a));
    std::sort(atoms.begin(), atoms.end());
    return atoms;
  };
  const auto a = sorted(mu);
  const auto b = sorted(nu);
  std::size_t i = 0, j = 0;
  double left_a = a[0].second, left_b = b[0].second;
  KahanSum total;
  while (i < a.size() && j < b.size()) {
    const double mass = std::min(left_a, left_b);
    total.add(mass * ipow(std::abs(a[i].first - b[j].first), q));
    left_a -= mass;
    left_b -= mass;
    // Advance whichever side is exhausted; ties advance both.
    if (left_a <= 1e-15 && ++i < a.size()) left_a += a[i].second;
    if (left_b <= 1e-15 && ++j < b.size()) left_b += b[j].second;
  }
  return q == 1 ? total.value() : std::sqrt(total.value());
}

}  // namespace

double wasserstein_empirical(const WeightedPointMeasure& mu, const WeightedPointMeasure& nu,
                             int q) {
  require(q == 1 || q == 2, "wasserstein: q must be 1 or 2");
  require(mu.dimension() == nu.dimension(), "wasserstein: dimension mismatch");
  require(mu.is_probability() && nu.is_probability(),
          "wasserstein: arguments must be probability measures");
  if (mu.dimension() == 1) return quantile_wasserstein(mu, nu, q);
  return assignment_wasserstein(mu, nu, q);
}

// ---------------------------------------------------------------------------
// Fourier norms

std::vector<Velocity> grid_directions(int d, int count) {
  std::vector<Velocity> dirs;
  if (d == 1) return {Velocity{1.0}};
  require(count >= 1, "grid directions: count must be positive");
  if (d == 2) {
    for (int j = 0; j < count; ++j) {
      const double a = kPi * j / count;
      dirs.push_back({std::cos(a), std::sin(a)});
    }
    return dirs;
  }
  if (d == 3) {
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (int j = 0; j < count; ++j) {
      const double z = 1.0 - (2.0 * j + 1.0) / count;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      dirs.push_back({r * std::cos(golden * j), r * std::sin(golden * j), z});
    }
    return dirs;
  }
  RandomStream rng(0, static_cast<std::uint64_t>(d), Channel::kAuxiliary);
  for (int j = 0; j < count; ++j) dirs.push_back(random_unit(d, rng));
  return dirs;
}

double fourier_sup(const std::function<Complex(std::span<const double>)>& transform, int d,
                   double s, const FourierGrid& grid) {
  require(s > 0.0, "fourier norm: order must be positive");
  require(grid.radii >= 2 && grid.min_radius > 0.0 && grid.max_radius > grid.min_radius,
          "fourier norm: invalid grid");
  const auto dirs = grid_directions(d, grid.directions);
  const double log_ratio = std::log(grid.max_radius / grid.min_radius);
  std::vector<double> radii(grid.radii);
  for (int k = 0; k < grid.radii; ++k) {
    radii[k] = grid.min_radius * std::exp(log_ratio * k / (grid.radii - 1));
  }
  Velocity xi(d);
  auto ratio = [&](const Velocity& dir, double r) {
    for (int c = 0; c < d; ++c) xi[c] = r * dir[c];
    return std::abs(transform(xi)) / std::pow(r, s);
  };
  double best = 0.0;
  std::size_t best_dir = 0;
  int best_k = 0;
  for (std::size_t j = 0; j < dirs.size(); ++j) {
    for (int k = 0; k < grid.radii; ++k) {
      const double value = ratio(dirs[j], radii[k]);
      if (value > best) {
        best = value;
        best_dir = j;
        best_k = k;
      }
    }
  }
  if (grid.refine && best > 0.0) {
    const double lo = radii[std::max(best_k - 1, 0)];
    const double hi = radii[std::min(best_k + 1, grid.radii - 1)];
    const double refined = golden_max(
        [&](double t) { return ratio(dirs[best_dir], std::exp(t)); }, std::log(lo),
        std::log(hi), 1e-10);
    best = std::max(best, refined);
  }
  return best;
}

namespace {

void require_fourier_constraints(double mass, double scale, const Velocity& first_moment,
                                 double moment_scale, double s) {
  require(std::abs(mass) <= 1e-10 * std::max(1.0, scale),
          "fourier norm: measure must have zero mass");
  if (s > 1.0) {
    for (double m : first_moment) {
      require(std::abs(m) <= 1e-10 * std::max(1.0, moment_scale),
              "fourier norm: order above 1 needs zero first moments");
    }
  }
}

double first_moment_scale(const WeightedPointMeasure& h) {
  double s = 0.0;
  for (std::size_t a = 0; a < h.size(); ++a) s += std::abs(h.weight(a)) * kac::norm(h.atom(a));
  return s;
}

}  // namespace

double fourier_norm(const WeightedPointMeasure& h, double s, const FourierGrid& grid) {
  require(s > 0.0 && s <= 2.0, "fourier norm: order must lie in (0, 2]");
  require_fourier_constraints(h.total_weight(), h.total_variation(), h.first_moment(),
                              first_moment_scale(h), s);
  if (h.size() == 0) return 0.0;
  double best = fourier_sup([&h](std::span<const double> xi) { return h.transform(xi); },
                            h.dimension(), s, grid);
  if (s == 1.0) {
    // Limit xi -> 0 along each grid direction: |e . sum w x|.
    const auto m = h.first_moment();
    for (const auto& e : grid_directions(h.dimension(), grid.directions)) {
      best = std::max(best, std::abs(kac::dot(e, m)));
    }
  }
  return best;
}

double fourier_norm(const WeightedPointMeasure& mu, const CharacteristicFunction& g, double s,
                    const FourierGrid& grid) {
  require(s > 0.0 && s <= 2.0, "fourier norm: order must lie in (0, 2]");
  require(mu.dimension() == g.dimension(), "fourier norm: dimension mismatch");
  auto mean = mu.first_moment();
  const auto gm = g.mean();
  for (int c = 0; c < mu.dimension(); ++c) mean[c] -= gm[c];
  require_fourier_constraints(mu.total_weight() - g.mass(), mu.total_variation() + 1.0, mean,
                              first_moment_scale(mu) + 1.0, s);
  return fourier_sup([&](std::span<const double> xi) { return mu.transform(xi) - g(xi); },
                     mu.dimension(), s, grid);
}

namespace {

struct CutoffTable {
  QuadratureRule rule = gauss_legendre(64);
  double normalizer = 0.0;
  double lipschitz = 0.0;
};

double bump(double t) { return std::abs(t) >= 1.0 ? 0.0 : std::exp(-1.0 / (1.0 - t * t)); }

const CutoffTable& cutoff_table() {
  static const CutoffTable table = [] {
    CutoffTable t;
    for (std::size_t k = 0; k < t.rule.nodes.size(); ++k) {
      t.normalizer += t.rule.weights[k] * bump(t.rule.nodes[k]);
    }
    return t;
  }();
  return table;
}

}  // namespace

double cutoff(double r) {
  r = std::abs(r);
  if (r <= 1.0) return 1.0;
  if (r >= 2.0) return 0.0;
  const auto& table = cutoff_table();
  const double u = 2.0 * r - 3.0;
  // Integrate the bump over the shorter tail to avoid cancellation.
  const double lo = u <= 0.0 ? -1.0 : u;
  const double hi = u <= 0.0 ? u : 1.0;
  const double half = 0.5 * (hi - lo);
  double integral = 0.0;
  for (std::size_t k = 0; k < table.rule.nodes.size(); ++k) {
    integral += table.rule.weights[k] * half * bump(lo + half * (table.rule.nodes[k] + 1.0));
  }
  const double fraction = integral / table.normalizer;
  return std::clamp(u <= 0.0 ? 1.0 - fraction : fraction, 0.0, 1.0);
}

double cutoff_derivative(double r) {
  r = std::abs(r);
  if (r <= 1.0 || r >= 2.0) return 0.0;
  return -2.0 * bump(2.0 * r - 3.0) / cutoff_table().normalizer;
}

double cutoff_lipschitz_constant() {
  static const double value = [] {
    auto f = [](double r) { return cutoff(r) + r * std::abs(cutoff_derivative(r)); };
    double best = 1.0, arg = 1.0;
    for (int k = 0; k <= 20000; ++k) {
      const double r = 1.0 + k / 20000.0;
      if (f(r) > best) {
        best = f(r);
        arg = r;
      }
    }
    const double refined =
        golden_max(f, std::max(1.0, arg - 1e-4), std::min(2.0, arg + 1e-4), 1e-12);
    return std::max(best, refined);
  }();
  return value;
}

double toscani_modified_norm(const WeightedPointMeasure& h, int k, const FourierGrid& grid) {
  require(k >= 1, "modified fourier norm: k must be at least 1");
  const int d = h.dimension();
  // Multi-indices with |alpha| <= k - 1 and their moments.
  std::vector<std::vector<int>> alphas;
  std::vector<int> alpha(d, 0);
  auto enumerate = [&](auto&& self, int c, int budget) -> void {
    if (c == d) {
      alphas.push_back(alpha);
      return;
    }
    for (int a = 0; a <= budget; ++a) {
      alpha[c] = a;
      self(self, c + 1, budget - a);
    }
    alpha[c] = 0;
  };
  enumerate(enumerate, 0, k - 1);
  std::vector<Complex> coefficients;
  double moment_sum = 0.0;
  for (const auto& a : alphas) {
    const double m = h.moment(a);
    moment_sum += std::abs(m);
    int order = 0;
    double factorial = 1.0;
    for (int c = 0; c < d; ++c) {
      order += a[c];
      factorial *= std::tgamma(a[c] + 1.0);
    }
    // (-i)^order / alpha!
    static constexpr Complex kPowers[4] = {{1, 0}, {0, -1}, {-1, 0}, {0, 1}};
    coefficients.push_back(m * kPowers[order % 4] / factorial);
  }
  auto compensated = [&](std::span<const double> xi) {
    const double chi = cutoff(kac::norm(xi));
    Complex taylor = 0.0;
    if (chi > 0.0) {
      for (std::size_t t = 0; t < alphas.size(); ++t) {
        double mono = 1.0;
        for (int c = 0; c < d; ++c) mono *= std::pow(xi[c], alphas[t][c]);
        taylor += coefficients[t] * mono;
      }
    }
    return h.transform(xi) - chi * taylor;
  };
  const double sup = h.size() == 0 ? 0.0 : fourier_sup(compensated, d, k, grid);
  return sup + moment_sum;
}

// ---------------------------------------------------------------------------
// Negative Sobolev norms

double riesz_constant(int d, double s) {
  const double beta = s - 0.5 * d;
  require(beta > 0.0 && beta < 1.0, "sobolev norm: order must satisfy d/2 < s < d/2 + 1");
  return std::pow(kPi, 0.5 * d) * std::tgamma(1.0 - beta) /
         (beta * std::pow(4.0, beta) * std::tgamma(0.5 * d + beta));
}

namespace {

/// One summand sign * G(|xi|) * sum_k c_k exp(-i y_k . xi) of a signed
/// measure; G is absent for point measures.
struct Component {
  const std::function<double(double)>* envelope;
  const WeightedPointMeasure* shifts;
  double sign;
  double decay_radius;
};

double pair_sum_closed_form(const WeightedPointMeasure& a, const WeightedPointMeasure& b,
                            double two_beta) {
  KahanSum sum;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double r = distance(a.atom(i), b.atom(j));
      if (r > 0.0) sum.add(a.weight(i) * b.weight(j) * std::pow(r, two_beta));
    }
  }
  return sum.value();
}

/// Distances |y_i - z_j| with weights c_i c_j, merged for equal distances.
std::vector<std::pair<double, double>> pair_distances(const WeightedPointMeasure& a,
                                                      const WeightedPointMeasure& b) {
  std::vector<std::pair<double, double>> out;
  out.reserve(a.size() * b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double r = distance(a.atom(i), b.atom(j));
      if (r > 0.0) out.emplace_back(r, a.weight(i) * b.weight(j));
    }
  }
  return out;
}

/// sum c c (A(r rho) - 1) over precomputed pairs.
double pair_sum_angular(std::span<const std::pair<double, double>> pairs, double rho, int d) {
  double sum = 0.0;
  for (const auto& [r, w] : pairs) sum += w * (angular_average_cos(d, r * rho) - 1.0);
  return sum;
}

double max_extent(const std::vector<Component>& parts) {
  double r = 0.0;
  for (const auto& p : parts) {
    for (std::size_t a = 0; a < p.shifts->size(); ++a) {
      r = std::max(r, kac::norm(p.shifts->atom(a)));
    }
  }
  return 2.0 * r;
}

double sobolev_squared(const std::vector<Component>& parts, int d, double s) {
  const double beta = s - 0.5 * d;
  const double area = sphere_area(d);
  const double c = riesz_constant(d, s);
  double atomic_mass = 0.0;
  double total = 0.0;
  double cutoff_radius = 0.0;
  for (const auto& p : parts) {
    if (!p.envelope) {
      atomic_mass += p.sign * p.shifts->total_weight();
    } else {
      cutoff_radius = std::max(cutoff_radius, p.decay_radius);
    }
  }
  // Atomic-atomic pairs integrate in closed form over all of R^d.
  for (const auto& a : parts) {
    for (const auto& b : parts) {
      if (a.envelope || b.envelope) continue;
      total -= c * a.sign * b.sign * pair_sum_closed_form(*a.shifts, *b.shifts, 2.0 * beta);
    }
  }
  if (cutoff_radius == 0.0) {
    require(std::abs(atomic_mass) <= 1e-10 * std::max(1.0, total),
            "sobolev norm: measure must have zero mass");
    return std::max(total, 0.0);
  }
  // Remaining terms are radial after exact angular averaging:
  //   sum over pairs with a smooth factor of G_a G_b sum c c (A - 1)
  //   + (sum_a sign_a G_a m_a)^2.
  struct Pair {
    std::size_t i, j;
    double factor;
    std::vector<std::pair<double, double>> distances;
  };
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    for (std::size_t j = i; j < parts.size(); ++j) {
      if (!parts[i].envelope && !parts[j].envelope) continue;
      pairs.push_back({i, j, (i == j ? 1.0 : 2.0) * parts[i].sign * parts[j].sign,
                       pair_distances(*parts[i].shifts, *parts[j].shifts)});
    }
  }
  std::vector<double> envelopes(parts.size());
  auto integrand = [&](double rho) {
    double mass = 0.0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      envelopes[i] = parts[i].envelope ? (*parts[i].envelope)(rho) : 1.0;
      mass += parts[i].sign * envelopes[i] * parts[i].shifts->total_weight();
    }
    double value = 0.0;
    for (const auto& p : pairs) {
      const double factor = p.factor * envelopes[p.i] * envelopes[p.j];
      if (factor != 0.0) value += factor * pair_sum_angular(p.distances, rho, d);
    }
    return (value + mass * mass) * std::pow(rho, d - 1 - 2.0 * s);
  };
  const double extent = std::max(max_extent(parts), 1.0 / cutoff_radius);
  const double knee = std::min(1.0 / extent, cutoff_radius);
  std::vector<double> edges;
  const double floor = knee * 1e-7;
  for (int k = 0; k <= 28; ++k) edges.push_back(floor * std::pow(1e7, k / 28.0));
  const double width = std::min(0.5, 0.5 / extent);
  const int panels = static_cast<int>(std::ceil((cutoff_radius - knee) / width));
  for (int k = 1; k <= panels; ++k) {
    edges.push_back(knee + (cutoff_radius - knee) * k / panels);
  }
  auto integrate = [&](int points) {
    const auto rule = composite_gauss(edges, points);
    KahanSum sum;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      sum.add(rule.weights[k] * integrand(rule.nodes[k]));
    }
    return sum.value();
  };
  const double coarse = integrate(10);
  const double fine = integrate(16);
  const double tail = atomic_mass * atomic_mass * std::pow(cutoff_radius, d - 2.0 * s) /
                      (2.0 * s - d);
  total += area * (fine + tail);
  require(std::abs(fine - coarse) * area <= 1e-8 * std::max(1.0, std::abs(total)),
          "sobolev norm: radial quadrature did not converge");
  return std::max(total, 0.0);
}

}  // namespace

double sobolev_neg_norm_squared(const WeightedPointMeasure& h, double s) {
  const int d = h.dimension();
  riesz_constant(d, s);
  require(std::abs(h.total_weight()) <= 1e-10 * std::max(1.0, h.total_variation()),
          "sobolev norm: measure must have zero mass");
  return std::max(-riesz_constant(d, s) * pair_sum_closed_form(h, h, 2.0 * (s - 0.5 * d)), 0.0);
}

double sobolev_neg_norm(const WeightedPointMeasure& h, double s) {
  return std::sqrt(sobolev_neg_norm_squared(h, s));
}

double sobolev_neg_norm_squared(const WeightedPointMeasure& mu, const CharacteristicFunction& g,
                                double s) {
  require(mu.dimension() == g.dimension(), "sobolev norm: dimension mismatch");
  require(std::abs(mu.total_weight() - g.mass()) <= 1e-10 * std::max(1.0, mu.total_variation()),
          "sobolev norm: measure must have zero mass");
  if (g.atomic()) return sobolev_neg_norm_squared(mu.minus(g.shifts()), s);
  std::function<double(double)> envelope = [&g](double r) { return g.envelope(r); };
  const std::vector<Component> parts{{nullptr, &mu, 1.0, 0.0},
                                     {&envelope, &g.shifts(), -1.0, g.decay_radius()}};
  return sobolev_squared(parts, mu.dimension(), s);
}

double sobolev_neg_norm(const WeightedPointMeasure& mu, const CharacteristicFunction& g,
                        double s) {
  return std::sqrt(sobolev_neg_norm_squared(mu, g, s));
}

double sobolev_neg_norm(const CharacteristicFunction& g1, const CharacteristicFunction& g2,
                        double s) {
  require(g1.dimension() == g2.dimension(), "sobolev norm: dimension mismatch");
  require(std::abs(g1.mass() - g2.mass()) <= 1e-10, "sobolev norm: measure must have zero mass");
  std::function<double(double)> e1 = [&g1](double r) { return g1.envelope(r); };
  std::function<double(double)> e2 = [&g2](double r) { return g2.envelope(r); };
  std::vector<Component> parts{
      {g1.atomic() ? nullptr : &e1, &g1.shifts(), 1.0, g1.atomic() ? 0.0 : g1.decay_radius()},
      {g2.atomic() ? nullptr : &e2, &g2.shifts(), -1.0, g2.atomic() ? 0.0 : g2.decay_radius()}};
  return std::sqrt(sobolev_squared(parts, g1.dimension(), s));
}

// ---------------------------------------------------------------------------
// Comparison inequalities

bool ComparisonReport::all_pass() const { return violations() == 0; }

std::size_t ComparisonReport::violations() const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const ComparisonRow& r) { return !r.pass; }));
}

namespace {

/// min over eps > 0 of c1 eps + min_R (a R^{-k} + b(eps) R^{p}) where
/// b(eps) = c eps^{-gamma}.
double optimize_truncation(double c1, double a, int k, double p, double c, double gamma) {
  auto inner = [&](double eps) {
    const double b = c * std::pow(eps, -gamma);
    const double r = std::pow(k * a / (p * b), 1.0 / (k + p));
    return c1 * eps + a * std::pow(r, -k) + b * std::pow(r, p);
  };
  double arg = 0.0;
  golden_max([&](double t) { return -inner(std::exp(t)); }, -60.0, 60.0, 1e-10, &arg);
  return inner(std::exp(arg));
}

double gaussian_first_absolute_moment(int d) {
  // E|Z| for a standard Gaussian vector in R^d.
  return std::sqrt(2.0) * std::tgamma(0.5 * (d + 1)) / std::tgamma(0.5 * d);
}

}  // namespace

double sobolev_w1_bound(int d, double s, int k, double moment, double sobolev) {
  require(s > std::max(0.5 * d, 1.0) && s < 0.5 * d + 1.0,
          "sobolev W1 bound: order must lie in (max(d/2, 1), d/2 + 1)");
  if (sobolev <= 0.0) return 0.0;
  const double lip = cutoff_lipschitz_constant();
  const double c1 = 2.0 * lip * gaussian_first_absolute_moment(d);
  const double c2 = std::pow(2.0 * kPi, -0.5 * d) * lip *
                    std::sqrt(ball_volume(d) * std::pow(2.0, d)) *
                    std::pow((s - 1.0) / std::exp(1.0), 0.5 * (s - 1.0));
  return optimize_truncation(c1, 2.0 * moment, k, 0.5 * d, c2 * sobolev, s - 1.0);
}

double fourier_w1_bound(int d, double s, int k, double moment, double fourier) {
  require(s > 0.0, "fourier W1 bound: order must be positive");
  if (fourier <= 0.0) return 0.0;
  const double lip = cutoff_lipschitz_constant();
  const double c1 = 2.0 * lip * gaussian_first_absolute_moment(d);
  const double c3 = std::pow(2.0 * kPi, -d) * lip * ball_volume(d) * std::pow(2.0, d) *
                    sphere_area(d) * std::pow(2.0, 0.5 * (s + d - 3.0)) *
                    std::tgamma(0.5 * (s + d - 1.0));
  return optimize_truncation(c1, 2.0 * moment, k, d, c3 * fourier, s + d - 1.0);
}

ComparisonReport check_comparisons(const WeightedPointMeasure& f, const WeightedPointMeasure& g,
                                   const ComparisonOptions& options) {
  require(f.dimension() == g.dimension(), "comparisons: dimension mismatch");
  require(options.k >= options.q - 1, "comparisons: need k >= q - 1");
  const int d = f.dimension();
  const double s_sob = options.sobolev_order > 0.0 ? options.sobolev_order
                                                   : (d == 1 ? 1.25 : 0.5 * d + 0.5);
  ComparisonReport report;
  auto add = [&](std::string item, double lhs, double rhs) {
    const bool pass = lhs <= rhs + options.slack * (1.0 + std::abs(rhs));
    report.rows.push_back({std::move(item), lhs, rhs, rhs - lhs, pass});
  };
  const double w1 = wasserstein_empirical(f, g, 1);
  const double wq = wasserstein_empirical(f, g, options.q);
  const double q = options.q;
  const double k = options.k;
  const double moment =
      std::max(f.weighted_moment(k + 1.0), g.weighted_moment(k + 1.0));
  add("i.lower", w1, wq);
  add("i.upper", wq,
      std::pow(2.0, (k + 1.0) / q) * std::pow(moment, (q - 1.0) / (q * k)) *
          std::pow(w1, (1.0 / q) * (1.0 - (q - 1.0) / k)));
  const auto h = f.minus(g);
  for (double s : options.fourier_orders) {
    add("ii.s=" + std::to_string(s).substr(0, 4), fourier_norm(h, s, options.grid),
        std::pow(2.0, 1.0 - s) * std::pow(w1, s));
  }
  const double fourier1 = fourier_norm(h, 1.0, options.grid);
  const double sob_sq = sobolev_neg_norm_squared(h, s_sob);
  add("iii", sob_sq,
      8.0 * sphere_area(d) / (2.0 * s_sob - d) *
          std::pow((2.0 * s_sob - d) / (4.0 * (d + 2.0 - 2.0 * s_sob)), s_sob - 0.5 * d) *
          std::pow(fourier1, 2.0 * s_sob - d));
  add("iv", w1, fourier_w1_bound(d, 1.0, options.k, moment, fourier1));
  if (s_sob > 1.0) {
    add("v", w1, sobolev_w1_bound(d, s_sob, options.k, moment, std::sqrt(sob_sq)));
  }
  return report;
}

void write_report_csv(std::ostream& out, const ComparisonReport& report) {
  out << "item,lhs,rhs,slack,pass\n";
  out.precision(17);
  for (const auto& r : report.rows) {
    out << r.item << ',' << r.lhs << ',' << r.rhs << ',' << r.slack << ','
        << (r.pass ? "true" : "false") << '\n';
  }
}

}  // namespace kac::metrics
