// Copyright 2026 The kacchaos Authors
// SPDX-License-Identifier: Apache-2.0
#include "kac/entropy.hpp"

#include <algorithm>
#include <array>
#include <boost/math/special_functions/digamma.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>

#include "kac/error.hpp"
#include "kac/jump.hpp"
#include "kac/numerics.hpp"
#include "kac/rng.hpp"

namespace kac::entropy {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::size_t kChunk = 10000;

using limit::GridDensity;
using limit::Representation;

void require_velocity_grid(const GridDensity& f, const char* what) {
  require(f.representation() == Representation::kVelocityGrid,
          std::string(what) + ": needs a velocity grid");
}

/// log gamma_E(v) for the centred Gaussian with per-coordinate variance E/d.
double log_gaussian(std::span<const double> v, double var) {
  double r2 = 0.0;
  for (double x : v) r2 += x * x;
  return -0.5 * static_cast<double>(v.size()) * std::log(2.0 * kPi * var) - 0.5 * r2 / var;
}

void unflatten(const GridDensity& f, std::size_t flat, std::span<double> v) {
  const std::size_t n = f.nodes();
  for (int a = f.dimension() - 1; a >= 0; --a) {
    v[a] = f.coordinate(flat % n);
    flat /= n;
  }
}

/// Tensor-product cubic interpolation of log f on a velocity grid. Exact for
/// log-quadratic densities.
class LogInterpolant {
 public:
  LogInterpolant(const GridDensity& f, double floor_ratio) : f_(f) {
    const auto values = f.values();
    const double peak = *std::max_element(values.begin(), values.end());
    require(peak > 0.0, "entropy production: density is not positive anywhere");
    floor_ = floor_ratio * peak;
    log_.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      log_[i] = std::log(std::max(values[i], floor_));
      if (values[i] < floor_) floored_ = true;
    }
  }

  /// log f(v); clamps v into the box and reports it through `clamped`.
  double operator()(std::span<const double> v, bool& clamped) const {
    const int d = f_.dimension();
    const std::size_t n = f_.nodes();
    const double h = f_.spacing();
    const double last = static_cast<double>(n - 1);
    std::array<std::size_t, 3> base{};
    std::array<std::array<double, 4>, 3> w{};
    for (int a = 0; a < d; ++a) {
      double t = (v[a] + f_.extent()) / h;
      if (t < 0.0 || t > last) {
        clamped = true;
        t = std::clamp(t, 0.0, last);
      }
      const long i = std::clamp<long>(static_cast<long>(t) - 1, 0, static_cast<long>(n) - 4);
      base[a] = static_cast<std::size_t>(i);
      for (int p = 0; p < 4; ++p) {
        double basis = 1.0;
        for (int q = 0; q < 4; ++q) {
          if (q != p) basis *= (t - static_cast<double>(i + q)) / static_cast<double>(p - q);
        }
        w[a][p] = basis;
      }
    }
    double sum = 0.0;
    const int corners = 1 << (2 * d);
    for (int c = 0; c < corners; ++c) {
      double weight = 1.0;
      std::size_t flat = 0;
      for (int a = 0; a < d; ++a) {
        const int p = (c >> (2 * a)) & 3;
        weight *= w[a][p];
        flat = flat * n + base[a] + static_cast<std::size_t>(p);
      }
      sum += weight * log_[flat];
    }
    return sum;
  }

  bool floored() const { return floored_; }

 private:
  const GridDensity& f_;
  double floor_ = 0.0;
  bool floored_ = false;
  std::vector<double> log_;
};

/// Draws from the piecewise-constant density that puts mass f(v_k) h^d on
/// the cell centred at node k.
class CellSampler {
 public:
  explicit CellSampler(const GridDensity& f) : f_(f) {
    cdf_.resize(f.values().size());
    double total = 0.0;
    for (std::size_t i = 0; i < cdf_.size(); ++i) {
      total += std::max(0.0, f.values()[i]);
      cdf_[i] = total;
    }
    require(total > 0.0, "entropy production: density has no mass");
  }

  void draw(std::span<double> v, RandomStream& rng) const {
    const double u = rng.uniform() * cdf_.back();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    const auto flat = static_cast<std::size_t>(std::min<std::ptrdiff_t>(
        it - cdf_.begin(), static_cast<std::ptrdiff_t>(cdf_.size()) - 1));
    unflatten(f_, flat, v);
    for (double& x : v) x += f_.spacing() * (rng.uniform() - 0.5);
  }

 private:
  const GridDensity& f_;
  std::vector<double> cdf_;
};

}  // namespace

double relative_entropy(const GridDensity& f, double energy) {
  require_velocity_grid(f, "relative_entropy");
  require(energy > 0.0, "relative_entropy: energy must be positive");
  const int d = f.dimension();
  const double var = energy / d;
  require(f.extent() >= 8.0 * std::sqrt(var) * (1.0 - 1e-9),
          "relative_entropy: grid must cover 8 standard deviations of the Maxwellian");
  KahanSum sum;
  std::vector<double> v(d);
  for (std::size_t flat = 0; flat < f.values().size(); ++flat) {
    const double x = f.values()[flat];
    require(x >= -1e-12, "relative_entropy: negative density value");
    if (x <= 0.0) continue;
    unflatten(f, flat, v);
    sum.add(x * (std::log(x) - log_gaussian(v, var)));
  }
  return sum.value() * std::pow(f.spacing(), d);
}

double relative_entropy(const limit::PolarDensity& f, double energy, int mu_nodes,
                        double negative_tolerance) {
  require(energy > 0.0, "relative_entropy: energy must be positive");
  require(f.nodes >= 2, "relative_entropy: empty polar density");
  const int d = f.d;
  require(f.max_degree == 0 || d == 3, "relative_entropy: angular modes need d = 3");
  const double var = energy / d;
  require(f.r_max >= 8.0 * std::sqrt(var) * (1.0 - 1e-9),
          "relative_entropy: grid must cover 8 standard deviations of the Maxwellian");
  const double dr = f.spacing();
  const auto mu_rule = gauss_legendre(f.max_degree == 0 ? 1 : mu_nodes);
  std::vector<std::vector<double>> legendre_table(mu_rule.nodes.size());
  for (std::size_t q = 0; q < mu_rule.nodes.size(); ++q) {
    for (int l = 0; l <= f.max_degree; l += 2) {
      legendre_table[q].push_back(legendre(l, mu_rule.nodes[q]));
    }
  }
  const std::size_t modes = static_cast<std::size_t>(f.max_degree / 2 + 1);
  double peak = 0.0;
  for (std::size_t i = 0; i < f.nodes; ++i) peak = std::max(peak, f(dr * static_cast<double>(i), 1.0));
  for (std::size_t i = 0; i < f.nodes; ++i) peak = std::max(peak, f(dr * static_cast<double>(i), 0.0));
  const double floor = -(1e-12 + negative_tolerance * peak);
  KahanSum sum;
  std::array<double, 2> inner{};
  for (std::size_t i = 0; i < f.nodes; ++i) {
    const double r = dr * static_cast<double>(i);
    const double tw = (i == 0 || i + 1 == f.nodes) ? 0.5 : 1.0;
    const double log_g = -0.5 * d * std::log(2.0 * kPi * var) - 0.5 * r * r / var;
    double shell = 0.0;
    for (std::size_t q = 0; q < mu_rule.nodes.size(); ++q) {
      double x = 0.0;
      for (std::size_t m = 0; m < modes; ++m) x += f.values[m * f.nodes + i] * legendre_table[q][m];
      require(x >= floor, "relative_entropy: negative density value");
      if (x <= 0.0) continue;
      shell += mu_rule.weights[q] * x * (std::log(x) - log_g);
    }
    // The angular rule integrates over mu in [-1, 1] (total weight 2).
    const double angular = f.max_degree == 0 ? sphere_area(d) / 2.0 : 2.0 * kPi;
    if (i < 2) inner[i] = angular * shell;
    sum.add(tw * dr * std::pow(r, d - 1) * angular * shell);
  }
  // Euler-Maclaurin corrections at r = 0 for the odd integrand r^(d-1) phi(r).
  const double h2 = dr * dr;
  if (d == 2) {
    const double curvature = 2.0 * (inner[1] - inner[0]) / h2;
    sum.add(h2 / 12.0 * inner[0] - h2 * h2 / 240.0 * curvature);
  } else if (d == 3) {
    sum.add(-h2 * h2 / 360.0 * inner[0]);
  }
  return sum.value();
}

double fisher_information(const GridDensity& f) {
  require_velocity_grid(f, "fisher_information");
  const int d = f.dimension();
  const std::size_t n = f.nodes();
  require(n >= 8, "fisher_information: grid too small");
  const double h = f.spacing();
  const auto values = f.values();
  std::vector<std::size_t> stride(d);
  for (int a = d - 1, s = 1; a >= 0; --a) {
    stride[a] = static_cast<std::size_t>(s);
    s *= static_cast<int>(n);
  }
  constexpr std::array<double, 3> kCoef{45.0, -9.0, 1.0};
  KahanSum sum;
  std::vector<std::size_t> idx(d);
  for (std::size_t flat = 0; flat < values.size(); ++flat) {
    std::size_t rest = flat;
    bool interior = true;
    for (int a = d - 1; a >= 0; --a) {
      idx[a] = rest % n;
      rest /= n;
      if (idx[a] < 3 || idx[a] + 3 >= n) interior = false;
    }
    if (!interior) continue;
    const double x = values[flat];
    require(x > 0.0, "fisher_information: nonpositive interior density value");
    double grad2 = 0.0;
    for (int a = 0; a < d; ++a) {
      double g = 0.0;
      for (int k = 1; k <= 3; ++k) {
        g += kCoef[k - 1] * (values[flat + k * stride[a]] - values[flat - k * stride[a]]);
      }
      g /= 60.0 * h;
      grad2 += g * g;
    }
    sum.add(grad2 / x);
  }
  return sum.value() * std::pow(h, d);
}

ProductionEstimate entropy_production(const GridDensity& f, const CollisionKernel& kernel,
                                      const ProductionOptions& options) {
  require_velocity_grid(f, "entropy_production");
  const int d = f.dimension();
  require(d == kernel.dimension(), "entropy_production: dimension mismatch");
  require(d >= 2 && d <= 3, "entropy_production: d must be 2 or 3");
  require(options.samples >= 2, "entropy_production: need at least two samples");
  require(f.nodes() >= 4, "entropy_production: grid too small");

  const LogInterpolant log_f(f, options.floor);
  const CellSampler sampler(f);
  const std::size_t chunks = (options.samples + kChunk - 1) / kChunk;
  struct Partial {
    double sum = 0.0;
    double sum_sq = 0.0;
    bool clamped = false;
  };
  std::vector<Partial> partial(chunks);
  jump::parallel_for(chunks, options.threads, [&](std::size_t c) {
    RandomStream rng(options.seed, c, Channel::kAuxiliary);
    const std::size_t count = std::min(kChunk, options.samples - c * kChunk);
    Velocity v(d), w(d), u(d);
    Partial p;
    for (std::size_t s = 0; s < count; ++s) {
      sampler.draw(v, rng);
      sampler.draw(w, rng);
      for (int a = 0; a < d; ++a) u[a] = v[a] - w[a];
      const double speed = kac::norm(u);
      if (speed == 0.0) continue;
      for (double& x : u) x /= speed;
      const Velocity sigma = sample_sigma(kernel, u, rng);
      const auto [vp, wp] = collide_pair(v, w, sigma);
      bool clamped = false;
      const double log_ratio =
          log_f(vp, clamped) + log_f(wp, clamped) - log_f(v, clamped) - log_f(w, clamped);
      p.clamped |= clamped;
      const double term = kernel.gamma(speed) * std::expm1(log_ratio) * log_ratio;
      p.sum += term;
      p.sum_sq += term * term;
    }
    partial[c] = p;
  });
  double sum = 0.0, sum_sq = 0.0;
  bool clamped = log_f.floored();
  for (const auto& p : partial) {
    sum += p.sum;
    sum_sq += p.sum_sq;
    clamped |= p.clamped;
  }
  const auto n = static_cast<double>(options.samples);
  const double scale = 0.25 * kernel.angular_mass();
  const double mean = sum / n;
  const double var = std::max(0.0, sum_sq / n - mean * mean) * n / (n - 1.0);
  ProductionEstimate out;
  out.value = scale * mean;
  out.std_error = scale * std::sqrt(var / n);
  out.samples = options.samples;
  out.clamped = clamped;
  return out;
}

GridDensity kde_grid(const metrics::WeightedPointMeasure& cloud, double extent, std::size_t nodes,
                     double bandwidth) {
  const int d = cloud.dimension();
  require(bandwidth > 0.0, "kde_grid: bandwidth must be positive");
  require(cloud.size() > 0, "kde_grid: empty cloud");
  GridDensity g = GridDensity::velocity_grid([](std::span<const double>) { return 0.0; }, d,
                                             extent, nodes);
  auto values = g.values();
  const double h = g.spacing();
  const double reach = 4.0 * bandwidth;
  const double norm = std::pow(2.0 * kPi * bandwidth * bandwidth, -0.5 * d);
  std::vector<std::size_t> lo(d), hi(d), idx(d);
  for (std::size_t s = 0; s < cloud.size(); ++s) {
    const auto x = cloud.atom(s);
    const double w = cloud.weight(s);
    bool empty = false;
    for (int a = 0; a < d; ++a) {
      const double tlo = std::ceil((x[a] - reach + extent) / h);
      const double thi = std::floor((x[a] + reach + extent) / h);
      if (thi < 0.0 || tlo > static_cast<double>(nodes - 1)) empty = true;
      lo[a] = static_cast<std::size_t>(std::max(0.0, tlo));
      hi[a] = static_cast<std::size_t>(std::min(static_cast<double>(nodes - 1), thi));
    }
    if (empty) continue;
    idx = lo;
    while (true) {
      double r2 = 0.0;
      std::size_t flat = 0;
      for (int a = 0; a < d; ++a) {
        r2 += std::pow(g.coordinate(idx[a]) - x[a], 2);
        flat = flat * nodes + idx[a];
      }
      values[flat] += w * norm * std::exp(-0.5 * r2 / (bandwidth * bandwidth));
      int a = d - 1;
      while (a >= 0 && idx[a] == hi[a]) {
        idx[a] = lo[a];
        --a;
      }
      if (a < 0) break;
      ++idx[a];
    }
  }
  return g;
}

ProductionEstimate entropy_production(const metrics::WeightedPointMeasure& cloud,
                                      const CollisionKernel& kernel,
                                      const ProductionOptions& options, double bandwidth) {
  const int d = cloud.dimension();
  require(cloud.is_probability(1e-9), "entropy_production: cloud must be a probability measure");
  double var = 0.0, reach = 0.0;
  for (std::size_t s = 0; s < cloud.size(); ++s) {
    for (double x : cloud.atom(s)) {
      var += cloud.weight(s) * x * x;
      reach = std::max(reach, std::abs(x));
    }
  }
  const Velocity m = cloud.first_moment();
  for (double x : m) var -= x * x;
  var /= d;
  if (bandwidth <= 0.0) {
    bandwidth = std::sqrt(var) *
                std::pow(4.0 / ((d + 2.0) * static_cast<double>(cloud.size())), 1.0 / (d + 4.0));
  }
  const std::size_t nodes = d == 3 ? 41 : 161;
  const GridDensity g = kde_grid(cloud, reach + 5.0 * bandwidth, nodes, bandwidth);
  return entropy_production(g, kernel, options);
}

KnnEstimate marginal_entropy_estimate(const metrics::WeightedPointMeasure& samples, double energy,
                                      const KnnOptions& options) {
  const int d = samples.dimension();
  const std::size_t n = samples.size();
  require(n >= 500, "marginal_entropy_estimate: need at least 500 samples");
  require(energy > 0.0, "marginal_entropy_estimate: energy must be positive");
  require(options.k >= 1 && static_cast<std::size_t>(options.k) < n,
          "marginal_entropy_estimate: invalid k");
  require(options.confidence > 0.0 && options.confidence < 1.0,
          "marginal_entropy_estimate: confidence must lie in (0, 1)");
  const auto k = static_cast<std::size_t>(options.k);

  // Sorting makes the estimate independent of the input order.
  std::vector<std::vector<double>> x(n);
  for (std::size_t s = 0; s < n; ++s) x[s].assign(samples.atom(s).begin(), samples.atom(s).end());
  std::sort(x.begin(), x.end());

  KnnEstimate out;
  out.samples = n;
  if (std::adjacent_find(x.begin(), x.end()) != x.end()) {
    out.jittered = true;
    RandomStream rng(options.seed, 0, Channel::kAuxiliary);
    for (auto& p : x) {
      for (double& c : p) c += 1e-12 * (1.0 + std::abs(c)) * rng.normal();
    }
  }

  // k-th neighbour distances by brute force.
  std::vector<double> kth(n);
  std::vector<double> best(k);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(best.begin(), best.end(), std::numeric_limits<double>::infinity());
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double r2 = 0.0;
      for (int a = 0; a < d; ++a) {
        const double diff = x[i][a] - x[j][a];
        r2 += diff * diff;
      }
      if (r2 < best[k - 1]) {
        std::size_t pos = k - 1;
        while (pos > 0 && best[pos - 1] > r2) {
          best[pos] = best[pos - 1];
          --pos;
        }
        best[pos] = r2;
      }
    }
    kth[i] = 0.5 * std::log(best[k - 1]);
  }

  const double var = energy / d;
  std::vector<double> contribution(n);
  for (std::size_t i = 0; i < n; ++i) {
    contribution[i] = -d * kth[i] - log_gaussian(x[i], var);
  }
  const double constant = -(boost::math::digamma(static_cast<double>(n)) -
                            boost::math::digamma(static_cast<double>(k)) +
                            std::log(metrics::ball_volume(d)));
  out.value = constant + kac::mean(contribution);

  RandomStream rng(options.seed, 0, Channel::kBootstrap);
  std::vector<double> boot(options.bootstrap);
  for (double& b : boot) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += contribution[rng.below(n)];
    b = constant + sum / static_cast<double>(n);
  }
  if (boot.size() >= 2) {
    std::sort(boot.begin(), boot.end());
    const double tail = 0.5 * (1.0 - options.confidence);
    const auto pick = [&](double q) {
      const double pos = q * static_cast<double>(boot.size() - 1);
      const auto lo = static_cast<std::size_t>(pos);
      const std::size_t hi = std::min(lo + 1, boot.size() - 1);
      return boot[lo] + (pos - static_cast<double>(lo)) * (boot[hi] - boot[lo]);
    };
    out.lower = pick(tail);
    out.upper = pick(1.0 - tail);
    out.std_error = std::sqrt(kac::variance(boot));
  } else {
    out.lower = out.upper = out.value;
  }
  return out;
}

void write_report_header(std::ostream& out) {
  out << "time,relative_entropy,fisher,production,production_se,marginal,marginal_lower,"
         "marginal_upper\n";
}

void write_report_row(std::ostream& out, const EntropyReport& r) {
  const auto precision = out.precision(17);
  out << r.time << ',' << r.relative_entropy << ',';
  if (r.fisher) out << *r.fisher;
  out << ',';
  if (r.production) out << r.production->value << ',' << r.production->std_error;
  else out << ',';
  out << ',';
  if (r.marginal) out << r.marginal->value << ',' << r.marginal->lower << ',' << r.marginal->upper;
  else out << ",,";
  out << '\n';
  out.precision(precision);
}

}  // namespace kac::entropy
