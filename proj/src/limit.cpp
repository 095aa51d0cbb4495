// Copyright 2026 The kacchaos Authors
// SPDX-License-Identifier: Apache-2.0
#include "kac/limit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <numeric>
#include <numbers>
#include <ostream>

#include "kac/error.hpp"
#include "kac/jump.hpp"
#include "kac/numerics.hpp"
#include "json.hpp"

namespace kac::limit {

namespace {

constexpr double kPi = std::numbers::pi;

/// Eight-point Lagrange interpolation of an even function sampled on
/// x_k = k h, k = 0..n-1, reflecting the stencil through the origin. Zero
/// beyond the last node.
double even_interpolate(std::span<const double> y, double h, double x) {
  constexpr long kWidth = 8;
  const auto n = static_cast<long>(y.size());
  const double t = std::abs(x) / h;
  const double last = static_cast<double>(n - 1);
  if (t > last * (1.0 + 1e-12)) return 0.0;
  const long width = std::min(kWidth, n);
  const long i = static_cast<long>(t);
  if (static_cast<double>(i) == t && i < n) return y[i];
  const long i0 = std::min<long>(i - (width / 2 - 1), n - width);
  // Barycentric form: basis_a = prod_b (t - x_b) / ((t - x_a) prod_{b != a} (a - b)).
  static const std::array<double, kWidth> kDenominators = [] {
    std::array<double, kWidth> out{};
    for (long a = 0; a < kWidth; ++a) {
      double p = 1.0;
      for (long b = 0; b < kWidth; ++b) {
        if (b != a) p *= static_cast<double>(a - b);
      }
      out[a] = p;
    }
    return out;
  }();
  if (width == kWidth) {
    double prod = 1.0;
    std::array<double, kWidth> offset{};
    for (long a = 0; a < kWidth; ++a) {
      offset[a] = t - static_cast<double>(i0 + a);
      prod *= offset[a];
    }
    double result = 0.0;
    for (long a = 0; a < kWidth; ++a) {
      result += y[std::labs(i0 + a)] / (offset[a] * kDenominators[a]);
    }
    return prod * result;
  }
  double result = 0.0;
  for (long a = 0; a < width; ++a) {
    double basis = 1.0;
    for (long b = 0; b < width; ++b) {
      if (b != a) basis *= (t - static_cast<double>(i0 + b)) / static_cast<double>(a - b);
    }
    result += basis * y[std::labs(i0 + a)];
  }
  return result;
}

std::size_t power(std::size_t base, int exponent) {
  std::size_t r = 1;
  for (int i = 0; i < exponent; ++i) r *= base;
  return r;
}

std::size_t checked_center(std::size_t n) {
  require(n % 2 == 1, "full Fourier grid needs an odd node count");
  return (n - 1) / 2;
}

/// Unit vectors completing u to an orthonormal basis of R^d (d = 2 or 3).
std::vector<Velocity> orthonormal_complement(std::span<const double> u) {
  const int d = static_cast<int>(u.size());
  if (d == 2) return {Velocity{-u[1], u[0]}};
  Velocity a = std::abs(u[0]) < 0.9 ? Velocity{1.0, 0.0, 0.0} : Velocity{0.0, 1.0, 0.0};
  const double p = kac::dot(a, u);
  for (int i = 0; i < 3; ++i) a[i] -= p * u[i];
  const double na = kac::norm(a);
  for (double& x : a) x /= na;
  Velocity b{u[1] * a[2] - u[2] * a[1], u[2] * a[0] - u[0] * a[2], u[0] * a[1] - u[1] * a[0]};
  return {a, b};
}

void append_number(std::string& line, double x) {
  char buffer[32];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, x);
  line.append(buffer, result.ptr);
}

}  // namespace

const char* representation_name(Representation r) {
  switch (r) {
    case Representation::kVelocityGrid:
      return "velocity_grid";
    case Representation::kRadialFourier:
      return "radial_fourier";
    case Representation::kAxisymmetricFourier:
      return "axisymmetric_fourier";
    case Representation::kFullFourier:
      return "full_fourier";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// GridDensity

GridDensity::GridDensity(Representation r, int d, double extent, std::size_t nodes)
    : representation_(r), d_(d), extent_(extent), nodes_(nodes) {
  require(d >= 1, "grid density: dimension must be positive");
  require(extent > 0.0 && std::isfinite(extent), "grid density: extent must be positive");
  require(nodes >= 2, "grid density: need at least two nodes");
  const bool box = r == Representation::kVelocityGrid || r == Representation::kFullFourier;
  spacing_ = (box ? 2.0 * extent : extent) / static_cast<double>(nodes - 1);
}

GridDensity GridDensity::radial_fourier(const std::function<double(double)>& profile, int d,
                                        double extent, std::size_t nodes) {
  GridDensity g(Representation::kRadialFourier, d, extent, nodes);
  g.values_.resize(nodes);
  for (std::size_t k = 0; k < nodes; ++k) g.values_[k] = profile(g.coordinate(k));
  require(std::abs(g.values_[0] - 1.0) < 1e-12, "radial Fourier profile must equal 1 at 0");
  g.values_[0] = 1.0;
  return g;
}

GridDensity GridDensity::axisymmetric_fourier(
    const std::function<double(double, double)>& profile, int max_degree, double extent,
    std::size_t nodes) {
  require(max_degree >= 0 && max_degree % 2 == 0, "axisymmetric form: degree must be even");
  GridDensity g(Representation::kAxisymmetricFourier, 3, extent, nodes);
  g.max_degree_ = max_degree;
  const std::size_t modes = g.modes();
  g.values_.assign(modes * nodes, 0.0);
  const auto rule = gauss_legendre(std::max(64, 2 * max_degree + 16));
  for (std::size_t k = 0; k < nodes; ++k) {
    const double rho = g.coordinate(k);
    std::vector<double> samples(rule.nodes.size());
    for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = profile(rho, rule.nodes[i]);
    for (std::size_t m = 0; m < modes; ++m) {
      const int l = 2 * static_cast<int>(m);
      double sum = 0.0;
      for (std::size_t i = 0; i < samples.size(); ++i) {
        sum += rule.weights[i] * samples[i] * legendre(l, rule.nodes[i]);
      }
      g.values_[m * nodes + k] = 0.5 * (2 * l + 1) * sum;
    }
  }
  g.enforce_normalization();
  return g;
}

GridDensity GridDensity::full_fourier(
    const std::function<double(std::span<const double>)>& profile, int d, double extent,
    std::size_t nodes) {
  require(d == 2 || d == 3, "full Fourier grid: d must be 2 or 3");
  GridDensity g(Representation::kFullFourier, d, extent, nodes);
  checked_center(nodes);
  const std::size_t total = power(nodes, d);
  g.values_.resize(total);
  Velocity xi(d);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rest = flat;
    for (int a = d - 1; a >= 0; --a) {
      xi[a] = g.coordinate(rest % nodes);
      rest /= nodes;
    }
    g.values_[flat] = profile(xi);
  }
  g.enforce_normalization();
  return g;
}

GridDensity GridDensity::velocity_grid(
    const std::function<double(std::span<const double>)>& density, int d, double extent,
    std::size_t nodes) {
  GridDensity g(Representation::kVelocityGrid, d, extent, nodes);
  const std::size_t total = power(nodes, d);
  g.values_.resize(total);
  Velocity v(d);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rest = flat;
    for (int a = d - 1; a >= 0; --a) {
      v[a] = g.coordinate(rest % nodes);
      rest /= nodes;
    }
    g.values_[flat] = density(v);
  }
  return g;
}

double GridDensity::coordinate(std::size_t k) const {
  const double x = static_cast<double>(k) * spacing_;
  const bool box = representation_ == Representation::kVelocityGrid ||
                   representation_ == Representation::kFullFourier;
  return box ? x - extent_ : x;
}

double GridDensity::mode(int l, double rho) const {
  require(representation_ == Representation::kRadialFourier ||
              representation_ == Representation::kAxisymmetricFourier,
          "mode: needs a radial or axisymmetric Fourier form");
  require(l >= 0 && l % 2 == 0 && l <= max_degree_, "mode: degree out of range");
  const auto m = static_cast<std::size_t>(l / 2);
  return even_interpolate(std::span<const double>(values_).subspan(m * nodes_, nodes_), spacing_, rho);
}

double GridDensity::fourier_value(std::span<const double> xi) const {
  require(static_cast<int>(xi.size()) == d_, "fourier_value: dimension mismatch");
  switch (representation_) {
    case Representation::kRadialFourier:
      return mode(0, kac::norm(xi));
    case Representation::kAxisymmetricFourier: {
      const double rho = kac::norm(xi);
      const double mu = rho > 0.0 ? xi[d_ - 1] / rho : 1.0;
      double sum = 0.0;
      for (int l = 0; l <= max_degree_; l += 2) sum += mode(l, rho) * legendre(l, mu);
      return sum;
    }
    case Representation::kFullFourier: {
      // Multilinear interpolation; zero outside the box.
      std::vector<std::size_t> base(d_);
      std::vector<double> frac(d_);
      for (int a = 0; a < d_; ++a) {
        const double t = (xi[a] + extent_) / spacing_;
        const double last = static_cast<double>(nodes_ - 1);
        if (t < -1e-12 || t > last * (1.0 + 1e-12)) return 0.0;
        const double tc = std::clamp(t, 0.0, last);
        auto i = static_cast<std::size_t>(tc);
        if (i >= nodes_ - 1) i = nodes_ - 2;
        base[a] = i;
        frac[a] = tc - static_cast<double>(i);
      }
      double sum = 0.0;
      for (unsigned corner = 0; corner < (1u << d_); ++corner) {
        double w = 1.0;
        std::size_t flat = 0;
        for (int a = 0; a < d_; ++a) {
          const unsigned bit = (corner >> a) & 1u;
          w *= bit ? frac[a] : 1.0 - frac[a];
          flat = flat * nodes_ + base[a] + bit;
        }
        if (w != 0.0) sum += w * values_[flat];
      }
      return sum;
    }
    case Representation::kVelocityGrid:
      break;
  }
  throw Error("fourier_value: velocity grids have no Fourier values");
}

std::vector<double> GridDensity::taylor_coefficients(int l) const {
  // Least-squares fit of F_l(rho) = sum_m c_m rho^{2m}, m = 0..5, on the
  // first nodes, in the scaled variable (rho / rho_fit)^2.
  const std::size_t count = std::min<std::size_t>(9, nodes_);
  constexpr int kTerms = 6;
  require(count >= kTerms, "moment extraction needs at least six nodes");
  const double scale = coordinate(count - 1);
  Eigen::MatrixXd a(count, kTerms);
  Eigen::VectorXd b(count);
  const auto m = static_cast<std::size_t>(l / 2);
  for (std::size_t k = 0; k < count; ++k) {
    const double x = std::pow(coordinate(k) / scale, 2);
    double p = 1.0;
    for (int j = 0; j < kTerms; ++j) {
      a(static_cast<Eigen::Index>(k), j) = p;
      p *= x;
    }
    b(static_cast<Eigen::Index>(k)) = values_[m * nodes_ + k];
  }
  const Eigen::VectorXd c = a.colPivHouseholderQr().solve(b);
  std::vector<double> out(kTerms);
  for (int j = 0; j < kTerms; ++j) out[j] = c(j) / std::pow(scale, 2 * j);
  return out;
}

double GridDensity::full_second_derivative(int a, int b) const {
  const std::size_t c = checked_center(nodes_);
  require(c >= 2, "full Fourier grid too small for derivatives");
  auto at = [&](int da, int db) {
    std::size_t flat = 0;
    for (int x = 0; x < d_; ++x) {
      long offset = 0;
      if (x == a) offset += da;
      if (x == b) offset += db;
      flat = flat * nodes_ + static_cast<std::size_t>(static_cast<long>(c) + offset);
    }
    return values_[flat];
  };
  const double h2 = spacing_ * spacing_;
  if (a == b) {
    return (-at(2, 0) + 16.0 * at(1, 0) - 30.0 * at(0, 0) + 16.0 * at(-1, 0) - at(-2, 0)) /
           (12.0 * h2);
  }
  const double near = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * h2);
  const double far = (at(2, 2) - at(2, -2) - at(-2, 2) + at(-2, -2)) / (16.0 * h2);
  return (4.0 * near - far) / 3.0;
}

double GridDensity::mass() const {
  switch (representation_) {
    case Representation::kRadialFourier:
    case Representation::kAxisymmetricFourier:
      return values_[0];
    case Representation::kFullFourier: {
      const std::size_t c = checked_center(nodes_);
      std::size_t flat = 0;
      for (int a = 0; a < d_; ++a) flat = flat * nodes_ + c;
      return values_[flat];
    }
    case Representation::kVelocityGrid: {
      KahanSum sum;
      for (double v : values_) sum.add(v);
      return sum.value() * std::pow(spacing_, d_);
    }
  }
  return 0.0;
}

double GridDensity::energy() const {
  switch (representation_) {
    case Representation::kRadialFourier:
      return -2.0 * d_ * taylor_coefficients(0)[1];
    case Representation::kAxisymmetricFourier:
      return -6.0 * taylor_coefficients(0)[1];
    case Representation::kFullFourier: {
      double sum = 0.0;
      for (int a = 0; a < d_; ++a) sum -= full_second_derivative(a, a);
      return sum;
    }
    case Representation::kVelocityGrid: {
      KahanSum sum;
      Velocity v(d_);
      for (std::size_t flat = 0; flat < values_.size(); ++flat) {
        std::size_t rest = flat;
        double r2 = 0.0;
        for (int a = d_ - 1; a >= 0; --a) {
          r2 += std::pow(coordinate(rest % nodes_), 2);
          rest /= nodes_;
        }
        sum.add(r2 * values_[flat]);
      }
      return sum.value() * std::pow(spacing_, d_);
    }
  }
  return 0.0;
}

Velocity GridDensity::momentum() const {
  Velocity p(d_, 0.0);
  if (representation_ != Representation::kVelocityGrid) return p;
  for (std::size_t flat = 0; flat < values_.size(); ++flat) {
    std::size_t rest = flat;
    for (int a = d_ - 1; a >= 0; --a) {
      p[a] += coordinate(rest % nodes_) * values_[flat];
      rest /= nodes_;
    }
  }
  for (double& x : p) x *= std::pow(spacing_, d_);
  return p;
}

void GridDensity::enforce_normalization() {
  switch (representation_) {
    case Representation::kRadialFourier:
      values_[0] = 1.0;
      break;
    case Representation::kAxisymmetricFourier:
      values_[0] = 1.0;
      for (std::size_t m = 1; m < modes(); ++m) values_[m * nodes_] = 0.0;
      break;
    case Representation::kFullFourier: {
      const std::size_t c = checked_center(nodes_);
      std::size_t flat = 0;
      for (int a = 0; a < d_; ++a) flat = flat * nodes_ + c;
      values_[flat] = 1.0;
      break;
    }
    case Representation::kVelocityGrid:
      throw Error("enforce_normalization: needs a Fourier form");
  }
}

GridDensity maxwellian_density(double energy, int d, std::size_t nodes) {
  require(energy > 0.0, "maxwellian: energy must be positive");
  const double var = energy / d;
  const double norm = std::pow(2.0 * kPi * var, -0.5 * d);
  return GridDensity::velocity_grid(
      [&](std::span<const double> v) {
        double r2 = 0.0;
        for (double x : v) r2 += x * x;
        return norm * std::exp(-0.5 * r2 / var);
      },
      d, 8.0 * std::sqrt(var), nodes);
}

GridDensity maxwellian_fourier(double energy, int d, std::size_t nodes) {
  require(energy > 0.0, "maxwellian: energy must be positive");
  const double var = energy / d;
  return GridDensity::radial_fourier([&](double rho) { return std::exp(-0.5 * var * rho * rho); },
                                     d, 16.0 / std::sqrt(var), nodes);
}

// ---------------------------------------------------------------------------
// Spectral solver

AngularRule angular_rule(const CollisionKernel& kernel, int nodes) {
  const int d = kernel.dimension();
  require(d >= 2, "angular rule: dimension must be at least 2");
  require(nodes >= 2, "angular rule: need at least two nodes");
  QuadratureRule rule;
  if (kernel.kind() == KernelKind::kTrueMaxwell) {
    // Geometric panels resolve the theta^{-2-nu} singularity at the cutoff.
    const double lo = kernel.min_angle();
    const double hi = 0.5 * kPi;
    const int panels = std::max(4, nodes / 8);
    std::vector<double> edges(panels + 1);
    for (int p = 0; p <= panels; ++p) edges[p] = lo * std::pow(hi / lo, double(p) / panels);
    rule = composite_gauss(edges, std::max(2, nodes / panels));
  } else {
    rule = gauss_legendre(nodes, 0.0, 0.5 * kPi);
  }
  AngularRule out;
  out.theta = rule.nodes;
  out.weight.resize(rule.nodes.size());
  const double ring = sphere_area(d - 1);
  double total = 0.0;
  for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
    const double th = rule.nodes[j];
    out.weight[j] = rule.weights[j] * ring * kernel.b_of_angle(th) * std::pow(std::sin(th), d - 2);
    total += out.weight[j];
  }
  require(total > 0.0, "angular rule: kernel carries no mass");
  const double scale = kernel.angular_mass() / total;
  for (double& w : out.weight) w *= scale;
  return out;
}

GainOperator::GainOperator(const CollisionKernel& kernel, const GridDensity& layout,
                           int angular_nodes)
    : representation_(layout.representation()),
      d_(layout.dimension()),
      loss_rate_(kernel.angular_mass()),
      rule_(angular_rule(kernel, angular_nodes)) {
  require(kernel.maxwellian(), "gain operator: kernel must be of Maxwell type");
  require(layout.fourier(), "gain operator: layout must be a Fourier form");
  require(kernel.dimension() == d_, "gain operator: dimension mismatch");
  if (representation_ == Representation::kAxisymmetricFourier) {
    const int lmax = layout.max_degree();
    modes_ = layout.modes();
    const auto mu_rule = gauss_legendre(3 * lmax / 2 + 4);
    const int n_phi = 2 * lmax + 8;
    const std::size_t nm = modes_;
    const std::size_t nj = rule_.theta.size();
    coupling_.assign(nj * nm * nm * nm, 0.0);
    std::vector<double> p_out(nm), p_plus(nm), p_minus(nm);
    for (std::size_t j = 0; j < nj; ++j) {
      const double c = std::cos(0.5 * rule_.theta[j]);
      const double s = std::sin(0.5 * rule_.theta[j]);
      double* block = coupling_.data() + j * nm * nm * nm;
      for (std::size_t i = 0; i < mu_rule.nodes.size(); ++i) {
        const double mu = mu_rule.nodes[i];
        const double perp = std::sqrt(std::max(0.0, 1.0 - mu * mu));
        for (std::size_t m = 0; m < nm; ++m) p_out[m] = legendre(2 * int(m), mu);
        for (int q = 0; q < n_phi; ++q) {
          const double cphi = std::cos(kPi * (q + 0.5) / n_phi);
          const double mu_plus = c * mu + s * perp * cphi;
          const double mu_minus = s * mu - c * perp * cphi;
          for (std::size_t m = 0; m < nm; ++m) {
            p_plus[m] = legendre(2 * int(m), mu_plus);
            p_minus[m] = legendre(2 * int(m), mu_minus);
          }
          const double base = mu_rule.weights[i] * rule_.weight[j] / n_phi;
          for (std::size_t l = 0; l < nm; ++l) {
            const double wl = base * 0.5 * (4.0 * double(l) + 1.0) * p_out[l];
            for (std::size_t l1 = 0; l1 < nm; ++l1) {
              for (std::size_t l2 = 0; l2 < nm; ++l2) {
                block[(l * nm + l1) * nm + l2] += wl * p_plus[l1] * p_minus[l2];
              }
            }
          }
        }
      }
    }
  } else if (representation_ == Representation::kFullFourier) {
    const int n_phi = d_ == 2 ? 2 : 16;
    for (int q = 0; q < n_phi; ++q) {
      const double phi = d_ == 2 ? q * kPi : 2.0 * kPi * q / n_phi;
      transverse_.push_back({std::cos(phi), std::sin(phi)});
    }
  }
}

bool GainOperator::apply(const GridDensity& f, std::span<double> out) const {
  require(f.representation() == representation_ && f.dimension() == d_,
          "gain operator: layout mismatch");
  require(out.size() == f.values().size(), "gain operator: output size mismatch");
  const std::size_t n = f.nodes();
  const std::size_t nj = rule_.theta.size();
  switch (representation_) {
    case Representation::kRadialFourier: {
      for (std::size_t k = 0; k < n; ++k) {
        const double rho = f.coordinate(k);
        double sum = 0.0;
        for (std::size_t j = 0; j < nj; ++j) {
          const double half = 0.5 * rule_.theta[j];
          sum += rule_.weight[j] * f.mode(0, rho * std::cos(half)) * f.mode(0, rho * std::sin(half));
        }
        out[k] = sum;
      }
      return false;
    }
    case Representation::kAxisymmetricFourier: {
      const std::size_t nm = modes_;
      std::vector<double> a(nm), b(nm), acc(nm);
      for (std::size_t k = 0; k < n; ++k) {
        const double rho = f.coordinate(k);
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t j = 0; j < nj; ++j) {
          const double half = 0.5 * rule_.theta[j];
          for (std::size_t m = 0; m < nm; ++m) {
            a[m] = f.mode(2 * int(m), rho * std::cos(half));
            b[m] = f.mode(2 * int(m), rho * std::sin(half));
          }
          const double* block = coupling_.data() + j * nm * nm * nm;
          for (std::size_t l = 0; l < nm; ++l) {
            double sum = 0.0;
            for (std::size_t l1 = 0; l1 < nm; ++l1) {
              const double* row = block + (l * nm + l1) * nm;
              double inner = 0.0;
              for (std::size_t l2 = 0; l2 < nm; ++l2) inner += row[l2] * b[l2];
              sum += a[l1] * inner;
            }
            acc[l] += sum;
          }
        }
        for (std::size_t l = 0; l < nm; ++l) out[l * n + k] = acc[l];
      }
      return false;
    }
    case Representation::kFullFourier:
      return apply_full(f, out);
    case Representation::kVelocityGrid:
      break;
  }
  throw Error("gain operator: unsupported layout");
}

bool GainOperator::apply_full(const GridDensity& f, std::span<double> out) const {
  const std::size_t n = f.nodes();
  const double edge = f.extent() * (1.0 + 1e-12);
  bool truncated = false;
  Velocity xi(d_), unit(d_), plus(d_), minus(d_), sigma(d_);
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    std::size_t rest = flat;
    for (int a = d_ - 1; a >= 0; --a) {
      xi[a] = f.coordinate(rest % n);
      rest /= n;
    }
    const double rho = kac::norm(xi);
    if (rho == 0.0) {
      out[flat] = loss_rate_;
      continue;
    }
    for (int a = 0; a < d_; ++a) unit[a] = xi[a] / rho;
    const auto basis = orthonormal_complement(unit);
    double sum = 0.0;
    for (std::size_t j = 0; j < rule_.theta.size(); ++j) {
      const double ct = std::cos(rule_.theta[j]);
      const double st = std::sin(rule_.theta[j]);
      double ring = 0.0;
      for (const auto& az : transverse_) {
        for (int a = 0; a < d_; ++a) {
          double e = basis[0][a] * az[0];
          if (d_ == 3) e += basis[1][a] * az[1];
          sigma[a] = ct * unit[a] + st * e;
          plus[a] = 0.5 * (xi[a] + rho * sigma[a]);
          minus[a] = 0.5 * (xi[a] - rho * sigma[a]);
        }
        for (int a = 0; a < d_; ++a) {
          if (std::abs(plus[a]) > edge || std::abs(minus[a]) > edge) truncated = true;
        }
        ring += f.fourier_value(plus) * f.fourier_value(minus);
      }
      sum += rule_.weight[j] * ring / static_cast<double>(transverse_.size());
    }
    out[flat] = sum;
  }
  return truncated;
}

GridDensity qhat_gain(const GridDensity& f, const CollisionKernel& kernel) {
  require(f.fourier(), "qhat_gain: needs a Fourier form");
  require(std::abs(f.mass() - 1.0) < 1e-12, "qhat_gain: F(0) must equal 1");
  GainOperator op(kernel, f);
  GridDensity out = f;
  out.truncated = op.apply(f, out.values());
  return out;
}

FourierTrajectory evolve_fourier(const GridDensity& f0, const CollisionKernel& kernel,
                                 double horizon, double dt, std::size_t record_every) {
  require(f0.fourier(), "evolve_fourier: needs a Fourier form");
  require(kernel.maxwellian(), "evolve_fourier: kernel must be of Maxwell type");
  require(horizon >= 0.0 && std::isfinite(horizon), "evolve_fourier: invalid horizon");
  require(dt > 0.0, "evolve_fourier: dt must be positive");
  require(record_every >= 1, "evolve_fourier: record_every must be positive");
  const double loss = kernel.angular_mass();
  require(dt <= 0.5 / loss * (1.0 + 1e-12),
          "evolve_fourier: dt exceeds the stability bound 0.5 / angular mass");

  const GainOperator op(kernel, f0);
  const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-12));
  const double h = steps > 0 ? horizon / static_cast<double>(steps) : 0.0;

  FourierTrajectory traj;
  GridDensity state = f0;
  state.enforce_normalization();
  traj.times.push_back(state.time);
  traj.states.push_back(state);

  const std::size_t size = state.values().size();
  GridDensity stage = state;
  std::vector<double> k1(size), k2(size), k3(size), k4(size), gain(size);
  auto rate = [&](const GridDensity& g, std::vector<double>& k) {
    traj.truncated |= op.apply(g, gain);
    auto v = g.values();
    for (std::size_t i = 0; i < size; ++i) k[i] = gain[i] - loss * v[i];
  };
  auto set_stage = [&](const std::vector<double>& k, double factor) {
    auto base = state.values();
    auto out = stage.values();
    for (std::size_t i = 0; i < size; ++i) out[i] = base[i] + factor * k[i];
  };

  const double t0 = state.time;
  for (std::size_t step = 1; step <= steps; ++step) {
    rate(state, k1);
    set_stage(k1, 0.5 * h);
    rate(stage, k2);
    set_stage(k2, 0.5 * h);
    rate(stage, k3);
    set_stage(k3, h);
    rate(stage, k4);
    auto v = state.values();
    for (std::size_t i = 0; i < size; ++i) {
      v[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    state.enforce_normalization();
    state.time = t0 + h * static_cast<double>(step);
    state.truncated = traj.truncated;
    if (step % record_every == 0 || step == steps) {
      traj.times.push_back(state.time);
      traj.states.push_back(state);
    }
  }
  return traj;
}

double fourier_grid_distance(const GridDensity& f, const GridDensity& g, double s) {
  require(f.fourier() && g.fourier(), "fourier_grid_distance: needs Fourier forms");
  require(f.representation() == g.representation() && f.nodes() == g.nodes() &&
              f.dimension() == g.dimension() && std::abs(f.extent() - g.extent()) < 1e-12,
          "fourier_grid_distance: layouts differ");
  const std::size_t n = f.nodes();
  double best = 0.0;
  switch (f.representation()) {
    case Representation::kRadialFourier:
      for (std::size_t k = 1; k < n; ++k) {
        const double diff = std::abs(f.values()[k] - g.values()[k]);
        best = std::max(best, diff / std::pow(f.coordinate(k), s));
      }
      break;
    case Representation::kAxisymmetricFourier: {
      require(f.max_degree() == g.max_degree(), "fourier_grid_distance: degrees differ");
      constexpr int kMu = 65;
      for (std::size_t k = 1; k < n; ++k) {
        const double rho = f.coordinate(k);
        for (int i = 0; i < kMu; ++i) {
          const double mu = static_cast<double>(i) / (kMu - 1);
          double diff = 0.0;
          for (std::size_t m = 0; m < f.modes(); ++m) {
            diff += (f.values()[m * n + k] - g.values()[m * n + k]) * legendre(2 * int(m), mu);
          }
          best = std::max(best, std::abs(diff) / std::pow(rho, s));
        }
      }
      break;
    }
    case Representation::kFullFourier: {
      const int d = f.dimension();
      for (std::size_t flat = 0; flat < f.values().size(); ++flat) {
        std::size_t rest = flat;
        double r2 = 0.0;
        for (int a = d - 1; a >= 0; --a) {
          r2 += std::pow(f.coordinate(rest % n), 2);
          rest /= n;
        }
        if (r2 == 0.0) continue;
        const double diff = std::abs(f.values()[flat] - g.values()[flat]);
        best = std::max(best, diff / std::pow(r2, 0.5 * s));
      }
      break;
    }
    case Representation::kVelocityGrid:
      break;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Inverse transform

double PolarDensity::mode(int l, double r) const {
  require(l >= 0 && l % 2 == 0 && l <= max_degree, "polar density: degree out of range");
  const auto m = static_cast<std::size_t>(l / 2);
  return even_interpolate(std::span<const double>(values).subspan(m * nodes, nodes), spacing(), r);
}

double PolarDensity::operator()(double r, double mu) const {
  double sum = 0.0;
  for (int l = 0; l <= max_degree; l += 2) sum += mode(l, r) * legendre(l, mu);
  return sum;
}

InverseTransform::InverseTransform(const GridDensity& layout, double r_max, std::size_t nodes)
    : d_(layout.dimension()),
      max_degree_(layout.max_degree()),
      r_max_(r_max),
      r_nodes_(nodes),
      xi_nodes_(layout.nodes()) {
  require(layout.representation() == Representation::kRadialFourier ||
              layout.representation() == Representation::kAxisymmetricFourier,
          "inverse transform: needs a radial or axisymmetric Fourier form");
  require(r_max > 0.0 && nodes >= 2, "inverse transform: invalid polar grid");
  const std::size_t modes = layout.modes();
  const double h = layout.spacing();
  const double dr = r_max / static_cast<double>(nodes - 1);
  matrix_.assign(modes * nodes * xi_nodes_, 0.0);
  const bool radial = layout.representation() == Representation::kRadialFourier;
  const double radial_scale = std::pow(2.0 * kPi, -d_) * sphere_area(d_);
  for (std::size_t m = 0; m < modes; ++m) {
    const int l = 2 * static_cast<int>(m);
    const double sign = (l / 2) % 2 == 0 ? 1.0 : -1.0;
    for (std::size_t i = 0; i < nodes; ++i) {
      const double r = dr * static_cast<double>(i);
      double* row = matrix_.data() + (m * nodes + i) * xi_nodes_;
      for (std::size_t k = 0; k < xi_nodes_; ++k) {
        const double rho = layout.coordinate(k);
        const double tw = (k == 0 || k + 1 == xi_nodes_) ? 0.5 : 1.0;
        if (radial) {
          row[k] = radial_scale * h * tw * metrics::angular_average_cos(d_, r * rho) *
                   std::pow(rho, d_ - 1);
        } else {
          row[k] = sign / (2.0 * kPi * kPi) * h * tw *
                   std::sph_bessel(static_cast<unsigned>(l), r * rho) * rho * rho;
        }
      }
      // Euler-Maclaurin end corrections for the odd d = 2 integrand
      // g = rho F(rho) J_0(r rho): g'(0) = F(0) and g'''(0) = 3 (F''(0) - r^2 F(0) / 2),
      // with F''(0) taken from the first two nodes.
      if (radial && d_ == 2) {
        const double c4 = -radial_scale * std::pow(h, 4) / 240.0;
        row[0] += radial_scale * h * h / 12.0 + c4 * (-2.0 / (h * h) - 0.5 * r * r);
        row[1] += c4 * 2.0 / (h * h);
      }
    }
  }
}

PolarDensity InverseTransform::apply(const GridDensity& f) const {
  require(f.nodes() == xi_nodes_ && f.max_degree() == max_degree_ && f.dimension() == d_,
          "inverse transform: layout mismatch");
  PolarDensity out;
  out.d = d_;
  out.max_degree = max_degree_;
  out.r_max = r_max_;
  out.nodes = r_nodes_;
  const std::size_t modes = f.modes();
  out.values.assign(modes * r_nodes_, 0.0);
  const auto v = f.values();
  for (std::size_t m = 0; m < modes; ++m) {
    const double* src = v.data() + m * xi_nodes_;
    for (std::size_t i = 0; i < r_nodes_; ++i) {
      const double* row = matrix_.data() + (m * r_nodes_ + i) * xi_nodes_;
      double sum = 0.0;
      for (std::size_t k = 0; k < xi_nodes_; ++k) sum += row[k] * src[k];
      out.values[m * r_nodes_ + i] = sum;
    }
  }
  return out;
}

GridDensity to_velocity_grid(const GridDensity& f, double extent, std::size_t nodes) {
  const int d = f.dimension();
  const double r_max = extent * std::sqrt(static_cast<double>(d)) * 1.01;
  const InverseTransform inverse(f, r_max, 8 * nodes + 1);
  const PolarDensity polar = inverse.apply(f);
  GridDensity out = GridDensity::velocity_grid(
      [&](std::span<const double> v) {
        const double r = kac::norm(v);
        const double mu = r > 0.0 ? v[d - 1] / r : 1.0;
        return polar(r, mu);
      },
      d, extent, nodes);
  out.time = f.time;
  out.truncated = f.truncated;
  return out;
}

// ---------------------------------------------------------------------------
// Moments

std::vector<std::vector<int>> moment_indices(int d, int kmax) {
  require(d >= 1 && kmax >= 0, "moment_indices: invalid arguments");
  std::vector<std::vector<int>> out;
  for (int k = 0; k <= kmax; ++k) {
    // Descending lexicographic enumeration of compositions of k into d parts.
    std::vector<int> alpha(d, 0);
    alpha[0] = k;
    while (true) {
      out.push_back(alpha);
      // Move one unit from the rightmost movable slot.
      int j = d - 2;
      while (j >= 0 && alpha[j] == 0) --j;
      if (j < 0) break;
      --alpha[j];
      int tail = 1;
      for (int i = j + 1; i < d; ++i) {
        tail += alpha[i];
        alpha[i] = 0;
      }
      alpha[j + 1] = tail;
    }
  }
  return out;
}

MomentVector::MomentVector(int d, int kmax)
    : d_(d), kmax_(kmax), indices_(moment_indices(d, kmax)), values_(indices_.size(), 0.0) {
  values_[0] = 1.0;
}

std::size_t MomentVector::index(std::span<const int> alpha) const {
  require(static_cast<int>(alpha.size()) == d_, "moment index: dimension mismatch");
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    if (std::equal(alpha.begin(), alpha.end(), indices_[i].begin())) return i;
  }
  throw Error("moment index: order exceeds kmax");
}

double MomentVector::at(std::initializer_list<int> alpha) const {
  return values_[index(std::span<const int>(alpha.begin(), alpha.size()))];
}

MomentVector MomentVector::from_measure(const metrics::WeightedPointMeasure& mu, int kmax) {
  MomentVector m(mu.dimension(), kmax);
  for (std::size_t i = 0; i < m.indices_.size(); ++i) m.values_[i] = mu.moment(m.indices_[i]);
  return m;
}

MomentVector MomentVector::maxwellian(double energy, int d, int kmax) {
  require(energy > 0.0, "maxwellian moments: energy must be positive");
  const double var = energy / d;
  MomentVector m(d, kmax);
  for (std::size_t i = 0; i < m.indices_.size(); ++i) {
    double value = 1.0;
    for (int a : m.indices_[i]) {
      if (a % 2 == 1) {
        value = 0.0;
        break;
      }
      for (int j = a - 1; j > 0; j -= 2) value *= j;
      value *= std::pow(var, a / 2);
    }
    m.values_[i] = value;
  }
  return m;
}

MomentVector fourier_moments(const GridDensity& f, int kmax) {
  const int d = f.dimension();
  MomentVector m(d, kmax);
  if (f.representation() == Representation::kVelocityGrid) {
    const std::size_t n = f.nodes();
    const double cell = std::pow(f.spacing(), d);
    std::vector<double> v(d);
    for (std::size_t i = 0; i < m.indices().size(); ++i) {
      const auto& alpha = m.indices()[i];
      KahanSum sum;
      for (std::size_t flat = 0; flat < f.values().size(); ++flat) {
        std::size_t rest = flat;
        double mono = 1.0;
        for (int a = d - 1; a >= 0; --a) {
          mono *= std::pow(f.coordinate(rest % n), alpha[a]);
          rest /= n;
        }
        sum.add(mono * f.values()[flat]);
      }
      m.values()[i] = sum.value() * cell;
    }
    return m;
  }
  require(kmax <= 3, "fourier_moments: orders above 3 are not extracted");
  // Real Fourier forms describe even laws: odd moments vanish.
  std::vector<double> second(static_cast<std::size_t>(d * d), 0.0);
  switch (f.representation()) {
    case Representation::kRadialFourier: {
      const double e = f.energy();
      for (int a = 0; a < d; ++a) second[a * d + a] = e / d;
      break;
    }
    case Representation::kAxisymmetricFourier: {
      const double trace = -6.0 * f.taylor_coefficients(0)[1];
      const double aniso = f.max_degree() >= 2 ? -3.0 * f.taylor_coefficients(2)[1] : 0.0;
      const double parallel = (trace + 2.0 * aniso) / 3.0;
      const double perp = (trace - aniso) / 3.0;
      second[0] = perp;
      second[4] = perp;
      second[8] = parallel;
      break;
    }
    case Representation::kFullFourier:
      for (int a = 0; a < d; ++a) {
        for (int b = 0; b < d; ++b) second[a * d + b] = -f.full_second_derivative(a, b);
      }
      break;
    case Representation::kVelocityGrid:
      break;
  }
  for (std::size_t i = 0; i < m.indices().size(); ++i) {
    const auto& alpha = m.indices()[i];
    int order = 0;
    for (int a : alpha) order += a;
    if (order != 2) continue;
    int first = -1, second_axis = -1;
    for (int a = 0; a < d; ++a) {
      for (int c = 0; c < alpha[a]; ++c) (first < 0 ? first : second_axis) = a;
    }
    m.values()[i] = second[first * d + second_axis];
  }
  return m;
}

double MomentCoefficients::diagonal(std::span<const int> alpha) const {
  std::size_t target = indices_.size();
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    if (std::equal(alpha.begin(), alpha.end(), indices_[i].begin())) target = i;
  }
  require(target < indices_.size() && static_cast<int>(alpha.size()) == d_,
          "moment coefficients: unknown index");
  double sum = 0.0;
  for (const auto& t : rows_[target]) {
    if ((t.beta == target && t.gamma == 0) || (t.beta == 0 && t.gamma == target)) {
      sum += t.coefficient;
    }
  }
  return sum;
}

double MomentCoefficients::diagonal(std::initializer_list<int> alpha) const {
  return diagonal(std::span<const int>(alpha.begin(), alpha.size()));
}

void MomentCoefficients::rhs(std::span<const double> m, std::span<double> out) const {
  require(m.size() == indices_.size() && out.size() == indices_.size(),
          "moment coefficients: size mismatch");
  for (std::size_t a = 0; a < rows_.size(); ++a) {
    double sum = 0.0;
    for (const auto& t : rows_[a]) sum += t.coefficient * m[t.beta] * m[t.gamma];
    out[a] = sum;
  }
}

namespace {

double monomial(std::span<const double> x, std::span<const int> alpha) {
  double p = 1.0;
  for (std::size_t a = 0; a < alpha.size(); ++a) p *= std::pow(x[a], alpha[a]);
  return p;
}

/// int_half b [(v')^alpha + (w')^alpha - v^alpha - w^alpha] dsigma.
double collision_polynomial(std::span<const double> v, std::span<const double> w,
                            std::span<const int> alpha, const AngularRule& rule, int d) {
  Velocity u(d), vp(d), wp(d);
  for (int a = 0; a < d; ++a) u[a] = v[a] - w[a];
  const double speed = kac::norm(u);
  for (double& x : u) x /= speed;
  const auto basis = orthonormal_complement(u);
  const int n_phi = d == 2 ? 2 : 16;
  double total = 0.0;
  for (std::size_t j = 0; j < rule.theta.size(); ++j) {
    const double ct = std::cos(rule.theta[j]);
    const double st = std::sin(rule.theta[j]);
    double ring = 0.0;
    for (int q = 0; q < n_phi; ++q) {
      const double phi = d == 2 ? q * kPi : 2.0 * kPi * q / n_phi;
      for (int a = 0; a < d; ++a) {
        double e = basis[0][a] * std::cos(phi);
        if (d == 3) e += basis[1][a] * std::sin(phi);
        const double sigma = ct * u[a] + st * e;
        const double mid = 0.5 * (v[a] + w[a]);
        vp[a] = mid + 0.5 * speed * sigma;
        wp[a] = mid - 0.5 * speed * sigma;
      }
      ring += monomial(vp, alpha) + monomial(wp, alpha);
    }
    total += rule.weight[j] * ring / n_phi;
  }
  const double mass = std::accumulate(rule.weight.begin(), rule.weight.end(), 0.0);
  return total - mass * (monomial(v, alpha) + monomial(w, alpha));
}

}  // namespace

MomentCoefficients moment_ode_coefficients(const CollisionKernel& kernel, int kmax) {
  require(kernel.maxwellian(), "moment coefficients: kernel must be of Maxwell type");
  const int d = kernel.dimension();
  require(d == 2 || d == 3, "moment coefficients: d must be 2 or 3");
  require(kmax >= 0 && kmax <= 4, "moment coefficients: kmax must lie in [0, 4]");

  MomentCoefficients out;
  out.d_ = d;
  out.kmax_ = kmax;
  out.indices_ = moment_indices(d, kmax);
  out.rows_.resize(out.indices_.size());
  const MomentVector lookup(d, kmax);

  const AngularRule coarse = angular_rule(kernel, 48);
  const AngularRule fine = angular_rule(kernel, 96);
  RandomStream rng(0x6d6f6d656e7473ULL, 0, Channel::kAuxiliary);

  for (std::size_t row = 0; row < out.indices_.size(); ++row) {
    const auto& alpha = out.indices_[row];
    int order = 0;
    for (int a : alpha) order += a;
    if (order == 0) continue;
    // Basis: monomials v^beta w^gamma with |beta| + |gamma| = order.
    std::vector<std::vector<int>> basis;
    for (const auto& joint : moment_indices(2 * d, order)) {
      int s = 0;
      for (int a : joint) s += a;
      if (s == order) basis.push_back(joint);
    }
    const std::size_t points = 2 * basis.size() + 8;
    Eigen::MatrixXd design(points, basis.size());
    Eigen::VectorXd target(points);
    Velocity z(2 * d);
    double scale = 0.0;
    for (std::size_t p = 0; p < points; ++p) {
      for (double& x : z) x = rng.normal();
      std::span<const double> v(z.data(), d), w(z.data() + d, d);
      const double a = collision_polynomial(v, w, alpha, coarse, d);
      const double b = collision_polynomial(v, w, alpha, fine, d);
      scale = std::max(scale, std::abs(b));
      require(std::abs(a - b) <= 1e-10 * std::max(1.0, std::abs(b)),
              "moment coefficients: angular quadrature did not converge");
      target(static_cast<Eigen::Index>(p)) = b;
      for (std::size_t c = 0; c < basis.size(); ++c) {
        design(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(c)) =
            monomial(z, basis[c]);
      }
    }
    const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(target);
    const double residual = (design * coef - target).cwiseAbs().maxCoeff();
    require(residual <= 1e-9 * std::max(1.0, scale),
            "moment coefficients: collision polynomial fit failed");
    for (std::size_t c = 0; c < basis.size(); ++c) {
      const double value = coef(static_cast<Eigen::Index>(c));
      if (std::abs(value) < 1e-11) continue;
      std::vector<int> beta(basis[c].begin(), basis[c].begin() + d);
      std::vector<int> gamma(basis[c].begin() + d, basis[c].end());
      out.rows_[row].push_back({lookup.index(beta), lookup.index(gamma), 0.5 * value});
    }
  }
  return out;
}

MomentTrajectory evolve_moments(const MomentVector& m0, const MomentCoefficients& coefficients,
                                double horizon, double dt) {
  require(m0.dimension() == coefficients.dimension() &&
              m0.max_order() == coefficients.max_order(),
          "evolve_moments: moment layout mismatch");
  require(horizon >= 0.0 && dt > 0.0, "evolve_moments: invalid horizon or step");
  const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-12));
  const double h = steps > 0 ? horizon / static_cast<double>(steps) : 0.0;
  MomentTrajectory traj;
  MomentVector state = m0;
  traj.times.push_back(0.0);
  traj.states.push_back(state);
  const std::size_t n = state.values().size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), stage(n);
  auto stage_from = [&](const std::vector<double>& k, double factor) {
    for (std::size_t i = 0; i < n; ++i) stage[i] = state.values()[i] + factor * k[i];
  };
  for (std::size_t step = 1; step <= steps; ++step) {
    coefficients.rhs(state.values(), k1);
    stage_from(k1, 0.5 * h);
    coefficients.rhs(stage, k2);
    stage_from(k2, 0.5 * h);
    coefficients.rhs(stage, k3);
    stage_from(k3, h);
    coefficients.rhs(stage, k4);
    for (std::size_t i = 0; i < n; ++i) {
      state.values()[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    traj.times.push_back(h * static_cast<double>(step));
    traj.states.push_back(state);
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Hard-spheres reference

OracleResult particle_limit_oracle(const sampling::ReferenceDensity& f0,
                                   const CollisionKernel& kernel, double energy, double horizon,
                                   std::span<const double> checkpoints,
                                   const OracleOptions& options) {
  require(options.particles >= 2 && options.replicas >= 1, "oracle: empty ensemble");
  const int d = f0.dimension();
  require(kernel.dimension() == d, "oracle: kernel and density dimensions differ");
  OracleResult result;
  result.particles = options.particles;
  result.replicas = options.replicas;
  result.seed = options.seed;
  result.stream_seed = splitmix64(options.seed ^ 0x4f5241434c45ULL);

  const jump::InitialSampler sampler = [&](RandomStream& rng) {
    return sampling::sample_sphere_conditioned(f0, options.particles, energy, rng);
  };
  jump::EnsembleOptions ensemble_options;
  ensemble_options.threads = options.threads;
  ensemble_options.simulation.mode = jump::PairSampling::kRejection;
  const auto ensemble = jump::run_ensemble(sampler, kernel, horizon, checkpoints, options.replicas,
                                           result.stream_seed, ensemble_options);
  result.times = ensemble.checkpoints;
  for (std::size_t c = 0; c < ensemble.checkpoints.size(); ++c) {
    std::vector<double> pooled;
    pooled.reserve(options.particles * options.replicas * d);
    for (const auto& replica : ensemble.replicas) {
      const auto data = replica.snapshots[c].data();
      pooled.insert(pooled.end(), data.begin(), data.end());
    }
    result.marginals.push_back(metrics::WeightedPointMeasure::empirical(d, pooled));
  }
  return result;
}

OracleResult hs_limit_oracle(const sampling::ReferenceDensity& f0, double energy, double horizon,
                             std::span<const double> checkpoints, const OracleOptions& options) {
  return particle_limit_oracle(f0, CollisionKernel::hard_spheres(f0.dimension()), energy, horizon,
                               checkpoints, options);
}

// ---------------------------------------------------------------------------
// Serialization

void write_grid_csv(std::ostream& out, const GridDensity& f) {
  const int d = f.dimension();
  const std::size_t n = f.nodes();
  std::string line;
  switch (f.representation()) {
    case Representation::kRadialFourier:
      out << "rho,value\n";
      for (std::size_t k = 0; k < n; ++k) {
        line.clear();
        append_number(line, f.coordinate(k));
        line += ',';
        append_number(line, f.values()[k]);
        out << line << '\n';
      }
      return;
    case Representation::kAxisymmetricFourier:
      out << "rho,degree,value\n";
      for (std::size_t m = 0; m < f.modes(); ++m) {
        for (std::size_t k = 0; k < n; ++k) {
          line.clear();
          append_number(line, f.coordinate(k));
          line += ',' + std::to_string(2 * m) + ',';
          append_number(line, f.values()[m * n + k]);
          out << line << '\n';
        }
      }
      return;
    case Representation::kVelocityGrid:
    case Representation::kFullFourier: {
      const char* prefix = f.fourier() ? "xi" : "v";
      for (int a = 0; a < d; ++a) out << prefix << a + 1 << ',';
      out << "value\n";
      for (std::size_t flat = 0; flat < f.values().size(); ++flat) {
        std::vector<double> coord(d);
        std::size_t rest = flat;
        for (int a = d - 1; a >= 0; --a) {
          coord[a] = f.coordinate(rest % n);
          rest /= n;
        }
        line.clear();
        for (double c : coord) {
          append_number(line, c);
          line += ',';
        }
        append_number(line, f.values()[flat]);
        out << line << '\n';
      }
      return;
    }
  }
}

void write_grid_metadata(std::ostream& out, const GridDensity& f) {
  nlohmann::json j;
  j["representation"] = representation_name(f.representation());
  j["d"] = f.dimension();
  j["extent"] = f.extent();
  j["spacing"] = f.spacing();
  j["nodes"] = f.nodes();
  j["time"] = f.time;
  j["truncated"] = f.truncated;
  if (f.representation() == Representation::kAxisymmetricFourier) j["max_degree"] = f.max_degree();
  j["mass"] = f.mass();
  j["energy"] = f.energy();
  out << j.dump(2) << '\n';
}

}  // namespace kac::limit
