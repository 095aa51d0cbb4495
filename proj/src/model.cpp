// Copyright 2026 The kacchaos Authors
// SPDX-License-Identifier: Apache-2.0
#include "kac/model.hpp"

#include <algorithm>
#include <cmath>

#include "kac/error.hpp"
#include "kac/numerics.hpp"

namespace kac {

double sphere_area(int d) {
  require(d >= 1, "dimension must be positive");
  return 2.0 * std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d);
}

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

// ---------------------------------------------------------------------------
// ParticleState

void ParticleState::Compensated::add(double x) {
  const double t = sum + x;
  if (std::abs(sum) >= std::abs(x)) {
    carry += (sum - t) + x;
  } else {
    carry += (x - t) + sum;
  }
  sum = t;
}

ParticleState::ParticleState(int d, std::vector<double> flat) : d_(d) {
  require(d >= 1, "dimension must be positive");
  require(flat.size() % static_cast<std::size_t>(d) == 0,
          "velocity array length is not a multiple of the dimension");
  for (double x : flat) require(std::isfinite(x), "velocities must be finite");
  n_ = flat.size() / d;
  flat_ = std::move(flat);
  rebuild_sums();
}

void ParticleState::assign(std::vector<double> flat) {
  require(flat.size() == flat_.size(), "assign must keep the particle count");
  flat_ = std::move(flat);
  rebuild_sums();
}

void ParticleState::rebuild_sums() {
  energy_sum_ = {};
  momentum_sum_.assign(d_, Compensated{});
  for (std::size_t i = 0; i < n_; ++i) {
    for (int k = 0; k < d_; ++k) {
      const double x = flat_[i * d_ + k];
      energy_sum_.add(x * x);
      momentum_sum_[k].add(x);
    }
  }
}

double ParticleState::energy() const {
  return n_ == 0 ? 0.0 : energy_sum_.value() / static_cast<double>(n_);
}

Velocity ParticleState::momentum() const {
  Velocity m(d_, 0.0);
  if (n_ == 0) return m;
  for (int k = 0; k < d_; ++k) m[k] = momentum_sum_[k].value() / static_cast<double>(n_);
  return m;
}

double ParticleState::recomputed_energy() const {
  KahanSum s;
  for (double x : flat_) s.add(x * x);
  return n_ == 0 ? 0.0 : s.value() / static_cast<double>(n_);
}

Velocity ParticleState::recomputed_momentum() const {
  Velocity m(d_, 0.0);
  if (n_ == 0) return m;
  for (int k = 0; k < d_; ++k) {
    KahanSum s;
    for (std::size_t i = 0; i < n_; ++i) s.add(flat_[i * d_ + k]);
    m[k] = s.value() / static_cast<double>(n_);
  }
  return m;
}

void ParticleState::apply_collision(std::size_t i, std::size_t j,
                                    std::span<const double> sigma) {
  require(i < n_ && j < n_ && i != j, "invalid collision pair");
  std::span<double> v(flat_.data() + i * d_, d_);
  std::span<double> w(flat_.data() + j * d_, d_);
  double before = 0.0;
  for (int k = 0; k < d_; ++k) {
    before += v[k] * v[k] + w[k] * w[k];
    momentum_sum_[k].add(-(v[k] + w[k]));
  }
  collide_in_place(v, w, sigma);
  double after = 0.0;
  for (int k = 0; k < d_; ++k) {
    after += v[k] * v[k] + w[k] * w[k];
    momentum_sum_[k].add(v[k] + w[k]);
  }
  energy_sum_.add(after - before);
}

// ---------------------------------------------------------------------------
// SphereConstraint

SphereConstraint::SphereConstraint(double e, int d) : energy(e), momentum(d, 0.0) {
  require(e > 0.0, "sphere energy must be positive");
}

bool SphereConstraint::satisfied_by(const ParticleState& state, double rel_tol) const {
  if (std::abs(state.recomputed_energy() - energy) > rel_tol * energy) return false;
  const Velocity m = state.recomputed_momentum();
  const double scale = std::sqrt(energy);
  for (std::size_t k = 0; k < m.size(); ++k) {
    if (std::abs(m[k] - momentum[k]) > rel_tol * scale) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// CollisionKernel

CollisionKernel::CollisionKernel(KernelKind kind, int d) : kind_(kind), d_(d) {
  require(d >= 2, "collision kernels need dimension d >= 2");
}

CollisionKernel CollisionKernel::grad_maxwell(int d) {
  CollisionKernel k(KernelKind::kGradMaxwell, d);
  k.angular_mass_ = 0.5 * sphere_area(d);
  return k;
}

CollisionKernel CollisionKernel::hard_spheres(int d, double speed_coefficient) {
  require(speed_coefficient > 0.0, "hard-sphere coefficient must be positive");
  CollisionKernel k(KernelKind::kHardSpheres, d);
  k.speed_coefficient_ = speed_coefficient;
  k.angular_mass_ = 0.5 * sphere_area(d);
  return k;
}

CollisionKernel CollisionKernel::true_maxwell(int d, double cutoff, double strength) {
  require(cutoff > 0.0 && cutoff < M_PI / 2, "TMM cutoff angle must lie in (0, pi/2)");
  require(strength > 0.0, "TMM strength must be positive");
  CollisionKernel k(KernelKind::kTrueMaxwell, d);
  k.cutoff_ = cutoff;
  k.strength_ = strength;
  k.build_angle_table();
  return k;
}

std::string CollisionKernel::name() const {
  switch (kind_) {
    case KernelKind::kGradMaxwell:
      return "gmm";
    case KernelKind::kTrueMaxwell:
      return "tmm";
    case KernelKind::kHardSpheres:
      return "hs";
  }
  return "unknown";
}

double CollisionKernel::gamma(double z) const {
  return kind_ == KernelKind::kHardSpheres ? speed_coefficient_ * z : 1.0;
}

double CollisionKernel::b_of_angle(double theta) const {
  if (theta < 0.0 || theta > M_PI / 2) return 0.0;
  if (kind_ != KernelKind::kTrueMaxwell) return 1.0;
  if (theta < cutoff_) return 0.0;
  return strength_ * std::pow(theta, -2.0 - nu_);
}

void CollisionKernel::build_angle_table() {
  constexpr int kCells = 4096;
  const double ratio = (M_PI / 2) / cutoff_;
  const double outer = (d_ == 2) ? 2.0 : sphere_area(d_ - 1);
  table_theta_.resize(kCells + 1);
  table_cdf_.assign(kCells + 1, 0.0);
  for (int k = 0; k <= kCells; ++k) {
    table_theta_[k] = cutoff_ * std::pow(ratio, static_cast<double>(k) / kCells);
  }
  table_theta_.back() = M_PI / 2;
  const auto rule = gauss_legendre(8);
  for (int k = 0; k < kCells; ++k) {
    const double a = table_theta_[k], b = table_theta_[k + 1];
    double cell = 0.0;
    for (int q = 0; q < 8; ++q) {
      const double th = 0.5 * (a + b) + 0.5 * (b - a) * rule.nodes[q];
      cell += 0.5 * (b - a) * rule.weights[q] * b_of_angle(th) *
              std::pow(std::sin(th), d_ - 2);
    }
    table_cdf_[k + 1] = table_cdf_[k] + cell;
  }
  const double total = table_cdf_.back();
  angular_mass_ = outer * total;
  for (double& c : table_cdf_) c /= total;
}

double CollisionKernel::sample_angle(double u) const {
  require(kind_ == KernelKind::kTrueMaxwell, "angle table exists only for TMM");
  const auto it = std::upper_bound(table_cdf_.begin(), table_cdf_.end(), u);
  auto k = static_cast<std::size_t>(std::distance(table_cdf_.begin(), it));
  k = std::clamp<std::size_t>(k, 1, table_cdf_.size() - 1);
  const double c0 = table_cdf_[k - 1], c1 = table_cdf_[k];
  const double t = c1 > c0 ? (u - c0) / (c1 - c0) : 0.0;
  return table_theta_[k - 1] + t * (table_theta_[k] - table_theta_[k - 1]);
}

// ---------------------------------------------------------------------------
// Kinematics

void collide_in_place(std::span<double> v, std::span<double> w,
                      std::span<const double> sigma) {
  const std::size_t d = v.size();
  double rel2 = 0.0;
  for (std::size_t k = 0; k < d; ++k) rel2 += (v[k] - w[k]) * (v[k] - w[k]);
  const double half = 0.5 * std::sqrt(rel2);
  for (std::size_t k = 0; k < d; ++k) {
    const double center = 0.5 * (v[k] + w[k]);
    v[k] = center + half * sigma[k];
    w[k] = center - half * sigma[k];
  }
}

std::pair<Velocity, Velocity> collide_pair(std::span<const double> v,
                                           std::span<const double> w,
                                           std::span<const double> sigma) {
  require(v.size() == w.size() && v.size() == sigma.size(),
          "collide_pair: dimension mismatch");
  const double len = norm(sigma);
  require(std::abs(len - 1.0) <= kUnitTolerance, "collide_pair: sigma is not a unit vector");
  Velocity unit(sigma.begin(), sigma.end());
  for (double& x : unit) x /= len;
  Velocity a(v.begin(), v.end()), b(w.begin(), w.end());
  collide_in_place(a, b, unit);
  return {std::move(a), std::move(b)};
}

Velocity random_unit(int d, RandomStream& rng) {
  Velocity g(d);
  double n2 = 0.0;
  do {
    n2 = 0.0;
    for (double& x : g) {
      x = rng.normal();
      n2 += x * x;
    }
  } while (n2 < 1e-300);
  const double inv = 1.0 / std::sqrt(n2);
  for (double& x : g) x *= inv;
  return g;
}

Velocity sample_sigma(const CollisionKernel& kernel,
                      std::span<const double> relative_direction, RandomStream& rng) {
  const int d = kernel.dimension();
  require(static_cast<int>(relative_direction.size()) == d,
          "sample_sigma: dimension mismatch");
  const double un = norm(relative_direction);
  if (un == 0.0) return random_unit(d, rng);  // any sigma is admissible when u = 0
  Velocity u(relative_direction.begin(), relative_direction.end());
  for (double& x : u) x /= un;

  if (kernel.kind() != KernelKind::kTrueMaxwell) {
    Velocity s = random_unit(d, rng);
    if (dot(s, u) < 0.0) {
      for (double& x : s) x = -x;
    }
    return s;
  }

  const double theta = kernel.sample_angle(rng.uniform());
  // Unit vector orthogonal to u: project a Gaussian direction.
  Velocity e(d);
  double en = 0.0;
  do {
    for (double& x : e) x = rng.normal();
    const double p = dot(e, u);
    for (int k = 0; k < d; ++k) e[k] -= p * u[k];
    en = norm(e);
  } while (en < 1e-12);
  Velocity s(d);
  const double c = std::cos(theta), sn = std::sin(theta);
  for (int k = 0; k < d; ++k) s[k] = c * u[k] + sn * e[k] / en;
  const double sl = norm(s);
  for (double& x : s) x /= sl;
  return s;
}

double kernel_rate(const CollisionKernel& kernel, std::span<const double> v,
                   std::span<const double> w) {
  double rel2 = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) rel2 += (v[k] - w[k]) * (v[k] - w[k]);
  return kernel.gamma(std::sqrt(rel2)) * kernel.angular_mass();
}

}  // namespace kac
