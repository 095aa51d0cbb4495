// Copyright 2026 The kacchaos Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kac/rng.hpp"

namespace kac {

using Velocity = std::vector<double>;

/// Surface area of the unit sphere S^{d-1} in R^d.
double sphere_area(int d);

/// Tolerance on |sigma| - 1 below which sigma is renormalized.
inline constexpr double kUnitTolerance = 1e-12;

/// N velocities in R^d stored as one flat array, with compensated running
/// sums of energy and momentum.
class ParticleState {
 public:
  ParticleState() = default;
  ParticleState(int d, std::vector<double> flat);

  int dimension() const { return d_; }
  std::size_t size() const { return n_; }
  bool empty() const { return n_ == 0; }

  std::span<const double> velocity(std::size_t i) const {
    return {flat_.data() + i * d_, static_cast<std::size_t>(d_)};
  }
  std::span<const double> data() const { return flat_; }

  /// Mean square speed (1/N) sum |v_i|^2 from the running sum.
  double energy() const;
  /// Mean velocity (1/N) sum v_i from the running sums.
  Velocity momentum() const;

  /// Same quantities summed from scratch.
  double recomputed_energy() const;
  Velocity recomputed_momentum() const;

  /// Replace v_i and v_j by their post-collision values.
  void apply_collision(std::size_t i, std::size_t j, std::span<const double> sigma);

  /// Overwrite all velocities; the running sums are rebuilt.
  void assign(std::vector<double> flat);

  bool operator==(const ParticleState& other) const {
    return d_ == other.d_ && flat_ == other.flat_;
  }

 private:
  struct Compensated {
    double sum = 0.0;
    double carry = 0.0;
    void add(double x);
    double value() const { return sum + carry; }
  };

  void rebuild_sums();

  int d_ = 0;
  std::size_t n_ = 0;
  std::vector<double> flat_;
  Compensated energy_sum_;
  std::vector<Compensated> momentum_sum_;
};

/// Energy and momentum constraint defining the Boltzmann sphere S^N(E).
struct SphereConstraint {
  double energy = 1.0;
  Velocity momentum;  // zero vector of the working dimension

  SphereConstraint(double e, int d);
  /// True if the state's recomputed energy and momentum match within rel_tol
  /// (momentum measured relative to sqrt(E)).
  bool satisfied_by(const ParticleState& state, double rel_tol) const;
};

enum class KernelKind { kGradMaxwell, kTrueMaxwell, kHardSpheres };

/// B = Gamma(|v - v*|) b(cos theta) with b supported on theta in [0, pi/2].
///
/// GMM: Gamma = 1, b = 1. HS: Gamma(z) = C z, b = 1. TMM: Gamma = 1,
/// b(cos theta) = C_b theta^{-2-nu} on [cutoff, pi/2], zero below the cutoff.
class CollisionKernel {
 public:
  static CollisionKernel grad_maxwell(int d);
  static CollisionKernel true_maxwell(int d, double cutoff, double strength = 1.0);
  static CollisionKernel hard_spheres(int d, double speed_coefficient = 1.0);

  KernelKind kind() const { return kind_; }
  int dimension() const { return d_; }
  double cutoff() const { return cutoff_; }
  double strength() const { return strength_; }
  double exponent() const { return nu_; }
  double speed_coefficient() const { return speed_coefficient_; }
  bool maxwellian() const { return kind_ != KernelKind::kHardSpheres; }
  std::string name() const;

  double gamma(double relative_speed) const;
  /// Angular density in terms of the deviation angle theta in [0, pi/2].
  double b_of_angle(double theta) const;
  /// Smallest deviation angle carrying mass (0 unless TMM).
  double min_angle() const { return kind_ == KernelKind::kTrueMaxwell ? cutoff_ : 0.0; }
  /// Total angular mass over the half sphere.
  double angular_mass() const { return angular_mass_; }

  /// Inverse CDF of the deviation angle under b(cos theta) sin^{d-2}(theta).
  double sample_angle(double u) const;

 private:
  CollisionKernel(KernelKind kind, int d);
  void build_angle_table();

  KernelKind kind_;
  int d_;
  double cutoff_ = 0.0;
  double strength_ = 1.0;
  double nu_ = 0.5;
  double speed_coefficient_ = 1.0;
  double angular_mass_ = 0.0;
  std::vector<double> table_theta_;
  std::vector<double> table_cdf_;
};

/// Post-collision pair (v*, w*) for the direction sigma.
std::pair<Velocity, Velocity> collide_pair(std::span<const double> v,
                                           std::span<const double> w,
                                           std::span<const double> sigma);

/// In-place variant used by the simulators. sigma must already be unit.
void collide_in_place(std::span<double> v, std::span<double> w,
                      std::span<const double> sigma);

/// Draw sigma on the half sphere sigma . u_hat >= 0 with density b(sigma . u_hat).
Velocity sample_sigma(const CollisionKernel& kernel,
                      std::span<const double> relative_direction,
                      RandomStream& rng);

/// Gamma(|v - w|) times the angular mass.
double kernel_rate(const CollisionKernel& kernel, std::span<const double> v,
                   std::span<const double> w);

/// Uniform point on S^{d-1}.
Velocity random_unit(int d, RandomStream& rng);

double norm(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);

}  // namespace kac
