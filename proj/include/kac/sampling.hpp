// Copyright 2026 The kacchaos Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "kac/metrics.hpp"
#include "kac/model.hpp"
#include "kac/rng.hpp"

namespace kac::sampling {

enum class DensityKind { kUniformBall, kTruncatedGaussian, kTwoPoint, kBimodal, kGaussian };

/// Zero-mean one-particle law with closed-form moments and sampler.
///
/// uniform_ball(R): uniform on |v| <= R.
/// truncated_gaussian(sigma, R): N(0, sigma^2 I) conditioned on |v| <= R.
/// two_point(a): 1/2 delta_{a e} + 1/2 delta_{-a e}; a = 0 is the point mass.
/// bimodal(m, sigma): 1/2 N(m e, sigma^2 I) + 1/2 N(-m e, sigma^2 I).
/// gaussian(sigma): N(0, sigma^2 I), no truncation.
class ReferenceDensity {
 public:
  static ReferenceDensity uniform_ball(int d, double radius);
  static ReferenceDensity truncated_gaussian(int d, double sigma, double radius);
  static ReferenceDensity two_point(int d, double a, int axis = 0);
  static ReferenceDensity bimodal(int d, double separation, double sigma, int axis = 0);
  static ReferenceDensity gaussian(int d, double sigma);

  /// Build from a configuration name ("uniform_ball", "trunc_gauss",
  /// "two_point", "bimodal", "gauss") and named parameters.
  static ReferenceDensity from_name(const std::string& name, int d,
                                    const std::map<std::string, double>& params);

  DensityKind kind() const { return kind_; }
  std::string name() const;
  int dimension() const { return d_; }
  bool compact_support() const;
  /// Radius of the support (infinite for non-compact laws).
  double support_radius() const;

  /// E|v|^p. Bimodal laws support even p only.
  double moment(int p) const;
  /// Mean square speed E|v|^2.
  double energy() const { return moment(2); }

  bool has_density() const { return kind_ != DensityKind::kTwoPoint; }
  /// Lebesgue density at v; throws for the two-point law.
  double density(std::span<const double> v) const;

  metrics::CharacteristicFunction characteristic() const;

  void sample_into(std::span<double> out, RandomStream& rng) const;
  Velocity sample(RandomStream& rng) const;

 private:
  ReferenceDensity(DensityKind kind, int d) : kind_(kind), d_(d) {}
  /// Normalized radial density of |v| for the truncated Gaussian.
  double truncated_radial_density(double r) const;

  DensityKind kind_;
  int d_;
  double radius_ = 0.0;
  double sigma_ = 0.0;
  double shift_ = 0.0;
  int axis_ = 0;
  double truncated_mass_ = 1.0;  // P(d/2, R^2 / (2 sigma^2))
};

/// N iid draws from f0.
ParticleState sample_tensorized(const ReferenceDensity& f0, std::size_t n, RandomStream& rng);

/// Centre-and-rescale surrogate of f0^N conditioned on S^N(E). Draws whose
/// centred energy is below 1e-6 E are redrawn; more than 100 in a row is an
/// error.
ParticleState sample_sphere_conditioned(const ReferenceDensity& f0, std::size_t n, double energy,
                                        RandomStream& rng);

/// Uniform law on S^N(E) in R^{dN}.
ParticleState sample_uniform_sphere(std::size_t n, double energy, int d, RandomStream& rng);

/// Subtract the mean and rescale to mean square speed E. Returns false if the
/// centred energy is below 1e-6 E.
bool project_to_sphere(std::span<double> flat, int d, double energy);

enum class BaselineMetric { kWasserstein1, kSobolevSquared };

struct BaselineOptions {
  BaselineMetric metric = BaselineMetric::kWasserstein1;
  double sobolev_order = 1.0;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct BaselineEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::vector<double> samples;
};

/// Monte Carlo estimate of E D(mu^N, f0) over M independent empirical
/// measures. W1 compares against an independent f0 cloud of the same size;
/// the Sobolev metric uses the characteristic function of f0.
BaselineEstimate chaos_baseline(const ReferenceDensity& f0, std::size_t n, std::size_t replicas,
                                const BaselineOptions& options = {});

}  // namespace kac::sampling
