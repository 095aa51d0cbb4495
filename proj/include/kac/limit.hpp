// Copyright 2026 The kacchaos Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "kac/metrics.hpp"
#include "kac/model.hpp"
#include "kac/sampling.hpp"

namespace kac::limit {

enum class Representation {
  kVelocityGrid,          // f(v_k) on the box [-R, R]^d, n nodes per axis
  kRadialFourier,         // F(rho_k), rho_k = k h on [0, Xi]
  kAxisymmetricFourier,   // F(rho, mu) = sum_{even l <= L} F_l(rho) P_l(mu), d = 3
  kFullFourier,           // F(xi_k) on the box [-Xi, Xi]^d, n odd
};

const char* representation_name(Representation r);

/// Grid representation of a one-particle density or of its Fourier
/// transform. For the axisymmetric form the symmetry axis is the last
/// coordinate and values are stored mode by mode: values[m * n + k] is
/// F_{2m}(rho_k).
class GridDensity {
 public:
  static GridDensity radial_fourier(const std::function<double(double)>& profile, int d,
                                    double extent, std::size_t nodes);
  static GridDensity axisymmetric_fourier(const std::function<double(double, double)>& profile,
                                          int max_degree, double extent, std::size_t nodes);
  static GridDensity full_fourier(const std::function<double(std::span<const double>)>& profile,
                                  int d, double extent, std::size_t nodes);
  static GridDensity velocity_grid(const std::function<double(std::span<const double>)>& density,
                                   int d, double extent, std::size_t nodes);

  Representation representation() const { return representation_; }
  bool fourier() const { return representation_ != Representation::kVelocityGrid; }
  int dimension() const { return d_; }
  double extent() const { return extent_; }
  double spacing() const { return spacing_; }
  std::size_t nodes() const { return nodes_; }
  int max_degree() const { return max_degree_; }
  std::size_t modes() const { return static_cast<std::size_t>(max_degree_ / 2 + 1); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  double time = 0.0;
  /// Set when an evaluation fell outside the grid and was clamped to 0.
  bool truncated = false;

  /// Grid coordinate of node k along one axis.
  double coordinate(std::size_t k) const;
  /// F_l(rho) by cubic interpolation (radial form: l = 0 only).
  double mode(int l, double rho) const;
  /// F(xi) for any Fourier form.
  double fourier_value(std::span<const double> xi) const;

  double mass() const;
  /// Mean square speed.
  double energy() const;
  Velocity momentum() const;

  /// Reset F(0) = 1 (Fourier forms only).
  void enforce_normalization();

 private:
  friend class MomentVector fourier_moments(const GridDensity& f, int kmax);
  GridDensity(Representation r, int d, double extent, std::size_t nodes);
  std::vector<double> taylor_coefficients(int l) const;
  double full_second_derivative(int a, int b) const;

  Representation representation_;
  int d_;
  double extent_;
  double spacing_;
  std::size_t nodes_;
  int max_degree_ = 0;
  std::vector<double> values_;
};

/// Unit-mass centred Gaussian with per-coordinate variance E/d on the box
/// [-R, R]^d with R = 8 sqrt(E/d).
GridDensity maxwellian_density(double energy, int d, std::size_t nodes = 65);
/// Its isotropic Fourier profile on [0, 16 / sqrt(E/d)].
GridDensity maxwellian_fourier(double energy, int d, std::size_t nodes = 512);

// ---------------------------------------------------------------------------
// Spectral solver

/// Deviation-angle quadrature for a Maxwellian kernel: nodes theta_j and
/// weights w_j = |S^{d-2}| b(theta_j) sin^{d-2}(theta_j) dtheta_j summing to
/// the angular mass.
struct AngularRule {
  std::vector<double> theta;
  std::vector<double> weight;
};
AngularRule angular_rule(const CollisionKernel& kernel, int nodes);

/// Bobylev gain operator for a fixed kernel and grid layout.
class GainOperator {
 public:
  GainOperator(const CollisionKernel& kernel, const GridDensity& layout, int angular_nodes = 48);
  /// Q^+(F, F) in the layout of F. Returns true if any argument left the grid.
  bool apply(const GridDensity& f, std::span<double> out) const;
  double loss_rate() const { return loss_rate_; }

 private:
  bool apply_full(const GridDensity& f, std::span<double> out) const;

  Representation representation_;
  int d_;
  std::size_t modes_ = 1;
  double loss_rate_;
  AngularRule rule_;
  std::vector<double> coupling_;  // [j][l][l1][l2], axisymmetric form
  std::vector<Velocity> transverse_;  // (cos phi, sin phi) azimuths for full grids
};

/// Q^+(F, F) as a grid density.
GridDensity qhat_gain(const GridDensity& f, const CollisionKernel& kernel);

struct FourierTrajectory {
  std::vector<double> times;
  std::vector<GridDensity> states;
  bool truncated = false;
};

/// RK4 for dF/dt = Q^+(F, F) - |b| F with |b| the angular mass.
FourierTrajectory evolve_fourier(const GridDensity& f0, const CollisionKernel& kernel,
                                 double horizon, double dt, std::size_t record_every = 1);

/// sup over grid nodes with xi != 0 of |F - G| / |xi|^s.
double fourier_grid_distance(const GridDensity& f, const GridDensity& g, double s);

/// Velocity density f(r, mu) = sum_{even l} f_l(r) P_l(mu) of a radial or
/// axisymmetric Fourier form, tabulated on r_i = i r_max / (nodes - 1).
struct PolarDensity {
  int d = 3;
  int max_degree = 0;
  double r_max = 0.0;
  std::size_t nodes = 0;
  std::vector<double> values;  // values[m * nodes + i] = f_{2m}(r_i)

  double spacing() const { return r_max / static_cast<double>(nodes - 1); }
  double mode(int l, double r) const;
  double operator()(double r, double mu) const;
};

/// Inverse Fourier transform from a radial or axisymmetric layout to polar
/// velocity nodes, precomputed as a matrix per Legendre degree.
class InverseTransform {
 public:
  InverseTransform(const GridDensity& layout, double r_max, std::size_t nodes);
  PolarDensity apply(const GridDensity& f) const;

 private:
  int d_;
  int max_degree_;
  double r_max_;
  std::size_t r_nodes_;
  std::size_t xi_nodes_;
  std::vector<double> matrix_;  // [m][i][k]
};

/// Inverse transform of a radial or axisymmetric Fourier form onto the box
/// [-R, R]^d with n nodes per axis.
GridDensity to_velocity_grid(const GridDensity& f, double extent, std::size_t nodes);

// ---------------------------------------------------------------------------
// Moments

/// Multi-indices alpha in N^d with |alpha| <= kmax, graded then lexicographic.
std::vector<std::vector<int>> moment_indices(int d, int kmax);

class MomentVector {
 public:
  MomentVector(int d, int kmax);

  static MomentVector from_measure(const metrics::WeightedPointMeasure& mu, int kmax);
  static MomentVector maxwellian(double energy, int d, int kmax);

  int dimension() const { return d_; }
  int max_order() const { return kmax_; }
  const std::vector<std::vector<int>>& indices() const { return indices_; }
  std::size_t index(std::span<const int> alpha) const;
  double operator[](std::span<const int> alpha) const { return values_[index(alpha)]; }
  double& operator[](std::span<const int> alpha) { return values_[index(alpha)]; }
  double at(std::initializer_list<int> alpha) const;
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

 private:
  int d_;
  int kmax_;
  std::vector<std::vector<int>> indices_;
  std::vector<double> values_;
};

/// Second and third order moments (and mass, momentum) read off a Fourier
/// form by fitting its Taylor expansion at the origin. kmax <= 3.
MomentVector fourier_moments(const GridDensity& f, int kmax);

struct MomentTerm {
  std::size_t beta;
  std::size_t gamma;
  double coefficient;
};

/// dM_alpha/dt = sum over terms of coefficient * M_beta * M_gamma with
/// |beta| + |gamma| = |alpha|.
class MomentCoefficients {
 public:
  int dimension() const { return d_; }
  int max_order() const { return kmax_; }
  const std::vector<std::vector<int>>& indices() const { return indices_; }
  const std::vector<MomentTerm>& row(std::size_t alpha) const { return rows_[alpha]; }
  /// Coefficient of M_alpha M_0 (the linear self-coupling a_{alpha,alpha}).
  double diagonal(std::span<const int> alpha) const;
  double diagonal(std::initializer_list<int> alpha) const;
  void rhs(std::span<const double> m, std::span<double> out) const;

 private:
  friend MomentCoefficients moment_ode_coefficients(const CollisionKernel&, int);
  int d_ = 0;
  int kmax_ = 0;
  std::vector<std::vector<int>> indices_;
  std::vector<std::vector<MomentTerm>> rows_;
};

MomentCoefficients moment_ode_coefficients(const CollisionKernel& kernel, int kmax);

struct MomentTrajectory {
  std::vector<double> times;
  std::vector<MomentVector> states;
};

MomentTrajectory evolve_moments(const MomentVector& m0, const MomentCoefficients& coefficients,
                                double horizon, double dt);

// ---------------------------------------------------------------------------
// Hard-spheres reference

struct OracleOptions {
  std::size_t particles = 1000;
  std::size_t replicas = 10;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct OracleResult {
  std::vector<double> times;
  std::vector<metrics::WeightedPointMeasure> marginals;
  std::size_t particles = 0;
  std::size_t replicas = 0;
  std::uint64_t seed = 0;
  /// Seed actually fed to the ensemble, derived from `seed` so that oracle
  /// streams never coincide with experiment streams.
  std::uint64_t stream_seed = 0;
};

/// Pooled one-particle marginals of a large particle ensemble started from
/// sphere-conditioned f0 data on S^N(E).
OracleResult particle_limit_oracle(const sampling::ReferenceDensity& f0,
                                   const CollisionKernel& kernel, double energy, double horizon,
                                   std::span<const double> checkpoints,
                                   const OracleOptions& options);

/// particle_limit_oracle for hard spheres.
OracleResult hs_limit_oracle(const sampling::ReferenceDensity& f0, double energy, double horizon,
                             std::span<const double> checkpoints, const OracleOptions& options);

// ---------------------------------------------------------------------------
// Serialization

void write_grid_csv(std::ostream& out, const GridDensity& f);
void write_grid_metadata(std::ostream& out, const GridDensity& f);

}  // namespace kac::limit
