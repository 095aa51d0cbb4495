// Copyright 2026 The kacchaos Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "kac/model.hpp"

namespace kac::metrics {

using Complex = std::complex<double>;

/// Finite signed measure sum_a w_a delta_{x_a} on R^d.
class WeightedPointMeasure {
 public:
  explicit WeightedPointMeasure(int d) : d_(d) {}

  /// Uniform weights 1/N on the rows of a flat d*N array.
  static WeightedPointMeasure empirical(int d, std::span<const double> flat);
  static WeightedPointMeasure empirical(const ParticleState& state);

  void add(std::span<const double> x, double weight);

  int dimension() const { return d_; }
  std::size_t size() const { return weights_.size(); }
  std::span<const double> atom(std::size_t a) const {
    return {points_.data() + a * d_, static_cast<std::size_t>(d_)};
  }
  double weight(std::size_t a) const { return weights_[a]; }
  std::span<const double> weights() const { return weights_; }
  std::span<const double> points() const { return points_; }
  double total_weight() const { return total_; }

  /// Nonnegative weights summing to one within tol.
  bool is_probability(double tol = 1e-12) const;
  /// Sum of |w_a|.
  double total_variation() const;
  /// sum_a w_a x_a.
  Velocity first_moment() const;
  /// sum_a w_a x_a^alpha for a multi-index alpha.
  double moment(std::span<const int> alpha) const;
  /// sum_a |w_a| <x_a>^p with <x> = sqrt(1 + |x|^2).
  double weighted_moment(double p) const;

  /// hat h(xi) = sum_a w_a exp(-i x_a . xi).
  Complex transform(std::span<const double> xi) const;

  WeightedPointMeasure scaled(double c) const;
  /// Atoms of *this followed by atoms of other with negated weights.
  WeightedPointMeasure minus(const WeightedPointMeasure& other) const;

 private:
  int d_;
  std::vector<double> points_;
  std::vector<double> weights_;
  double total_ = 0.0;
};

/// Characteristic function of the form
///   hat g(xi) = G(|xi|) * sum_k c_k exp(-i y_k . xi)
/// with a radial envelope G (G(0) = 1) and a finite set of shifts y_k.
/// Gaussians, balls and truncated Gaussians have the single shift 0;
/// two-point laws have G = 1; bimodal mixtures combine both.
class CharacteristicFunction {
 public:
  enum class Tag { kGaussian, kTwoPoint, kUniformBall, kCustom };

  static CharacteristicFunction gaussian(int d, double variance);
  static CharacteristicFunction uniform_ball(int d, double radius);
  /// Symmetric two-point law 1/2 delta_{a e_axis} + 1/2 delta_{-a e_axis}.
  static CharacteristicFunction two_point(int d, double a, int axis = 0);
  /// Law with radial envelope `envelope` (must equal 1 at 0) and shifts.
  /// `decay_radius` bounds the region where |G| is not negligible;
  /// an infinite value marks a purely atomic law.
  static CharacteristicFunction custom(int d, std::function<double(double)> envelope,
                                       WeightedPointMeasure shifts, double decay_radius,
                                       Tag tag = Tag::kCustom);

  Tag tag() const { return tag_; }
  int dimension() const { return shifts_.dimension(); }
  double mass() const { return shifts_.total_weight(); }
  Velocity mean() const { return shifts_.first_moment(); }
  double envelope(double rho) const { return envelope_(rho); }
  const WeightedPointMeasure& shifts() const { return shifts_; }
  double decay_radius() const { return decay_radius_; }
  bool atomic() const;

  Complex operator()(std::span<const double> xi) const;

 private:
  CharacteristicFunction(Tag tag, std::function<double(double)> envelope,
                         WeightedPointMeasure shifts, double decay_radius);

  Tag tag_;
  std::function<double(double)> envelope_;
  WeightedPointMeasure shifts_;
  double decay_radius_;
};

/// Average of cos(x . xi) over directions of xi with |x||xi| = r, in R^d.
double angular_average_cos(int d, double r);

/// Volume of the unit ball in R^d.
double ball_volume(int d);

// ---------------------------------------------------------------------------
// Wasserstein distances

/// W_q between probability measures. d = 1: quantile coupling, arbitrary
/// weights. d >= 2: equal-size uniform clouds, exact assignment.
double wasserstein_empirical(const WeightedPointMeasure& mu, const WeightedPointMeasure& nu,
                             int q);

/// Exact optimal assignment cost ((1/n) sum |x_i - y_sigma(i)|^q)^{1/q}
/// between equal-size uniform clouds in any dimension.
double assignment_wasserstein(const WeightedPointMeasure& mu, const WeightedPointMeasure& nu,
                              int q);

/// Largest cloud accepted by the assignment solver.
inline constexpr std::size_t kAssignmentLimit = 2000;

/// Minimum-cost perfect matching for a dense n x n cost matrix (row-major).
/// Returns assignment[row] = column.
std::vector<std::size_t> solve_assignment(std::span<const double> cost, std::size_t n);

// ---------------------------------------------------------------------------
// Fourier-based norms

struct FourierGrid {
  double min_radius = 1e-3;
  double max_radius = 1e3;
  int radii = 400;
  /// Directions used for d >= 2 (d = 1 uses +1 only; |hat h| is even).
  int directions = 64;
  bool refine = true;
};

/// Deterministic quasi-uniform unit directions in R^d.
std::vector<Velocity> grid_directions(int d, int count);

/// sup over the grid of |hat h(xi)| / |xi|^s for an arbitrary transform.
double fourier_sup(const std::function<Complex(std::span<const double>)>& transform, int d,
                   double s, const FourierGrid& grid = {});

/// |h|_s for a point measure. Requires zero mass, and zero first moments
/// when s > 1 (tolerance 1e-10).
double fourier_norm(const WeightedPointMeasure& h, double s, const FourierGrid& grid = {});
/// |mu - g|_s.
double fourier_norm(const WeightedPointMeasure& mu, const CharacteristicFunction& g, double s,
                    const FourierGrid& grid = {});

/// Smooth radial cutoff: 1 on |xi| <= 1, 0 on |xi| >= 2.
double cutoff(double r);
/// d/dr of cutoff.
double cutoff_derivative(double r);
/// sup_y chi(y) + |y| |grad chi(y)|.
double cutoff_lipschitz_constant();

/// |||h|||_k = |h - M_k[h]|_k + sum_{|alpha| <= k-1} |M_alpha[h]|.
double toscani_modified_norm(const WeightedPointMeasure& h, int k,
                             const FourierGrid& grid = {});

// ---------------------------------------------------------------------------
// Negative homogeneous Sobolev norms

/// C(d, beta) with int (1 - cos(z . xi)) |xi|^{-2s} dxi = C |z|^{2 beta},
/// beta = s - d/2 in (0, 1).
double riesz_constant(int d, double s);

/// ||h||_{H^-s} squared for a point measure with zero mass, d/2 < s < d/2 + 1.
double sobolev_neg_norm_squared(const WeightedPointMeasure& h, double s);
double sobolev_neg_norm(const WeightedPointMeasure& h, double s);
/// ||mu - g||_{H^-s} squared; mu and g must have equal mass.
double sobolev_neg_norm_squared(const WeightedPointMeasure& mu, const CharacteristicFunction& g,
                                double s);
double sobolev_neg_norm(const WeightedPointMeasure& mu, const CharacteristicFunction& g,
                        double s);
/// ||g1 - g2||_{H^-s} for two characteristic functions of equal mass.
double sobolev_neg_norm(const CharacteristicFunction& g1, const CharacteristicFunction& g2,
                        double s);

// ---------------------------------------------------------------------------
// Comparison inequalities

struct ComparisonOptions {
  int q = 2;
  int k = 2;
  std::vector<double> fourier_orders{0.5, 1.0};
  /// Sobolev order; 0 selects 1.25 in d = 1 and d/2 + 1/2 otherwise.
  double sobolev_order = 0.0;
  double slack = 1e-12;
  FourierGrid grid{};
};

struct ComparisonRow {
  std::string item;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  bool pass = true;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  bool all_pass() const;
  std::size_t violations() const;
};

/// Evaluates both sides of the distance comparison inequalities for two
/// probability measures given as equal-size uniform clouds.
ComparisonReport check_comparisons(const WeightedPointMeasure& f, const WeightedPointMeasure& g,
                                   const ComparisonOptions& options = {});

/// Bound on W_1 from the Sobolev distance after optimizing the truncation
/// radius and mollification scale.
double sobolev_w1_bound(int d, double s, int k, double moment, double sobolev);
/// Bound on W_1 from |f - g|_s after the same optimization.
double fourier_w1_bound(int d, double s, int k, double moment, double fourier);

void write_report_csv(std::ostream& out, const ComparisonReport& report);

}  // namespace kac::metrics
