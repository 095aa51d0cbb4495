// Copyright 2026 The kacchaos Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace kac {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule mapped to [a, b].
QuadratureRule gauss_legendre(int n, double a = -1.0, double b = 1.0);

/// Composite Gauss-Legendre over consecutive panels [edges[k], edges[k+1]].
QuadratureRule composite_gauss(std::span<const double> edges, int points_per_panel);

/// Neumaier-compensated accumulator.
class KahanSum {
 public:
  void add(double x);
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

/// Four-point Lagrange interpolation of samples on x_k = x0 + k h; outside
/// [x0, x0 + (n-1)h] the value `outside` is returned.
double cubic_uniform(std::span<const double> values, double x0, double h, double x,
                     double outside = 0.0);

/// Legendre polynomial P_l(x) by recurrence.
double legendre(int l, double x);

/// Golden-section maximization of f on [a, b].
double golden_max(const std::function<double(double)>& f, double a, double b,
                  double tol, double* argmax = nullptr);

/// Least-squares slope of y against x.
double fitted_slope(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> x);
/// Unbiased sample variance.
double variance(std::span<const double> x);

}  // namespace kac
