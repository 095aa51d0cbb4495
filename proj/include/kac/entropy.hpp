// Copyright 2026 The kacchaos Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "kac/limit.hpp"
#include "kac/metrics.hpp"
#include "kac/model.hpp"

namespace kac::entropy {

/// H(f | gamma_E) = int f log(f / gamma_E) on a velocity grid that covers at
/// least 8 standard deviations of gamma_E. Values in [-1e-12, 0] count as 0.
double relative_entropy(const limit::GridDensity& f, double energy);

/// Same functional for a density given by its polar Legendre modes. Values
/// above -(1e-12 + negative_tolerance * max f) count as 0; lower values are
/// an error.
double relative_entropy(const limit::PolarDensity& f, double energy, int mu_nodes = 48,
                        double negative_tolerance = 1e-6);

/// I(f) = int |grad f|^2 / f with sixth-order central differences on the
/// grid interior (three boundary layers are skipped).
double fisher_information(const limit::GridDensity& f);

struct ProductionOptions {
  std::size_t samples = 200000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  /// Density floor relative to max f used before taking logarithms.
  double floor = 1e-13;
};

struct ProductionEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
  /// Set when a post-collision velocity left the grid or hit the floor.
  bool clamped = false;
};

/// Monte Carlo estimate of the entropy production
///   D(f) = 1/4 int_half (f' f'_* - f f_*) log(f' f'_* / (f f_*)) B dsigma dv dv_*
/// so that dH/dt = -D along the limit equation. (v, v_*) are drawn from f,
/// sigma from the angular law, and log f is interpolated tricubically.
ProductionEstimate entropy_production(const limit::GridDensity& f, const CollisionKernel& kernel,
                                      const ProductionOptions& options = {});

/// Same estimate for a sample cloud, smoothed by a Gaussian kernel density
/// estimate on a velocity grid. bandwidth <= 0 selects Silverman's rule.
ProductionEstimate entropy_production(const metrics::WeightedPointMeasure& cloud,
                                      const CollisionKernel& kernel,
                                      const ProductionOptions& options = {},
                                      double bandwidth = 0.0);

/// Gaussian kernel density estimate of a cloud on [-R, R]^d.
limit::GridDensity kde_grid(const metrics::WeightedPointMeasure& cloud, double extent,
                            std::size_t nodes, double bandwidth);

struct KnnOptions {
  int k = 4;
  std::size_t bootstrap = 400;
  double confidence = 0.95;
  std::uint64_t seed = 0;
};

struct KnnEstimate {
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
  /// Set when duplicate samples had to be separated by jitter.
  bool jittered = false;
};

/// Kozachenko-Leonenko estimate of H(mu | gamma_E) from a uniform-weight
/// cloud of at least 500 samples: -h_KL(mu) - mean log gamma_E(x_i).
/// The interval bootstraps the per-sample contributions.
KnnEstimate marginal_entropy_estimate(const metrics::WeightedPointMeasure& samples, double energy,
                                      const KnnOptions& options = {});

struct EntropyReport {
  double time = 0.0;
  double relative_entropy = 0.0;
  std::optional<double> fisher;
  std::optional<ProductionEstimate> production;
  std::optional<KnnEstimate> marginal;
};

void write_report_header(std::ostream& out);
void write_report_row(std::ostream& out, const EntropyReport& report);

}  // namespace kac::entropy
