// Copyright 2026 The kacchaos Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "kac/jump.hpp"
#include "kac/limit.hpp"
#include "kac/metrics.hpp"
#include "kac/sampling.hpp"

namespace kac::chaos {

enum class MarginalSelection {
  kFirst,         ///< coordinates 1..ell of every replica
  kRandomSubset,  ///< one uniformly random ordered ell-subset per replica
  kAugmented,     ///< both of the above, 2M tuples
};

/// Cloud of ell-tuples in R^{d ell}, one (or two) per replica.
metrics::WeightedPointMeasure extract_marginal(const jump::Ensemble& ensemble, double t,
                                               std::size_t ell,
                                               MarginalSelection selection = MarginalSelection::kFirst,
                                               std::uint64_t seed = 0);

/// Produces a fresh iid cloud of `size` ell-tuples from the reference law.
using ReferenceSource =
    std::function<metrics::WeightedPointMeasure(std::size_t size, RandomStream& rng)>;

/// Tuples of independent draws from a one-particle law.
ReferenceSource density_source(const sampling::ReferenceDensity& f, std::size_t ell);

/// Tuples of distinct atoms drawn uniformly from a one-particle sample pool.
/// Each call needs at least ell * size atoms.
ReferenceSource pool_source(metrics::WeightedPointMeasure pool, std::size_t ell);

/// Tuples of independent draws from a velocity-grid density, sampled cell by
/// cell with uniform jitter inside the cell.
ReferenceSource grid_source(const limit::GridDensity& f, std::size_t ell);

/// First ell velocities of independent uniform draws on S^N(E).
ReferenceSource uniform_sphere_source(std::size_t n, double energy, int d, std::size_t ell);

struct MetricOptions {
  int q = 1;
  std::size_t bootstrap = 32;
  /// Independent reference-vs-reference draws for the noise floor; 0 skips it.
  std::size_t floor_draws = 8;
  MarginalSelection selection = MarginalSelection::kFirst;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct MetricEstimate {
  double value = 0.0;
  /// Bootstrap standard error over replicas.
  double std_error = 0.0;
  /// Mean and standard error of W_q / ell between two independent reference
  /// clouds of the same size.
  double noise_floor = 0.0;
  double noise_floor_error = 0.0;
  std::size_t cloud_size = 0;
};

/// W_q(marginal cloud, reference) / ell for a reference cloud of equal size.
MetricEstimate chaos_metric(const jump::Ensemble& ensemble,
                            const metrics::WeightedPointMeasure& reference, double t,
                            std::size_t ell, const MetricOptions& options = {});

/// Same with the reference cloud drawn from `source` on the kReference channel.
MetricEstimate chaos_metric(const jump::Ensemble& ensemble, const ReferenceSource& source,
                            double t, std::size_t ell, const MetricOptions& options = {});

/// W_q / ell between the ell-marginal and the ell-marginal of the uniform law
/// on S^N(E), with N and E read from the ensemble.
MetricEstimate relaxation_metric(const jump::Ensemble& ensemble, double t, std::size_t ell,
                                 const MetricOptions& options = {});

struct ChaosSeries {
  std::vector<double> times;
  std::vector<MetricEstimate> estimates;
  std::string kernel;
  std::string metric;
  std::size_t particles = 0;
  std::size_t replicas = 0;
  std::size_t ell = 1;
  std::uint64_t seed = 0;
  bool augmented = false;

  double sup_value() const;
};

/// chaos_metric at every checkpoint; source_at(t) supplies f_t.
ChaosSeries chaos_series(const jump::Ensemble& ensemble,
                         const std::function<ReferenceSource(double)>& source_at,
                         std::size_t ell, const MetricOptions& options = {});

ChaosSeries relaxation_series(const jump::Ensemble& ensemble, std::size_t ell,
                              const MetricOptions& options = {});

/// Columns t,value,stderr,N,M,ell,metric,kernel,seed.
void write_series_csv(std::ostream& out, const ChaosSeries& series);
void write_series_metadata(std::ostream& out, const ChaosSeries& series);

struct LlnRow {
  std::size_t n = 0;
  double mean = 0.0;
  double std_error = 0.0;
};

struct LlnResult {
  std::vector<LlnRow> rows;
  /// Log-log slope of mean against N; NaN when degenerate.
  double slope = 0.0;
  /// Set when some mean vanishes and no slope can be fitted.
  bool degenerate = false;
};

/// E D(mu^N, f0) over M empirical measures for each N of a geometric schedule.
LlnResult lln_rate_experiment(const sampling::ReferenceDensity& f0,
                              std::span<const std::size_t> schedule, std::size_t replicas,
                              const sampling::BaselineOptions& options = {});

/// Columns N,mean,stderr.
void write_lln_csv(std::ostream& out, const LlnResult& result);

}  // namespace kac::chaos
