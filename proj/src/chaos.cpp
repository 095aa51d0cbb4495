// Copyright 2026 The kacchaos Authors
// SPDX-License-Identifier: Apache-2.0
#include "kac/chaos.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "json.hpp"
#include "kac/error.hpp"
#include "kac/numerics.hpp"

namespace kac::chaos {

namespace {

using metrics::WeightedPointMeasure;

const ParticleState& snapshot(const jump::Ensemble& ensemble, std::size_t replica,
                              std::size_t checkpoint) {
  return ensemble.replicas[replica].snapshots[checkpoint];
}

/// ell distinct indices of [0, n), uniformly ordered.
std::vector<std::size_t> random_subset(std::size_t n, std::size_t ell, RandomStream& rng) {
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t k = 0; k < ell; ++k) {
    const std::size_t j = k + static_cast<std::size_t>(rng.below(n - k));
    std::swap(pool[k], pool[j]);
  }
  pool.resize(ell);
  return pool;
}

WeightedPointMeasure rows_of(int dim, std::span<const double> flat,
                             std::span<const std::size_t> rows) {
  std::vector<double> out;
  out.reserve(rows.size() * static_cast<std::size_t>(dim));
  for (std::size_t r : rows) {
    const auto first = flat.begin() + static_cast<std::ptrdiff_t>(r * dim);
    out.insert(out.end(), first, first + dim);
  }
  return WeightedPointMeasure::empirical(dim, out);
}

std::vector<std::size_t> resample(std::size_t n, RandomStream& rng) {
  std::vector<std::size_t> rows(n);
  for (auto& r : rows) r = static_cast<std::size_t>(rng.below(n));
  return rows;
}

void append(std::string& line, double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  line.append(buf, res.ptr);
}

std::string metric_name(int q) { return "W" + std::to_string(q); }

MetricEstimate compare(const WeightedPointMeasure& marginal, const WeightedPointMeasure& reference,
                       std::size_t ell, std::size_t group, const MetricOptions& options) {
  require(marginal.size() == reference.size(), "chaos_metric: reference cloud size " +
                                                   std::to_string(reference.size()) +
                                                   " does not match marginal cloud size " +
                                                   std::to_string(marginal.size()));
  require(marginal.dimension() == reference.dimension(),
          "chaos_metric: reference and marginal dimensions differ");
  require(options.q >= 1, "chaos_metric: q must be at least 1");
  const double scale = 1.0 / static_cast<double>(ell);
  MetricEstimate est;
  est.cloud_size = marginal.size();
  est.value = metrics::wasserstein_empirical(marginal, reference, options.q) * scale;
  if (options.bootstrap < 2) return est;

  // Replicas are resampled as groups so that the augmented tuples of one
  // replica stay together.
  const std::size_t m = marginal.size() / group;
  const int dim = marginal.dimension();
  std::vector<double> draws(options.bootstrap);
  jump::parallel_for(options.bootstrap, options.threads, [&](std::size_t b) {
    RandomStream rng(options.seed, b, Channel::kBootstrap);
    std::vector<std::size_t> rows;
    rows.reserve(marginal.size());
    for (std::size_t r : resample(m, rng)) {
      for (std::size_t g = 0; g < group; ++g) rows.push_back(r + g * m);
    }
    const auto mu = rows_of(dim, marginal.points(), rows);
    const auto nu = rows_of(dim, reference.points(), resample(reference.size(), rng));
    draws[b] = metrics::wasserstein_empirical(mu, nu, options.q) * scale;
  });
  est.std_error = std::sqrt(variance(draws));
  return est;
}

void add_floor(MetricEstimate& est, const ReferenceSource& source, std::size_t ell,
               const MetricOptions& options) {
  if (options.floor_draws == 0) return;
  std::vector<double> floors(options.floor_draws);
  jump::parallel_for(options.floor_draws, options.threads, [&](std::size_t k) {
    RandomStream rng(options.seed, 1 + k, Channel::kReference);
    const auto a = source(est.cloud_size, rng);
    const auto b = source(est.cloud_size, rng);
    floors[k] = metrics::wasserstein_empirical(a, b, options.q) / static_cast<double>(ell);
  });
  est.noise_floor = mean(floors);
  est.noise_floor_error =
      floors.size() > 1 ? std::sqrt(variance(floors) / static_cast<double>(floors.size())) : 0.0;
}

std::size_t group_size(MarginalSelection selection) {
  return selection == MarginalSelection::kAugmented ? 2 : 1;
}

}  // namespace

WeightedPointMeasure extract_marginal(const jump::Ensemble& ensemble, double t, std::size_t ell,
                                      MarginalSelection selection, std::uint64_t seed) {
  require(!ensemble.replicas.empty(), "extract_marginal: empty ensemble");
  const std::size_t c = ensemble.checkpoint_index(t);
  const auto& first = snapshot(ensemble, 0, c);
  const int d = first.dimension();
  const std::size_t n = first.size();
  require(ell >= 1 && ell <= n, "extract_marginal: marginal order exceeds particle count");
  const std::size_t m = ensemble.replicas.size();
  const std::size_t dim = ell * static_cast<std::size_t>(d);

  std::vector<double> flat;
  flat.reserve(m * dim * group_size(selection));
  if (selection != MarginalSelection::kRandomSubset) {
    for (std::size_t r = 0; r < m; ++r) {
      const auto data = snapshot(ensemble, r, c).data();
      flat.insert(flat.end(), data.begin(), data.begin() + static_cast<std::ptrdiff_t>(dim));
    }
  }
  if (selection != MarginalSelection::kFirst) {
    for (std::size_t r = 0; r < m; ++r) {
      RandomStream rng(seed, r, Channel::kAuxiliary);
      const auto& state = snapshot(ensemble, r, c);
      for (std::size_t i : random_subset(n, ell, rng)) {
        const auto v = state.velocity(i);
        flat.insert(flat.end(), v.begin(), v.end());
      }
    }
  }
  return WeightedPointMeasure::empirical(static_cast<int>(dim), flat);
}

ReferenceSource density_source(const sampling::ReferenceDensity& f, std::size_t ell) {
  require(ell >= 1, "density_source: ell must be positive");
  return [f, ell](std::size_t size, RandomStream& rng) {
    const auto state = sampling::sample_tensorized(f, size * ell, rng);
    return WeightedPointMeasure::empirical(f.dimension() * static_cast<int>(ell), state.data());
  };
}

ReferenceSource pool_source(WeightedPointMeasure pool, std::size_t ell) {
  require(ell >= 1, "pool_source: ell must be positive");
  require(pool.size() >= 1, "pool_source: empty pool");
  return [pool = std::move(pool), ell](std::size_t size, RandomStream& rng) {
    const std::size_t need = size * ell;
    require(pool.size() >= need, "pool_source: pool of " + std::to_string(pool.size()) +
                                     " atoms is smaller than the " + std::to_string(need) +
                                     " requested");
    const auto rows = random_subset(pool.size(), need, rng);
    const auto cloud = rows_of(pool.dimension(), pool.points(), rows);
    return WeightedPointMeasure::empirical(pool.dimension() * static_cast<int>(ell),
                                           cloud.points());
  };
}

ReferenceSource grid_source(const limit::GridDensity& f, std::size_t ell) {
  require(f.representation() == limit::Representation::kVelocityGrid,
          "grid_source: needs a velocity grid");
  require(ell >= 1, "grid_source: ell must be positive");
  std::vector<double> cdf(f.values().size());
  double total = 0.0;
  for (std::size_t i = 0; i < cdf.size(); ++i) {
    total += std::max(0.0, f.values()[i]);
    cdf[i] = total;
  }
  require(total > 0.0, "grid_source: density has no mass");
  const int d = f.dimension();
  const std::size_t n = f.nodes();
  const double h = f.spacing();
  std::vector<double> axis(n);
  for (std::size_t k = 0; k < n; ++k) axis[k] = f.coordinate(k);
  return [cdf = std::move(cdf), axis = std::move(axis), d, n, h, ell](std::size_t size,
                                                                     RandomStream& rng) {
    std::vector<double> flat(size * ell * static_cast<std::size_t>(d));
    for (std::size_t row = 0; row < size * ell; ++row) {
      const double u = rng.uniform() * cdf.back();
      auto cell = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) -
                                           cdf.begin());
      cell = std::min(cell, cdf.size() - 1);
      for (int a = d - 1; a >= 0; --a) {
        flat[row * d + a] = axis[cell % n] + h * (rng.uniform() - 0.5);
        cell /= n;
      }
    }
    return WeightedPointMeasure::empirical(d * static_cast<int>(ell), flat);
  };
}

ReferenceSource uniform_sphere_source(std::size_t n, double energy, int d, std::size_t ell) {
  require(ell >= 1 && ell <= n, "uniform_sphere_source: marginal order exceeds particle count");
  return [=](std::size_t size, RandomStream& rng) {
    const std::size_t dim = ell * static_cast<std::size_t>(d);
    std::vector<double> flat;
    flat.reserve(size * dim);
    for (std::size_t r = 0; r < size; ++r) {
      const auto state = sampling::sample_uniform_sphere(n, energy, d, rng);
      flat.insert(flat.end(), state.data().begin(),
                  state.data().begin() + static_cast<std::ptrdiff_t>(dim));
    }
    return WeightedPointMeasure::empirical(static_cast<int>(dim), flat);
  };
}

MetricEstimate chaos_metric(const jump::Ensemble& ensemble, const WeightedPointMeasure& reference,
                            double t, std::size_t ell, const MetricOptions& options) {
  const auto marginal = extract_marginal(ensemble, t, ell, options.selection, options.seed);
  return compare(marginal, reference, ell, group_size(options.selection), options);
}

MetricEstimate chaos_metric(const jump::Ensemble& ensemble, const ReferenceSource& source,
                            double t, std::size_t ell, const MetricOptions& options) {
  const auto marginal = extract_marginal(ensemble, t, ell, options.selection, options.seed);
  RandomStream rng(options.seed, 0, Channel::kReference);
  auto est = compare(marginal, source(marginal.size(), rng), ell, group_size(options.selection),
                     options);
  add_floor(est, source, ell, options);
  return est;
}

MetricEstimate relaxation_metric(const jump::Ensemble& ensemble, double t, std::size_t ell,
                                 const MetricOptions& options) {
  require(!ensemble.replicas.empty(), "relaxation_metric: empty ensemble");
  const auto& state = snapshot(ensemble, 0, ensemble.checkpoint_index(t));
  const auto source =
      uniform_sphere_source(state.size(), state.energy(), state.dimension(), ell);
  return chaos_metric(ensemble, source, t, ell, options);
}

double ChaosSeries::sup_value() const {
  double best = 0.0;
  for (const auto& e : estimates) best = std::max(best, e.value);
  return best;
}

namespace {

ChaosSeries series_shell(const jump::Ensemble& ensemble, std::size_t ell,
                         const MetricOptions& options) {
  require(!ensemble.replicas.empty(), "series: empty ensemble");
  ChaosSeries s;
  s.kernel = ensemble.kernel;
  s.metric = metric_name(options.q);
  s.particles = ensemble.replicas.front().snapshots.front().size();
  s.replicas = ensemble.replicas.size();
  s.ell = ell;
  s.seed = ensemble.master_seed;
  s.augmented = options.selection == MarginalSelection::kAugmented;
  return s;
}

}  // namespace

ChaosSeries chaos_series(const jump::Ensemble& ensemble,
                         const std::function<ReferenceSource(double)>& source_at, std::size_t ell,
                         const MetricOptions& options) {
  ChaosSeries s = series_shell(ensemble, ell, options);
  for (double t : ensemble.checkpoints) {
    s.times.push_back(t);
    s.estimates.push_back(chaos_metric(ensemble, source_at(t), t, ell, options));
  }
  return s;
}

ChaosSeries relaxation_series(const jump::Ensemble& ensemble, std::size_t ell,
                              const MetricOptions& options) {
  ChaosSeries s = series_shell(ensemble, ell, options);
  s.metric += "_sphere";
  for (double t : ensemble.checkpoints) {
    s.times.push_back(t);
    s.estimates.push_back(relaxation_metric(ensemble, t, ell, options));
  }
  return s;
}

void write_series_csv(std::ostream& out, const ChaosSeries& series) {
  out << "t,value,stderr,N,M,ell,metric,kernel,seed\n";
  std::string line;
  for (std::size_t k = 0; k < series.times.size(); ++k) {
    line.clear();
    append(line, series.times[k]);
    line += ',';
    append(line, series.estimates[k].value);
    line += ',';
    append(line, series.estimates[k].std_error);
    line += ',' + std::to_string(series.particles) + ',' + std::to_string(series.replicas) + ',' +
            std::to_string(series.ell) + ',' + series.metric + ',' + series.kernel + ',' +
            std::to_string(series.seed);
    out << line << '\n';
  }
}

void write_series_metadata(std::ostream& out, const ChaosSeries& series) {
  nlohmann::json j;
  j["kernel"] = series.kernel;
  j["metric"] = series.metric;
  j["N"] = series.particles;
  j["M"] = series.replicas;
  j["ell"] = series.ell;
  j["seed"] = series.seed;
  j["augmented_marginal"] = series.augmented;
  j["times"] = series.times;
  std::vector<double> floor, floor_error, size;
  for (const auto& e : series.estimates) {
    floor.push_back(e.noise_floor);
    floor_error.push_back(e.noise_floor_error);
    size.push_back(static_cast<double>(e.cloud_size));
  }
  j["noise_floor"] = floor;
  j["noise_floor_stderr"] = floor_error;
  j["cloud_size"] = size;
  out << j.dump(2) << '\n';
}

LlnResult lln_rate_experiment(const sampling::ReferenceDensity& f0,
                              std::span<const std::size_t> schedule, std::size_t replicas,
                              const sampling::BaselineOptions& options) {
  require(schedule.size() >= 2, "lln_rate_experiment: need at least two particle counts");
  const double ratio = static_cast<double>(schedule[1]) / static_cast<double>(schedule[0]);
  require(ratio > 1.0, "lln_rate_experiment: schedule must increase");
  for (std::size_t k = 1; k < schedule.size(); ++k) {
    const double r = static_cast<double>(schedule[k]) / static_cast<double>(schedule[k - 1]);
    require(std::abs(r - ratio) <= 1e-9 * ratio, "lln_rate_experiment: schedule is not geometric");
  }
  LlnResult result;
  std::vector<double> log_n, log_value;
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    sampling::BaselineOptions opt = options;
    opt.seed = splitmix64(options.seed + k);
    const auto est = sampling::chaos_baseline(f0, schedule[k], replicas, opt);
    result.rows.push_back({schedule[k], est.mean, est.std_error});
    if (est.mean <= 0.0) result.degenerate = true;
    log_n.push_back(std::log(static_cast<double>(schedule[k])));
    log_value.push_back(est.mean > 0.0 ? std::log(est.mean) : 0.0);
  }
  result.slope = result.degenerate ? std::numeric_limits<double>::quiet_NaN()
                                   : fitted_slope(log_n, log_value);
  return result;
}

void write_lln_csv(std::ostream& out, const LlnResult& result) {
  out << "N,mean,stderr\n";
  std::string line;
  for (const auto& row : result.rows) {
    line = std::to_string(row.n) + ',';
    append(line, row.mean);
    line += ',';
    append(line, row.std_error);
    out << line << '\n';
  }
}

}  // namespace kac::chaos
