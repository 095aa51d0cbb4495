// Copyright 2026 The kacchaos Authors
// SPDX-License-Identifier: Apache-2.0
#include "runner.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>

#include "kac/chaos.hpp"
#include "kac/entropy.hpp"
#include "kac/error.hpp"
#include "kac/jump.hpp"
#include "kac/limit.hpp"
#include "kac/metrics.hpp"

#ifndef KAC_VERSION
#define KAC_VERSION "unknown"
#endif

namespace kac::cli {

namespace {

namespace fs = std::filesystem;

/// Files of one run; removed on destruction unless committed.
class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {
    if (!fs::exists(dir_)) {
      fs::create_directories(dir_);
      created_dir_ = true;
    }
  }
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;

  ~OutputSet() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& f : files_) fs::remove(f, ec);
    for (auto it = dirs_.rbegin(); it != dirs_.rend(); ++it) fs::remove(*it, ec);
    if (created_dir_) fs::remove(dir_, ec);
  }

  std::ofstream open(const std::string& name, bool binary = false) {
    const fs::path path = dir_ / name;
    if (path.has_parent_path() && !fs::exists(path.parent_path())) {
      fs::create_directories(path.parent_path());
      dirs_.push_back(path.parent_path());
    }
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    require(static_cast<bool>(out), "cannot write '" + path.string() + "'");
    files_.push_back(path);
    return out;
  }

  void close(std::ofstream& out) {
    out.close();
    require(!out.fail(), "write failed for '" + files_.back().string() + "'");
  }

  const std::vector<fs::path>& files() const { return files_; }
  void commit() { committed_ = true; }

 private:
  fs::path dir_;
  std::vector<fs::path> files_;
  std::vector<fs::path> dirs_;
  bool created_dir_ = false;
  bool committed_ = false;
};

struct Context {
  const ExperimentConfig& config;
  OutputSet& out;
  RunResult& result;
  nlohmann::json& extra;
  unsigned threads;
  std::optional<CollisionKernel> kernel;  ///< absent when d = 1
  sampling::ReferenceDensity f0;
  double energy;
};

jump::InitialSampler initial_sampler(const Context& ctx, std::size_t n) {
  const std::string& mode = ctx.config.initial.mode;
  const auto f0 = ctx.f0;
  const double energy = ctx.energy;
  const int d = ctx.config.d;
  if (mode == "sphere") {
    return [=](RandomStream& rng) { return sampling::sample_sphere_conditioned(f0, n, energy, rng); };
  }
  if (mode == "uniform_sphere") {
    return [=](RandomStream& rng) { return sampling::sample_uniform_sphere(n, energy, d, rng); };
  }
  return [=](RandomStream& rng) { return sampling::sample_tensorized(f0, n, rng); };
}

jump::Ensemble make_ensemble(const Context& ctx, std::size_t n) {
  jump::EnsembleOptions options;
  options.threads = ctx.threads;
  const auto cps = ctx.config.effective_checkpoints();
  return jump::run_ensemble(initial_sampler(ctx, n), *ctx.kernel, ctx.config.horizon, cps,
                            ctx.config.replicas, ensemble_seed(ctx.config.seed, n), options);
}

chaos::MetricOptions metric_options(const Context& ctx) {
  chaos::MetricOptions o;
  o.q = ctx.config.metric.q;
  o.bootstrap = ctx.config.metric.bootstrap;
  o.floor_draws = ctx.config.metric.floor_draws;
  o.selection = ctx.config.metric.augment ? chaos::MarginalSelection::kAugmented
                                          : chaos::MarginalSelection::kFirst;
  o.seed = ctx.config.seed;
  o.threads = ctx.threads;
  return o;
}

void emit_series(Context& ctx, const std::string& stem, const chaos::ChaosSeries& series) {
  auto csv = ctx.out.open(stem + ".csv");
  chaos::write_series_csv(csv, series);
  ctx.out.close(csv);
  auto meta = ctx.out.open(stem + ".json");
  chaos::write_series_metadata(meta, series);
  ctx.out.close(meta);
  std::ostringstream line;
  line << stem << ": sup value " << series.sup_value() << " over " << series.times.size()
       << " checkpoints";
  ctx.result.summary.push_back(line.str());
}

void run_simulate(Context& ctx) {
  const int d = ctx.config.d;
  for (std::size_t n : ctx.config.particles) {
    const auto ens = make_ensemble(ctx, n);
    const std::string stem = "simulate_N" + std::to_string(n);
    auto csv = ctx.out.open(stem + ".csv");
    csv << "replica,t,energy";
    for (int a = 0; a < d; ++a) csv << ",momentum_" << a + 1;
    csv << ",collisions\n";
    csv.precision(17);
    for (std::size_t r = 0; r < ens.replicas.size(); ++r) {
      const auto& rec = ens.replicas[r];
      for (std::size_t c = 0; c < rec.times.size(); ++c) {
        const auto& s = rec.snapshots[c];
        csv << r << ',' << rec.times[c] << ',' << s.recomputed_energy();
        for (double p : s.recomputed_momentum()) csv << ',' << p;
        csv << ',' << rec.collisions << '\n';
        if (ctx.config.snapshots) {
          auto bin = ctx.out.open("snapshots/N" + std::to_string(n) + "_r" + std::to_string(r) +
                                      "_c" + std::to_string(c) + ".bin",
                                  true);
          jump::write_snapshot(bin, s, rec.times[c]);
          ctx.out.close(bin);
        }
      }
    }
    ctx.out.close(csv);
    ctx.result.summary.push_back(stem + ": " + std::to_string(ens.replicas.size()) +
                                 " replicas simulated");
  }
}

void run_chaos(Context& ctx) {
  const auto cps = ctx.config.effective_checkpoints();
  const std::size_t ell = ctx.config.metric.ell;
  std::function<chaos::ReferenceSource(double)> source_at;
  if (ctx.config.reference.source == "initial") {
    source_at = [&](double) { return chaos::density_source(ctx.f0, ell); };
  } else {
    limit::OracleOptions oo;
    oo.particles = ctx.config.reference.particles;
    oo.replicas = ctx.config.reference.replicas;
    oo.seed = ctx.config.seed;
    oo.threads = ctx.threads;
    auto oracle = std::make_shared<limit::OracleResult>(limit::particle_limit_oracle(
        ctx.f0, *ctx.kernel, ctx.energy, ctx.config.horizon, cps, oo));
    ctx.extra["oracle_stream_seed"] = oracle->stream_seed;
    source_at = [oracle, ell](double t) {
      for (std::size_t c = 0; c < oracle->times.size(); ++c) {
        if (oracle->times[c] == t) return chaos::pool_source(oracle->marginals[c], ell);
      }
      throw Error("oracle has no checkpoint at t = " + std::to_string(t));
    };
  }
  for (std::size_t n : ctx.config.particles) {
    const auto ens = make_ensemble(ctx, n);
    emit_series(ctx, "chaos_N" + std::to_string(n),
                chaos::chaos_series(ens, source_at, ell, metric_options(ctx)));
  }
}

void run_relaxation(Context& ctx) {
  for (std::size_t n : ctx.config.particles) {
    const auto ens = make_ensemble(ctx, n);
    emit_series(ctx, "relaxation_N" + std::to_string(n),
                chaos::relaxation_series(ens, ctx.config.metric.ell, metric_options(ctx)));
  }
}

void run_lln(Context& ctx) {
  sampling::BaselineOptions o;
  o.metric = ctx.config.metric.name == "sobolev" ? sampling::BaselineMetric::kSobolevSquared
                                                 : sampling::BaselineMetric::kWasserstein1;
  o.sobolev_order = ctx.config.metric.s;
  o.seed = ctx.config.seed;
  o.threads = ctx.threads;
  const auto res =
      chaos::lln_rate_experiment(ctx.f0, ctx.config.particles, ctx.config.replicas, o);
  auto csv = ctx.out.open("lln.csv");
  chaos::write_lln_csv(csv, res);
  ctx.out.close(csv);
  ctx.extra["slope"] = res.degenerate ? nlohmann::json(nullptr) : nlohmann::json(res.slope);
  ctx.extra["degenerate"] = res.degenerate;
  std::ostringstream line;
  if (res.degenerate) {
    line << "lln: degenerate (all values vanish), no slope";
  } else {
    line << "lln: fitted log-log slope " << res.slope;
  }
  ctx.result.summary.push_back(line.str());
}

void run_metrics_check(Context& ctx) {
  const std::size_t max_n = ctx.config.particles.front();
  metrics::ComparisonOptions o;
  o.q = ctx.config.metric.q;
  o.k = ctx.config.metric.k;
  auto csv = ctx.out.open("metrics_check.csv");
  csv << "pair,n,item,lhs,rhs,slack,pass\n";
  csv.precision(17);
  std::size_t violations = 0;
  for (std::size_t p = 0; p < ctx.config.pairs; ++p) {
    RandomStream rng(ctx.config.seed, p, Channel::kInitial);
    const std::size_t n = max_n <= 2 ? max_n : 2 + static_cast<std::size_t>(rng.below(max_n - 1));
    const auto f = metrics::WeightedPointMeasure::empirical(sampling::sample_tensorized(ctx.f0, n, rng));
    const auto g = metrics::WeightedPointMeasure::empirical(sampling::sample_tensorized(ctx.f0, n, rng));
    const auto report = metrics::check_comparisons(f, g, o);
    for (const auto& row : report.rows) {
      csv << p << ',' << n << ',' << row.item << ',' << row.lhs << ',' << row.rhs << ','
          << row.slack << ',' << (row.pass ? 1 : 0) << '\n';
    }
    violations += report.violations();
  }
  ctx.out.close(csv);
  ctx.extra["violations"] = violations;
  ctx.result.summary.push_back("metrics-check: " + std::to_string(violations) + " violations over " +
                               std::to_string(ctx.config.pairs) + " pairs");
}

void run_entropy_spectral(Context& ctx) {
  const auto& e = ctx.config.entropy;
  const double a = e.variances[0], c = e.variances[1];
  const double energy = 2.0 * a + c;
  const auto f0 = limit::GridDensity::axisymmetric_fourier(
      [=](double rho, double mu) {
        return std::exp(-0.5 * rho * rho * (a * (1.0 - mu * mu) + c * mu * mu));
      },
      e.max_degree, e.extent, e.nodes);
  const auto traj = limit::evolve_fourier(f0, *ctx.kernel, ctx.config.horizon, e.dt, e.record_every);
  const double sigma = std::sqrt(energy / 3.0);
  const limit::InverseTransform inverse(f0, 8.5 * sigma, 401);
  entropy::ProductionOptions po;
  po.samples = e.production_samples;
  po.seed = ctx.config.seed;
  po.threads = ctx.threads;

  auto csv = ctx.out.open("entropy.csv");
  entropy::write_report_header(csv);
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    entropy::EntropyReport report;
    report.time = traj.times[k];
    report.relative_entropy = entropy::relative_entropy(inverse.apply(traj.states[k]), energy);
    if (e.production) {
      const auto grid = limit::to_velocity_grid(traj.states[k], 9.0 * sigma, 45);
      report.production = entropy::entropy_production(grid, *ctx.kernel, po);
    }
    entropy::write_report_row(csv, report);
  }
  ctx.out.close(csv);
  ctx.extra["truncated"] = traj.truncated;
  ctx.result.summary.push_back("entropy-track: " + std::to_string(traj.states.size()) +
                               " spectral states");
}

void run_entropy_particles(Context& ctx) {
  const std::size_t n = ctx.config.particles.front();
  const auto ens = make_ensemble(ctx, n);
  entropy::KnnOptions ko;
  ko.seed = ctx.config.seed;
  auto csv = ctx.out.open("entropy_N" + std::to_string(n) + ".csv");
  entropy::write_report_header(csv);
  for (std::size_t c = 0; c < ens.checkpoints.size(); ++c) {
    std::vector<double> pooled;
    for (const auto& rec : ens.replicas) {
      pooled.insert(pooled.end(), rec.snapshots[c].data().begin(), rec.snapshots[c].data().end());
    }
    const auto cloud = metrics::WeightedPointMeasure::empirical(ctx.config.d, pooled);
    entropy::EntropyReport report;
    report.time = ens.checkpoints[c];
    report.marginal = entropy::marginal_entropy_estimate(cloud, ctx.energy, ko);
    report.relative_entropy = report.marginal->value;
    entropy::write_report_row(csv, report);
  }
  ctx.out.close(csv);
  ctx.result.summary.push_back("entropy-track: kNN estimates at " +
                               std::to_string(ens.checkpoints.size()) + " checkpoints");
}

}  // namespace

std::uint64_t ensemble_seed(std::uint64_t seed, std::size_t n) {
  return splitmix64(seed ^ (0x9e3779b97f4a7c15ULL * (n + 1)));
}

std::string version() { return KAC_VERSION; }

RunResult run(const ExperimentConfig& config) {
  const auto diagnostics = validate(config);
  if (!diagnostics.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& d : diagnostics) msg += "\n  " + d.to_string();
    throw Error(msg);
  }
  const auto start = std::chrono::steady_clock::now();
  RunResult result;
  OutputSet out(config.output);
  nlohmann::json extra = nlohmann::json::object();
  const auto f0 = make_density(config);
  Context ctx{config,
              out,
              result,
              extra,
              jump::resolve_threads(config.threads),
              config.d >= 2 ? std::optional(make_kernel(config)) : std::nullopt,
              f0,
              config.energy.value_or(f0.energy())};

  switch (config.kind) {
    case ExperimentKind::kSimulate:
      run_simulate(ctx);
      break;
    case ExperimentKind::kChaos:
      run_chaos(ctx);
      break;
    case ExperimentKind::kRelaxation:
      run_relaxation(ctx);
      break;
    case ExperimentKind::kLln:
      run_lln(ctx);
      break;
    case ExperimentKind::kMetricsCheck:
      run_metrics_check(ctx);
      break;
    case ExperimentKind::kEntropyTrack:
      if (config.entropy.source == "particles") {
        run_entropy_particles(ctx);
      } else {
        run_entropy_spectral(ctx);
      }
      break;
  }

  nlohmann::json meta;
  meta["config"] = to_json(config);
  meta["version"] = version();
  meta["threads"] = ctx.threads;
  meta["energy"] = ctx.energy;
  meta["results"] = extra;
  std::vector<std::string> names;
  for (const auto& f : out.files()) names.push_back(fs::relative(f, config.output).generic_string());
  meta["outputs"] = names;
  meta["wall_clock_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  auto meta_out = out.open("run.json");
  meta_out << meta.dump(2) << '\n';
  out.close(meta_out);

  result.files = out.files();
  out.commit();
  return result;
}

}  // namespace kac::cli
