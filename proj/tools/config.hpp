// Copyright 2026 The kacchaos Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "kac/model.hpp"
#include "kac/sampling.hpp"

namespace kac::cli {

enum class ExperimentKind { kSimulate, kChaos, kRelaxation, kLln, kMetricsCheck, kEntropyTrack };

std::string kind_name(ExperimentKind kind);
std::optional<ExperimentKind> parse_kind(const std::string& name);

struct KernelSpec {
  std::string name = "gmm";  ///< gmm, tmm or hs
  double cutoff = 0.1;       ///< tmm angular cutoff
  double strength = 1.0;     ///< tmm angular strength
  double speed = 1.0;        ///< hs speed coefficient
  bool operator==(const KernelSpec&) const = default;
};

struct InitialSpec {
  std::string density = "gauss";
  /// tensorized, sphere (sphere-conditioned surrogate) or uniform_sphere.
  std::string mode = "tensorized";
  std::map<std::string, double> params;
  bool operator==(const InitialSpec&) const = default;
};

struct MetricSpec {
  std::string name = "wasserstein";  ///< wasserstein, or sobolev for lln
  int q = 1;
  double s = 1.0;
  int k = 2;
  std::size_t ell = 1;
  std::size_t bootstrap = 32;
  std::size_t floor_draws = 8;
  bool augment = false;
  bool operator==(const MetricSpec&) const = default;
};

struct ReferenceSpec {
  /// oracle (large particle system) or initial (f_t = f_0, for stationary data).
  std::string source = "oracle";
  std::size_t particles = 2000;
  std::size_t replicas = 5;
  bool operator==(const ReferenceSpec&) const = default;
};

struct EntropySpec {
  /// spectral (axisymmetric Gaussian start) or particles (kNN marginal).
  std::string source = "spectral";
  std::vector<double> variances{0.8, 1.4};  ///< transverse, axial
  int max_degree = 12;
  std::size_t nodes = 256;
  double extent = 16.0;
  double dt = 0.05;
  std::size_t record_every = 10;
  bool production = false;
  std::size_t production_samples = 100000;
  bool operator==(const EntropySpec&) const = default;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kSimulate;
  KernelSpec kernel;
  int d = 3;
  std::vector<std::size_t> particles{64};  ///< N, or an N schedule
  std::size_t replicas = 1;
  std::optional<double> energy;  ///< defaults to the energy of the initial law
  double horizon = 0.0;
  std::vector<double> checkpoints;  ///< empty means {0, horizon}
  InitialSpec initial;
  MetricSpec metric;
  ReferenceSpec reference;
  EntropySpec entropy;
  std::size_t pairs = 100;  ///< metrics-check
  std::uint64_t seed = 0;
  /// Unset: KAC_CHAOS_THREADS, then hardware concurrency. 0 means auto.
  std::optional<unsigned> threads;
  std::string output = "out";
  /// Binary snapshots of every replica at every checkpoint (simulate only).
  bool snapshots = true;
  bool operator==(const ExperimentConfig&) const = default;

  std::vector<double> effective_checkpoints() const;
};

/// Configuration error carrying the source line when known.
struct Diagnostic {
  int line = 0;  ///< 0 when no line applies
  std::string message;
  std::string to_string() const;
};

/// Source line of every key that was set, as "section.key" -> line.
using SourceLines = std::map<std::string, int>;

struct ParsedConfig {
  ExperimentConfig config;
  SourceLines lines;
};

/// Parses a TOML document. Throws kac::Error with "origin:L: ..." messages
/// for syntax errors, unknown keys and type mismatches.
ParsedConfig parse_config(const std::string& text, const std::string& origin = "<config>");
ParsedConfig load_config(const std::string& path);

/// Semantic checks; never throws. Diagnostics carry the line of the
/// offending key when `lines` knows it.
std::vector<Diagnostic> validate(const ExperimentConfig& config, const SourceLines& lines = {});

nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);

CollisionKernel make_kernel(const ExperimentConfig& config);
sampling::ReferenceDensity make_density(const ExperimentConfig& config);

}  // namespace kac::cli
