// Copyright 2026 The kacchaos Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"

namespace kac::cli {

struct RunResult {
  std::vector<std::filesystem::path> files;
  /// One-line human summary per series.
  std::vector<std::string> summary;
};

/// Runs a validated experiment and writes its CSV series, JSON metadata and
/// snapshots under config.output. Files written before a failure are removed
/// again and the error is rethrown.
RunResult run(const ExperimentConfig& config);

/// Master seed of the N-particle ensemble of an experiment.
std::uint64_t ensemble_seed(std::uint64_t seed, std::size_t n);

/// Library version string.
std::string version();

}  // namespace kac::cli
