// Copyright 2026 The kacchaos Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kac/model.hpp"
#include "kac/rng.hpp"

namespace kac::jump {

struct JumpEvent {
  double time = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  Velocity sigma;
};

/// How the colliding pair is chosen for hard spheres. Maxwellian kernels
/// always pick pairs uniformly.
enum class PairSampling { kAuto, kExactTable, kRejection };

/// Above this N, kAuto switches hard spheres to rejection sampling.
inline constexpr std::size_t kExactTableLimit = 4096;

/// Per-pair rates Gamma(|v_i - v_j|) in a Fenwick tree for O(log P) draws.
class RateTable {
 public:
  RateTable() = default;
  explicit RateTable(const ParticleState& state, const CollisionKernel& kernel);

  void rebuild(const ParticleState& state);
  /// Refresh every pair touching i or j (2(N-2)+1 entries).
  void update_particles(const ParticleState& state, std::size_t i, std::size_t j);
  /// Pair whose cumulative-weight interval contains target in [0, total).
  std::pair<std::size_t, std::size_t> find(double target) const;
  double total() const;
  double rate(std::size_t i, std::size_t j) const { return rates_[index(i, j)]; }
  /// Sum of the stored rates recomputed from scratch.
  double exact_total() const;

 private:
  std::size_t index(std::size_t i, std::size_t j) const;
  std::pair<std::size_t, std::size_t> pair_of(std::size_t p) const;
  void set(std::size_t p, double value);
  double pair_rate(const ParticleState& state, std::size_t i, std::size_t j) const;

  CollisionKernel kernel_ = CollisionKernel::grad_maxwell(3);
  std::size_t n_ = 0;
  std::vector<double> rates_;
  std::vector<double> tree_;
  std::vector<std::size_t> row_start_;
  std::size_t updates_since_rebuild_ = 0;
};

/// (1/N) sum_{i<j} kernel_rate(v_i, v_j).
double total_rate(const ParticleState& state, const CollisionKernel& kernel);

/// One jump from a freshly evaluated total rate; nullopt when the state is
/// absorbed (zero total rate). Pair chosen with exact weights.
std::optional<JumpEvent> step(ParticleState& state, const CollisionKernel& kernel,
                              RandomStream& rng, double now = 0.0);

/// Stateful event-driven simulator of one trajectory.
class Simulator {
 public:
  Simulator(ParticleState initial, CollisionKernel kernel, RandomStream rng,
            PairSampling mode = PairSampling::kAuto);

  /// Advance to the next accepted collision; nullopt when absorbed.
  std::optional<JumpEvent> next();
  /// Time of the next accepted collision without applying it. Repeated calls
  /// return the same pending event.
  std::optional<double> peek();

  const ParticleState& state() const { return state_; }
  double time() const { return time_; }
  std::uint64_t collisions() const { return collisions_; }
  std::uint64_t rejected() const { return rejected_; }
  PairSampling mode() const { return mode_; }

 private:
  std::optional<JumpEvent> draw();
  double recompute_max_speed() const;

  ParticleState state_;
  CollisionKernel kernel_;
  RandomStream rng_;
  PairSampling mode_;
  RateTable table_;
  double time_ = 0.0;
  double max_speed_ = 0.0;
  double reference_total_ = 0.0;
  std::uint64_t collisions_ = 0;
  std::uint64_t rejected_ = 0;
  std::uint64_t since_max_refresh_ = 0;
  std::optional<JumpEvent> pending_;
  bool absorbed_ = false;
};

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<ParticleState> snapshots;
  std::uint64_t collisions = 0;
  std::uint64_t master_seed = 0;
  std::uint64_t replica = 0;
  bool absorbed = false;
};

struct SimulationOptions {
  PairSampling mode = PairSampling::kAuto;
};

/// Run until the process time exceeds horizon, recording the state holding
/// at each checkpoint (the state left by the last jump at or before it).
TrajectoryRecord simulate(const ParticleState& initial, const CollisionKernel& kernel,
                          double horizon, std::span<const double> checkpoints,
                          RandomStream rng, SimulationOptions options = {});

using InitialSampler = std::function<ParticleState(RandomStream&)>;

struct Ensemble {
  std::vector<double> checkpoints;
  std::vector<TrajectoryRecord> replicas;
  std::uint64_t master_seed = 0;
  std::string kernel;
  double horizon = 0.0;

  std::size_t checkpoint_index(double t) const;
};

struct EnsembleOptions {
  SimulationOptions simulation;
  /// 0 selects std::thread::hardware_concurrency().
  unsigned threads = 1;
};

/// M independent trajectories; replica r draws its initial state from
/// channel kInitial and its dynamics from channel kDynamics of stream r.
Ensemble run_ensemble(const InitialSampler& sampler, const CollisionKernel& kernel,
                      double horizon, std::span<const double> checkpoints,
                      std::size_t replicas, std::uint64_t master_seed,
                      EnsembleOptions options = {});

/// Resolve a thread-count request: explicit value, else KAC_CHAOS_THREADS,
/// else hardware concurrency.
unsigned resolve_threads(std::optional<unsigned> requested);

/// Run body(r) for r in [0, count) on up to `threads` workers.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body);

// Binary snapshots: "KACS", u16 version, u16 d, u64 N, f64 time, f64 energy,
// then d*N little-endian f64.
inline constexpr std::uint16_t kSnapshotVersion = 1;
void write_snapshot(std::ostream& out, const ParticleState& state, double time);
ParticleState read_snapshot(std::istream& in, double* time = nullptr,
                            double* energy = nullptr);

}  // namespace kac::jump
