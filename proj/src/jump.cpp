// Copyright 2026 The kacchaos Authors
// SPDX-License-Identifier: Apache-2.0
#include "kac/jump.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <istream>
#include <ostream>
#include <thread>

#include "kac/error.hpp"
#include "kac/numerics.hpp"

namespace kac::jump {

// ---------------------------------------------------------------------------
// RateTable

RateTable::RateTable(const ParticleState& state, const CollisionKernel& kernel)
    : kernel_(kernel) {
  rebuild(state);
}

std::size_t RateTable::index(std::size_t i, std::size_t j) const {
  if (i > j) std::swap(i, j);
  return row_start_[i] + (j - i - 1);
}

std::pair<std::size_t, std::size_t> RateTable::pair_of(std::size_t p) const {
  const auto it = std::upper_bound(row_start_.begin(), row_start_.end(), p);
  const auto i = static_cast<std::size_t>(std::distance(row_start_.begin(), it)) - 1;
  return {i, i + 1 + (p - row_start_[i])};
}

double RateTable::pair_rate(const ParticleState& state, std::size_t i,
                            std::size_t j) const {
  const auto v = state.velocity(i), w = state.velocity(j);
  double rel2 = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) rel2 += (v[k] - w[k]) * (v[k] - w[k]);
  return kernel_.gamma(std::sqrt(rel2));
}

void RateTable::rebuild(const ParticleState& state) {
  n_ = state.size();
  require(n_ >= 2, "rate table needs at least two particles");
  const std::size_t pairs = n_ * (n_ - 1) / 2;
  row_start_.resize(n_ - 1);
  for (std::size_t i = 0; i + 1 < n_; ++i) row_start_[i] = i * n_ - i * (i + 1) / 2;
  rates_.assign(pairs, 0.0);
  for (std::size_t i = 0; i + 1 < n_; ++i) {
    for (std::size_t j = i + 1; j < n_; ++j) rates_[index(i, j)] = pair_rate(state, i, j);
  }
  // Linear-time Fenwick construction.
  tree_.assign(pairs + 1, 0.0);
  for (std::size_t p = 1; p <= pairs; ++p) {
    tree_[p] += rates_[p - 1];
    const std::size_t parent = p + (p & (~p + 1));
    if (parent <= pairs) tree_[parent] += tree_[p];
  }
  updates_since_rebuild_ = 0;
}

void RateTable::set(std::size_t p, double value) {
  const double delta = value - rates_[p];
  rates_[p] = value;
  for (std::size_t k = p + 1; k < tree_.size(); k += k & (~k + 1)) tree_[k] += delta;
}

void RateTable::update_particles(const ParticleState& state, std::size_t i,
                                 std::size_t j) {
  updates_since_rebuild_ += 2 * n_;
  if (updates_since_rebuild_ > rates_.size() + 4096) {
    rebuild(state);
    return;
  }
  for (std::size_t k = 0; k < n_; ++k) {
    if (k != i) set(index(i, k), pair_rate(state, i, k));
    if (k != j && k != i) set(index(j, k), pair_rate(state, j, k));
  }
}

double RateTable::total() const {
  double s = 0.0;
  for (std::size_t k = tree_.size() - 1; k > 0; k -= k & (~k + 1)) s += tree_[k];
  return std::max(s, 0.0);
}

double RateTable::exact_total() const {
  KahanSum s;
  for (double r : rates_) s.add(r);
  return s.value();
}

std::pair<std::size_t, std::size_t> RateTable::find(double target) const {
  const std::size_t size = tree_.size() - 1;
  std::size_t pos = 0;
  std::size_t step = std::bit_floor(size);
  for (; step > 0; step >>= 1) {
    const std::size_t next = pos + step;
    if (next <= size && tree_[next] <= target) {
      pos = next;
      target -= tree_[next];
    }
  }
  // pos is the count of entries whose prefix sum is <= target; roundoff can
  // push it past the end or onto a zero-rate entry.
  std::size_t p = std::min(pos, size - 1);
  while (p > 0 && rates_[p] <= 0.0) --p;
  while (p + 1 < size && rates_[p] <= 0.0) ++p;
  return pair_of(p);
}

// ---------------------------------------------------------------------------
// Pure helpers

double total_rate(const ParticleState& state, const CollisionKernel& kernel) {
  const std::size_t n = state.size();
  require(n >= 2, "total_rate needs N >= 2");
  require(state.dimension() == kernel.dimension(), "kernel/state dimension mismatch");
  if (kernel.maxwellian()) {
    return 0.5 * static_cast<double>(n - 1) * kernel.angular_mass();
  }
  KahanSum s;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      s.add(kernel_rate(kernel, state.velocity(i), state.velocity(j)));
    }
  }
  return s.value() / static_cast<double>(n);
}

namespace {

Velocity relative(const ParticleState& s, std::size_t i, std::size_t j) {
  const auto v = s.velocity(i), w = s.velocity(j);
  Velocity u(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) u[k] = v[k] - w[k];
  return u;
}

std::pair<std::size_t, std::size_t> uniform_pair(std::size_t n, RandomStream& rng) {
  const std::size_t i = rng.below(n);
  std::size_t j = rng.below(n - 1);
  if (j >= i) ++j;
  return {std::min(i, j), std::max(i, j)};
}

}  // namespace

std::optional<JumpEvent> step(ParticleState& state, const CollisionKernel& kernel,
                              RandomStream& rng, double now) {
  const double rate = total_rate(state, kernel);
  if (!(rate > 0.0)) return std::nullopt;
  JumpEvent ev;
  ev.time = now + rng.exponential(rate);
  if (kernel.maxwellian()) {
    std::tie(ev.i, ev.j) = uniform_pair(state.size(), rng);
  } else {
    const RateTable table(state, kernel);
    std::tie(ev.i, ev.j) = table.find(rng.uniform() * table.total());
  }
  ev.sigma = sample_sigma(kernel, relative(state, ev.i, ev.j), rng);
  state.apply_collision(ev.i, ev.j, ev.sigma);
  return ev;
}

// ---------------------------------------------------------------------------
// Simulator

Simulator::Simulator(ParticleState initial, CollisionKernel kernel, RandomStream rng,
                     PairSampling mode)
    : state_(std::move(initial)), kernel_(std::move(kernel)), rng_(rng), mode_(mode) {
  require(state_.size() >= 2, "simulation needs N >= 2");
  require(state_.dimension() == kernel_.dimension(), "kernel/state dimension mismatch");
  if (kernel_.maxwellian()) {
    mode_ = PairSampling::kAuto;
  } else {
    if (mode_ == PairSampling::kAuto) {
      mode_ = state_.size() <= kExactTableLimit ? PairSampling::kExactTable
                                                : PairSampling::kRejection;
    }
    if (mode_ == PairSampling::kExactTable) {
      table_ = RateTable(state_, kernel_);
      reference_total_ = table_.total();
    } else {
      max_speed_ = recompute_max_speed();
    }
  }
}

double Simulator::recompute_max_speed() const {
  double m = 0.0;
  for (std::size_t i = 0; i < state_.size(); ++i) m = std::max(m, norm(state_.velocity(i)));
  return m;
}

std::optional<JumpEvent> Simulator::draw() {
  const std::size_t n = state_.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double mass = kernel_.angular_mass();
  JumpEvent ev;
  if (kernel_.maxwellian()) {
    const double rate = 0.5 * static_cast<double>(n - 1) * mass;
    ev.time = time_ + rng_.exponential(rate);
    std::tie(ev.i, ev.j) = uniform_pair(n, rng_);
  } else if (mode_ == PairSampling::kExactTable) {
    double total = table_.total();
    if (total <= 1e-12 * reference_total_) {
      table_.rebuild(state_);
      total = table_.total();
      reference_total_ = total;
    }
    const double rate = inv_n * total * mass;
    if (!(rate > 0.0)) return std::nullopt;
    ev.time = time_ + rng_.exponential(rate);
    std::tie(ev.i, ev.j) = table_.find(rng_.uniform() * total);
  } else {
    // Thinning against Gamma(|v_i - v_j|) <= C * 2 * max_k |v_k|.
    double t = time_;
    const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
    for (;;) {
      const double bound = kernel_.gamma(2.0 * max_speed_);
      if (!(bound > 0.0)) return std::nullopt;
      t += rng_.exponential(inv_n * pairs * bound * mass);
      const auto [i, j] = uniform_pair(n, rng_);
      const double g = kernel_.gamma(norm(relative(state_, i, j)));
      if (rng_.uniform() * bound < g) {
        ev.time = t;
        ev.i = i;
        ev.j = j;
        break;
      }
      ++rejected_;
      if (rejected_ % (64 * n) == 0) {
        // A run of rejections with zero relative speeds means absorption.
        bool all_equal = true;
        const auto v0 = state_.velocity(0);
        for (std::size_t k = 1; k < n && all_equal; ++k) {
          const auto vk = state_.velocity(k);
          for (std::size_t c = 0; c < v0.size(); ++c) all_equal &= (vk[c] == v0[c]);
        }
        if (all_equal) return std::nullopt;
      }
    }
  }
  ev.sigma = sample_sigma(kernel_, relative(state_, ev.i, ev.j), rng_);
  return ev;
}

std::optional<double> Simulator::peek() {
  if (absorbed_) return std::nullopt;
  if (!pending_) {
    pending_ = draw();
    if (!pending_) {
      absorbed_ = true;
      return std::nullopt;
    }
  }
  return pending_->time;
}

std::optional<JumpEvent> Simulator::next() {
  if (!peek()) return std::nullopt;
  JumpEvent ev = std::move(*pending_);
  pending_.reset();
  state_.apply_collision(ev.i, ev.j, ev.sigma);
  time_ = ev.time;
  ++collisions_;
  if (!kernel_.maxwellian()) {
    if (mode_ == PairSampling::kExactTable) {
      table_.update_particles(state_, ev.i, ev.j);
    } else {
      max_speed_ = std::max({max_speed_, norm(state_.velocity(ev.i)),
                             norm(state_.velocity(ev.j))});
      if (++since_max_refresh_ >= state_.size()) {
        max_speed_ = recompute_max_speed();
        since_max_refresh_ = 0;
      }
    }
  }
  return ev;
}

// ---------------------------------------------------------------------------
// Trajectories and ensembles

TrajectoryRecord simulate(const ParticleState& initial, const CollisionKernel& kernel,
                          double horizon, std::span<const double> checkpoints,
                          RandomStream rng, SimulationOptions options) {
  require(horizon >= 0.0, "horizon must be nonnegative");
  require(std::is_sorted(checkpoints.begin(), checkpoints.end()),
          "checkpoints must be sorted");
  for (double c : checkpoints) {
    require(c >= 0.0 && c <= horizon, "checkpoints must lie in [0, horizon]");
  }
  TrajectoryRecord rec;
  rec.master_seed = rng.seed();
  rec.replica = rng.stream_id();
  Simulator sim(initial, kernel, rng, options.mode);
  for (double c : checkpoints) {
    while (auto t = sim.peek()) {
      if (*t > c) break;
      sim.next();
    }
    rec.times.push_back(c);
    rec.snapshots.push_back(sim.state());
  }
  while (auto t = sim.peek()) {
    if (*t > horizon) break;
    sim.next();
  }
  rec.collisions = sim.collisions();
  rec.absorbed = !sim.peek().has_value();
  return rec;
}

std::size_t Ensemble::checkpoint_index(double t) const {
  for (std::size_t k = 0; k < checkpoints.size(); ++k) {
    if (std::abs(checkpoints[k] - t) <= 1e-12 * std::max(1.0, std::abs(t))) return k;
  }
  throw Error("time " + std::to_string(t) + " is not a recorded checkpoint");
}

unsigned resolve_threads(std::optional<unsigned> requested) {
  unsigned k = 0;
  if (requested) {
    k = *requested;
  } else if (const char* env = std::getenv("KAC_CHAOS_THREADS")) {
    k = static_cast<unsigned>(std::strtoul(env, nullptr, 10));
  }
  if (k == 0) k = std::max(1u, std::thread::hardware_concurrency());
  return k;
}

void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body) {
  threads = std::max(1u, threads);
  if (threads == 1 || count <= 1) {
    for (std::size_t r = 0; r < count; ++r) body(r);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < std::min<std::size_t>(threads, count); ++w) {
    pool.emplace_back([&] {
      for (std::size_t r; (r = next.fetch_add(1)) < count;) {
        if (failed.load()) return;
        try {
          body(r);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

Ensemble run_ensemble(const InitialSampler& sampler, const CollisionKernel& kernel,
                      double horizon, std::span<const double> checkpoints,
                      std::size_t replicas, std::uint64_t master_seed,
                      EnsembleOptions options) {
  require(replicas >= 1, "ensemble needs at least one replica");
  Ensemble ens;
  ens.checkpoints.assign(checkpoints.begin(), checkpoints.end());
  ens.master_seed = master_seed;
  ens.kernel = kernel.name();
  ens.horizon = horizon;
  ens.replicas.resize(replicas);
  parallel_for(replicas, resolve_threads(options.threads), [&](std::size_t r) {
    RandomStream init(master_seed, r, Channel::kInitial);
    const ParticleState start = sampler(init);
    ens.replicas[r] = simulate(start, kernel, horizon, checkpoints,
                               RandomStream(master_seed, r, Channel::kDynamics),
                               options.simulation);
  });
  return ens;
}

// ---------------------------------------------------------------------------
// Snapshot I/O

namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(T));
  require(static_cast<bool>(in), "truncated snapshot");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void write_snapshot(std::ostream& out, const ParticleState& state, double time) {
  out.write("KACS", 4);
  put_le<std::uint16_t>(out, kSnapshotVersion);
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(state.dimension()));
  put_le<std::uint64_t>(out, state.size());
  put_le<double>(out, time);
  put_le<double>(out, state.energy());
  for (double x : state.data()) put_le<double>(out, x);
}

ParticleState read_snapshot(std::istream& in, double* time, double* energy) {
  char magic[4];
  in.read(magic, 4);
  require(in && std::memcmp(magic, "KACS", 4) == 0, "not a KACS snapshot");
  const auto version = get_le<std::uint16_t>(in);
  require(version == kSnapshotVersion, "unsupported snapshot version");
  const auto d = get_le<std::uint16_t>(in);
  const auto n = get_le<std::uint64_t>(in);
  const double t = get_le<double>(in);
  const double e = get_le<double>(in);
  std::vector<double> flat(static_cast<std::size_t>(d) * n);
  for (double& x : flat) x = get_le<double>(in);
  if (time != nullptr) *time = t;
  if (energy != nullptr) *energy = e;
  return ParticleState(d, std::move(flat));
}

}  // namespace kac::jump
