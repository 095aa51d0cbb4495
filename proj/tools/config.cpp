// Copyright 2026 The kacchaos Authors
// SPDX-License-Identifier: Apache-2.0
#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>

#include "kac/error.hpp"
#include "kac/metrics.hpp"
#include "toml.hpp"

namespace kac::cli {

namespace {

constexpr std::pair<ExperimentKind, const char*> kKinds[] = {
    {ExperimentKind::kSimulate, "simulate"},       {ExperimentKind::kChaos, "chaos"},
    {ExperimentKind::kRelaxation, "relaxation"},   {ExperimentKind::kLln, "lln"},
    {ExperimentKind::kMetricsCheck, "metrics-check"}, {ExperimentKind::kEntropyTrack, "entropy-track"},
};

const std::map<std::string, std::set<std::string>> kDensityParams = {
    {"uniform_ball", {"radius"}},
    {"trunc_gauss", {"sigma", "radius"}},
    {"two_point", {"a", "axis"}},
    {"bimodal", {"separation", "sigma", "axis"}},
    {"gauss", {"sigma"}},
};

int line_of(const toml::node& node) { return static_cast<int>(node.source().begin.line); }

/// Reads the keys of one TOML table into typed fields and rejects the rest.
class TableReader {
 public:
  TableReader(const toml::table& table, std::string section, std::string origin,
              SourceLines& lines)
      : table_(table), section_(std::move(section)), origin_(std::move(origin)), lines_(lines) {}

  [[noreturn]] void fail(const toml::node& node, const std::string& message) const {
    throw Error(origin_ + ":" + std::to_string(line_of(node)) + ": " + message);
  }

  std::string path(std::string_view key) const {
    return section_.empty() ? std::string(key) : section_ + "." + std::string(key);
  }

  const toml::node* take(std::string_view key) {
    const toml::node* node = table_.get(key);
    if (node) {
      seen_.insert(std::string(key));
      lines_[path(key)] = line_of(*node);
    }
    return node;
  }

  void string(std::string_view key, std::string& out) {
    if (const auto* n = take(key)) {
      if (!n->is_string()) fail(*n, path(key) + " must be a string");
      out = **n->as_string();
    }
  }

  void real(std::string_view key, double& out) {
    if (const auto* n = take(key)) out = as_real(*n, key);
  }

  void optional_real(std::string_view key, std::optional<double>& out) {
    if (const auto* n = take(key)) out = as_real(*n, key);
  }

  template <class Int>
  void integer(std::string_view key, Int& out) {
    if (const auto* n = take(key)) out = as_integer<Int>(*n, key);
  }

  void boolean(std::string_view key, bool& out) {
    if (const auto* n = take(key)) {
      if (!n->is_boolean()) fail(*n, path(key) + " must be true or false");
      out = **n->as_boolean();
    }
  }

  void reals(std::string_view key, std::vector<double>& out) {
    if (const auto* n = take(key)) {
      const auto* arr = n->as_array();
      if (!arr) fail(*n, path(key) + " must be an array of numbers");
      out.clear();
      for (const auto& item : *arr) out.push_back(as_real(item, key));
    }
  }

  /// A single integer or an array of integers.
  void counts(std::string_view key, std::vector<std::size_t>& out) {
    if (const auto* n = take(key)) {
      out.clear();
      if (const auto* arr = n->as_array()) {
        for (const auto& item : *arr) out.push_back(as_integer<std::size_t>(item, key));
      } else {
        out.push_back(as_integer<std::size_t>(*n, key));
      }
    }
  }

  void seed(std::string_view key, std::uint64_t& out) {
    if (const auto* n = take(key)) {
      if (const auto* s = n->as_string()) {
        const std::string& text = **s;
        std::size_t used = 0;
        try {
          out = std::stoull(text, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != text.size() || text.empty() || text[0] == '-') {
          fail(*n, path(key) + " must be an unsigned 64-bit integer");
        }
      } else {
        out = as_integer<std::uint64_t>(*n, key);
      }
    }
  }

  /// Every remaining numeric key goes into `params`.
  void numeric_rest(std::map<std::string, double>& params) {
    for (const auto& [k, node] : table_) {
      const std::string key(k.str());
      if (seen_.count(key)) continue;
      params[key] = as_real(node, key);
      seen_.insert(key);
      lines_[path(key)] = line_of(node);
    }
  }

  void finish() const {
    for (const auto& [k, node] : table_) {
      if (!seen_.count(std::string(k.str()))) fail(node, "unknown key '" + path(k.str()) + "'");
    }
  }

 private:
  double as_real(const toml::node& n, std::string_view key) const {
    if (const auto* i = n.as_integer()) return static_cast<double>(**i);
    if (const auto* f = n.as_floating_point()) return **f;
    fail(n, path(key) + " must be a number");
  }

  template <class Int>
  Int as_integer(const toml::node& n, std::string_view key) const {
    const auto* i = n.as_integer();
    if (!i) fail(n, path(key) + " must be an integer");
    if constexpr (std::is_unsigned_v<Int>) {
      if (**i < 0) fail(n, path(key) + " must be nonnegative");
    }
    return static_cast<Int>(**i);
  }

  const toml::table& table_;
  std::string section_;
  std::string origin_;
  SourceLines& lines_;
  std::set<std::string> seen_;
};

void read_section(const toml::table& root, std::string_view name, const std::string& origin,
                  SourceLines& lines, const std::function<void(TableReader&)>& body) {
  const toml::node* node = root.get(name);
  if (!node) return;
  const auto* table = node->as_table();
  if (!table) {
    throw Error(origin + ":" + std::to_string(line_of(*node)) + ": [" + std::string(name) +
                "] must be a table");
  }
  TableReader reader(*table, std::string(name), origin, lines);
  body(reader);
  reader.finish();
}

int find_line(const SourceLines& lines, const std::string& key) {
  const auto it = lines.find(key);
  return it == lines.end() ? 0 : it->second;
}

}  // namespace

std::string kind_name(ExperimentKind kind) {
  for (const auto& [k, name] : kKinds) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<ExperimentKind> parse_kind(const std::string& name) {
  for (const auto& [k, n] : kKinds) {
    if (name == n) return k;
  }
  return std::nullopt;
}

std::vector<double> ExperimentConfig::effective_checkpoints() const {
  if (!checkpoints.empty()) return checkpoints;
  if (horizon <= 0.0) return {0.0};
  return {0.0, horizon};
}

std::string Diagnostic::to_string() const {
  return line > 0 ? "line " + std::to_string(line) + ": " + message : message;
}

ParsedConfig parse_config(const std::string& text, const std::string& origin) {
  toml::table root;
  try {
    root = toml::parse(text, origin);
  } catch (const toml::parse_error& e) {
    throw Error(origin + ":" + std::to_string(e.source().begin.line) + ": " +
                std::string(e.description()));
  }
  ParsedConfig parsed;
  ExperimentConfig& c = parsed.config;
  SourceLines& lines = parsed.lines;

  TableReader top(root, "", origin, lines);
  std::string kind = kind_name(c.kind);
  top.string("kind", kind);
  if (const auto k = parse_kind(kind)) {
    c.kind = *k;
  } else {
    top.fail(*root.get("kind"), "unknown experiment kind '" + kind + "'");
  }
  top.seed("seed", c.seed);
  if (root.get("threads")) {
    unsigned threads = 0;
    top.integer("threads", threads);
    c.threads = threads;
  }
  top.string("output", c.output);
  top.boolean("snapshots", c.snapshots);
  top.integer("pairs", c.pairs);
  for (const char* section : {"kernel", "system", "initial", "metric", "reference", "entropy"}) {
    top.take(section);
  }
  top.finish();

  read_section(root, "kernel", origin, lines, [&](TableReader& r) {
    r.string("name", c.kernel.name);
    r.real("cutoff", c.kernel.cutoff);
    r.real("strength", c.kernel.strength);
    r.real("speed", c.kernel.speed);
  });
  read_section(root, "system", origin, lines, [&](TableReader& r) {
    r.integer("d", c.d);
    r.counts("N", c.particles);
    r.integer("M", c.replicas);
    r.optional_real("E", c.energy);
    r.real("horizon", c.horizon);
    r.reals("checkpoints", c.checkpoints);
  });
  read_section(root, "initial", origin, lines, [&](TableReader& r) {
    r.string("density", c.initial.density);
    r.string("mode", c.initial.mode);
    r.numeric_rest(c.initial.params);
  });
  read_section(root, "metric", origin, lines, [&](TableReader& r) {
    r.string("name", c.metric.name);
    r.integer("q", c.metric.q);
    r.real("s", c.metric.s);
    r.integer("k", c.metric.k);
    r.integer("ell", c.metric.ell);
    r.integer("bootstrap", c.metric.bootstrap);
    r.integer("floor_draws", c.metric.floor_draws);
    r.boolean("augment", c.metric.augment);
  });
  read_section(root, "reference", origin, lines, [&](TableReader& r) {
    r.string("source", c.reference.source);
    r.integer("particles", c.reference.particles);
    r.integer("replicas", c.reference.replicas);
  });
  read_section(root, "entropy", origin, lines, [&](TableReader& r) {
    r.string("source", c.entropy.source);
    r.reals("variances", c.entropy.variances);
    r.integer("max_degree", c.entropy.max_degree);
    r.integer("nodes", c.entropy.nodes);
    r.real("extent", c.entropy.extent);
    r.real("dt", c.entropy.dt);
    r.integer("record_every", c.entropy.record_every);
    r.boolean("production", c.entropy.production);
    r.integer("production_samples", c.entropy.production_samples);
  });
  return parsed;
}

ParsedConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path);
}

std::vector<Diagnostic> validate(const ExperimentConfig& c, const SourceLines& lines) {
  std::vector<Diagnostic> out;
  const auto add = [&](const std::string& key, std::string message) {
    out.push_back({find_line(lines, key), std::move(message)});
  };
  const ExperimentKind kind = c.kind;
  const bool dynamics = kind == ExperimentKind::kSimulate || kind == ExperimentKind::kChaos ||
                        kind == ExperimentKind::kRelaxation ||
                        (kind == ExperimentKind::kEntropyTrack && c.entropy.source == "particles");

  // Kernel.
  const std::string& kn = c.kernel.name;
  if (kn != "gmm" && kn != "tmm" && kn != "hs") {
    add("kernel.name", "unknown kernel '" + kn + "' (expected gmm, tmm or hs)");
  }
  if (kn == "tmm") {
    if (!(c.kernel.cutoff > 0.0)) add("kernel.cutoff", "tmm cutoff must be positive");
    if (!(c.kernel.cutoff < 0.5 * std::numbers::pi)) add("kernel.cutoff", "tmm cutoff must be below pi/2");
    if (!(c.kernel.strength > 0.0)) add("kernel.strength", "tmm strength must be positive");
  }
  if (kn == "hs" && !(c.kernel.speed > 0.0)) add("kernel.speed", "hs speed coefficient must be positive");

  // System.
  if (c.d < 1 || c.d > 3) add("system.d", "dimension must be 1, 2 or 3");
  if (dynamics && c.d < 2) add("system.d", "collision dynamics need d >= 2");
  if (c.particles.empty()) add("system.N", "particle count list is empty");
  std::size_t min_n = c.particles.empty() ? 0 : *std::min_element(c.particles.begin(), c.particles.end());
  if (dynamics && min_n < 2) add("system.N", "particle systems need N >= 2");
  if (!dynamics && min_n < 1) add("system.N", "particle counts must be positive");
  if (c.replicas < 1) add("system.M", "replica count must be positive");
  if (c.energy && !(*c.energy > 0.0)) add("system.E", "energy must be positive");
  if (!(c.horizon >= 0.0) || !std::isfinite(c.horizon)) add("system.horizon", "horizon must be finite and nonnegative");
  if (!std::is_sorted(c.checkpoints.begin(), c.checkpoints.end())) {
    add("system.checkpoints", "checkpoints must be sorted");
  }
  for (double t : c.checkpoints) {
    if (t < 0.0 || t > c.horizon) {
      add("system.checkpoints", "checkpoint " + std::to_string(t) + " lies outside [0, horizon]");
      break;
    }
  }

  // Initial data.
  const auto params = kDensityParams.find(c.initial.density);
  if (params == kDensityParams.end()) {
    add("initial.density", "unknown density '" + c.initial.density +
                               "' (expected uniform_ball, trunc_gauss, two_point, bimodal or gauss)");
  } else {
    for (const auto& [key, value] : c.initial.params) {
      if (!params->second.count(key)) {
        add("initial." + key, "density '" + c.initial.density + "' has no parameter '" + key + "'");
      }
    }
    if (c.d >= 1 && c.d <= 3) {
      try {
        (void)make_density(c);
      } catch (const Error& e) {
        add("initial.density", e.what());
      }
    }
  }
  const std::string& mode = c.initial.mode;
  if (mode != "tensorized" && mode != "sphere" && mode != "uniform_sphere") {
    add("initial.mode", "unknown initial mode '" + mode + "' (expected tensorized, sphere or uniform_sphere)");
  }
  if (kind == ExperimentKind::kRelaxation && mode == "tensorized") {
    add("initial.mode", "relaxation needs data on the sphere (sphere or uniform_sphere)");
  }

  // Metric.
  if (c.metric.ell < 1) add("metric.ell", "marginal order must be positive");
  if ((kind == ExperimentKind::kChaos || kind == ExperimentKind::kRelaxation ||
       kind == ExperimentKind::kSimulate) && c.metric.ell > min_n && min_n > 0) {
    add("metric.ell", "marginal order exceeds particle count");
  }
  if ((kind == ExperimentKind::kChaos || kind == ExperimentKind::kRelaxation) && c.metric.ell > 4) {
    add("metric.ell", "marginal order is capped at 4");
  }
  if (c.metric.q < 1) add("metric.q", "q must be at least 1");
  if (c.metric.name != "wasserstein" && c.metric.name != "sobolev") {
    add("metric.name", "unknown metric '" + c.metric.name + "' (expected wasserstein or sobolev)");
  }
  if (c.metric.name == "sobolev" && kind != ExperimentKind::kLln) {
    add("metric.name", "the sobolev metric is available for lln only");
  }
  if (kind == ExperimentKind::kLln) {
    if (c.metric.name == "wasserstein" && c.metric.q != 1) add("metric.q", "lln supports W1 only");
    if (c.particles.size() < 2) add("system.N", "lln needs an N schedule with at least two entries");
    for (std::size_t k = 2; k < c.particles.size(); ++k) {
      const double r0 = static_cast<double>(c.particles[1]) / static_cast<double>(c.particles[0]);
      const double r = static_cast<double>(c.particles[k]) / static_cast<double>(c.particles[k - 1]);
      if (std::abs(r - r0) > 1e-9 * r0) {
        add("system.N", "N schedule is not geometric");
        break;
      }
    }
  }
  if (kind == ExperimentKind::kChaos || kind == ExperimentKind::kRelaxation) {
    const std::size_t cloud = c.replicas * (c.metric.augment ? 2 : 1);
    if (c.d * c.metric.ell > 1 && cloud > metrics::kAssignmentLimit) {
      add("system.M", "marginal cloud of " + std::to_string(cloud) +
                          " tuples exceeds the assignment limit " +
                          std::to_string(metrics::kAssignmentLimit));
    }
  }
  if (kind == ExperimentKind::kMetricsCheck) {
    if (c.metric.k < c.metric.q - 1) add("metric.k", "comparison suite needs k >= q - 1");
    if (c.pairs < 1) add("pairs", "need at least one pair");
    if (min_n > metrics::kAssignmentLimit) add("system.N", "cloud size exceeds the assignment limit");
  }

  // Reference for chaos.
  if (kind == ExperimentKind::kChaos) {
    const std::string& src = c.reference.source;
    if (src != "oracle" && src != "initial") {
      add("reference.source", "unknown reference '" + src + "' (expected oracle or initial)");
    }
    if (src == "oracle") {
      const std::size_t need = 2 * c.replicas * c.metric.ell * (c.metric.augment ? 2 : 1);
      if (c.reference.particles < 2) add("reference.particles", "oracle needs at least 2 particles");
      if (c.reference.particles * c.reference.replicas < need) {
        add("reference.particles", "oracle pool of " +
                                       std::to_string(c.reference.particles * c.reference.replicas) +
                                       " samples is smaller than the " + std::to_string(need) +
                                       " needed");
      }
    }
  }

  // Entropy tracking.
  if (kind == ExperimentKind::kEntropyTrack) {
    const auto& e = c.entropy;
    if (e.source == "spectral") {
      if (kn == "hs") add("kernel.name", "spectral entropy tracking needs a Maxwell-type kernel");
      if (c.d != 3) add("system.d", "spectral entropy tracking runs in d = 3");
      if (e.variances.size() != 2 || !(e.variances[0] > 0.0) || !(e.variances[1] > 0.0)) {
        add("entropy.variances", "variances must hold two positive numbers (transverse, axial)");
      }
      if (e.max_degree < 0 || e.max_degree % 2 != 0) add("entropy.max_degree", "max_degree must be even and nonnegative");
      if (e.nodes < 16) add("entropy.nodes", "need at least 16 radial nodes");
      if (!(e.dt > 0.0)) add("entropy.dt", "time step must be positive");
      if (e.record_every < 1) add("entropy.record_every", "record_every must be positive");
      if (!(e.extent > 0.0)) add("entropy.extent", "extent must be positive");
    } else if (e.source == "particles") {
      if (min_n * c.replicas < 500) add("system.M", "kNN estimates need at least 500 pooled samples");
    } else {
      add("entropy.source", "unknown entropy source '" + e.source + "' (expected spectral or particles)");
    }
  }

  if (c.output.empty()) add("output", "output directory is empty");
  return out;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["kind"] = kind_name(c.kind);
  j["seed"] = c.seed;
  j["threads"] = c.threads ? nlohmann::json(*c.threads) : nlohmann::json(nullptr);
  j["output"] = c.output;
  j["snapshots"] = c.snapshots;
  j["pairs"] = c.pairs;
  j["kernel"] = {{"name", c.kernel.name},
                 {"cutoff", c.kernel.cutoff},
                 {"strength", c.kernel.strength},
                 {"speed", c.kernel.speed}};
  j["system"] = {{"d", c.d},
                 {"N", c.particles},
                 {"M", c.replicas},
                 {"E", c.energy ? nlohmann::json(*c.energy) : nlohmann::json(nullptr)},
                 {"horizon", c.horizon},
                 {"checkpoints", c.checkpoints}};
  j["initial"] = {{"density", c.initial.density}, {"mode", c.initial.mode}, {"params", c.initial.params}};
  j["metric"] = {{"name", c.metric.name},       {"q", c.metric.q},
                 {"s", c.metric.s},             {"k", c.metric.k},
                 {"ell", c.metric.ell},         {"bootstrap", c.metric.bootstrap},
                 {"floor_draws", c.metric.floor_draws}, {"augment", c.metric.augment}};
  j["reference"] = {{"source", c.reference.source},
                    {"particles", c.reference.particles},
                    {"replicas", c.reference.replicas}};
  j["entropy"] = {{"source", c.entropy.source},
                  {"variances", c.entropy.variances},
                  {"max_degree", c.entropy.max_degree},
                  {"nodes", c.entropy.nodes},
                  {"extent", c.entropy.extent},
                  {"dt", c.entropy.dt},
                  {"record_every", c.entropy.record_every},
                  {"production", c.entropy.production},
                  {"production_samples", c.entropy.production_samples}};
  return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  const auto kind = parse_kind(j.at("kind").get<std::string>());
  require(kind.has_value(), "metadata: unknown experiment kind");
  c.kind = *kind;
  c.seed = j.at("seed").get<std::uint64_t>();
  if (!j.at("threads").is_null()) c.threads = j.at("threads").get<unsigned>();
  c.output = j.at("output").get<std::string>();
  c.snapshots = j.at("snapshots").get<bool>();
  c.pairs = j.at("pairs").get<std::size_t>();
  const auto& k = j.at("kernel");
  c.kernel = {k.at("name"), k.at("cutoff"), k.at("strength"), k.at("speed")};
  const auto& s = j.at("system");
  c.d = s.at("d");
  c.particles = s.at("N").get<std::vector<std::size_t>>();
  c.replicas = s.at("M");
  if (!s.at("E").is_null()) c.energy = s.at("E").get<double>();
  c.horizon = s.at("horizon");
  c.checkpoints = s.at("checkpoints").get<std::vector<double>>();
  const auto& i = j.at("initial");
  c.initial = {i.at("density"), i.at("mode"), i.at("params").get<std::map<std::string, double>>()};
  const auto& m = j.at("metric");
  c.metric = {m.at("name"), m.at("q"),   m.at("s"),           m.at("k"),
              m.at("ell"),  m.at("bootstrap"), m.at("floor_draws"), m.at("augment")};
  const auto& r = j.at("reference");
  c.reference = {r.at("source"), r.at("particles"), r.at("replicas")};
  const auto& e = j.at("entropy");
  c.entropy.source = e.at("source");
  c.entropy.variances = e.at("variances").get<std::vector<double>>();
  c.entropy.max_degree = e.at("max_degree");
  c.entropy.nodes = e.at("nodes");
  c.entropy.extent = e.at("extent");
  c.entropy.dt = e.at("dt");
  c.entropy.record_every = e.at("record_every");
  c.entropy.production = e.at("production");
  c.entropy.production_samples = e.at("production_samples");
  return c;
}

CollisionKernel make_kernel(const ExperimentConfig& c) {
  if (c.kernel.name == "gmm") return CollisionKernel::grad_maxwell(c.d);
  if (c.kernel.name == "tmm") return CollisionKernel::true_maxwell(c.d, c.kernel.cutoff, c.kernel.strength);
  if (c.kernel.name == "hs") return CollisionKernel::hard_spheres(c.d, c.kernel.speed);
  throw Error("unknown kernel '" + c.kernel.name + "'");
}

sampling::ReferenceDensity make_density(const ExperimentConfig& c) {
  return sampling::ReferenceDensity::from_name(c.initial.density, c.d, c.initial.params);
}

}  // namespace kac::cli
