// Copyright 2026 The kacchaos Authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "config.hpp"
#include "doctest.h"
#include "kac/error.hpp"
#include "kac/jump.hpp"
#include "runner.hpp"

using namespace kac;
using namespace kac::cli;
namespace fs = std::filesystem;

namespace {

const fs::path kPresets = KAC_PRESET_DIR;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("kac_cli_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

bool has_message(const std::vector<Diagnostic>& diags, const std::string& text) {
  for (const auto& d : diags) {
    if (d.message.find(text) != std::string::npos) return true;
  }
  return false;
}

std::string error_of(const std::string& toml) {
  try {
    parse_config(toml, "cfg");
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("config parsing") {
  const auto parsed = parse_config(R"(kind = "chaos"
seed = "18446744073709551615"
[kernel]
name = "tmm"
cutoff = 0.2
[system]
N = [16, 32]
M = 40
horizon = 1
checkpoints = [0, 0.5, 1]
[initial]
density = "bimodal"
separation = 2.0
[metric]
ell = 2
)");
  const auto& c = parsed.config;
  CHECK(c.kind == ExperimentKind::kChaos);
  CHECK(c.seed == 18446744073709551615ULL);
  CHECK(c.kernel.name == "tmm");
  CHECK(c.kernel.cutoff == 0.2);
  CHECK(c.particles == std::vector<std::size_t>{16, 32});
  CHECK(c.replicas == 40);
  CHECK(c.horizon == 1.0);
  CHECK(c.initial.params.at("separation") == 2.0);
  CHECK(c.metric.ell == 2);
  CHECK(parsed.lines.at("metric.ell") == 15);
  CHECK(validate(c, parsed.lines).empty());

  CHECK(error_of("kind = \"chaos\"\nbogus = 1\n").rfind("cfg:2: unknown key 'bogus'", 0) == 0);
  CHECK(error_of("[system]\nd = 3\nM = \"many\"\n").rfind("cfg:3: system.M must be an integer", 0) == 0);
  CHECK(error_of("[system]\nM = -4\n").find("cfg:2:") == 0);
  CHECK(error_of("kind = \"dance\"\n").rfind("cfg:1: unknown experiment kind", 0) == 0);
  CHECK(error_of("[kernel\nname = 1\n").rfind("cfg:1:", 0) == 0);
  CHECK(error_of("[metric]\nell = 1\naugment = 3\n").rfind("cfg:3:", 0) == 0);
}

TEST_CASE("validation diagnostics") {
  const auto bad_ell = parse_config("kind = \"chaos\"\n[system]\nN = 4\nM = 10\n[metric]\nell = 5\n");
  const auto diags = validate(bad_ell.config, bad_ell.lines);
  REQUIRE(has_message(diags, "marginal order exceeds particle count"));
  for (const auto& d : diags) {
    if (d.message.find("marginal order exceeds") != std::string::npos) CHECK(d.line == 6);
  }

  ExperimentConfig tmm;
  tmm.kernel.name = "tmm";
  tmm.kernel.cutoff = 0.0;
  CHECK(has_message(validate(tmm), "tmm cutoff must be positive"));
  tmm.kernel.cutoff = -1.0;
  CHECK(has_message(validate(tmm), "tmm cutoff must be positive"));

  ExperimentConfig c;
  c.checkpoints = {1.0, 0.5};
  c.horizon = 1.0;
  CHECK(has_message(validate(c), "checkpoints must be sorted"));
  c = {};
  c.initial.density = "blob";
  CHECK(has_message(validate(c), "unknown density 'blob'"));
  c = {};
  c.initial.params["radius"] = 1.0;
  CHECK(has_message(validate(c), "has no parameter 'radius'"));
  c = {};
  c.kind = ExperimentKind::kLln;
  c.d = 1;
  c.particles = {10, 20, 50};
  CHECK(has_message(validate(c), "not geometric"));
  c = {};
  c.kind = ExperimentKind::kRelaxation;
  CHECK(has_message(validate(c), "relaxation needs data on the sphere"));

  for (const auto& entry : fs::directory_iterator(kPresets)) {
    const auto preset = load_config(entry.path().string());
    INFO(entry.path().string());
    CHECK(validate(preset.config, preset.lines).empty());
  }
}

TEST_CASE("metadata round trip") {
  for (const auto& entry : fs::directory_iterator(kPresets)) {
    const auto c = load_config(entry.path().string()).config;
    CHECK(config_from_json(nlohmann::json::parse(to_json(c).dump())) == c);
  }
  ExperimentConfig c;
  c.energy = 2.5;
  c.threads = 0;
  c.seed = 18446744073709551615ULL;
  CHECK(config_from_json(nlohmann::json::parse(to_json(c).dump())) == c);
}

TEST_CASE("simulate with horizon 0 writes the initial state") {
  auto c = load_config((kPresets / "simulate_initial.toml").string()).config;
  c.output = scratch("initial").string();
  const auto result = run(c);
  CHECK(result.files.size() == 3);

  std::ifstream in(fs::path(c.output) / "snapshots" / "N16_r0_c0.bin", std::ios::binary);
  REQUIRE(in);
  double t = -1.0;
  const auto state = jump::read_snapshot(in, &t);
  RandomStream rng(ensemble_seed(c.seed, 16), 0, Channel::kInitial);
  CHECK(t == 0.0);
  CHECK(state == sampling::sample_tensorized(make_density(c), 16, rng));

  const auto meta = nlohmann::json::parse(slurp(fs::path(c.output) / "run.json"));
  CHECK(config_from_json(meta.at("config")) == c);
  CHECK(meta.at("version") == version());
  CHECK(meta.contains("wall_clock_seconds"));
  fs::remove_all(c.output);
}

TEST_CASE("runs are byte-identical for a fixed seed") {
  ExperimentConfig c;
  c.kind = ExperimentKind::kChaos;
  c.d = 2;
  c.particles = {6};
  c.replicas = 30;
  c.horizon = 0.5;
  c.checkpoints = {0.0, 0.5};
  c.metric.bootstrap = 4;
  c.metric.floor_draws = 2;
  c.reference.particles = 60;
  c.reference.replicas = 2;
  c.seed = 77;
  c.threads = 2;
  REQUIRE(validate(c).empty());
  c.output = scratch("a").string();
  run(c);
  const std::string first = slurp(fs::path(c.output) / "chaos_N6.csv");
  fs::remove_all(c.output);
  c.threads = 1;
  c.output = scratch("b").string();
  run(c);
  CHECK(slurp(fs::path(c.output) / "chaos_N6.csv") == first);
  CHECK(first.rfind("t,value,stderr,N,M,ell,metric,kernel,seed\n", 0) == 0);
  fs::remove_all(c.output);
}

TEST_CASE("lln preset reproduces the exact Sobolev identity") {
  auto c = load_config((kPresets / "lln_sobolev.toml").string()).config;
  c.output = scratch("lln").string();
  run(c);
  std::istringstream csv(slurp(fs::path(c.output) / "lln.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "N,mean,stderr");
  bool found = false;
  while (std::getline(csv, line)) {
    if (line.rfind("100,", 0) != 0) continue;
    found = true;
    const double mean = std::stod(line.substr(4));
    const double se = std::stod(line.substr(line.rfind(',') + 1));
    CHECK(std::abs(mean - 2.0 * std::sqrt(std::numbers::pi) / 100.0) < 3.0 * se);
  }
  CHECK(found);
  fs::remove_all(c.output);
}

TEST_CASE("failed runs leave no partial output") {
  ExperimentConfig c;
  c.kind = ExperimentKind::kMetricsCheck;
  c.d = 1;
  c.particles = {8};
  c.pairs = 3;
  const fs::path dir = scratch("partial");
  fs::create_directories(dir / "run.json");  // the metadata file cannot be created
  c.output = dir.string();
  CHECK_THROWS(run(c));
  CHECK_FALSE(fs::exists(dir / "metrics_check.csv"));
  CHECK(fs::exists(dir / "run.json"));
  fs::remove_all(dir);

  ExperimentConfig invalid;
  invalid.replicas = 0;
  invalid.output = scratch("invalid").string();
  CHECK_THROWS_AS(run(invalid), Error);
  CHECK_FALSE(fs::exists(invalid.output));
}

TEST_CASE("command line") {
  const std::string exe = KAC_CLI_PATH;
  const auto status = [](const std::string& cmd) {
    const int raw = std::system((cmd + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(raw);
  };
  CHECK(status(exe + " validate --config " + (kPresets / "chaos_gmm.toml").string()) == 0);

  const fs::path dir = scratch("cmd");
  fs::create_directories(dir);
  {
    std::ofstream bad(dir / "bad.toml");
    bad << "kind = \"chaos\"\n[system]\nN = 4\n[metric]\nell = 9\n";
  }
  CHECK(status(exe + " validate --config " + (dir / "bad.toml").string()) == 1);
  CHECK(status(exe + " chaos --config " + (dir / "bad.toml").string()) == 2);
  CHECK(status(exe + " lln --config " + (dir / "bad.toml").string()) == 1);
  CHECK(status(exe + " dance") != 0);

  const fs::path out = dir / "out";
  CHECK(status(exe + " simulate --config " + (kPresets / "simulate_initial.toml").string() +
               " --seed 5 --threads 0 --out " + out.string()) == 0);
  const auto meta = nlohmann::json::parse(slurp(out / "run.json"));
  CHECK(meta.at("config").at("seed") == 5);
  CHECK(meta.at("config").at("threads") == 0);
  fs::remove_all(dir);
}
