// Copyright 2026 The kacchaos Authors
// SPDX-License-Identifier: Apache-2.0
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "config.hpp"
#include "kac/error.hpp"
#include "runner.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
};

void add_common(CLI::App* sub, Flags& flags, bool config_required) {
  auto* opt = sub->add_option("--config", flags.config, "TOML experiment recipe");
  if (config_required) opt->required();
  opt->check(CLI::ExistingFile);
  sub->add_option("--seed", flags.seed, "master seed (unsigned 64-bit)");
  sub->add_option("--out", flags.out, "output directory");
  sub->add_option("--threads", flags.threads, "worker threads, 0 for auto");
}

kac::cli::ParsedConfig assemble(const Flags& flags, kac::cli::ExperimentKind kind) {
  kac::cli::ParsedConfig parsed;
  if (!flags.config.empty()) {
    parsed = kac::cli::load_config(flags.config);
    if (parsed.lines.count("kind") && parsed.config.kind != kind) {
      throw kac::Error(flags.config + ":" + std::to_string(parsed.lines.at("kind")) +
                       ": config kind '" + kac::cli::kind_name(parsed.config.kind) +
                       "' does not match subcommand '" + kac::cli::kind_name(kind) + "'");
    }
  }
  parsed.config.kind = kind;
  if (flags.seed) parsed.config.seed = *flags.seed;
  if (flags.out) parsed.config.output = *flags.out;
  if (flags.threads) parsed.config.threads = *flags.threads;
  return parsed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kac particle systems, propagation of chaos and relaxation experiments"};
  app.set_version_flag("--version", kac::cli::version());
  app.require_subcommand(1);

  Flags flags;
  using kac::cli::ExperimentKind;
  const std::pair<const char*, ExperimentKind> runs[] = {
      {"simulate", ExperimentKind::kSimulate},
      {"chaos", ExperimentKind::kChaos},
      {"relaxation", ExperimentKind::kRelaxation},
      {"lln", ExperimentKind::kLln},
      {"metrics-check", ExperimentKind::kMetricsCheck},
      {"entropy-track", ExperimentKind::kEntropyTrack},
  };
  std::optional<ExperimentKind> selected;
  for (const auto& [name, kind] : runs) {
    auto* sub = app.add_subcommand(name, std::string("run a ") + name + " experiment");
    add_common(sub, flags, false);
    sub->callback([&selected, kind = kind] { selected = kind; });
  }
  auto* check = app.add_subcommand("validate", "check a recipe without running it");
  add_common(check, flags, true);
  std::string check_kind;
  check->add_option("--kind", check_kind, "experiment kind when the recipe omits it");

  CLI11_PARSE(app, argc, argv);

  try {
    if (check->parsed()) {
      auto parsed = kac::cli::load_config(flags.config);
      if (!check_kind.empty()) {
        const auto kind = kac::cli::parse_kind(check_kind);
        if (!kind) throw kac::Error("unknown experiment kind '" + check_kind + "'");
        parsed.config.kind = *kind;
      }
      if (flags.seed) parsed.config.seed = *flags.seed;
      if (flags.out) parsed.config.output = *flags.out;
      if (flags.threads) parsed.config.threads = *flags.threads;
      const auto diagnostics = kac::cli::validate(parsed.config, parsed.lines);
      for (const auto& d : diagnostics) std::cout << flags.config << ": " << d.to_string() << '\n';
      if (diagnostics.empty()) std::cout << flags.config << ": ok\n";
      return diagnostics.empty() ? 0 : 1;
    }

    const auto parsed = assemble(flags, *selected);
    const auto diagnostics = kac::cli::validate(parsed.config, parsed.lines);
    if (!diagnostics.empty()) {
      const std::string origin = flags.config.empty() ? "<flags>" : flags.config;
      for (const auto& d : diagnostics) std::cerr << origin << ": " << d.to_string() << '\n';
      return 2;
    }
    const auto result = kac::cli::run(parsed.config);
    for (const auto& line : result.summary) std::cout << line << '\n';
    std::cout << result.files.size() << " files written to " << parsed.config.output << '\n';
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
