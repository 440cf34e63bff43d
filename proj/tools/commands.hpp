#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "ntkforge/dataset.hpp"

namespace ntkforge::cli {

struct CliOptions {
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  NormalizeMode normalize = NormalizeMode::PerSample;
  bool dummy_index = false;
  bool extended = false;
  nlohmann::json config;  // subcommand configuration (from --config plus flag overrides)
};

// Subcommands. Each writes its outputs plus a manifest.json under
// opts.out_dir and returns a process exit code: 0 success, 2 config error,
// 3 numerical failure.
int cmd_synthesize(const CliOptions& opts);
int cmd_eval_kernel(const CliOptions& opts);
int cmd_kernel_grid(const CliOptions& opts);
int cmd_parity(const CliOptions& opts);
int cmd_mimic(const CliOptions& opts);
int cmd_train(const CliOptions& opts);

// Configuration mistakes (bad JSON, unknown names, missing files) -> exit 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ntkforge::cli
