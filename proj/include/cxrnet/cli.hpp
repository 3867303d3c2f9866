#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cxrnet/errors.hpp"
#include "cxrnet/model.hpp"
#include "cxrnet/trainer.hpp"

namespace cxrnet {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kDatasetRootEnv = "CXRNET_DATASET_ROOT";

/// Everything a run needs. Sources, lowest precedence first: built-in
/// defaults, the JSON config file, the CXRNET_DATASET_ROOT environment
/// variable (dataset root only), command-line flags.
struct RunConfig {
  std::filesystem::path dataset_root;
  std::filesystem::path output_dir = "runs/default";
  std::filesystem::path checkpoint;  // input for evaluate / predict
  TrainConfig train;
  ModelSpec model;

  void validate() const;
};

/// Parses a config document. Unknown keys (at any level) and wrongly typed
/// values throw ConfigError.
RunConfig parse_run_config(const std::string& json_text, RunConfig base = {});

/// Canonical JSON of the resolved configuration (stable key order).
std::string run_config_json(const RunConfig& config);

/// Process exit code for each failure category. 0 is success, 1 an
/// unexpected internal failure.
int exit_code(ErrorCategory category) noexcept;

/// Entry point of the `cxrnet` tool. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace cxrnet
