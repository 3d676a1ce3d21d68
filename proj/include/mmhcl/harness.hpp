#pragma once

#include "mmhcl/dataset.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace mmhcl {

// Exit codes shared by run_command and the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitRuntimeError = 2;
inline constexpr int kExitCheckFailed = 3;

/// Full default configuration; user configs may override any subset of
/// these keys and nothing else.
nlohmann::json default_config();

/// Defaults overlaid with the user config. Unknown keys and type
/// mismatches raise config_error.
nlohmann::json merge_config(const nlohmann::json& user);

/// Apply one "dotted.path=value" override. Values parse as JSON scalars
/// when possible, otherwise as strings.
void apply_override(nlohmann::json& config, const std::string& assignment);

/// FNV-1a of the canonical (sorted-key) serialization: stable under key
/// reordering in the source file.
std::string config_fingerprint(const nlohmann::json& config);

struct DatasetBundle {
    MmhclDataset dataset;
    ClassCatalog catalog;
    nlohmann::json manifest;
};

/// Load a dataset via its manifest JSON (paths resolved relative to the
/// manifest's directory).
DatasetBundle load_dataset_bundle(const std::string& manifest_path);

/// Execute one command with a merged-or-user config; creates a fresh run
/// directory under out_root and writes a manifest besides the artifacts.
/// Returns an exit code instead of throwing.
int run_command(const std::string& command, const nlohmann::json& user_config,
                const std::string& out_root);

} // namespace mmhcl
