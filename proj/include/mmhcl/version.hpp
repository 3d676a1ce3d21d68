#pragma once

namespace mmhcl {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kCheckpointFormatVersion = 1;
inline constexpr int kDatasetManifestVersion = 1;

} // namespace mmhcl
