#pragma once

#include <filesystem>
#include <string>

#include "herlab/policy.hpp"

namespace herlab {

inline constexpr int kCheckpointVersion = 1;

/// JSON checkpoint; doubles are written in shortest round-trip form so a
/// save/load cycle reproduces the parameters bit-exactly.
std::string serialize_policy(const PolicyParams& params);
PolicyParams deserialize_policy(const std::string& text);

void save_policy(const std::filesystem::path& path, const PolicyParams& params);
PolicyParams load_policy(const std::filesystem::path& path);

}  // namespace herlab
