#pragma once

#include <cstdint>
#include <map>
#include <string>

#include <json.hpp>

namespace anaquest {

inline constexpr const char* kToolVersion = "anaquest 0.1.0";

// FNV-1a over the file bytes; stable fingerprint for run manifests.
std::uint64_t fnv1a_file(const std::string& path);
std::string file_hash_hex(const std::string& path);

// Write to <path>.tmp then rename, so partial outputs never land.
void atomic_write(const std::string& path, const std::string& content);

// Machine-readable record of one command run: input hashes, effective
// config, seed, tool version. No timestamps, so reruns are byte-identical.
nlohmann::json make_manifest(const std::string& command,
                             const std::map<std::string, std::string>& inputs,
                             const nlohmann::json& config, std::uint64_t seed);

}  // namespace anaquest
