#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace chromaforge {

/// FNV-1a over the raw bytes of a file; hex string form is what manifests
/// store. Throws IoError if the file cannot be read.
uint64_t fnv1a64_file(const std::string& path);
std::string hash_hex(uint64_t h);

/// Record of one CLI invocation, written as manifest.json into the output
/// directory. `args` holds the flags needed to reproduce the run minus the
/// output directory itself, so `rerun` can replay them against a fresh one.
struct RunManifest {
    std::string tool_version;
    std::string command;
    std::vector<std::string> args;
    uint64_t seed = 0;
    std::map<std::string, std::string> input_hashes; // path -> fnv1a64 hex
    std::vector<std::string> outputs;                // relative to the out dir

    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& j);
    void save(const std::string& path) const;
    static RunManifest load(const std::string& path);
};

} // namespace chromaforge
