#include "chromaforge/manifest.hpp"

#include <cstdio>
#include <fstream>

#include "chromaforge/errors.hpp"

namespace chromaforge {

uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError(IoErrorKind::TruncatedFile, "cannot open " + path + " for hashing");
    uint64_t h = 1469598103934665603ull;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
    }
    return h;
}

std::string hash_hex(uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

nlohmann::json RunManifest::to_json() const {
    return {{"tool_version", tool_version}, {"command", command},
            {"args", args},                 {"seed", seed},
            {"input_hashes", input_hashes}, {"outputs", outputs}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
    try {
        RunManifest m;
        m.tool_version = j.at("tool_version").get<std::string>();
        m.command = j.at("command").get<std::string>();
        m.args = j.at("args").get<std::vector<std::string>>();
        m.seed = j.at("seed").get<uint64_t>();
        m.input_hashes = j.at("input_hashes").get<std::map<std::string, std::string>>();
        m.outputs = j.at("outputs").get<std::vector<std::string>>();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(IoErrorKind::CorruptFile, std::string("bad manifest: ") + e.what());
    }
}

void RunManifest::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(IoErrorKind::Unwritable, "cannot write " + path);
    out << to_json().dump(2) << '\n';
    if (!out) throw IoError(IoErrorKind::Unwritable, "short write to " + path);
}

RunManifest RunManifest::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(IoErrorKind::TruncatedFile, "cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(IoErrorKind::CorruptFile, std::string("bad manifest: ") + e.what());
    }
    return from_json(j);
}

} // namespace chromaforge
