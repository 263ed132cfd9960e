#include "anaquest/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace anaquest {

std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path + ": cannot open for hashing");
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof(buf));
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            hash ^= static_cast<unsigned char>(buf[i]);
            hash *= 0x100000001b3ULL;
        }
    }
    return hash;
}

std::string file_hash_hex(const std::string& path) {
    std::ostringstream out;
    out << "fnv1a:" << std::hex << fnv1a_file(path);
    return out.str();
}

void atomic_write(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error(tmp + ": cannot open for writing");
        out << content;
        if (!out) throw std::runtime_error(tmp + ": write failed");
    }
    std::filesystem::rename(tmp, path);
}

nlohmann::json make_manifest(const std::string& command,
                             const std::map<std::string, std::string>& inputs,
                             const nlohmann::json& config, std::uint64_t seed) {
    nlohmann::json in = nlohmann::json::object();
    for (const auto& [name, path] : inputs) {
        in[name] = nlohmann::json{{"path", path}, {"hash", file_hash_hex(path)}};
    }
    return nlohmann::json{{"command", command},
                          {"inputs", in},
                          {"config", config},
                          {"seed", seed},
                          {"version", kToolVersion}};
}

}  // namespace anaquest
