#pragma once
// Run manifests: the fully resolved configuration plus the inputs that
// determine every numerical column, hashed so outputs can name the run that
// produced them and a stored manifest can reproduce it bit-for-bit.

#include <cstdint>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "fit/errors.hpp"
#include "fit/version.hpp"

namespace fit {

using nlohmann::json;

struct RunManifest {
    std::string command;
    json config;            // fully resolved, defaults applied
    std::uint64_t seed = 0;
    int threads = 1;
    std::string version = kVersion;
    double wall_seconds = 0.0;
};

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// Digest over exactly the run-determining fields (wall time and thread
// count change between reruns and are excluded).
inline std::string manifest_digest(const RunManifest& m) {
    json key;
    key["command"] = m.command;
    key["config"] = m.config;
    key["seed"] = m.seed;
    key["version"] = m.version;
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(key.dump())));
    return buf;
}

inline std::string manifest_comment(const RunManifest& m) {
    return "manifest=fnv1a:" + manifest_digest(m);
}

inline json manifest_to_json(const RunManifest& m) {
    json j;
    j["fit_manifest"] = true;
    j["command"] = m.command;
    j["config"] = m.config;
    j["seed"] = m.seed;
    j["threads"] = m.threads;
    j["version"] = m.version;
    j["wall_seconds"] = m.wall_seconds;
    j["digest"] = manifest_digest(m);
    return j;
}

inline void write_manifest(const std::string& path, const RunManifest& m) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open output file " + path);
    f << manifest_to_json(m).dump(2) << "\n";
}

} // namespace fit
