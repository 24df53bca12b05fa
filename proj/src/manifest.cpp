#include "prorl/manifest.hpp"

#include <Eigen/Core>
#include <chrono>
#include <ctime>
#include <fstream>

namespace prorl {

std::string utc_timestamp_now() {
    const std::time_t now =
        std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

nlohmann::json manifest_json(const Manifest& m) {
    nlohmann::json j;
    j["format"] = "prorl-manifest-v1";
    j["command"] = m.command;
    j["seed"] = m.seed;
    j["config"] = m.config;
    j["artifacts"] = m.artifacts;
    j["inputs"] = m.inputs;
    j["created_utc"] = utc_timestamp_now();
    j["versions"]["tool"] = std::string(kToolName) + " " + kToolVersion;
    j["versions"]["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." +
                             std::to_string(EIGEN_MAJOR_VERSION) + "." +
                             std::to_string(EIGEN_MINOR_VERSION);
#if defined(__VERSION__)
    j["versions"]["compiler"] = __VERSION__;
#endif
    return j;
}

void write_manifest(const Manifest& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("manifest: cannot open for writing: " + path);
    out << manifest_json(m).dump(2) << '\n';
    if (!out) throw ConfigError("manifest: write failed: " + path);
}

} // namespace prorl
