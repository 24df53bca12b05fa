#ifndef PRORL_MANIFEST_HPP
#define PRORL_MANIFEST_HPP

#include <cstdint>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "prorl/config.hpp"

// Run manifests: every CLI invocation drops a JSON record of what ran — the
// subcommand, the resolved seed, the effective configuration and the
// artifacts it produced — so a run can be audited and replayed later.

namespace prorl {

inline constexpr const char* kToolName = "pro-rl";
inline constexpr const char* kToolVersion = "0.1.0";

struct Manifest {
    std::string command;
    std::uint64_t seed = 0;
    nlohmann::json config; // run_config_snapshot output
    std::map<std::string, std::string> artifacts; // logical name -> path
    std::map<std::string, std::string> inputs;    // consumed files

    void add_artifact(const std::string& name, const std::string& path) {
        artifacts[name] = path;
    }
    void add_input(const std::string& name, const std::string& path) {
        inputs[name] = path;
    }
};

// Current time as an ISO-8601 UTC string (the only run-dependent manifest
// field; replay comparisons must ignore it).
std::string utc_timestamp_now();

// Serializes the manifest plus tool/library/compiler versions and a creation
// timestamp.
nlohmann::json manifest_json(const Manifest& m);

void write_manifest(const Manifest& m, const std::string& path);

} // namespace prorl

#endif
