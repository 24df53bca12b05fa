#ifndef PRORL_CONFIG_HPP
#define PRORL_CONFIG_HPP

#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "prorl/env.hpp"
#include "prorl/eval.hpp"
#include "prorl/policy.hpp"
#include "prorl/ppo.hpp"
#include "prorl/reliability.hpp"
#include "prorl/surrogate.hpp"

// Declarative run configuration: a sectioned key = value text format
// ([section] headers, # or ; comments, optional double quotes around
// strings). Every documented default is overridable; keys that nothing
// consumes are reported as errors so typos cannot silently revert to
// defaults.

namespace prorl {

class ConfigReader {
  public:
    static ConfigReader from_file(const std::string& path);
    static ConfigReader from_string(const std::string& text,
                                    const std::string& origin = "<string>");

    // Typed lookups. A present key is parsed strictly (whole token must
    // convert) and marked consumed; an absent key yields the fallback.
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback);
    double get_double(const std::string& section, const std::string& key,
                      double fallback);
    int get_int(const std::string& section, const std::string& key, int fallback);
    bool get_bool(const std::string& section, const std::string& key, bool fallback);

    bool has(const std::string& section, const std::string& key) const;

    // Keys present in the file that no lookup ever touched.
    std::vector<std::string> unconsumed_keys() const;
    // Throws ConfigError naming every unconsumed key.
    void require_all_consumed() const;

  private:
    std::string origin_;
    std::map<std::string, std::map<std::string, std::string>> sections_;
    std::set<std::string> consumed_; // "section.key"

    const std::string* find(const std::string& section, const std::string& key) const;
    std::string describe(const std::string& section, const std::string& key) const;
};

// Evaluation settings consumed by the validate / reward-map / temporal
// drivers.
struct EvalConfig {
    int validate_episodes = 100;
    double success_threshold = 195.0; // CartPole bar; Pendulum default -200
    bool stochastic = false;          // evaluate the stochastic policy instead of
                                      // the deterministic (argmax / mean) one
    std::string reward_map_x;
    std::string reward_map_y;
    int reward_map_grid = 10;
    int reward_map_episodes_per_cell = 5;
    double reward_map_sigmas = 3.0;
    int temporal_episodes = 1000;

    static EvalConfig defaults(EnvId id);
    void validate() const;
};

// Everything one run needs, resolved against per-environment defaults.
struct RunConfig {
    EnvModel env;
    int dataset_n = 5000; // LHS design size (10000 for Pendulum)
    SurrogateConfig surrogate;
    ReliabilityConfig reliability;
    PolicyConfig policy;
    PPOConfig ppo;
    EvalConfig eval;

    static RunConfig defaults(EnvId id);
    void validate() const;
};

// Parses a config file and overlays it on the defaults of the environment it
// names ([run] environment = cartpole | pendulum, mandatory). Unknown keys,
// malformed values and inconsistent settings raise ConfigError.
RunConfig load_run_config(const std::string& path);

// Same overlay from an in-memory string (tests, snapshots).
RunConfig parse_run_config(const std::string& text,
                           const std::string& origin = "<string>");

// Effective settings as a JSON object (section -> key -> value), suitable for
// embedding in a run manifest. Non-finite doubles appear as "inf"/"-inf"
// strings since JSON has no encoding for them.
nlohmann::json run_config_snapshot(const RunConfig& cfg);

} // namespace prorl

#endif
