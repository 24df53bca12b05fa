#include "prorl/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace prorl {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
    const std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Drop everything from the first # or ; that sits outside double quotes.
std::string strip_comment(const std::string& line) {
    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (c == '"') {
            in_quotes = !in_quotes;
        } else if ((c == '#' || c == ';') && !in_quotes) {
            return line.substr(0, i);
        }
    }
    return line;
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
        return s.substr(1, s.size() - 2);
    }
    return s;
}

// JSON value for a double; infinities become strings since JSON lacks them.
json json_num(double v) {
    if (std::isfinite(v)) return json(v);
    return json(v > 0.0 ? "inf" : "-inf");
}

} // namespace

ConfigReader ConfigReader::from_string(const std::string& text,
                                       const std::string& origin) {
    ConfigReader r;
    r.origin_ = origin;

    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;

        const std::string where = origin + ":" + std::to_string(line_no);
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError(where + ": unterminated section header '" + line + "'");
            }
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) {
                throw ConfigError(where + ": empty section name");
            }
            r.sections_[section]; // a section may legitimately stay empty
            continue;
        }

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(where + ": expected 'key = value', got '" + line + "'");
        }
        if (section.empty()) {
            throw ConfigError(where + ": key before any [section] header");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = unquote(trim(line.substr(eq + 1)));
        if (key.empty()) {
            throw ConfigError(where + ": empty key name");
        }
        auto& sec = r.sections_[section];
        if (sec.count(key)) {
            throw ConfigError(where + ": duplicate key '" + section + "." + key + "'");
        }
        sec[key] = value;
    }
    return r;
}

ConfigReader ConfigReader::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_string(buf.str(), path);
}

const std::string* ConfigReader::find(const std::string& section,
                                      const std::string& key) const {
    const auto sit = sections_.find(section);
    if (sit == sections_.end()) return nullptr;
    const auto kit = sit->second.find(key);
    if (kit == sit->second.end()) return nullptr;
    return &kit->second;
}

std::string ConfigReader::describe(const std::string& section,
                                   const std::string& key) const {
    return origin_ + ": " + section + "." + key;
}

bool ConfigReader::has(const std::string& section, const std::string& key) const {
    return find(section, key) != nullptr;
}

std::string ConfigReader::get_string(const std::string& section,
                                     const std::string& key,
                                     const std::string& fallback) {
    const std::string* v = find(section, key);
    if (!v) return fallback;
    consumed_.insert(section + "." + key);
    return *v;
}

double ConfigReader::get_double(const std::string& section, const std::string& key,
                                double fallback) {
    const std::string* v = find(section, key);
    if (!v) return fallback;
    consumed_.insert(section + "." + key);
    errno = 0;
    char* end = nullptr;
    const double parsed = std::strtod(v->c_str(), &end);
    if (end == v->c_str() || *end != '\0' || errno == ERANGE) {
        throw ConfigError(describe(section, key) + ": expected a number, got '" + *v + "'");
    }
    return parsed;
}

int ConfigReader::get_int(const std::string& section, const std::string& key,
                          int fallback) {
    const std::string* v = find(section, key);
    if (!v) return fallback;
    consumed_.insert(section + "." + key);
    errno = 0;
    char* end = nullptr;
    const long long parsed = std::strtoll(v->c_str(), &end, 10);
    if (end == v->c_str() || *end != '\0' || errno == ERANGE ||
        parsed < std::numeric_limits<int>::min() ||
        parsed > std::numeric_limits<int>::max()) {
        throw ConfigError(describe(section, key) + ": expected an integer, got '" + *v +
                          "'");
    }
    return static_cast<int>(parsed);
}

bool ConfigReader::get_bool(const std::string& section, const std::string& key,
                            bool fallback) {
    const std::string* v = find(section, key);
    if (!v) return fallback;
    consumed_.insert(section + "." + key);
    if (*v == "true") return true;
    if (*v == "false") return false;
    throw ConfigError(describe(section, key) + ": expected true or false, got '" + *v +
                      "'");
}

std::vector<std::string> ConfigReader::unconsumed_keys() const {
    std::vector<std::string> out;
    for (const auto& [section, keys] : sections_) {
        for (const auto& [key, value] : keys) {
            if (!consumed_.count(section + "." + key)) {
                out.push_back(section + "." + key);
            }
        }
    }
    return out;
}

void ConfigReader::require_all_consumed() const {
    const auto leftover = unconsumed_keys();
    if (leftover.empty()) return;
    std::string msg = origin_ + ": unknown config key(s):";
    for (const auto& k : leftover) msg += " " + k;
    throw ConfigError(msg);
}

EvalConfig EvalConfig::defaults(EnvId id) {
    EvalConfig cfg;
    if (id == EnvId::CartPole) {
        cfg.success_threshold = 195.0;
        cfg.reward_map_x = "cart_mass";
        cfg.reward_map_y = "pole_mass";
    } else {
        // Reporting bar only: a swing-up that stabilizes early lands well
        // above this, a failed one well below.
        cfg.success_threshold = -200.0;
        cfg.reward_map_x = "mass";
        cfg.reward_map_y = "length";
    }
    return cfg;
}

void EvalConfig::validate() const {
    require(validate_episodes >= 1, "EvalConfig: validate_episodes must be >= 1");
    require(reward_map_grid >= 1, "EvalConfig: reward_map_grid must be >= 1");
    require(reward_map_episodes_per_cell >= 1,
            "EvalConfig: reward_map_episodes_per_cell must be >= 1");
    require(reward_map_sigmas > 0.0, "EvalConfig: reward_map_sigmas must be positive");
    require(temporal_episodes >= 1, "EvalConfig: temporal_episodes must be >= 1");
    require(!reward_map_x.empty() && !reward_map_y.empty(),
            "EvalConfig: reward map variables must be named");
    require(reward_map_x != reward_map_y,
            "EvalConfig: reward map variables must be distinct");
}

RunConfig RunConfig::defaults(EnvId id) {
    RunConfig cfg;
    cfg.env = EnvModel::defaults(id);
    cfg.dataset_n = id == EnvId::CartPole ? 5000 : 10000;
    cfg.reliability = ReliabilityConfig::defaults(id);
    cfg.policy = PolicyConfig::defaults(cfg.env);
    cfg.ppo = PPOConfig::defaults(id);
    cfg.eval = EvalConfig::defaults(id);
    return cfg;
}

void RunConfig::validate() const {
    require(env.episode.horizon >= 1, "RunConfig: episode horizon must be >= 1");
    require(env.episode.dt > 0.0, "RunConfig: episode dt must be positive");
    require(env.episode.init_range.size() == static_cast<std::size_t>(env.state_dim()),
            "RunConfig: init range count must match state dimension");
    for (const auto& [lo, hi] : env.episode.init_range) {
        require(lo <= hi, "RunConfig: init range low must be <= high");
    }
    require(env.lhs_state_box.size() == static_cast<std::size_t>(env.state_dim()),
            "RunConfig: state box count must match state dimension");
    for (const auto& [lo, hi] : env.lhs_state_box) {
        require(lo < hi, "RunConfig: state box low must be < high");
    }
    if (env.id == EnvId::CartPole) {
        require(env.episode.x_limit > 0.0 && env.episode.theta_limit > 0.0,
                "RunConfig: CartPole failure bounds must be positive");
        require(env.episode.force_mag > 0.0, "RunConfig: force_mag must be positive");
    } else {
        require(env.episode.torque_limit > 0.0,
                "RunConfig: torque_limit must be positive");
        require(env.episode.max_speed > 0.0, "RunConfig: max_speed must be positive");
    }
    env.dynamism.validate();

    require(dataset_n >= 1, "RunConfig: dataset n must be >= 1");
    require(surrogate.epochs >= 1, "RunConfig: surrogate epochs must be >= 1");
    require(surrogate.batch_size >= 1, "RunConfig: surrogate batch_size must be >= 1");
    require(surrogate.holdout_fraction > 0.0 && surrogate.holdout_fraction < 1.0,
            "RunConfig: surrogate holdout_fraction must be in (0, 1)");
    require(surrogate.adam.lr > 0.0, "RunConfig: surrogate learning rate must be positive");
    require(surrogate.fidelity_max_rmse_fraction > 0.0,
            "RunConfig: fidelity_max_rmse_fraction must be positive");

    reliability.validate();
    policy.validate();
    ppo.validate();
    eval.validate();
    require(env.dynamism.has(eval.reward_map_x),
            "RunConfig: eval.reward_map_x names no dynamism variable: " +
                eval.reward_map_x);
    require(env.dynamism.has(eval.reward_map_y),
            "RunConfig: eval.reward_map_y names no dynamism variable: " +
                eval.reward_map_y);
}

namespace {

ReliabilityConfig::Estimator parse_estimator(const std::string& s) {
    if (s == "empirical") return ReliabilityConfig::Estimator::Empirical;
    if (s == "kde") return ReliabilityConfig::Estimator::KdeSmoothed;
    throw ConfigError("reliability.estimator: expected empirical or kde, got '" + s +
                      "'");
}

std::string estimator_name(ReliabilityConfig::Estimator e) {
    return e == ReliabilityConfig::Estimator::Empirical ? "empirical" : "kde";
}

ReliabilityConfig::Bandwidth parse_bandwidth(const std::string& s) {
    if (s == "silverman") return ReliabilityConfig::Bandwidth::Silverman;
    if (s == "fixed") return ReliabilityConfig::Bandwidth::Fixed;
    throw ConfigError("reliability.bandwidth: expected silverman or fixed, got '" + s +
                      "'");
}

std::string bandwidth_name(ReliabilityConfig::Bandwidth b) {
    return b == ReliabilityConfig::Bandwidth::Silverman ? "silverman" : "fixed";
}

// Default truncation for a dynamism variable after its mean or std moved:
// physical and ambient quantities stay strictly positive, noise scales stay
// non-negative and unbounded above.
void reset_truncation(DynamismVar& v) {
    if (v.group == DynamismGroup::Physical || v.group == DynamismGroup::Ambient) {
        v.low = 0.01 * v.mean;
        v.high = v.mean + 3.0 * v.std;
    } else {
        v.low = 0.0;
        v.high = std::numeric_limits<double>::infinity();
    }
}

RunConfig bind_run_config(ConfigReader& r) {
    const std::string env_str = r.get_string("run", "environment", "");
    if (env_str.empty()) {
        throw ConfigError("config must set run.environment (cartpole or pendulum)");
    }
    RunConfig cfg = RunConfig::defaults(env_from_name(env_str));
    EnvModel& env = cfg.env;
    EpisodeConfig& ep = env.episode;

    // Episode scalars.
    ep.horizon = r.get_int("episode", "horizon", ep.horizon);
    ep.dt = r.get_double("episode", "dt", ep.dt);
    ep.early_termination = r.get_bool("episode", "early_termination", ep.early_termination);
    if (env.id == EnvId::CartPole) {
        ep.x_limit = r.get_double("episode", "x_limit", ep.x_limit);
        const double deg = r.get_double("episode", "theta_limit_deg",
                                        ep.theta_limit * 180.0 / kPi);
        ep.theta_limit = deg * kPi / 180.0;
        ep.force_mag = r.get_double("episode", "force_mag", ep.force_mag);
    } else {
        ep.torque_limit = r.get_double("episode", "torque_limit", ep.torque_limit);
        ep.max_speed = r.get_double("episode", "max_speed", ep.max_speed);
    }

    // Derived defaults follow the (possibly overridden) limits, then explicit
    // per-dimension keys take precedence.
    if (env.id == EnvId::CartPole) {
        env.lhs_state_box = {{-ep.x_limit, ep.x_limit},
                             {-3.0, 3.0},
                             {-ep.theta_limit, ep.theta_limit},
                             {-3.0, 3.0}};
    } else {
        ep.init_range = {{-kPi, kPi}, {-ep.max_speed, ep.max_speed}};
        env.lhs_state_box = {{-kPi, kPi}, {-ep.max_speed, ep.max_speed}};
    }
    for (int i = 0; i < env.state_dim(); ++i) {
        const std::string& name = env.state_names[static_cast<std::size_t>(i)];
        auto& [ilo, ihi] = ep.init_range[static_cast<std::size_t>(i)];
        ilo = r.get_double("episode", "init_" + name + "_low", ilo);
        ihi = r.get_double("episode", "init_" + name + "_high", ihi);
        auto& [blo, bhi] = env.lhs_state_box[static_cast<std::size_t>(i)];
        blo = r.get_double("dataset", "box_" + name + "_low", blo);
        bhi = r.get_double("dataset", "box_" + name + "_high", bhi);
    }

    // Dynamism variables: moving a mean or std re-derives the truncation
    // bounds, explicit bounds win over the rule.
    for (auto& v : env.dynamism.vars) {
        const bool moved = r.has("dynamism", v.name + "_mean") ||
                           r.has("dynamism", v.name + "_std");
        v.mean = r.get_double("dynamism", v.name + "_mean", v.mean);
        v.std = r.get_double("dynamism", v.name + "_std", v.std);
        if (moved) reset_truncation(v);
        v.low = r.get_double("dynamism", v.name + "_low", v.low);
        v.high = r.get_double("dynamism", v.name + "_high", v.high);
    }

    cfg.dataset_n = r.get_int("dataset", "n", cfg.dataset_n);

    SurrogateConfig& sur = cfg.surrogate;
    sur.epochs = r.get_int("surrogate", "epochs", sur.epochs);
    sur.batch_size = r.get_int("surrogate", "batch_size", sur.batch_size);
    sur.holdout_fraction =
        r.get_double("surrogate", "holdout_fraction", sur.holdout_fraction);
    sur.adam.lr = r.get_double("surrogate", "learning_rate", sur.adam.lr);
    sur.adam.weight_decay =
        r.get_double("surrogate", "weight_decay", sur.adam.weight_decay);
    sur.adam.beta1 = r.get_double("surrogate", "adam_beta1", sur.adam.beta1);
    sur.adam.beta2 = r.get_double("surrogate", "adam_beta2", sur.adam.beta2);
    sur.adam.eps = r.get_double("surrogate", "adam_epsilon", sur.adam.eps);
    sur.fidelity_max_rmse_fraction = r.get_double(
        "surrogate", "fidelity_max_rmse_fraction", sur.fidelity_max_rmse_fraction);

    ReliabilityConfig& rel = cfg.reliability;
    rel.n_realizations = r.get_int("reliability", "n_realizations", rel.n_realizations);
    rel.r_threshold = r.get_double("reliability", "r_threshold", rel.r_threshold);
    rel.estimator =
        parse_estimator(r.get_string("reliability", "estimator", estimator_name(rel.estimator)));
    rel.bandwidth =
        parse_bandwidth(r.get_string("reliability", "bandwidth", bandwidth_name(rel.bandwidth)));
    rel.fixed_bandwidth =
        r.get_double("reliability", "fixed_bandwidth", rel.fixed_bandwidth);

    PolicyConfig& pol = cfg.policy;
    pol.shared_weights = r.get_bool("policy", "shared_weights", pol.shared_weights);
    pol.log_std_init = r.get_double("policy", "log_std_init", pol.log_std_init);
    pol.log_std_min = r.get_double("policy", "log_std_min", pol.log_std_min);
    pol.log_std_max = r.get_double("policy", "log_std_max", pol.log_std_max);

    PPOConfig& ppo = cfg.ppo;
    ppo.iterations = r.get_int("ppo", "iterations", ppo.iterations);
    ppo.trajectories_per_iter =
        r.get_int("ppo", "trajectories_per_iter", ppo.trajectories_per_iter);
    ppo.epochs = r.get_int("ppo", "epochs", ppo.epochs);
    ppo.minibatch = r.get_int("ppo", "minibatch", ppo.minibatch);
    ppo.clip_epsilon = r.get_double("ppo", "clip_epsilon", ppo.clip_epsilon);
    ppo.actor_lr = r.get_double("ppo", "actor_lr", ppo.actor_lr);
    ppo.critic_lr = r.get_double("ppo", "critic_lr", ppo.critic_lr);
    ppo.actor_weight_decay =
        r.get_double("ppo", "actor_weight_decay", ppo.actor_weight_decay);
    ppo.critic_weight_decay =
        r.get_double("ppo", "critic_weight_decay", ppo.critic_weight_decay);
    ppo.normalize_advantages =
        r.get_bool("ppo", "normalize_advantages", ppo.normalize_advantages);
    ppo.log_ratio_clamp = r.get_double("ppo", "log_ratio_clamp", ppo.log_ratio_clamp);

    EvalConfig& ev = cfg.eval;
    ev.validate_episodes = r.get_int("eval", "validate_episodes", ev.validate_episodes);
    ev.success_threshold =
        r.get_double("eval", "success_threshold", ev.success_threshold);
    ev.stochastic = r.get_bool("eval", "stochastic", ev.stochastic);
    ev.reward_map_x = r.get_string("eval", "reward_map_x", ev.reward_map_x);
    ev.reward_map_y = r.get_string("eval", "reward_map_y", ev.reward_map_y);
    ev.reward_map_grid = r.get_int("eval", "reward_map_grid", ev.reward_map_grid);
    ev.reward_map_episodes_per_cell =
        r.get_int("eval", "reward_map_episodes_per_cell", ev.reward_map_episodes_per_cell);
    ev.reward_map_sigmas =
        r.get_double("eval", "reward_map_sigmas", ev.reward_map_sigmas);
    ev.temporal_episodes = r.get_int("eval", "temporal_episodes", ev.temporal_episodes);

    r.require_all_consumed();
    try {
        cfg.validate();
    } catch (const ContractViolation& e) {
        // Bad user-provided settings are configuration errors, not bugs.
        throw ConfigError(e.what());
    }
    return cfg;
}

} // namespace

RunConfig load_run_config(const std::string& path) {
    ConfigReader r = ConfigReader::from_file(path);
    return bind_run_config(r);
}

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
    ConfigReader r = ConfigReader::from_string(text, origin);
    return bind_run_config(r);
}

nlohmann::json run_config_snapshot(const RunConfig& cfg) {
    const EnvModel& env = cfg.env;
    const EpisodeConfig& ep = env.episode;
    json j;
    j["run"]["environment"] = env_name(env.id);

    json& jep = j["episode"];
    jep["horizon"] = ep.horizon;
    jep["dt"] = json_num(ep.dt);
    jep["early_termination"] = ep.early_termination;
    if (env.id == EnvId::CartPole) {
        jep["x_limit"] = json_num(ep.x_limit);
        jep["theta_limit_deg"] = json_num(ep.theta_limit * 180.0 / kPi);
        jep["force_mag"] = json_num(ep.force_mag);
    } else {
        jep["torque_limit"] = json_num(ep.torque_limit);
        jep["max_speed"] = json_num(ep.max_speed);
    }
    for (int i = 0; i < env.state_dim(); ++i) {
        const std::string& name = env.state_names[static_cast<std::size_t>(i)];
        jep["init_" + name + "_low"] = json_num(ep.init_range[static_cast<std::size_t>(i)].first);
        jep["init_" + name + "_high"] = json_num(ep.init_range[static_cast<std::size_t>(i)].second);
    }

    json& jdyn = j["dynamism"];
    for (const auto& v : env.dynamism.vars) {
        jdyn[v.name + "_mean"] = json_num(v.mean);
        jdyn[v.name + "_std"] = json_num(v.std);
        jdyn[v.name + "_low"] = json_num(v.low);
        jdyn[v.name + "_high"] = json_num(v.high);
    }

    json& jds = j["dataset"];
    jds["n"] = cfg.dataset_n;
    for (int i = 0; i < env.state_dim(); ++i) {
        const std::string& name = env.state_names[static_cast<std::size_t>(i)];
        jds["box_" + name + "_low"] = json_num(env.lhs_state_box[static_cast<std::size_t>(i)].first);
        jds["box_" + name + "_high"] = json_num(env.lhs_state_box[static_cast<std::size_t>(i)].second);
    }

    json& jsur = j["surrogate"];
    jsur["epochs"] = cfg.surrogate.epochs;
    jsur["batch_size"] = cfg.surrogate.batch_size;
    jsur["holdout_fraction"] = json_num(cfg.surrogate.holdout_fraction);
    jsur["learning_rate"] = json_num(cfg.surrogate.adam.lr);
    jsur["weight_decay"] = json_num(cfg.surrogate.adam.weight_decay);
    jsur["adam_beta1"] = json_num(cfg.surrogate.adam.beta1);
    jsur["adam_beta2"] = json_num(cfg.surrogate.adam.beta2);
    jsur["adam_epsilon"] = json_num(cfg.surrogate.adam.eps);
    jsur["fidelity_max_rmse_fraction"] = json_num(cfg.surrogate.fidelity_max_rmse_fraction);

    json& jrel = j["reliability"];
    jrel["n_realizations"] = cfg.reliability.n_realizations;
    jrel["r_threshold"] = json_num(cfg.reliability.r_threshold);
    jrel["estimator"] = estimator_name(cfg.reliability.estimator);
    jrel["bandwidth"] = bandwidth_name(cfg.reliability.bandwidth);
    jrel["fixed_bandwidth"] = json_num(cfg.reliability.fixed_bandwidth);

    json& jpol = j["policy"];
    jpol["shared_weights"] = cfg.policy.shared_weights;
    jpol["log_std_init"] = json_num(cfg.policy.log_std_init);
    jpol["log_std_min"] = json_num(cfg.policy.log_std_min);
    jpol["log_std_max"] = json_num(cfg.policy.log_std_max);

    json& jppo = j["ppo"];
    jppo["iterations"] = cfg.ppo.iterations;
    jppo["trajectories_per_iter"] = cfg.ppo.trajectories_per_iter;
    jppo["epochs"] = cfg.ppo.epochs;
    jppo["minibatch"] = cfg.ppo.minibatch;
    jppo["clip_epsilon"] = json_num(cfg.ppo.clip_epsilon);
    jppo["actor_lr"] = json_num(cfg.ppo.actor_lr);
    jppo["critic_lr"] = json_num(cfg.ppo.critic_lr);
    jppo["actor_weight_decay"] = json_num(cfg.ppo.actor_weight_decay);
    jppo["critic_weight_decay"] = json_num(cfg.ppo.critic_weight_decay);
    jppo["normalize_advantages"] = cfg.ppo.normalize_advantages;
    jppo["log_ratio_clamp"] = json_num(cfg.ppo.log_ratio_clamp);

    json& jev = j["eval"];
    jev["validate_episodes"] = cfg.eval.validate_episodes;
    jev["success_threshold"] = json_num(cfg.eval.success_threshold);
    jev["stochastic"] = cfg.eval.stochastic;
    jev["reward_map_x"] = cfg.eval.reward_map_x;
    jev["reward_map_y"] = cfg.eval.reward_map_y;
    jev["reward_map_grid"] = cfg.eval.reward_map_grid;
    jev["reward_map_episodes_per_cell"] = cfg.eval.reward_map_episodes_per_cell;
    jev["reward_map_sigmas"] = json_num(cfg.eval.reward_map_sigmas);
    jev["temporal_episodes"] = cfg.eval.temporal_episodes;

    return j;
}

} // namespace prorl
