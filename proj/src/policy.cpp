#include "prorl/policy.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "prorl/math_util.hpp"

namespace prorl {

namespace {

using nlohmann::json;

constexpr const char* kFormatTag = "prorl-policy-v1";

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    const auto rows = j.size();
    if (rows == 0) return Eigen::MatrixXd(0, 0);
    const auto cols = j.at(0).size();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        if (j.at(r).size() != cols) throw ConfigError("policy: ragged weight matrix");
        for (std::size_t c = 0; c < cols; ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                j.at(r).at(c).get<double>();
        }
    }
    return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        v[static_cast<Eigen::Index>(i)] = j.at(i).get<double>();
    }
    return v;
}

} // namespace

PolicyConfig PolicyConfig::defaults(const EnvModel& env) {
    PolicyConfig cfg;
    cfg.head = env.id == EnvId::CartPole ? HeadKind::Categorical : HeadKind::Gaussian;
    cfg.obs_dim = env.obs_dim();
    return cfg;
}

void PolicyConfig::validate() const {
    require(obs_dim >= 1, "PolicyConfig: obs_dim must be >= 1");
    require(log_std_min < log_std_max, "PolicyConfig: log_std bounds inverted");
}

Eigen::VectorXd PolicyNet::raw_outputs(const Eigen::VectorXd& obs) const {
    return forward(spec, params, obs);
}

double PolicyNet::act(const Eigen::VectorXd& obs, Rng& rng) const {
    return sample(obs, rng).action;
}

ActionSample PolicyNet::sample(const Eigen::VectorXd& obs, Rng& rng) const {
    const Eigen::VectorXd out = raw_outputs(obs);
    ActionSample s;
    if (head == HeadKind::Categorical) {
        const double m = std::max(out[0], out[1]);
        const double e0 = std::exp(out[0] - m);
        const double e1 = std::exp(out[1] - m);
        const int idx = rng.uniform() * (e0 + e1) < e0 ? 0 : 1;
        s.action = index_to_action(idx);
        s.log_prob = out[idx] - (m + std::log(e0 + e1));
    } else {
        s.action = out[0] + std::exp(log_std[0]) * rng.normal();
        s.log_prob = gaussian_log_prob(out[0], log_std[0], s.action);
    }
    return s;
}

double PolicyNet::deterministic_action(const Eigen::VectorXd& obs) const {
    const Eigen::VectorXd out = raw_outputs(obs);
    if (head == HeadKind::Categorical) {
        return index_to_action(out[1] > out[0] ? 1 : 0);
    }
    return out[0];
}

double PolicyNet::log_prob(const Eigen::VectorXd& obs, double action) const {
    const Eigen::VectorXd out = raw_outputs(obs);
    if (head == HeadKind::Categorical) {
        return categorical_log_prob(out.head(2), action_to_index(action));
    }
    return gaussian_log_prob(out[0], log_std[0], action);
}

void PolicyNet::clamp_log_std() {
    for (Eigen::Index i = 0; i < log_std.size(); ++i) {
        log_std[i] = clamp(log_std[i], log_std_min, log_std_max);
    }
}

PolicyNet make_policy(const EnvModel& env, const PolicyConfig& cfg, Rng& rng) {
    cfg.validate();
    PolicyNet p;
    p.env = env.id;
    p.head = cfg.head;
    p.shared_value = cfg.shared_weights;
    const int out_dim = p.head_dim() + (cfg.shared_weights ? 1 : 0);
    p.spec = MlpSpec::dense(cfg.obs_dim, out_dim, OutputActivation::PerHead);
    p.params = init_params(p.spec, rng);
    p.log_std_min = cfg.log_std_min;
    p.log_std_max = cfg.log_std_max;
    if (cfg.head == HeadKind::Gaussian) {
        p.log_std = Eigen::VectorXd::Constant(1, cfg.log_std_init);
        p.clamp_log_std();
    }
    return p;
}

double categorical_log_prob(const Eigen::VectorXd& logits, int index) {
    require(index >= 0 && index < logits.size(), "categorical_log_prob: bad index");
    const double m = logits.maxCoeff();
    const double lse = m + std::log((logits.array() - m).exp().sum());
    return logits[index] - lse;
}

double gaussian_log_prob(double mean, double log_std, double action) {
    const double inv_std = std::exp(-log_std);
    const double z = (action - mean) * inv_std;
    return -0.5 * z * z - log_std - 0.5 * std::log(2.0 * kPi);
}

int action_to_index(double action) {
    require(action == -1.0 || action == 1.0, "action_to_index: expected -1 or +1");
    return action < 0.0 ? 0 : 1;
}

double index_to_action(int index) {
    require(index == 0 || index == 1, "index_to_action: expected 0 or 1");
    return index == 0 ? -1.0 : 1.0;
}

void save_policy(const PolicyNet& p, const std::string& path) {
    json j;
    j["format"] = kFormatTag;
    j["environment"] = env_name(p.env);
    j["head"] = p.head == HeadKind::Categorical ? "categorical" : "gaussian";
    j["shared_value"] = p.shared_value;
    j["layer_sizes"] = p.spec.layer_sizes;
    json weights = json::array();
    json biases = json::array();
    for (std::size_t l = 0; l < p.params.weights.size(); ++l) {
        weights.push_back(matrix_to_json(p.params.weights[l]));
        biases.push_back(vector_to_json(p.params.biases[l]));
    }
    j["weights"] = std::move(weights);
    j["biases"] = std::move(biases);
    j["log_std"] = vector_to_json(p.log_std);
    j["log_std_min"] = p.log_std_min;
    j["log_std_max"] = p.log_std_max;

    std::ofstream f(path);
    if (!f) throw ConfigError("policy: cannot open for writing: " + path);
    f << j.dump(2) << '\n';
    if (!f) throw ConfigError("policy: write failed: " + path);
}

PolicyNet load_policy(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("policy: cannot open: " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw ConfigError("policy: bad JSON in " + path + ": " + e.what());
    }

    PolicyNet p;
    try {
        if (j.at("format").get<std::string>() != kFormatTag) {
            throw ConfigError("policy: unknown format tag in " + path);
        }
        p.env = env_from_name(j.at("environment").get<std::string>());
        p.head = j.at("head").get<std::string>() == "categorical" ? HeadKind::Categorical
                                                                  : HeadKind::Gaussian;
        p.shared_value = j.at("shared_value").get<bool>();
        p.spec.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
        p.spec.output_activation = OutputActivation::PerHead;
        p.spec.validate();
        for (const auto& w : j.at("weights")) p.params.weights.push_back(matrix_from_json(w));
        for (const auto& b : j.at("biases")) p.params.biases.push_back(vector_from_json(b));
        p.log_std = vector_from_json(j.at("log_std"));
        p.log_std_min = j.at("log_std_min").get<double>();
        p.log_std_max = j.at("log_std_max").get<double>();
    } catch (const json::exception& e) {
        throw ConfigError("policy: missing fields in " + path + ": " + e.what());
    }

    const int expected_out = p.head_dim() + (p.shared_value ? 1 : 0);
    require(p.spec.output_size() == expected_out, "policy: head size mismatch in " + path);
    require(static_cast<int>(p.params.weights.size()) == p.spec.num_layers(),
            "policy: layer count mismatch in " + path);
    if (p.head == HeadKind::Gaussian) {
        require(p.log_std.size() == 1, "policy: log_std size mismatch in " + path);
    }
    return p;
}

} // namespace prorl
