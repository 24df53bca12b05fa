#ifndef PRORL_POLICY_HPP
#define PRORL_POLICY_HPP

#include <Eigen/Dense>
#include <string>

#include "prorl/env.hpp"
#include "prorl/mlp.hpp"

// Actor network. CartPole uses a categorical head (two logits over the
// directions -1 / +1); Pendulum uses a Gaussian head (state-dependent mean,
// one state-independent learned log-std). Gaussian actions are stored and
// scored raw; the environment clamps the torque when the action is applied.

namespace prorl {

enum class HeadKind { Categorical, Gaussian };

struct ActionSample {
    double action = 0.0;
    double log_prob = 0.0;
};

struct PolicyConfig {
    HeadKind head = HeadKind::Categorical;
    int obs_dim = 0;
    double log_std_init = 0.0;
    double log_std_min = -5.0;
    double log_std_max = 2.0;
    // Single trunk emitting the head outputs plus a state value, instead of
    // a separate critic network.
    bool shared_weights = false;

    static PolicyConfig defaults(const EnvModel& env);
    void validate() const;
};

struct PolicyNet {
    EnvId env = EnvId::CartPole;
    HeadKind head = HeadKind::Categorical;
    MlpSpec spec; // obs -> head outputs (+1 trailing value if shared)
    MlpParams params;
    bool shared_value = false;
    Eigen::VectorXd log_std; // size 1 for Gaussian, size 0 otherwise
    double log_std_min = -5.0;
    double log_std_max = 2.0;

    int head_dim() const { return head == HeadKind::Categorical ? 2 : 1; }
    int obs_dim() const { return spec.input_size(); }

    // Raw network outputs for one observation (head part plus value when
    // shared).
    Eigen::VectorXd raw_outputs(const Eigen::VectorXd& obs) const;

    // Stochastic draw; returns the commanded action (+-1 or raw torque).
    double act(const Eigen::VectorXd& obs, Rng& rng) const;

    // Stochastic draw together with the exact log-probability of the drawn
    // action (Gaussian: density of the raw, un-clamped draw).
    ActionSample sample(const Eigen::VectorXd& obs, Rng& rng) const;

    // Mode action: argmax logit (ties toward -1) or the Gaussian mean.
    double deterministic_action(const Eigen::VectorXd& obs) const;

    double log_prob(const Eigen::VectorXd& obs, double action) const;

    void clamp_log_std();
};

PolicyNet make_policy(const EnvModel& env, const PolicyConfig& cfg, Rng& rng);

// Log-probabilities under the head given raw head outputs; shared by the
// single-sample path and the PPO batch path.
double categorical_log_prob(const Eigen::VectorXd& logits, int index);
double gaussian_log_prob(double mean, double log_std, double action);

// Maps between commanded CartPole actions and categorical indices.
int action_to_index(double action);
double index_to_action(int index);

void save_policy(const PolicyNet& p, const std::string& path);
PolicyNet load_policy(const std::string& path);

} // namespace prorl

#endif
