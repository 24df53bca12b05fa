#include "prorl/reliability.hpp"

#include <cmath>
#include <fstream>

#include "prorl/math_util.hpp"

namespace prorl {

ReliabilityConfig ReliabilityConfig::defaults(EnvId id) {
    ReliabilityConfig cfg;
    cfg.r_threshold = id == EnvId::CartPole ? 0.5 : -0.01;
    return cfg;
}

void ReliabilityConfig::validate() const {
    require(n_realizations >= 2, "ReliabilityConfig: n_realizations must be >= 2");
    require(std::isfinite(r_threshold), "ReliabilityConfig: non-finite threshold");
    if (bandwidth == Bandwidth::Fixed) {
        require(fixed_bandwidth > 0.0, "ReliabilityConfig: fixed bandwidth must be positive");
    }
}

double step_reliability(const Eigen::VectorXd& rewards,
                        const ReliabilityConfig& cfg) {
    require(rewards.size() > 0, "step_reliability: empty rewards");
    if (cfg.estimator == ReliabilityConfig::Estimator::Empirical) {
        return (rewards.array() >= cfg.r_threshold).cast<double>().mean();
    }
    const double h = cfg.bandwidth == ReliabilityConfig::Bandwidth::Fixed
                         ? cfg.fixed_bandwidth
                         : silverman_bandwidth(rewards);
    return kde_tail_prob(rewards, h, cfg.r_threshold);
}

StepOutcome reliability_step(const EnvModel& env, const SurrogateModel& sur,
                             const State& s, double action,
                             const ReliabilityConfig& cfg, Rng& phi_rng) {
    cfg.validate();
    const int k = cfg.n_realizations;
    const int dp = env.dynamism.size();

    Eigen::MatrixXd phis(k, dp);
    for (int j = 0; j < k; ++j) {
        phis.row(j) = sample_dynamism(env.dynamism, phi_rng).transpose();
    }

    const Eigen::MatrixXd next = predict_batch(sur, env, s, action, phis);

    StepOutcome out;
    out.rewards.resize(k);
    for (int j = 0; j < k; ++j) {
        out.rewards[j] = transition_reward(env, next.row(j).transpose(), action);
    }
    out.reward_mean = out.rewards.mean();
    out.reward_std =
        std::sqrt((out.rewards.array() - out.reward_mean).square().mean());
    out.reliability = step_reliability(out.rewards, cfg);
    if (cfg.bandwidth == ReliabilityConfig::Bandwidth::Fixed) {
        out.mode_index = kde_mode_index(
            next, Eigen::VectorXd::Constant(next.cols(), cfg.fixed_bandwidth));
    } else {
        out.mode_index = most_probable_state(next);
    }
    out.mode_state = next.row(out.mode_index).transpose();
    return out;
}

ReliabilityTrajectory reliability_rollout(const EnvModel& env,
                                          const SurrogateModel& sur,
                                          const StochasticPolicy& policy,
                                          const ReliabilityConfig& cfg,
                                          std::uint64_t seed) {
    cfg.validate();
    Rng init_rng = Rng::derive(seed, 0);
    Rng action_rng = Rng::derive(seed, 1);
    Rng phi_rng = Rng::derive(seed, 2);

    const DynamismSample phi_mean = env.dynamism.mean_sample();
    const int decisions = env.episode.horizon + 1;

    ReliabilityTrajectory traj;
    State s = sample_initial_state(env, init_rng);
    traj.states.push_back(s);

    for (int t = 0; t < decisions; ++t) {
        const Eigen::VectorXd obs = encode_observation(env, s, phi_mean);
        const ActionSample a = policy(obs, action_rng);
        const StepOutcome step = reliability_step(env, sur, s, a.action, cfg, phi_rng);

        traj.observations.push_back(obs);
        traj.actions.push_back(a.action);
        traj.log_probs.push_back(a.log_prob);
        traj.reliabilities.push_back(step.reliability);
        traj.total += step.reliability;

        s = step.mode_state;
        traj.states.push_back(s);
        if (env.id == EnvId::CartPole && !cartpole_in_bounds(env, s)) {
            traj.latched = true;
            break;
        }
    }
    return traj;
}

void write_trajectory_csv(const ReliabilityTrajectory& traj,
                          const EnvModel& env, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ConfigError("trajectory: cannot open for writing: " + path);
    f << "t";
    for (const auto& name : env.state_names) f << ',' << name;
    f << ",action,logprob,rel\n";
    for (int t = 0; t < traj.decisions(); ++t) {
        f << t;
        for (Eigen::Index c = 0; c < traj.states[static_cast<std::size_t>(t)].size(); ++c) {
            f << ',' << format_full(traj.states[static_cast<std::size_t>(t)][c]);
        }
        f << ',' << format_full(traj.actions[static_cast<std::size_t>(t)]) << ','
          << format_full(traj.log_probs[static_cast<std::size_t>(t)]) << ','
          << format_full(traj.reliabilities[static_cast<std::size_t>(t)]) << '\n';
    }
    if (!f) throw ConfigError("trajectory: write failed: " + path);
}

} // namespace prorl
