#ifndef PRORL_RELIABILITY_HPP
#define PRORL_RELIABILITY_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "prorl/env.hpp"
#include "prorl/kde.hpp"
#include "prorl/policy.hpp"
#include "prorl/surrogate.hpp"

// Per-step reliability on top of the learned transition model. From the
// current nominal state, one commanded action is evaluated against many
// dynamism realizations; the step's reliability is the probability that the
// one-step reward clears the task threshold, and the nominal trajectory
// advances on the most probable predicted next state (highest kernel
// density among the realizations).

namespace prorl {

struct ReliabilityConfig {
    int n_realizations = 1000;
    double r_threshold = 0.5;

    enum class Estimator {
        Empirical,   // fraction of realization rewards >= threshold
        KdeSmoothed, // tail mass of a 1-D kernel estimate over the rewards
    };
    Estimator estimator = Estimator::Empirical;

    enum class Bandwidth { Silverman, Fixed };
    Bandwidth bandwidth = Bandwidth::Silverman;
    double fixed_bandwidth = 0.1; // used when bandwidth == Fixed

    // CartPole clears the threshold only on a surviving transition (0.5);
    // Pendulum's threshold sits just under the zero-cost ceiling (-0.01).
    static ReliabilityConfig defaults(EnvId id);

    void validate() const;
};

// Reliability of one step given its realization rewards.
double step_reliability(const Eigen::VectorXd& rewards,
                        const ReliabilityConfig& cfg);

struct StepOutcome {
    Eigen::VectorXd rewards; // one per realization, un-latched
    double reward_mean = 0.0;
    double reward_std = 0.0; // population standard deviation
    double reliability = 0.0;
    int mode_index = 0; // realization with the highest kernel density
    State mode_state;   // its predicted next state
};

// Evaluates one (state, action) pair: draws n_realizations dynamism vectors
// from phi_rng, predicts the next states, scores rewards, picks the mode.
StepOutcome reliability_step(const EnvModel& env, const SurrogateModel& sur,
                             const State& s, double action,
                             const ReliabilityConfig& cfg, Rng& phi_rng);

// Policy callable that also reports the log-probability of its draw.
using StochasticPolicy =
    std::function<ActionSample(const Eigen::VectorXd& obs, Rng& rng)>;

struct ReliabilityTrajectory {
    std::vector<State> states;                 // nominal states, decisions + 1
    std::vector<Eigen::VectorXd> observations; // clean nominal encodings
    std::vector<double> actions;
    std::vector<double> log_probs;
    std::vector<double> reliabilities; // per decision
    double total = 0.0;                // sum of reliabilities
    bool latched = false; // CartPole: nominal trajectory left the bounds

    int decisions() const { return static_cast<int>(reliabilities.size()); }
};

// Virtual episode of horizon + 1 decisions (t = 0 .. horizon). The policy
// acts on the clean nominal observation under the mean dynamism. For
// CartPole the episode stops once the nominal state leaves the failure
// bounds: every later step would score reliability 0 under the episode
// latch, so the total is unaffected.
// Child streams of `seed`: 0 initial state, 1 policy, 2 realizations.
ReliabilityTrajectory reliability_rollout(const EnvModel& env,
                                          const SurrogateModel& sur,
                                          const StochasticPolicy& policy,
                                          const ReliabilityConfig& cfg,
                                          std::uint64_t seed);

// Debug dump: per-step rows (t, state components, action, logprob, rel).
void write_trajectory_csv(const ReliabilityTrajectory& traj,
                          const EnvModel& env, const std::string& path);

} // namespace prorl

#endif
