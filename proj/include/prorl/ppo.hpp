#ifndef PRORL_PPO_HPP
#define PRORL_PPO_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "prorl/policy.hpp"
#include "prorl/reliability.hpp"

// Clipped-surrogate policy optimization over virtual reliability episodes.
// Returns are plain undiscounted suffix sums of the per-step reliabilities,
// advantages are returns minus the critic's collection-time values,
// normalized over each iteration's batch.

namespace prorl {

struct PPOConfig {
    int iterations = 150;
    int trajectories_per_iter = 20;
    int epochs = 4;
    int minibatch = 64;
    double clip_epsilon = 0.2;
    double actor_lr = 3e-4;
    double critic_lr = 1e-3;
    double actor_weight_decay = 0.0;
    double critic_weight_decay = 0.0;
    // Bound on log-probability differences before exponentiation, so stale
    // minibatches cannot overflow the ratio.
    double log_ratio_clamp = 30.0;
    // Batch advantage standardization (mean 0, std 1); a stabilizer, not part
    // of the objective.
    bool normalize_advantages = true;

    static PPOConfig defaults(EnvId id); // 150 iterations / 300 for Pendulum
    void validate() const;
};

// Separate state-value network (unused when the actor shares its trunk).
struct ValueNet {
    MlpSpec spec;
    MlpParams params;

    double value(const Eigen::VectorXd& obs) const;
};

ValueNet make_value_net(int obs_dim, Rng& rng);

// Same JSON model format as the policy, minus the head metadata.
void save_value_net(const ValueNet& v, const std::string& path);
ValueNet load_value_net(const std::string& path);

// One iteration's pooled experience.
struct TrajectoryBatch {
    Eigen::MatrixXd obs;
    Eigen::VectorXd actions;
    Eigen::VectorXd rewards;
    Eigen::VectorXd returns;
    Eigen::VectorXd values;
    Eigen::VectorXd advantages;
    Eigen::VectorXd old_logp;
    std::vector<int> traj_starts; // one past the last trajectory too
    std::vector<double> traj_totals;

    int size() const { return static_cast<int>(obs.rows()); }
};

// Undiscounted suffix sums per trajectory.
Eigen::VectorXd suffix_returns(const Eigen::VectorXd& rewards,
                               const std::vector<int>& traj_starts);

// In-place (a - mean) / std with the population std; a zero spread leaves
// the centered values as-is.
void normalize_advantages(Eigen::VectorXd& adv);

double ppo_ratio(double logp, double old_logp, double log_ratio_clamp);

// min(ratio * adv, clip(ratio, 1 -+ eps) * adv).
double clipped_objective_term(double ratio, double adv, double eps);

struct IterationStats {
    int iteration = 0;
    double mean_total = 0.0;  // mean summed reliability per trajectory
    double mean_rel = 0.0;    // mean per-step reliability, pooled
    double mean_length = 0.0; // mean decisions per trajectory
    double actor_loss = 0.0;
    double critic_loss = 0.0;
    double log_std = 0.0; // Gaussian head only, 0 otherwise
    double seconds = 0.0;
};

struct TrainPolicyResult {
    PolicyNet actor;
    ValueNet critic;
    std::vector<IterationStats> history;
};

using IterationCallback = std::function<void(const IterationStats&)>;

// Full training run. Child streams of `seed`: actor init, critic init, one
// rollout seed per (iteration, trajectory), one shuffle per (iteration,
// epoch). The callback, when set, fires after every iteration.
TrainPolicyResult train_policy(const EnvModel& env, const SurrogateModel& sur,
                               const ReliabilityConfig& rel_cfg,
                               const PolicyConfig& policy_cfg,
                               const PPOConfig& ppo_cfg, std::uint64_t seed,
                               const IterationCallback& on_iteration = {});

} // namespace prorl

#endif
