#ifndef PRORL_EVAL_HPP
#define PRORL_EVAL_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "prorl/env.hpp"

// Evaluation against the true stochastic environments: batches of validation
// episodes, reward maps over pairs of dynamism variables, and the temporal
// shape of the per-step reward.

namespace prorl {

struct ValidationReport {
    int episodes = 0;
    std::vector<double> rewards; // one total per episode
    std::vector<double> lengths; // steps survived (CartPole stops at failure)
    double mean_reward = 0.0;
    double std_reward = 0.0; // population standard deviation
    double min_reward = 0.0;
    double max_reward = 0.0;
    double mean_length = 0.0;
    // Fraction of episodes with total reward >= the success threshold.
    double success_rate = 0.0;
    double success_threshold = 0.0;
};

// Runs `episodes` independent episodes (fresh dynamism draw, fresh initial
// state, fresh noise; child stream derive(seed, ep) per episode) and
// aggregates totals.
ValidationReport validate_policy(const EnvModel& env, const PolicyFn& policy,
                                 int episodes, double success_threshold,
                                 std::uint64_t seed);

struct RewardMapResult {
    std::string var_x;
    std::string var_y;
    Eigen::VectorXd x_values; // grid centers, ascending
    Eigen::VectorXd y_values;
    Eigen::MatrixXd mean_reward; // (ix, iy) cell means
    int episodes_per_cell = 0;
};

// Mean episode reward over a grid x grid sweep of two dynamism variables,
// every other variable pinned at its mean. Each axis spans mean +- sigmas
// standard deviations, floored at the variable's truncation bound. Cell
// episode seeds are derived from the name-sorted variable pair, so swapping
// the axes transposes the map exactly.
RewardMapResult reward_map(const EnvModel& env, const PolicyFn& policy,
                           const std::string& var_x, const std::string& var_y,
                           int grid, int episodes_per_cell, double sigmas,
                           std::uint64_t seed);

struct TemporalResult {
    int episodes = 0;
    Eigen::VectorXd mean_step_reward; // per step, averaged over episodes
    std::vector<double> steps_to_best; // per episode: first step attaining its max
    double mean_steps_to_best = 0.0;
    double median_steps_to_best = 0.0;
};

// Per-step reward curves over `episodes` runs. Episodes that stop early
// (CartPole failures) contribute their latched zeros for the remaining
// steps. steps_to_best is the first step whose reward equals the episode's
// maximum per-step reward.
TemporalResult temporal_performance(const EnvModel& env, const PolicyFn& policy,
                                    int episodes, std::uint64_t seed);

double median(std::vector<double> values);

} // namespace prorl

#endif
