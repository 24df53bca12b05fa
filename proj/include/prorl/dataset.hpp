#ifndef PRORL_DATASET_HPP
#define PRORL_DATASET_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "prorl/env.hpp"
#include "prorl/lhs.hpp"

// One-step transition datasets: (s0, a, phi) triples drawn by Latin
// hypercube sampling over the state box, the action range and the dynamism
// distribution, each advanced once through the true dynamics. Rows hold true
// internal states (not observations) and un-latched per-transition rewards.

namespace prorl {

struct Dataset {
    EnvId env = EnvId::CartPole;
    std::uint64_t seed = 0;
    int state_dim = 0;
    int dyn_dim = 0;
    int rejected_rows = 0;            // divergent simulations that were redrawn
    std::vector<std::string> columns; // s0_*, action, phi names, s1_*, reward
    Eigen::MatrixXd rows;             // n x columns.size()

    int n() const { return static_cast<int>(rows.rows()); }

    // Column layout: [s0 | action | phi | s1 | reward].
    int col_s0() const { return 0; }
    int col_action() const { return state_dim; }
    int col_phi() const { return state_dim + 1; }
    int col_s1() const { return state_dim + 1 + dyn_dim; }
    int col_reward() const { return 2 * state_dim + 1 + dyn_dim; }

    Eigen::VectorXd s0(int i) const {
        return rows.row(i).segment(col_s0(), state_dim).transpose();
    }
    double action(int i) const { return rows(i, col_action()); }
    DynamismSample phi(int i) const {
        return rows.row(i).segment(col_phi(), dyn_dim).transpose();
    }
    Eigen::VectorXd s1(int i) const {
        return rows.row(i).segment(col_s1(), state_dim).transpose();
    }
    double reward(int i) const { return rows(i, col_reward()); }

    void validate() const;
};

// LHS design over [state box] x [action] x [dynamism distribution].
// CartPole's action dimension is discrete {-1, +1}; Pendulum's is uniform
// over the torque range.
LhsPlan dataset_plan(const EnvModel& env, int n);

// Draws the design with stream derive(seed, 1) and steps row i with stream
// derive(seed, 2, i), so any single row can be replayed in isolation. A row
// whose simulation goes non-finite is rejected, counted, and redrawn from the
// plan's marginals with stream derive(seed, 3, i) until it succeeds.
Dataset collect_dataset(const EnvModel& env, int n, std::uint64_t seed);

// CSV with a header row plus a JSON sidecar (same basename, .meta extension)
// carrying environment, row count, seed, rejected-row count and columns.
void write_dataset(const Dataset& ds, const std::string& csv_path);

// Reads a dataset back; fails with ConfigError on schema or parse problems
// and checks the sidecar against the expected environment.
Dataset read_dataset(const std::string& csv_path);

std::vector<std::string> dataset_columns(const EnvModel& env);

} // namespace prorl

#endif
