#ifndef PRORL_SURROGATE_HPP
#define PRORL_SURROGATE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "prorl/dataset.hpp"
#include "prorl/env.hpp"
#include "prorl/mlp.hpp"

// Learned one-step transition model ("virtual environment"): a small MLP
// mapping [state, action, dynamism vector] to the absolute next state,
// trained on a Latin-hypercube transition dataset with z-score normalization
// on both sides. The Pendulum angle is learned unwrapped relative to the
// input angle so the regression target is continuous, and wrapped again at
// prediction time.

namespace prorl {

// Per-feature z-score transform. Features whose training-split spread is
// (numerically) zero keep std 1 so constants pass through unchanged.
struct Normalization {
    Eigen::VectorXd mean;
    Eigen::VectorXd std;
    std::vector<bool> constant;

    static Normalization fit(const Eigen::MatrixXd& x);

    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
    Eigen::MatrixXd invert(const Eigen::MatrixXd& z) const;
};

struct SurrogateConfig {
    int epochs = 50;
    int batch_size = 32;
    double holdout_fraction = 0.1;
    AdamConfig adam; // lr 1e-3, weight decay 1e-4
    // Held-out per-dimension RMSE must stay below this fraction of the LHS
    // sampling span for the model to count as faithful.
    double fidelity_max_rmse_fraction = 0.05;
};

struct SurrogateModel {
    EnvId env = EnvId::CartPole;
    MlpSpec spec;
    MlpParams params;
    Normalization in_norm;
    Normalization out_norm;
    std::vector<std::string> input_names;  // s0 names, action, phi names
    std::vector<std::string> output_names; // s1 names

    int input_dim() const { return static_cast<int>(input_names.size()); }
    int output_dim() const { return static_cast<int>(output_names.size()); }
};

struct SurrogateTrainResult {
    SurrogateModel model;
    std::vector<double> train_loss;   // per epoch, Huber on normalized targets
    std::vector<double> holdout_loss; // per epoch
    Eigen::VectorXd holdout_rmse;     // per output dim, raw units
    Eigen::VectorXd span;             // LHS span per output dim
    bool fidelity_ok = false;
};

// Trains on a 90/10 split of the dataset (split, init and batch order all
// derived from `seed`). The Pendulum angle RMSE is measured as circular
// distance.
SurrogateTrainResult train_surrogate(const EnvModel& env, const Dataset& ds,
                                     const SurrogateConfig& cfg,
                                     std::uint64_t seed);

// Predicted next states for one (state, action) against k dynamism rows
// (k x dyn_dim); returns k x state_dim. This is the per-step hot path.
Eigen::MatrixXd predict_batch(const SurrogateModel& m, const EnvModel& env,
                              const State& s, double action,
                              const Eigen::MatrixXd& phis);

State predict_next(const SurrogateModel& m, const EnvModel& env, const State& s,
                   double action, const DynamismSample& phi);

// JSON serialization; loading reproduces predictions bit-identically.
void save_surrogate(const SurrogateModel& m, const std::string& path);
SurrogateModel load_surrogate(const std::string& path);

} // namespace prorl

#endif
