#ifndef PRORL_ENV_HPP
#define PRORL_ENV_HPP

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "prorl/dynamism.hpp"
#include "prorl/rng.hpp"

// Ground-truth stochastic environments. CartPole balancing (discrete +-1
// action driving a 10 N force) and the torque-limited inverted pendulum
// (continuous action). Every run-to-run difference is carried by a
// DynamismSample phi: physical parameters fixed per episode, observation and
// control noise fresh each step.

namespace prorl {

enum class EnvId { CartPole, Pendulum };

std::string env_name(EnvId id);
EnvId env_from_name(const std::string& name);

struct EpisodeConfig {
    int horizon = 200;
    double dt = 0.02;
    // p0: per internal-state-dimension uniform range.
    std::vector<std::pair<double, double>> init_range;
    // CartPole failure bounds and drive force.
    double x_limit = 2.4;
    double theta_limit = 12.0 * kPi / 180.0;
    double force_mag = 10.0;
    // Pendulum limits.
    double torque_limit = 2.0;
    double max_speed = 8.0;
    // Stop CartPole episodes at the first failure; rewards are latched to 0
    // afterwards either way, so episode totals are unaffected.
    bool early_termination = true;
};

// CartPole internal state: [x (m), x_dot (m/s), theta (rad), theta_dot (rad/s)],
// theta = 0 upright. Pendulum internal state: [theta (rad, wrapped to
// [-pi, pi], 0 upright), theta_dot (rad/s, clamped to [-max_speed, max_speed])].
// Pendulum observations are [l cos(theta), l sin(theta), theta_dot].
struct EnvModel {
    EnvId id = EnvId::CartPole;
    EpisodeConfig episode;
    DynamismSpec dynamism;

    // LHS sampling box per internal state dimension.
    std::vector<std::pair<double, double>> lhs_state_box;

    // Resolved dynamism indices.
    int i_mass = -1;        // cart mass / pendulum mass
    int i_pole_mass = -1;   // CartPole only
    int i_length = -1;
    int i_gravity = -1;
    std::vector<int> i_obs_noise; // one per observation component
    int i_control_noise = -1;

    std::vector<std::string> state_names;
    std::vector<std::string> obs_names;

    int state_dim() const { return static_cast<int>(state_names.size()); }
    int obs_dim() const { return static_cast<int>(obs_names.size()); }
    int action_dim() const { return 1; } // signed-real encoding for both tasks

    static EnvModel cartpole_defaults();
    static EnvModel pendulum_defaults();
    static EnvModel defaults(EnvId id);
};

using State = Eigen::VectorXd;

// One integration step of the cart-pole equations of motion (pole pivoting on
// a friction-free cart), semi-implicit Euler: velocities advance on the
// accelerations, then positions advance on the new velocities.
State cartpole_step(const State& s, double force, double cart_mass,
                    double pole_mass, double pole_length, double gravity,
                    double dt);

// One step of theta_ddot = (3g/(2l)) sin(theta) + (3/(m l^2)) u, then clamp
// theta_dot and wrap theta.
State pendulum_step(const State& s, double torque, double mass, double length,
                    double gravity, double dt, double max_speed);

// Initial state draw from p0.
State sample_initial_state(const EnvModel& env, Rng& rng);

// Actuation noise: CartPole maps the +-1 direction to +-force_mag plus
// Gaussian noise; Pendulum adds noise to the clamped torque and re-clamps.
double apply_control_noise(const EnvModel& env, double action,
                           const DynamismSample& phi, Rng& rng);

// Noisy observation of a state; per-component Gaussian with the scales
// carried in phi.
Eigen::VectorXd observe(const EnvModel& env, const State& s,
                        const DynamismSample& phi, Rng& rng);

// Noiseless observation encoding (identity for CartPole, the
// [l cos, l sin, theta_dot] triple for Pendulum with l taken from phi).
Eigen::VectorXd encode_observation(const EnvModel& env, const State& s,
                                   const DynamismSample& phi);

// Full environment transition: control noise then dynamics.
State env_step(const EnvModel& env, const State& s, double action,
               const DynamismSample& phi, Rng& rng);

// Deterministic transition with no actuation noise (used by test oracles and
// degenerate configs).
State env_step_nominal(const EnvModel& env, const State& s, double action,
                       const DynamismSample& phi);

bool cartpole_in_bounds(const EnvModel& env, const State& s);

// Reward of arriving in state `next` having commanded `action`, with no
// episode latching. CartPole: 1 inside the failure bounds, else 0.
double transition_reward(const EnvModel& env, const State& next, double action);

double pendulum_reward(double theta, double theta_dot, double action);

// Episode reward with the CartPole failure latch applied: once any state
// leaves the bounds every later reward is 0.
struct EpisodeTrace {
    std::vector<State> states;                 // length steps + 1
    std::vector<Eigen::VectorXd> observations; // length steps
    std::vector<double> actions;               // commanded actions
    std::vector<double> rewards;
    double total_reward = 0.0;
    bool failed = false; // CartPole latch state at the end
};

// Policy callable: observation -> commanded action. The Rng is for stochastic
// policies; deterministic policies ignore it.
using PolicyFn = std::function<double(const Eigen::VectorXd& obs, Rng& rng)>;

// Episode against the true dynamics with phi drawn once and held fixed.
EpisodeTrace real_rollout(const EnvModel& env, const PolicyFn& policy, Rng& rng);

// Same, with the caller supplying phi (used for reward maps).
EpisodeTrace real_rollout_with(const EnvModel& env, const PolicyFn& policy,
                               const DynamismSample& phi, Rng& rng);

} // namespace prorl

#endif
