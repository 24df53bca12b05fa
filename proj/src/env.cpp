#include "prorl/env.hpp"

#include <cmath>

#include "prorl/math_util.hpp"

namespace prorl {

std::string env_name(EnvId id) {
    return id == EnvId::CartPole ? "cartpole" : "pendulum";
}

EnvId env_from_name(const std::string& name) {
    if (name == "cartpole") return EnvId::CartPole;
    if (name == "pendulum") return EnvId::Pendulum;
    throw ConfigError("unknown environment id: " + name + " (expected cartpole or pendulum)");
}

namespace {

// Physical quantities are truncated to (0.01 * mean, mean + 3 sigma] so that
// a 3-sigma spread of 0.333 * mean cannot produce non-physical draws.
DynamismVar physical(const std::string& name, DynamismGroup group, double mean,
                     double std) {
    DynamismVar v;
    v.name = name;
    v.group = group;
    v.mean = mean;
    v.std = std;
    v.low = 0.01 * mean;
    v.high = mean + 3.0 * std;
    return v;
}

DynamismVar noise_scale(const std::string& name, DynamismGroup group, double mean) {
    DynamismVar v;
    v.name = name;
    v.group = group;
    v.mean = mean;
    v.std = 0.0;
    v.low = 0.0;
    v.high = std::numeric_limits<double>::infinity();
    return v;
}

} // namespace

EnvModel EnvModel::cartpole_defaults() {
    EnvModel env;
    env.id = EnvId::CartPole;
    env.episode.horizon = 200;
    env.episode.dt = 0.02;
    env.episode.init_range.assign(4, {-0.05, 0.05});
    env.episode.x_limit = 2.4;
    env.episode.theta_limit = 12.0 * kPi / 180.0;
    env.episode.force_mag = 10.0;

    env.dynamism.vars = {
        physical("cart_mass", DynamismGroup::Physical, 1.0, 0.333),
        physical("pole_mass", DynamismGroup::Physical, 0.1, 0.0333),
        physical("pole_length", DynamismGroup::Physical, 1.0, 0.333),
        physical("gravity", DynamismGroup::Ambient, 9.8, 0.03),
        noise_scale("obs_noise_x", DynamismGroup::Observation, 0.01),
        noise_scale("obs_noise_x_dot", DynamismGroup::Observation, 0.01),
        noise_scale("obs_noise_theta", DynamismGroup::Observation, 0.01),
        noise_scale("obs_noise_theta_dot", DynamismGroup::Observation, 0.01),
        noise_scale("control_noise", DynamismGroup::Control, 0.1),
    };
    env.i_mass = 0;
    env.i_pole_mass = 1;
    env.i_length = 2;
    env.i_gravity = 3;
    env.i_obs_noise = {4, 5, 6, 7};
    env.i_control_noise = 8;

    env.state_names = {"x", "x_dot", "theta", "theta_dot"};
    env.obs_names = env.state_names;
    env.lhs_state_box = {{-2.4, 2.4},
                         {-3.0, 3.0},
                         {-env.episode.theta_limit, env.episode.theta_limit},
                         {-3.0, 3.0}};
    return env;
}

EnvModel EnvModel::pendulum_defaults() {
    EnvModel env;
    env.id = EnvId::Pendulum;
    env.episode.horizon = 200;
    env.episode.dt = 0.05;
    env.episode.init_range = {{-kPi, kPi}, {-8.0, 8.0}};
    env.episode.torque_limit = 2.0;
    env.episode.max_speed = 8.0;

    env.dynamism.vars = {
        physical("mass", DynamismGroup::Physical, 1.0, 0.333),
        physical("length", DynamismGroup::Physical, 1.0, 0.333),
        physical("gravity", DynamismGroup::Ambient, 9.8, 0.03),
        noise_scale("obs_noise_cos", DynamismGroup::Observation, 0.01),
        noise_scale("obs_noise_sin", DynamismGroup::Observation, 0.01),
        noise_scale("obs_noise_theta_dot", DynamismGroup::Observation, 0.1),
        noise_scale("control_noise", DynamismGroup::Control, 0.1),
    };
    env.i_mass = 0;
    env.i_length = 1;
    env.i_gravity = 2;
    env.i_obs_noise = {3, 4, 5};
    env.i_control_noise = 6;

    env.state_names = {"theta", "theta_dot"};
    env.obs_names = {"l_cos_theta", "l_sin_theta", "theta_dot"};
    env.lhs_state_box = {{-kPi, kPi}, {-8.0, 8.0}};
    return env;
}

EnvModel EnvModel::defaults(EnvId id) {
    return id == EnvId::CartPole ? cartpole_defaults() : pendulum_defaults();
}

State cartpole_step(const State& s, double force, double cart_mass,
                    double pole_mass, double pole_length, double gravity,
                    double dt) {
    require(s.size() == 4, "cartpole_step: state must have 4 components");
    require(s.allFinite() && std::isfinite(force), "cartpole_step: non-finite input");
    require(dt > 0.0 && cart_mass > 0.0 && pole_mass > 0.0 && pole_length > 0.0,
            "cartpole_step: physical parameters must be positive");

    const double x = s[0], x_dot = s[1], theta = s[2], theta_dot = s[3];
    const double half_length = 0.5 * pole_length; // distance pivot -> pole COM
    const double total_mass = cart_mass + pole_mass;
    const double polemass_length = pole_mass * half_length;

    const double sin_t = std::sin(theta);
    const double cos_t = std::cos(theta);
    const double temp = (force + polemass_length * theta_dot * theta_dot * sin_t) /
                        total_mass;
    const double theta_acc =
        (gravity * sin_t - cos_t * temp) /
        (half_length * (4.0 / 3.0 - pole_mass * cos_t * cos_t / total_mass));
    const double x_acc = temp - polemass_length * theta_acc * cos_t / total_mass;

    State next(4);
    next[1] = x_dot + dt * x_acc;
    next[0] = x + dt * next[1];
    next[3] = theta_dot + dt * theta_acc;
    next[2] = theta + dt * next[3];
    return next;
}

State pendulum_step(const State& s, double torque, double mass, double length,
                    double gravity, double dt, double max_speed) {
    require(s.size() == 2, "pendulum_step: state must have 2 components");
    require(s.allFinite() && std::isfinite(torque), "pendulum_step: non-finite input");
    require(dt > 0.0 && mass > 0.0 && length > 0.0,
            "pendulum_step: physical parameters must be positive");

    const double theta = s[0], theta_dot = s[1];
    const double theta_acc = 3.0 * gravity / (2.0 * length) * std::sin(theta) +
                             3.0 / (mass * length * length) * torque;
    State next(2);
    next[1] = clamp(theta_dot + dt * theta_acc, -max_speed, max_speed);
    next[0] = wrap_to_pi(theta + dt * next[1]);
    return next;
}

State sample_initial_state(const EnvModel& env, Rng& rng) {
    State s(env.state_dim());
    for (int i = 0; i < env.state_dim(); ++i) {
        const auto [lo, hi] = env.episode.init_range[i];
        s[i] = lo == hi ? lo : rng.uniform(lo, hi);
    }
    return s;
}

double apply_control_noise(const EnvModel& env, double action,
                           const DynamismSample& phi, Rng& rng) {
    const double noise_std = phi[env.i_control_noise];
    if (env.id == EnvId::CartPole) {
        const double direction = action < 0.0 ? -1.0 : 1.0;
        return direction * env.episode.force_mag + rng.normal(0.0, noise_std);
    }
    const double lim = env.episode.torque_limit;
    const double commanded = clamp(action, -lim, lim);
    return clamp(commanded + rng.normal(0.0, noise_std), -lim, lim);
}

Eigen::VectorXd encode_observation(const EnvModel& env, const State& s,
                                   const DynamismSample& phi) {
    if (env.id == EnvId::CartPole) return s;
    const double l = phi[env.i_length];
    Eigen::VectorXd obs(3);
    obs << l * std::cos(s[0]), l * std::sin(s[0]), s[1];
    return obs;
}

Eigen::VectorXd observe(const EnvModel& env, const State& s,
                        const DynamismSample& phi, Rng& rng) {
    Eigen::VectorXd obs = encode_observation(env, s, phi);
    for (int i = 0; i < obs.size(); ++i) {
        const double scale = phi[env.i_obs_noise[i]];
        if (scale > 0.0) obs[i] += rng.normal(0.0, scale);
    }
    return obs;
}

State env_step(const EnvModel& env, const State& s, double action,
               const DynamismSample& phi, Rng& rng) {
    const double effective = apply_control_noise(env, action, phi, rng);
    if (env.id == EnvId::CartPole)
        return cartpole_step(s, effective, phi[env.i_mass], phi[env.i_pole_mass],
                             phi[env.i_length], phi[env.i_gravity], env.episode.dt);
    return pendulum_step(s, effective, phi[env.i_mass], phi[env.i_length],
                         phi[env.i_gravity], env.episode.dt, env.episode.max_speed);
}

State env_step_nominal(const EnvModel& env, const State& s, double action,
                       const DynamismSample& phi) {
    if (env.id == EnvId::CartPole) {
        const double direction = action < 0.0 ? -1.0 : 1.0;
        return cartpole_step(s, direction * env.episode.force_mag, phi[env.i_mass],
                             phi[env.i_pole_mass], phi[env.i_length],
                             phi[env.i_gravity], env.episode.dt);
    }
    const double lim = env.episode.torque_limit;
    return pendulum_step(s, clamp(action, -lim, lim), phi[env.i_mass],
                         phi[env.i_length], phi[env.i_gravity], env.episode.dt,
                         env.episode.max_speed);
}

bool cartpole_in_bounds(const EnvModel& env, const State& s) {
    return std::abs(s[0]) <= env.episode.x_limit &&
           std::abs(s[2]) <= env.episode.theta_limit;
}

double transition_reward(const EnvModel& env, const State& next, double action) {
    if (env.id == EnvId::CartPole) return cartpole_in_bounds(env, next) ? 1.0 : 0.0;
    const double lim = env.episode.torque_limit;
    return pendulum_reward(next[0], next[1], clamp(action, -lim, lim));
}

double pendulum_reward(double theta, double theta_dot, double action) {
    return -(theta * theta + 0.1 * theta_dot * theta_dot + 0.001 * action * action);
}

EpisodeTrace real_rollout_with(const EnvModel& env, const PolicyFn& policy,
                               const DynamismSample& phi, Rng& rng) {
    EpisodeTrace trace;
    State s = sample_initial_state(env, rng);
    trace.states.push_back(s);
    trace.failed = env.id == EnvId::CartPole && !cartpole_in_bounds(env, s);

    for (int t = 0; t < env.episode.horizon; ++t) {
        Eigen::VectorXd obs = observe(env, s, phi, rng);
        const double action = policy(obs, rng);
        s = env_step(env, s, action, phi, rng);

        double reward;
        if (env.id == EnvId::CartPole) {
            if (trace.failed || !cartpole_in_bounds(env, s)) {
                reward = 0.0;
                trace.failed = true;
            } else {
                reward = 1.0;
            }
        } else {
            reward = transition_reward(env, s, action);
        }

        trace.observations.push_back(std::move(obs));
        trace.actions.push_back(action);
        trace.rewards.push_back(reward);
        trace.states.push_back(s);
        trace.total_reward += reward;

        if (trace.failed && env.episode.early_termination) break;
    }
    return trace;
}

EpisodeTrace real_rollout(const EnvModel& env, const PolicyFn& policy, Rng& rng) {
    const DynamismSample phi = sample_dynamism(env.dynamism, rng);
    return real_rollout_with(env, policy, phi, rng);
}

} // namespace prorl
