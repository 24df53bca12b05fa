#include "prorl/ppo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "prorl/math_util.hpp"

namespace prorl {

PPOConfig PPOConfig::defaults(EnvId id) {
    PPOConfig cfg;
    cfg.iterations = id == EnvId::CartPole ? 150 : 300;
    return cfg;
}

void PPOConfig::validate() const {
    require(iterations >= 1, "PPOConfig: iterations must be >= 1");
    require(trajectories_per_iter >= 1, "PPOConfig: trajectories_per_iter must be >= 1");
    require(epochs >= 1 && minibatch >= 1, "PPOConfig: epochs/minibatch must be >= 1");
    require(clip_epsilon > 0.0 && clip_epsilon < 1.0, "PPOConfig: clip_epsilon in (0, 1)");
    require(actor_lr > 0.0 && critic_lr > 0.0, "PPOConfig: learning rates must be positive");
    require(log_ratio_clamp > 0.0, "PPOConfig: log_ratio_clamp must be positive");
}

double ValueNet::value(const Eigen::VectorXd& obs) const {
    return forward(spec, params, obs)[0];
}

ValueNet make_value_net(int obs_dim, Rng& rng) {
    ValueNet v;
    v.spec = MlpSpec::dense(obs_dim, 1);
    v.params = init_params(v.spec, rng);
    return v;
}

void save_value_net(const ValueNet& v, const std::string& path) {
    using nlohmann::json;
    json j;
    j["format"] = "prorl-value-v1";
    j["layer_sizes"] = v.spec.layer_sizes;
    json weights = json::array();
    json biases = json::array();
    for (std::size_t l = 0; l < v.params.weights.size(); ++l) {
        const Eigen::MatrixXd& w = v.params.weights[l];
        json wr = json::array();
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            json row = json::array();
            for (Eigen::Index c = 0; c < w.cols(); ++c) row.push_back(w(r, c));
            wr.push_back(std::move(row));
        }
        weights.push_back(std::move(wr));
        json b = json::array();
        for (Eigen::Index i = 0; i < v.params.biases[l].size(); ++i) {
            b.push_back(v.params.biases[l][i]);
        }
        biases.push_back(std::move(b));
    }
    j["weights"] = std::move(weights);
    j["biases"] = std::move(biases);

    std::ofstream f(path);
    if (!f) throw ConfigError("value net: cannot open for writing: " + path);
    f << j.dump(2) << '\n';
    if (!f) throw ConfigError("value net: write failed: " + path);
}

ValueNet load_value_net(const std::string& path) {
    using nlohmann::json;
    std::ifstream f(path);
    if (!f) throw ConfigError("value net: cannot open: " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw ConfigError("value net: bad JSON in " + path + ": " + e.what());
    }

    ValueNet v;
    try {
        if (j.at("format").get<std::string>() != "prorl-value-v1") {
            throw ConfigError("value net: unknown format tag in " + path);
        }
        v.spec.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
        v.spec.validate();
        for (const auto& jw : j.at("weights")) {
            const auto rows = jw.size();
            const auto cols = rows == 0 ? 0 : jw.at(0).size();
            Eigen::MatrixXd w(static_cast<Eigen::Index>(rows),
                              static_cast<Eigen::Index>(cols));
            for (std::size_t r = 0; r < rows; ++r) {
                if (jw.at(r).size() != cols) {
                    throw ConfigError("value net: ragged weight matrix in " + path);
                }
                for (std::size_t c = 0; c < cols; ++c) {
                    w(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                        jw.at(r).at(c).get<double>();
                }
            }
            v.params.weights.push_back(std::move(w));
        }
        for (const auto& jb : j.at("biases")) {
            Eigen::VectorXd b(static_cast<Eigen::Index>(jb.size()));
            for (std::size_t i = 0; i < jb.size(); ++i) {
                b[static_cast<Eigen::Index>(i)] = jb.at(i).get<double>();
            }
            v.params.biases.push_back(std::move(b));
        }
    } catch (const json::exception& e) {
        throw ConfigError("value net: missing fields in " + path + ": " + e.what());
    }
    require(static_cast<int>(v.params.weights.size()) == v.spec.num_layers(),
            "value net: layer count mismatch in " + path);
    require(v.spec.output_size() == 1, "value net: output size must be 1 in " + path);
    return v;
}

Eigen::VectorXd suffix_returns(const Eigen::VectorXd& rewards,
                               const std::vector<int>& traj_starts) {
    require(traj_starts.size() >= 2 && traj_starts.front() == 0 &&
                traj_starts.back() == rewards.size(),
            "suffix_returns: bad trajectory boundaries");
    Eigen::VectorXd ret(rewards.size());
    for (std::size_t k = 0; k + 1 < traj_starts.size(); ++k) {
        double acc = 0.0;
        for (int t = traj_starts[k + 1] - 1; t >= traj_starts[k]; --t) {
            acc += rewards[t];
            ret[t] = acc;
        }
    }
    return ret;
}

void normalize_advantages(Eigen::VectorXd& adv) {
    if (adv.size() == 0) return;
    adv.array() -= adv.mean();
    const double std = std::sqrt(adv.array().square().mean());
    if (std > 0.0) adv /= std;
}

double ppo_ratio(double logp, double old_logp, double log_ratio_clamp) {
    return std::exp(clamp(logp - old_logp, -log_ratio_clamp, log_ratio_clamp));
}

double clipped_objective_term(double ratio, double adv, double eps) {
    return std::min(ratio * adv, clamp(ratio, 1.0 - eps, 1.0 + eps) * adv);
}

TrainPolicyResult train_policy(const EnvModel& env, const SurrogateModel& sur,
                               const ReliabilityConfig& rel_cfg,
                               const PolicyConfig& policy_cfg,
                               const PPOConfig& ppo_cfg, std::uint64_t seed,
                               const IterationCallback& on_iteration) {
    rel_cfg.validate();
    policy_cfg.validate();
    ppo_cfg.validate();
    require(sur.env == env.id, "train_policy: surrogate environment mismatch");
    require(policy_cfg.obs_dim == env.obs_dim(), "train_policy: obs_dim mismatch");

    Rng actor_rng = Rng::derive(seed, 0xA0);
    Rng critic_rng = Rng::derive(seed, 0xB0);

    TrainPolicyResult result;
    result.actor = make_policy(env, policy_cfg, actor_rng);
    PolicyNet& actor = result.actor;
    const bool shared = policy_cfg.shared_weights;
    if (!shared) result.critic = make_value_net(env.obs_dim(), critic_rng);
    ValueNet& critic = result.critic;

    AdamConfig actor_acfg;
    actor_acfg.lr = ppo_cfg.actor_lr;
    actor_acfg.weight_decay = ppo_cfg.actor_weight_decay;
    AdamConfig critic_acfg;
    critic_acfg.lr = ppo_cfg.critic_lr;
    critic_acfg.weight_decay = ppo_cfg.critic_weight_decay;

    AdamState actor_adam = AdamState::init(actor.spec, actor_acfg);
    AdamState critic_adam;
    if (!shared) critic_adam = AdamState::init(critic.spec, critic_acfg);
    AdamVecState log_std_adam;
    const bool gaussian = actor.head == HeadKind::Gaussian;
    if (gaussian) log_std_adam = AdamVecState::init(1, actor_acfg);

    const int obs_dim = env.obs_dim();
    const int head_dim = actor.head_dim();
    const double half_log_2pi = 0.5 * std::log(2.0 * kPi);

    for (int iter = 0; iter < ppo_cfg.iterations; ++iter) {
        const auto tick = std::chrono::steady_clock::now();

        // Collect the iteration's virtual episodes under the current actor.
        const StochasticPolicy sampler = [&actor](const Eigen::VectorXd& obs,
                                                  Rng& rng) {
            return actor.sample(obs, rng);
        };
        std::vector<ReliabilityTrajectory> trajs;
        trajs.reserve(static_cast<std::size_t>(ppo_cfg.trajectories_per_iter));
        int total_steps = 0;
        for (int j = 0; j < ppo_cfg.trajectories_per_iter; ++j) {
            trajs.push_back(reliability_rollout(
                env, sur, sampler, rel_cfg,
                derive_seed(seed, 0xC0, static_cast<std::uint64_t>(iter),
                            static_cast<std::uint64_t>(j))));
            total_steps += trajs.back().decisions();
        }

        TrajectoryBatch batch;
        batch.obs.resize(total_steps, obs_dim);
        batch.actions.resize(total_steps);
        batch.rewards.resize(total_steps);
        batch.old_logp.resize(total_steps);
        batch.traj_starts.push_back(0);
        int row = 0;
        for (const auto& tr : trajs) {
            for (std::size_t t = 0; t < tr.reliabilities.size(); ++t) {
                batch.obs.row(row) = tr.observations[t].transpose();
                batch.actions[row] = tr.actions[t];
                batch.rewards[row] = tr.reliabilities[t];
                batch.old_logp[row] = tr.log_probs[t];
                ++row;
            }
            batch.traj_starts.push_back(row);
            batch.traj_totals.push_back(tr.total);
        }
        batch.returns = suffix_returns(batch.rewards, batch.traj_starts);

        // Values as of collection time.
        if (shared) {
            batch.values =
                forward_batch(actor.spec, actor.params, batch.obs).col(head_dim);
        } else {
            batch.values = forward_batch(critic.spec, critic.params, batch.obs).col(0);
        }
        batch.advantages = batch.returns - batch.values;
        if (ppo_cfg.normalize_advantages) normalize_advantages(batch.advantages);

        // Clipped-surrogate updates.
        double actor_loss_acc = 0.0;
        double critic_loss_acc = 0.0;
        std::vector<int> order(static_cast<std::size_t>(total_steps));
        std::iota(order.begin(), order.end(), 0);
        for (int epoch = 0; epoch < ppo_cfg.epochs; ++epoch) {
            Rng shuffle_rng = Rng::derive(seed, 0xE0, static_cast<std::uint64_t>(iter),
                                          static_cast<std::uint64_t>(epoch));
            shuffle(order, shuffle_rng);

            for (int begin = 0; begin < total_steps; begin += ppo_cfg.minibatch) {
                const int count = std::min(ppo_cfg.minibatch, total_steps - begin);
                Eigen::MatrixXd mb_obs(count, obs_dim);
                Eigen::VectorXd mb_act(count), mb_adv(count), mb_old(count), mb_ret(count);
                for (int i = 0; i < count; ++i) {
                    const int r = order[static_cast<std::size_t>(begin + i)];
                    mb_obs.row(i) = batch.obs.row(r);
                    mb_act[i] = batch.actions[r];
                    mb_adv[i] = batch.advantages[r];
                    mb_old[i] = batch.old_logp[r];
                    mb_ret[i] = batch.returns[r];
                }

                ForwardCache cache;
                const Eigen::MatrixXd out =
                    forward_batch(actor.spec, actor.params, mb_obs, &cache);
                Eigen::MatrixXd out_grads =
                    Eigen::MatrixXd::Zero(count, actor.spec.output_size());

                const double log_std_now = gaussian ? actor.log_std[0] : 0.0;
                const double sigma = gaussian ? std::exp(log_std_now) : 0.0;
                double loss = 0.0;
                double log_std_grad = 0.0;
                for (int i = 0; i < count; ++i) {
                    double logp = 0.0;
                    int idx = 0;
                    double p0 = 0.0, p1 = 0.0, z = 0.0;
                    if (actor.head == HeadKind::Categorical) {
                        const double m = std::max(out(i, 0), out(i, 1));
                        const double e0 = std::exp(out(i, 0) - m);
                        const double e1 = std::exp(out(i, 1) - m);
                        const double sum = e0 + e1;
                        p0 = e0 / sum;
                        p1 = e1 / sum;
                        idx = action_to_index(mb_act[i]);
                        logp = out(i, idx) - (m + std::log(sum));
                    } else {
                        z = (mb_act[i] - out(i, 0)) / sigma;
                        logp = -0.5 * z * z - log_std_now - half_log_2pi;
                    }

                    const double ratio = ppo_ratio(logp, mb_old[i], ppo_cfg.log_ratio_clamp);
                    const double unclipped = ratio * mb_adv[i];
                    const double clipped =
                        clamp(ratio, 1.0 - ppo_cfg.clip_epsilon, 1.0 + ppo_cfg.clip_epsilon) *
                        mb_adv[i];
                    loss -= std::min(unclipped, clipped);

                    // The surrogate only moves the parameters while the
                    // unclipped branch attains the min.
                    if (unclipped <= clipped) {
                        const double dlogp = -(1.0 / count) * mb_adv[i] * ratio;
                        if (actor.head == HeadKind::Categorical) {
                            out_grads(i, 0) = dlogp * ((idx == 0 ? 1.0 : 0.0) - p0);
                            out_grads(i, 1) = dlogp * ((idx == 1 ? 1.0 : 0.0) - p1);
                        } else {
                            out_grads(i, 0) = dlogp * z / sigma;
                            log_std_grad += dlogp * (z * z - 1.0);
                        }
                    }
                }
                loss /= count;
                actor_loss_acc += loss * count;

                double critic_loss_mb = 0.0;
                if (shared) {
                    const Eigen::VectorXd verr = out.col(head_dim) - mb_ret;
                    critic_loss_mb = verr.squaredNorm() / count;
                    out_grads.col(head_dim) = (2.0 / count) * verr;
                    const MlpParams grads =
                        backward_from_output_grads(actor.spec, actor.params, cache, out_grads);
                    adam_step(actor.params, grads, actor_adam);
                } else {
                    const MlpParams grads =
                        backward_from_output_grads(actor.spec, actor.params, cache, out_grads);
                    adam_step(actor.params, grads, actor_adam);

                    ForwardCache vcache;
                    const Eigen::MatrixXd vout =
                        forward_batch(critic.spec, critic.params, mb_obs, &vcache);
                    const Eigen::VectorXd verr = vout.col(0) - mb_ret;
                    critic_loss_mb = verr.squaredNorm() / count;
                    Eigen::MatrixXd vgrads(count, 1);
                    vgrads.col(0) = (2.0 / count) * verr;
                    const MlpParams cgrads = backward_from_output_grads(
                        critic.spec, critic.params, vcache, vgrads);
                    adam_step(critic.params, cgrads, critic_adam);
                }
                critic_loss_acc += critic_loss_mb * count;

                if (gaussian) {
                    Eigen::VectorXd g(1);
                    g[0] = log_std_grad;
                    adam_step_vec(actor.log_std, g, log_std_adam);
                    actor.clamp_log_std();
                }
            }
        }

        if (!actor.params.all_finite() || (gaussian && !actor.log_std.allFinite()) ||
            (!shared && !critic.params.all_finite())) {
            throw NumericError("train_policy: non-finite parameters at iteration " +
                               std::to_string(iter));
        }

        IterationStats st;
        st.iteration = iter;
        st.mean_total = 0.0;
        for (double tot : batch.traj_totals) st.mean_total += tot;
        st.mean_total /= static_cast<double>(batch.traj_totals.size());
        st.mean_rel = total_steps > 0 ? batch.rewards.sum() / total_steps : 0.0;
        st.mean_length =
            static_cast<double>(total_steps) / static_cast<double>(batch.traj_totals.size());
        const double denom = static_cast<double>(ppo_cfg.epochs) * total_steps;
        st.actor_loss = actor_loss_acc / denom;
        st.critic_loss = critic_loss_acc / denom;
        st.log_std = gaussian ? actor.log_std[0] : 0.0;
        st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - tick)
                         .count();
        result.history.push_back(st);
        if (on_iteration) on_iteration(st);
    }
    return result;
}

} // namespace prorl
