#include "prorl/eval.hpp"

#include <algorithm>
#include <cmath>

#include "prorl/math_util.hpp"
#include "prorl/parallel.hpp"

namespace prorl {

namespace {

// Stable 64-bit string hash (FNV-1a) so seed lineages survive rebuilds and
// platforms, unlike std::hash.
std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace

double median(std::vector<double> values) {
    require(!values.empty(), "median: empty input");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

ValidationReport validate_policy(const EnvModel& env, const PolicyFn& policy,
                                 int episodes, double success_threshold,
                                 std::uint64_t seed) {
    require(episodes >= 1, "validate_policy: episodes must be >= 1");

    ValidationReport rep;
    rep.episodes = episodes;
    rep.success_threshold = success_threshold;
    rep.rewards.resize(static_cast<std::size_t>(episodes));
    rep.lengths.resize(static_cast<std::size_t>(episodes));

    parallel_for(static_cast<std::size_t>(episodes), [&](std::size_t ep) {
        Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(ep));
        const EpisodeTrace trace = real_rollout(env, policy, rng);
        rep.rewards[ep] = trace.total_reward;
        rep.lengths[ep] = static_cast<double>(trace.rewards.size());
    });

    double sum = 0.0, len_sum = 0.0;
    rep.min_reward = rep.rewards[0];
    rep.max_reward = rep.rewards[0];
    int successes = 0;
    for (std::size_t i = 0; i < rep.rewards.size(); ++i) {
        sum += rep.rewards[i];
        len_sum += rep.lengths[i];
        rep.min_reward = std::min(rep.min_reward, rep.rewards[i]);
        rep.max_reward = std::max(rep.max_reward, rep.rewards[i]);
        if (rep.rewards[i] >= success_threshold) ++successes;
    }
    rep.mean_reward = sum / episodes;
    rep.mean_length = len_sum / episodes;
    double sq = 0.0;
    for (double r : rep.rewards) sq += (r - rep.mean_reward) * (r - rep.mean_reward);
    rep.std_reward = std::sqrt(sq / episodes);
    rep.success_rate = static_cast<double>(successes) / episodes;
    return rep;
}

RewardMapResult reward_map(const EnvModel& env, const PolicyFn& policy,
                           const std::string& var_x, const std::string& var_y,
                           int grid, int episodes_per_cell, double sigmas,
                           std::uint64_t seed) {
    if (grid < 1) throw ConfigError("reward_map: grid must be >= 1");
    if (episodes_per_cell < 1) {
        throw ConfigError("reward_map: episodes_per_cell must be >= 1");
    }
    if (var_x == var_y) throw ConfigError("reward_map: need two distinct variables");
    for (const std::string& name : {var_x, var_y}) {
        if (!env.dynamism.has(name)) {
            throw ConfigError("reward_map: unknown dynamism variable '" + name + "'");
        }
    }
    const int ix_var = env.dynamism.index_of(var_x);
    const int iy_var = env.dynamism.index_of(var_y);

    auto axis_values = [&](int var_idx) {
        const DynamismVar& v = env.dynamism.vars[static_cast<std::size_t>(var_idx)];
        if (grid == 1) {
            // Degenerate sweep: a single cell at the distribution mean.
            return Eigen::VectorXd::Constant(1, v.mean).eval();
        }
        const double lo = std::max(v.mean - sigmas * v.std, v.low);
        const double hi = std::min(v.mean + sigmas * v.std, v.high);
        require(lo < hi, "reward_map: degenerate axis for " + v.name);
        Eigen::VectorXd vals(grid);
        for (int i = 0; i < grid; ++i) {
            vals[i] = lo + (hi - lo) * static_cast<double>(i) / (grid - 1);
        }
        return vals;
    };

    RewardMapResult out;
    out.var_x = var_x;
    out.var_y = var_y;
    out.x_values = axis_values(ix_var);
    out.y_values = axis_values(iy_var);
    out.mean_reward.resize(grid, grid);
    out.episodes_per_cell = episodes_per_cell;

    // Seeds keyed by the name-sorted variable pair and the matching index
    // order, so (x, y) and (y, x) sweeps replay identical episodes.
    const bool sorted_order = var_x <= var_y;
    const std::uint64_t pair_tag =
        fnv1a(sorted_order ? var_x + "\x1f" + var_y : var_y + "\x1f" + var_x);
    const DynamismSample base = env.dynamism.mean_sample();

    parallel_for(static_cast<std::size_t>(grid) * grid, [&](std::size_t cell) {
        const int ix = static_cast<int>(cell) / grid;
        const int iy = static_cast<int>(cell) % grid;
        DynamismSample phi = base;
        phi[ix_var] = out.x_values[ix];
        phi[iy_var] = out.y_values[iy];

        const std::uint64_t a = static_cast<std::uint64_t>(sorted_order ? ix : iy);
        const std::uint64_t b = static_cast<std::uint64_t>(sorted_order ? iy : ix);
        double sum = 0.0;
        for (int ep = 0; ep < episodes_per_cell; ++ep) {
            Rng rng = Rng::derive(derive_seed(seed, pair_tag, a, b),
                                  static_cast<std::uint64_t>(ep));
            sum += real_rollout_with(env, policy, phi, rng).total_reward;
        }
        out.mean_reward(ix, iy) = sum / episodes_per_cell;
    });
    return out;
}

TemporalResult temporal_performance(const EnvModel& env, const PolicyFn& policy,
                                    int episodes, std::uint64_t seed) {
    require(episodes >= 1, "temporal_performance: episodes must be >= 1");
    const int horizon = env.episode.horizon;

    TemporalResult out;
    out.episodes = episodes;
    out.steps_to_best.resize(static_cast<std::size_t>(episodes));
    Eigen::MatrixXd step_rewards = Eigen::MatrixXd::Zero(episodes, horizon);

    parallel_for(static_cast<std::size_t>(episodes), [&](std::size_t ep) {
        Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(ep));
        const EpisodeTrace trace = real_rollout(env, policy, rng);
        // Early-stopped CartPole episodes keep their latched zeros.
        for (std::size_t t = 0; t < trace.rewards.size(); ++t) {
            step_rewards(static_cast<int>(ep), static_cast<int>(t)) = trace.rewards[t];
        }
        int best = 0;
        for (int t = 1; t < horizon; ++t) {
            if (step_rewards(static_cast<int>(ep), t) >
                step_rewards(static_cast<int>(ep), best)) {
                best = t;
            }
        }
        out.steps_to_best[ep] = static_cast<double>(best);
    });

    out.mean_step_reward = step_rewards.colwise().mean().transpose();
    double sum = 0.0;
    for (double s : out.steps_to_best) sum += s;
    out.mean_steps_to_best = sum / episodes;
    out.median_steps_to_best = median(out.steps_to_best);
    return out;
}

} // namespace prorl
