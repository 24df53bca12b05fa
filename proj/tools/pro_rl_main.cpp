// pro-rl: end-to-end pipeline driver.
//
//   sample          draw the one-step transition dataset
//   train-surrogate fit the virtual-environment model, gated on fidelity
//   train-policy    optimize the actor against the virtual environment
//   validate        run the policy in realizations of the real environment
//   reward-map      sweep two dynamism variables over a reward grid
//   temporal        per-step reward shape and steps-to-best statistics
//
// Every subcommand takes --config/--seed/--out, writes its artifacts under
// --out and drops a manifest-<command>.json describing the run. Exit codes:
// 0 success, 2 configuration error, 3 runtime/numerical error.

#include <CLI11.hpp>
#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "prorl/config.hpp"
#include "prorl/dataset.hpp"
#include "prorl/eval.hpp"
#include "prorl/manifest.hpp"
#include "prorl/math_util.hpp"
#include "prorl/policy.hpp"
#include "prorl/ppo.hpp"
#include "prorl/surrogate.hpp"

namespace fs = std::filesystem;

namespace {

using namespace prorl;

struct CommonArgs {
    std::string config_path;
    std::uint64_t seed = 42;
    std::string out_dir = ".";
};

void add_common_options(CLI::App& cmd, CommonArgs& args) {
    cmd.add_option("--config", args.config_path, "Run configuration file")
        ->required();
    cmd.add_option("--seed", args.seed, "Master RNG seed (default 42)");
    cmd.add_option("--out", args.out_dir, "Output directory (default .)");
}

std::string join_out(const CommonArgs& args, const std::string& name) {
    return (fs::path(args.out_dir) / name).string();
}

RunConfig load_and_prepare(const CommonArgs& args) {
    RunConfig cfg = load_run_config(args.config_path);
    std::error_code ec;
    fs::create_directories(args.out_dir, ec);
    if (ec) {
        throw ConfigError("cannot create output directory '" + args.out_dir +
                          "': " + ec.message());
    }
    return cfg;
}

Manifest start_manifest(const std::string& command, const CommonArgs& args,
                        const RunConfig& cfg) {
    Manifest m;
    m.command = command;
    m.seed = args.seed;
    m.config = run_config_snapshot(cfg);
    return m;
}

// Artifacts live directly in the run directory, so manifests record them by
// name; replaying a pipeline into another directory then yields manifests
// identical up to the timestamp.
struct InputRef {
    std::string path;          // where to read from
    std::string manifest_name; // how the manifest refers to it
};

InputRef resolve_input(const CommonArgs& args, const std::string& flag_value,
                       const std::string& default_name) {
    if (flag_value.empty()) return {join_out(args, default_name), default_name};
    return {flag_value, flag_value};
}

void finish_manifest(Manifest& m, const CommonArgs& args) {
    const std::string path = join_out(args, "manifest-" + m.command + ".json");
    write_manifest(m, path);
}

void check_env_match(EnvId artifact_env, EnvId config_env, const std::string& what) {
    if (artifact_env != config_env) {
        throw ConfigError(what + " was built for environment '" +
                          env_name(artifact_env) + "' but the config selects '" +
                          env_name(config_env) + "'");
    }
}

// Evaluation-side policy wrapper; deterministic mode ignores the per-episode
// RNG entirely so evaluation draws stay aligned across policy variants.
PolicyFn eval_policy_fn(const PolicyNet& policy, bool stochastic) {
    if (stochastic) {
        return [policy](const Eigen::VectorXd& obs, Rng& rng) {
            return policy.act(obs, rng);
        };
    }
    return [policy](const Eigen::VectorXd& obs, Rng&) {
        return policy.deterministic_action(obs);
    };
}

PolicyNet load_policy_checked(const std::string& path, const RunConfig& cfg) {
    PolicyNet policy = load_policy(path);
    check_env_match(policy.env, cfg.env.id, "policy '" + path + "'");
    return policy;
}

void write_validation_report(const ValidationReport& rep, const std::string& path) {
    nlohmann::json j;
    j["episodes"] = rep.episodes;
    j["success_threshold"] = rep.success_threshold;
    j["success_rate"] = rep.success_rate;
    j["mean_reward"] = rep.mean_reward;
    j["std_reward"] = rep.std_reward;
    j["min_reward"] = rep.min_reward;
    j["max_reward"] = rep.max_reward;
    j["mean_length"] = rep.mean_length;
    j["rewards"] = rep.rewards;
    j["lengths"] = rep.lengths;
    std::ofstream f(path);
    if (!f) throw ConfigError("report: cannot open for writing: " + path);
    f << j.dump(2) << '\n';
    if (!f) throw ConfigError("report: write failed: " + path);
}

int run_sample(const CommonArgs& args) {
    const RunConfig cfg = load_and_prepare(args);
    const Dataset ds = collect_dataset(cfg.env, cfg.dataset_n, args.seed);
    const std::string csv_path = join_out(args, "dataset.csv");
    write_dataset(ds, csv_path);

    Manifest m = start_manifest("sample", args, cfg);
    m.add_artifact("dataset", "dataset.csv");
    m.add_artifact("dataset_meta", "dataset.meta");
    finish_manifest(m, args);

    std::cout << "wrote " << csv_path << " (" << ds.n() << " rows, "
              << ds.rejected_rows << " rejected)\n";
    return 0;
}

int run_train_surrogate(const CommonArgs& args, const std::string& dataset_path) {
    const RunConfig cfg = load_and_prepare(args);
    const InputRef ds_ref = resolve_input(args, dataset_path, "dataset.csv");
    const Dataset ds = read_dataset(ds_ref.path);
    check_env_match(ds.env, cfg.env.id, "dataset '" + ds_ref.path + "'");

    const SurrogateTrainResult result =
        train_surrogate(cfg.env, ds, cfg.surrogate, args.seed);

    nlohmann::json report;
    report["fidelity_ok"] = result.fidelity_ok;
    report["fidelity_max_rmse_fraction"] = cfg.surrogate.fidelity_max_rmse_fraction;
    report["train_loss"] = result.train_loss;
    report["holdout_loss"] = result.holdout_loss;
    for (int d = 0; d < result.holdout_rmse.size(); ++d) {
        const std::string& name =
            result.model.output_names[static_cast<std::size_t>(d)];
        report["holdout_rmse"][name] = result.holdout_rmse[d];
        report["span"][name] = result.span[d];
        report["rmse_fraction"][name] = result.holdout_rmse[d] / result.span[d];
    }
    const std::string report_path = join_out(args, "surrogate_report.json");
    {
        std::ofstream f(report_path);
        if (!f) throw ConfigError("report: cannot open for writing: " + report_path);
        f << report.dump(2) << '\n';
    }

    Manifest m = start_manifest("train-surrogate", args, cfg);
    m.add_input("dataset", ds_ref.manifest_name);
    m.add_artifact("surrogate_report", "surrogate_report.json");

    if (!result.fidelity_ok) {
        finish_manifest(m, args);
        std::cerr << "surrogate rejected: held-out RMSE exceeds "
                  << cfg.surrogate.fidelity_max_rmse_fraction * 100.0
                  << "% of the sampling span (see " << report_path << ")\n";
        throw NumericError("surrogate failed the fidelity gate");
    }

    const std::string model_path = join_out(args, "surrogate.json");
    save_surrogate(result.model, model_path);
    m.add_artifact("surrogate", "surrogate.json");
    finish_manifest(m, args);

    std::cout << "wrote " << model_path << " (final holdout loss "
              << result.holdout_loss.back() << ")\n";
    return 0;
}

void write_history_csv(const std::vector<IterationStats>& history,
                       const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ConfigError("history: cannot open for writing: " + path);
    f << "iteration,mean_return,mean_rel,mean_length,actor_loss,critic_loss,"
         "log_std,seconds\n";
    for (const auto& st : history) {
        f << st.iteration << ',' << format_full(st.mean_total) << ','
          << format_full(st.mean_rel) << ',' << format_full(st.mean_length) << ','
          << format_full(st.actor_loss) << ',' << format_full(st.critic_loss) << ','
          << format_full(st.log_std) << ',' << format_full(st.seconds) << '\n';
    }
    if (!f) throw ConfigError("history: write failed: " + path);
}

int run_train_policy(const CommonArgs& args, const std::string& surrogate_path) {
    const RunConfig cfg = load_and_prepare(args);
    const InputRef sur_ref = resolve_input(args, surrogate_path, "surrogate.json");
    const SurrogateModel sur = load_surrogate(sur_ref.path);
    check_env_match(sur.env, cfg.env.id, "surrogate '" + sur_ref.path + "'");

    const auto progress = [&](const IterationStats& st) {
        std::cout << "iter " << st.iteration + 1 << "/" << cfg.ppo.iterations
                  << "  mean_return=" << st.mean_total << "  mean_rel=" << st.mean_rel
                  << "  len=" << st.mean_length << "  (" << st.seconds << " s)\n"
                  << std::flush;
    };
    const TrainPolicyResult result = train_policy(
        cfg.env, sur, cfg.reliability, cfg.policy, cfg.ppo, args.seed, progress);

    const std::string policy_path = join_out(args, "policy.json");
    save_policy(result.actor, policy_path);
    const std::string history_path = join_out(args, "history.csv");
    write_history_csv(result.history, history_path);

    Manifest m = start_manifest("train-policy", args, cfg);
    m.add_input("surrogate", sur_ref.manifest_name);
    m.add_artifact("policy", "policy.json");
    m.add_artifact("history", "history.csv");
    if (!cfg.policy.shared_weights) {
        save_value_net(result.critic, join_out(args, "critic.json"));
        m.add_artifact("critic", "critic.json");
    }
    finish_manifest(m, args);

    std::cout << "wrote " << policy_path << " (final mean return "
              << result.history.back().mean_total << ")\n";
    return 0;
}

int run_validate(const CommonArgs& args, const std::string& policy_path_arg) {
    const RunConfig cfg = load_and_prepare(args);
    const InputRef pol_ref = resolve_input(args, policy_path_arg, "policy.json");
    const PolicyNet policy = load_policy_checked(pol_ref.path, cfg);

    const ValidationReport rep =
        validate_policy(cfg.env, eval_policy_fn(policy, cfg.eval.stochastic),
                        cfg.eval.validate_episodes, cfg.eval.success_threshold,
                        args.seed);
    const std::string report_path = join_out(args, "report.json");
    write_validation_report(rep, report_path);

    Manifest m = start_manifest("validate", args, cfg);
    m.add_input("policy", pol_ref.manifest_name);
    m.add_artifact("report", "report.json");
    finish_manifest(m, args);

    std::cout << "validated " << rep.episodes << " episodes: mean reward "
              << rep.mean_reward << ", success rate " << rep.success_rate * 100.0
              << "% (threshold " << rep.success_threshold << ")\n";
    return 0;
}

int run_reward_map(const CommonArgs& args, const std::string& policy_path_arg) {
    const RunConfig cfg = load_and_prepare(args);
    const InputRef pol_ref = resolve_input(args, policy_path_arg, "policy.json");
    const PolicyNet policy = load_policy_checked(pol_ref.path, cfg);

    const RewardMapResult map = reward_map(
        cfg.env, eval_policy_fn(policy, cfg.eval.stochastic), cfg.eval.reward_map_x,
        cfg.eval.reward_map_y, cfg.eval.reward_map_grid,
        cfg.eval.reward_map_episodes_per_cell, cfg.eval.reward_map_sigmas, args.seed);

    const std::string csv_path = join_out(args, "reward_map.csv");
    {
        std::ofstream f(csv_path);
        if (!f) throw ConfigError("reward map: cannot open for writing: " + csv_path);
        f << "x,y,mean_reward\n";
        for (int ix = 0; ix < map.x_values.size(); ++ix) {
            for (int iy = 0; iy < map.y_values.size(); ++iy) {
                f << format_full(map.x_values[ix]) << ','
                  << format_full(map.y_values[iy]) << ','
                  << format_full(map.mean_reward(ix, iy)) << '\n';
            }
        }
        if (!f) throw ConfigError("reward map: write failed: " + csv_path);
    }

    Manifest m = start_manifest("reward-map", args, cfg);
    m.add_input("policy", pol_ref.manifest_name);
    m.add_artifact("reward_map", "reward_map.csv");
    finish_manifest(m, args);

    std::cout << "wrote " << csv_path << " (" << map.var_x << " x " << map.var_y
              << ", " << map.x_values.size() << "x" << map.y_values.size()
              << " grid, min cell " << map.mean_reward.minCoeff() << ")\n";
    return 0;
}

int run_temporal(const CommonArgs& args, const std::string& policy_path_arg) {
    const RunConfig cfg = load_and_prepare(args);
    const InputRef pol_ref = resolve_input(args, policy_path_arg, "policy.json");
    const PolicyNet policy = load_policy_checked(pol_ref.path, cfg);

    const TemporalResult res =
        temporal_performance(cfg.env, eval_policy_fn(policy, cfg.eval.stochastic),
                             cfg.eval.temporal_episodes, args.seed);

    const std::string csv_path = join_out(args, "temporal.csv");
    {
        std::ofstream f(csv_path);
        if (!f) throw ConfigError("temporal: cannot open for writing: " + csv_path);
        f << "episode,steps_to_best\n";
        for (std::size_t i = 0; i < res.steps_to_best.size(); ++i) {
            f << i << ',' << static_cast<long>(res.steps_to_best[i]) << '\n';
        }
        if (!f) throw ConfigError("temporal: write failed: " + csv_path);
    }
    const std::string profile_path = join_out(args, "temporal_profile.csv");
    {
        std::ofstream f(profile_path);
        if (!f) throw ConfigError("temporal: cannot open for writing: " + profile_path);
        f << "t,mean_step_reward\n";
        for (int t = 0; t < res.mean_step_reward.size(); ++t) {
            f << t << ',' << format_full(res.mean_step_reward[t]) << '\n';
        }
        if (!f) throw ConfigError("temporal: write failed: " + profile_path);
    }

    Manifest m = start_manifest("temporal", args, cfg);
    m.add_input("policy", pol_ref.manifest_name);
    m.add_artifact("temporal", "temporal.csv");
    m.add_artifact("temporal_profile", "temporal_profile.csv");
    finish_manifest(m, args);

    std::cout << "temporal over " << res.episodes << " episodes: median steps-to-best "
              << res.median_steps_to_best << ", mean " << res.mean_steps_to_best
              << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reliability-driven virtual-environment policy training"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string dataset_path;
    std::string surrogate_path;
    std::string policy_path;

    CLI::App* sample = app.add_subcommand("sample", "Draw the one-step LHS dataset");
    add_common_options(*sample, args);

    CLI::App* train_sur =
        app.add_subcommand("train-surrogate", "Fit the virtual-environment model");
    add_common_options(*train_sur, args);
    train_sur->add_option("--dataset", dataset_path,
                          "Dataset CSV (default <out>/dataset.csv)");

    CLI::App* train_pol =
        app.add_subcommand("train-policy", "Optimize the policy in the virtual environment");
    add_common_options(*train_pol, args);
    train_pol->add_option("--surrogate", surrogate_path,
                          "Surrogate model (default <out>/surrogate.json)");

    CLI::App* validate = app.add_subcommand("validate", "Evaluate in real realizations");
    add_common_options(*validate, args);
    validate->add_option("--policy", policy_path, "Policy file (default <out>/policy.json)");

    CLI::App* rmap =
        app.add_subcommand("reward-map", "Mean-reward grid over two dynamism variables");
    add_common_options(*rmap, args);
    rmap->add_option("--policy", policy_path, "Policy file (default <out>/policy.json)");

    CLI::App* temporal =
        app.add_subcommand("temporal", "Per-step reward shape and steps-to-best");
    add_common_options(*temporal, args);
    temporal->add_option("--policy", policy_path, "Policy file (default <out>/policy.json)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (sample->parsed()) return run_sample(args);
        if (train_sur->parsed()) return run_train_surrogate(args, dataset_path);
        if (train_pol->parsed()) return run_train_policy(args, surrogate_path);
        if (validate->parsed()) return run_validate(args, policy_path);
        if (rmap->parsed()) return run_reward_map(args, policy_path);
        if (temporal->parsed()) return run_temporal(args, policy_path);
    } catch (const prorl::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const prorl::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
