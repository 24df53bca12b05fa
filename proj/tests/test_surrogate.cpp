#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>

#include "prorl/common.hpp"
#include "prorl/dataset.hpp"
#include "prorl/env.hpp"
#include "prorl/math_util.hpp"
#include "prorl/rng.hpp"
#include "prorl/surrogate.hpp"

using namespace prorl;

namespace {

// Synthetic CartPole-shaped dataset whose next state is produced by a known
// generator, bypassing the simulator so the regression target is exact.
template <typename Generator>
Dataset synthetic_dataset(const EnvModel& env, int n, std::uint64_t seed,
                          Generator&& gen) {
    Dataset ds;
    ds.env = env.id;
    ds.seed = seed;
    ds.state_dim = env.state_dim();
    ds.dyn_dim = env.dynamism.size();
    ds.columns = dataset_columns(env);
    ds.rows.resize(n, static_cast<int>(ds.columns.size()));

    const LhsPlan plan = dataset_plan(env, n);
    Rng rng = Rng::derive(seed, 1);
    const Eigen::MatrixXd design = lhs_sample(plan, rng);
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd s0 = design.row(i).head(ds.state_dim).transpose();
        const double action = design(i, ds.state_dim);
        const Eigen::VectorXd phi =
            design.row(i).segment(ds.state_dim + 1, ds.dyn_dim).transpose();
        const Eigen::VectorXd s1 = gen(s0, action);
        ds.rows.row(i).segment(ds.col_s0(), ds.state_dim) = s0.transpose();
        ds.rows(i, ds.col_action()) = action;
        ds.rows.row(i).segment(ds.col_phi(), ds.dyn_dim) = phi.transpose();
        ds.rows.row(i).segment(ds.col_s1(), ds.state_dim) = s1.transpose();
        ds.rows(i, ds.col_reward()) = 1.0;
    }
    return ds;
}

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) {
        path = (std::filesystem::temp_directory_path() /
                ("prorl-surrogate-" + std::to_string(::getpid()) + "-" + name))
                   .string();
    }
    ~TempFile() { std::remove(path.c_str()); }
};

} // namespace

TEST_CASE("normalization round-trips and flags constant features") {
    Eigen::MatrixXd x(5, 3);
    x << 1.0, 7.0, -2.0,
         2.0, 7.0, -1.0,
         3.0, 7.0, 0.5,
         4.0, 7.0, 2.0,
         5.0, 7.0, 4.0;
    const Normalization n = Normalization::fit(x);
    CHECK_FALSE(n.constant[0]);
    CHECK(n.constant[1]); // zero-spread column
    CHECK_FALSE(n.constant[2]);
    CHECK(n.std[1] == 1.0);
    CHECK(n.mean[0] == doctest::Approx(3.0).epsilon(1e-15));

    const Eigen::MatrixXd z = n.apply(x);
    // Constant column maps to exactly zero and back to exactly 7.
    for (int r = 0; r < 5; ++r) CHECK(z(r, 1) == 0.0);
    const Eigen::MatrixXd back = n.invert(z);
    for (int r = 0; r < 5; ++r) {
        for (int c = 0; c < 3; ++c) {
            CHECK(back(r, c) == doctest::Approx(x(r, c)).epsilon(1e-12));
        }
    }

    // Normalized columns are zero-mean unit-variance.
    CHECK(z.col(0).mean() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::sqrt(z.col(0).array().square().mean()) ==
          doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(Normalization::fit(Eigen::MatrixXd(0, 2)), ContractViolation);
    CHECK_THROWS_AS(n.apply(Eigen::MatrixXd::Zero(2, 2)), ContractViolation);
}

TEST_CASE("identity dynamics are learned to tight held-out loss") {
    const EnvModel env = EnvModel::defaults(EnvId::CartPole);
    const Dataset ds = synthetic_dataset(
        env, 4000, 15, [](const Eigen::VectorXd& s, double) { return s; });
    SurrogateConfig cfg;
    const SurrogateTrainResult r = train_surrogate(env, ds, cfg, 15);
    REQUIRE(static_cast<int>(r.holdout_loss.size()) == cfg.epochs);
    CHECK(r.holdout_loss.back() < 1e-3);
    CHECK(r.fidelity_ok);
}

TEST_CASE("linear dynamics reach 1e-2 normalized held-out RMSE") {
    const EnvModel env = EnvModel::defaults(EnvId::CartPole);
    Eigen::MatrixXd A(4, 4);
    A << 0.9, 0.1, 0.0, 0.0,
         0.0, 0.8, 0.2, 0.0,
         0.0, 0.0, 0.95, 0.1,
         0.05, 0.0, 0.0, 0.9;
    Eigen::VectorXd B(4);
    B << 0.0, 0.3, 0.0, -0.2;
    const Dataset ds = synthetic_dataset(
        env, 16000, 21,
        [&](const Eigen::VectorXd& s, double a) { return (A * s + B * a).eval(); });
    SurrogateConfig cfg;
    const SurrogateTrainResult r = train_surrogate(env, ds, cfg, 21);

    // Held-out RMSE in normalized (z-score) units, aggregated over the four
    // state dimensions.
    const SurrogateModel& m = r.model;
    double hold_sq = 0.0;
    for (int c = 0; c < 4; ++c) {
        const double z = r.holdout_rmse[c] / m.out_norm.std[c];
        hold_sq += z * z;
    }
    const double holdout_rmse_norm = std::sqrt(hold_sq / 4.0);
    CAPTURE(holdout_rmse_norm);
    CHECK(holdout_rmse_norm < 1e-2);

    // Independent probe: fresh states/actions/dynamism draws scored against
    // the generating equation must show the same error scale.
    Rng rng(99);
    double sq = 0.0;
    const int trials = 2000;
    for (int i = 0; i < trials; ++i) {
        Eigen::VectorXd s(4);
        s << rng.uniform(-2.4, 2.4), rng.uniform(-3, 3),
            rng.uniform(-env.episode.theta_limit, env.episode.theta_limit),
            rng.uniform(-3, 3);
        const double a = rng.uniform() < 0.5 ? -1.0 : 1.0;
        const Eigen::VectorXd phi = sample_dynamism(env.dynamism, rng);
        const State pred = predict_next(m, env, s, a, phi);
        const Eigen::VectorXd truth = A * s + B * a;
        const Eigen::VectorXd err =
            (pred - truth).array() / m.out_norm.std.array();
        sq += err.squaredNorm() / 4.0;
    }
    const double rmse_norm = std::sqrt(sq / trials);
    CAPTURE(rmse_norm);
    CHECK(rmse_norm < 2.0 * holdout_rmse_norm + 1e-3);
}

TEST_CASE("training is reproducible and the loss trend is sane") {
    const EnvModel env = EnvModel::defaults(EnvId::CartPole);
    const Dataset ds = collect_dataset(env, 600, 31);
    SurrogateConfig cfg;
    cfg.epochs = 25;
    const SurrogateTrainResult a = train_surrogate(env, ds, cfg, 31);
    const SurrogateTrainResult b = train_surrogate(env, ds, cfg, 31);

    CHECK(a.train_loss == b.train_loss);
    CHECK(a.holdout_loss == b.holdout_loss);
    for (std::size_t l = 0; l < a.model.params.weights.size(); ++l) {
        CHECK(a.model.params.weights[l] == b.model.params.weights[l]);
    }

    // Optimization sanity: training loss decreases in >= 80% of transitions.
    int drops = 0;
    for (std::size_t e = 1; e < a.train_loss.size(); ++e) {
        if (a.train_loss[e] <= a.train_loss[e - 1]) ++drops;
    }
    CHECK(drops * 5 >= static_cast<int>(a.train_loss.size() - 1) * 4);

    // A different seed changes the split/init and thus the trajectory.
    const SurrogateTrainResult c = train_surrogate(env, ds, cfg, 32);
    CHECK(a.train_loss != c.train_loss);
}

TEST_CASE("reported held-out RMSE is reproducible through predict_next") {
    const EnvModel env = EnvModel::defaults(EnvId::CartPole);
    const int n = 800;
    const Dataset ds = collect_dataset(env, n, 47);
    SurrogateConfig cfg;
    const SurrogateTrainResult r = train_surrogate(env, ds, cfg, 47);

    // Rebuild the trainer's held-out split (seeded shuffle, last 10%) and
    // score those rows one by one through the public prediction API. The
    // result must match the reported per-dimension RMSE, which pins down
    // input ordering, normalization round-trip, and output handling.
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng split_rng = Rng::derive(47, 1);
    shuffle(idx, split_rng);
    const int n_hold = static_cast<int>(std::lround(0.1 * n));
    REQUIRE(n_hold == 80);

    Eigen::VectorXd sq = Eigen::VectorXd::Zero(4);
    for (int k = n - n_hold; k < n; ++k) {
        const int i = idx[static_cast<std::size_t>(k)];
        const State pred =
            predict_next(r.model, env, ds.s0(i), ds.action(i), ds.phi(i));
        sq += (pred - ds.s1(i)).array().square().matrix();
    }
    const Eigen::VectorXd rmse = (sq / n_hold).array().sqrt();
    for (int c = 0; c < 4; ++c) {
        CAPTURE(c);
        CHECK(rmse[c] == doctest::Approx(r.holdout_rmse[c]).epsilon(1e-9));
    }

    // Training rows are fit at least as well as a constant predictor: the
    // aggregate z-score RMSE over the rows the optimizer saw stays below 1.
    Eigen::VectorXd train_sq = Eigen::VectorXd::Zero(4);
    for (int k = 0; k < n - n_hold; ++k) {
        const int i = idx[static_cast<std::size_t>(k)];
        const State pred =
            predict_next(r.model, env, ds.s0(i), ds.action(i), ds.phi(i));
        train_sq += (pred - ds.s1(i)).array().square().matrix();
    }
    const Eigen::VectorXd train_rmse_z =
        (train_sq / (n - n_hold)).array().sqrt() /
        r.model.out_norm.std.array();
    CAPTURE(train_rmse_z.transpose());
    CHECK(train_rmse_z.maxCoeff() < 1.0);
}

TEST_CASE("prediction is deterministic and batch equals single") {
    const EnvModel env = EnvModel::defaults(EnvId::CartPole);
    const Dataset ds = collect_dataset(env, 300, 53);
    SurrogateConfig cfg;
    cfg.epochs = 5;
    const SurrogateModel m = train_surrogate(env, ds, cfg, 53).model;

    Rng rng(5);
    State s(4);
    s << 0.2, -0.5, 0.05, 0.4;
    Eigen::MatrixXd phis(7, 9);
    for (int i = 0; i < 7; ++i) {
        phis.row(i) = sample_dynamism(env.dynamism, rng).transpose();
    }
    const Eigen::MatrixXd batch = predict_batch(m, env, s, 1.0, phis);
    REQUIRE(batch.rows() == 7);
    for (int i = 0; i < 7; ++i) {
        const State one = predict_next(m, env, s, 1.0, phis.row(i).transpose());
        for (int c = 0; c < 4; ++c) CHECK(batch(i, c) == one[c]);
    }
    // Same inputs, same outputs, bit for bit.
    CHECK(predict_batch(m, env, s, 1.0, phis) == batch);

    // Schema violations are contract errors.
    CHECK_THROWS_AS(predict_batch(m, env, s, 1.0, Eigen::MatrixXd::Zero(3, 4)),
                    ContractViolation);
    const EnvModel pd = EnvModel::defaults(EnvId::Pendulum);
    CHECK_THROWS_AS(predict_next(m, pd, State::Zero(2), 0.0,
                                 pd.dynamism.mean_sample()),
                    ContractViolation);
}

TEST_CASE("pendulum predictions come back wrapped and clamped") {
    const EnvModel env = EnvModel::defaults(EnvId::Pendulum);
    const Dataset ds = collect_dataset(env, 500, 61);
    SurrogateConfig cfg;
    cfg.epochs = 10;
    const SurrogateModel m = train_surrogate(env, ds, cfg, 61).model;

    Rng rng(62);
    for (int i = 0; i < 200; ++i) {
        State s(2);
        s << rng.uniform(-kPi, kPi), rng.uniform(-8.0, 8.0);
        const double a = rng.uniform(-2.0, 2.0);
        const State pred = predict_next(m, env, s, a, sample_dynamism(env.dynamism, rng));
        CHECK(pred[0] >= -kPi);
        CHECK(pred[0] <= kPi);
        CHECK(std::abs(pred[1]) <= 8.0);
    }
}

TEST_CASE("model serialization reproduces predictions bit-identically") {
    TempFile file("model.json");
    const EnvModel env = EnvModel::defaults(EnvId::CartPole);
    const Dataset ds = collect_dataset(env, 300, 71);
    SurrogateConfig cfg;
    cfg.epochs = 5;
    const SurrogateModel m = train_surrogate(env, ds, cfg, 71).model;
    save_surrogate(m, file.path);
    const SurrogateModel back = load_surrogate(file.path);

    CHECK(back.env == m.env);
    CHECK(back.input_names == m.input_names);
    CHECK(back.output_names == m.output_names);

    Rng rng(72);
    for (int i = 0; i < 50; ++i) {
        State s(4);
        s << rng.uniform(-2.4, 2.4), rng.uniform(-3, 3), rng.uniform(-0.2, 0.2),
            rng.uniform(-3, 3);
        const DynamismSample phi = sample_dynamism(env.dynamism, rng);
        const State p1 = predict_next(m, env, s, 1.0, phi);
        const State p2 = predict_next(back, env, s, 1.0, phi);
        for (int c = 0; c < 4; ++c) CHECK(p1[c] == p2[c]);
    }
}

TEST_CASE("loading rejects corrupted model files") {
    TempFile file("bad.json");
    {
        std::ofstream f(file.path);
        f << "{\"format\": \"something-else\"}\n";
    }
    CHECK_THROWS_AS(load_surrogate(file.path), ConfigError);
    {
        std::ofstream f(file.path);
        f << "not json at all\n";
    }
    CHECK_THROWS_AS(load_surrogate(file.path), ConfigError);
    CHECK_THROWS_AS(load_surrogate("/nonexistent/path/model.json"), ConfigError);
}

TEST_CASE("training rejects unusable datasets") {
    const EnvModel cp = EnvModel::defaults(EnvId::CartPole);
    const EnvModel pd = EnvModel::defaults(EnvId::Pendulum);
    const Dataset one = collect_dataset(cp, 1, 1);
    SurrogateConfig cfg;
    CHECK_THROWS_AS(train_surrogate(cp, one, cfg, 1), ContractViolation);

    const Dataset ds = collect_dataset(cp, 10, 1);
    CHECK_THROWS_AS(train_surrogate(pd, ds, cfg, 1), ContractViolation);

    SurrogateConfig bad = cfg;
    bad.epochs = 0;
    CHECK_THROWS_AS(train_surrogate(cp, ds, bad, 1), ContractViolation);
}
