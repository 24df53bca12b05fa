#include "prorl/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "prorl/math_util.hpp"

namespace prorl {

namespace {

using nlohmann::json;

constexpr const char* kFormatTag = "prorl-surrogate-v1";

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& x, const std::vector<int>& idx,
                            int begin, int count) {
    Eigen::MatrixXd out(count, x.cols());
    for (int i = 0; i < count; ++i) out.row(i) = x.row(idx[static_cast<std::size_t>(begin + i)]);
    return out;
}

// Row-wise network evaluation with buffers hoisted out of the loop. Every
// row goes through exactly this arithmetic whatever the batch height, which
// is what makes batched predictions bit-identical to single ones.
Eigen::MatrixXd forward_rows(const MlpSpec& spec, const MlpParams& params,
                             const Eigen::MatrixXd& input) {
    spec.validate();
    require(static_cast<int>(params.weights.size()) == spec.num_layers(),
            "forward_rows: params/spec layer count mismatch");
    require(input.cols() == spec.input_size(),
            "forward_rows: input dimension mismatch");

    const int L = spec.num_layers();
    const int k = static_cast<int>(input.rows());
    std::vector<Eigen::VectorXd> act(static_cast<std::size_t>(L));
    for (int l = 0; l < L; ++l) {
        act[static_cast<std::size_t>(l)].resize(spec.layer_sizes[static_cast<std::size_t>(l) + 1]);
    }

    Eigen::MatrixXd out(k, spec.output_size());
    Eigen::VectorXd x(spec.input_size());
    for (int i = 0; i < k; ++i) {
        x = input.row(i).transpose();
        const Eigen::VectorXd* a = &x;
        for (int l = 0; l < L; ++l) {
            Eigen::VectorXd& z = act[static_cast<std::size_t>(l)];
            z.noalias() = params.weights[static_cast<std::size_t>(l)] * (*a);
            z += params.biases[static_cast<std::size_t>(l)];
            if (l + 1 < L) {
                for (Eigen::Index j = 0; j < z.size(); ++j) {
                    z[j] = spec.hidden_activation == Activation::Elu
                               ? elu(z[j])
                               : std::tanh(z[j]);
                }
            }
            a = &z;
        }
        out.row(i) = a->transpose();
    }
    return out;
}

double matrix_huber(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target,
                    double delta) {
    const Eigen::Map<const Eigen::VectorXd> p(pred.data(), pred.size());
    const Eigen::Map<const Eigen::VectorXd> t(target.data(), target.size());
    return huber_loss(p, t, delta);
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    const auto rows = j.size();
    if (rows == 0) return Eigen::MatrixXd(0, 0);
    const auto cols = j.at(0).size();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        if (j.at(r).size() != cols) throw ConfigError("surrogate: ragged weight matrix");
        for (std::size_t c = 0; c < cols; ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                j.at(r).at(c).get<double>();
        }
    }
    return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        v[static_cast<Eigen::Index>(i)] = j.at(i).get<double>();
    }
    return v;
}

// Post-process raw network outputs into valid internal states.
void finalize_states(const EnvModel& env, Eigen::MatrixXd& states) {
    if (env.id != EnvId::Pendulum) return;
    for (Eigen::Index r = 0; r < states.rows(); ++r) {
        states(r, 0) = wrap_to_pi(states(r, 0));
        states(r, 1) = clamp(states(r, 1), -env.episode.max_speed, env.episode.max_speed);
    }
}

} // namespace

Normalization Normalization::fit(const Eigen::MatrixXd& x) {
    require(x.rows() > 0, "Normalization: empty input");
    Normalization n;
    n.mean = x.colwise().mean();
    const Eigen::MatrixXd centered = x.rowwise() - n.mean.transpose();
    n.std = (centered.array().square().colwise().mean()).sqrt();
    n.constant.assign(static_cast<std::size_t>(x.cols()), false);
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        const double floor = 1e-12 * std::max(1.0, std::abs(n.mean[c]));
        if (n.std[c] <= floor) {
            n.constant[static_cast<std::size_t>(c)] = true;
            n.std[c] = 1.0;
        }
    }
    return n;
}

Eigen::MatrixXd Normalization::apply(const Eigen::MatrixXd& x) const {
    require(x.cols() == mean.size(), "Normalization: width mismatch");
    return (x.rowwise() - mean.transpose()).array().rowwise() /
           std.transpose().array();
}

Eigen::MatrixXd Normalization::invert(const Eigen::MatrixXd& z) const {
    require(z.cols() == mean.size(), "Normalization: width mismatch");
    return (z.array().rowwise() * std.transpose().array()).matrix().rowwise() +
           mean.transpose();
}

SurrogateTrainResult train_surrogate(const EnvModel& env, const Dataset& ds,
                                     const SurrogateConfig& cfg,
                                     std::uint64_t seed) {
    ds.validate();
    require(ds.env == env.id, "train_surrogate: dataset environment mismatch");
    require(cfg.epochs >= 1 && cfg.batch_size >= 1, "train_surrogate: bad config");
    require(ds.n() >= 2, "train_surrogate: need at least two rows");

    const int n = ds.n();
    const int dim_s = ds.state_dim;
    const int dim_phi = ds.dyn_dim;
    const int dim_in = dim_s + 1 + dim_phi;

    // Assemble inputs and (for Pendulum, angle-unwrapped) targets.
    Eigen::MatrixXd x(n, dim_in);
    x.leftCols(dim_s) = ds.rows.middleCols(ds.col_s0(), dim_s);
    x.col(dim_s) = ds.rows.col(ds.col_action());
    x.rightCols(dim_phi) = ds.rows.middleCols(ds.col_phi(), dim_phi);

    Eigen::MatrixXd y = ds.rows.middleCols(ds.col_s1(), dim_s);
    if (env.id == EnvId::Pendulum) {
        for (int i = 0; i < n; ++i) {
            const double theta0 = ds.rows(i, ds.col_s0());
            y(i, 0) = theta0 + wrap_to_pi(y(i, 0) - theta0);
        }
    }

    // 90/10 split on a seeded shuffle; normalization statistics come from the
    // training rows only.
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    Rng split_rng = Rng::derive(seed, 1);
    shuffle(idx, split_rng);
    const int n_hold = static_cast<int>(clamp(
        std::lround(cfg.holdout_fraction * n), 1L, static_cast<long>(n - 1)));
    const int n_train = n - n_hold;

    SurrogateTrainResult result;
    SurrogateModel& m = result.model;
    m.env = env.id;
    m.spec = MlpSpec::dense(dim_in, dim_s);
    for (const auto& s : env.state_names) m.input_names.push_back(s);
    m.input_names.emplace_back("action");
    for (const auto& v : env.dynamism.vars) m.input_names.push_back(v.name);
    for (const auto& s : env.state_names) m.output_names.push_back("next_" + s);

    m.in_norm = Normalization::fit(gather_rows(x, idx, 0, n_train));
    m.out_norm = Normalization::fit(gather_rows(y, idx, 0, n_train));
    const Eigen::MatrixXd xz = m.in_norm.apply(x);
    const Eigen::MatrixXd yz = m.out_norm.apply(y);

    Rng init_rng = Rng::derive(seed, 2);
    m.params = init_params(m.spec, init_rng);
    AdamState adam = AdamState::init(m.spec, cfg.adam);

    std::vector<int> train_idx(idx.begin(), idx.begin() + n_train);
    const Eigen::MatrixXd x_hold = gather_rows(xz, idx, n_train, n_hold);
    const Eigen::MatrixXd y_hold = gather_rows(yz, idx, n_train, n_hold);

    const double delta = 1.0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng epoch_rng = Rng::derive(seed, 3, static_cast<std::uint64_t>(epoch));
        shuffle(train_idx, epoch_rng);

        double loss_sum = 0.0;
        for (int begin = 0; begin < n_train; begin += cfg.batch_size) {
            const int count = std::min(cfg.batch_size, n_train - begin);
            const Eigen::MatrixXd xb = gather_rows(xz, train_idx, begin, count);
            const Eigen::MatrixXd yb = gather_rows(yz, train_idx, begin, count);
            double loss = 0.0;
            const MlpParams grads = backward_huber(m.spec, m.params, xb, yb, delta, &loss);
            adam_step(m.params, grads, adam);
            loss_sum += loss * count;
        }
        result.train_loss.push_back(loss_sum / n_train);

        const Eigen::MatrixXd hold_pred = forward_batch(m.spec, m.params, x_hold);
        result.holdout_loss.push_back(matrix_huber(hold_pred, y_hold, delta));
        if (!m.params.all_finite()) {
            throw NumericError("train_surrogate: non-finite parameters at epoch " +
                               std::to_string(epoch));
        }
    }

    // Fidelity: held-out RMSE per state dimension in raw units, against the
    // sampling span of that dimension. The Pendulum angle error is circular.
    const Eigen::MatrixXd pred_raw =
        m.out_norm.invert(forward_batch(m.spec, m.params, x_hold));
    const Eigen::MatrixXd target_raw = m.out_norm.invert(y_hold);
    result.holdout_rmse.resize(dim_s);
    for (int c = 0; c < dim_s; ++c) {
        double sq = 0.0;
        for (int r = 0; r < n_hold; ++r) {
            double e = pred_raw(r, c) - target_raw(r, c);
            if (env.id == EnvId::Pendulum && c == 0) e = wrap_to_pi(e);
            sq += e * e;
        }
        result.holdout_rmse[c] = std::sqrt(sq / n_hold);
    }
    result.span.resize(dim_s);
    for (int c = 0; c < dim_s; ++c) {
        const auto& [lo, hi] = env.lhs_state_box[static_cast<std::size_t>(c)];
        result.span[c] = hi - lo;
    }
    result.fidelity_ok =
        (result.holdout_rmse.array() <
         cfg.fidelity_max_rmse_fraction * result.span.array())
            .all();
    return result;
}

Eigen::MatrixXd predict_batch(const SurrogateModel& m, const EnvModel& env,
                              const State& s, double action,
                              const Eigen::MatrixXd& phis) {
    require(m.env == env.id, "predict_batch: environment mismatch");
    const int k = static_cast<int>(phis.rows());
    const int dim_s = static_cast<int>(s.size());
    require(dim_s + 1 + static_cast<int>(phis.cols()) == m.input_dim(),
            "predict_batch: input width mismatch");

    Eigen::MatrixXd x(k, m.input_dim());
    x.leftCols(dim_s) = s.transpose().replicate(k, 1);
    x.col(dim_s).setConstant(action);
    x.rightCols(phis.cols()) = phis;

    Eigen::MatrixXd out =
        m.out_norm.invert(forward_rows(m.spec, m.params, m.in_norm.apply(x)));
    finalize_states(env, out);
    return out;
}

State predict_next(const SurrogateModel& m, const EnvModel& env, const State& s,
                   double action, const DynamismSample& phi) {
    const Eigen::MatrixXd out = predict_batch(m, env, s, action, phi.transpose());
    return out.row(0).transpose();
}

void save_surrogate(const SurrogateModel& m, const std::string& path) {
    json j;
    j["format"] = kFormatTag;
    j["environment"] = env_name(m.env);
    j["layer_sizes"] = m.spec.layer_sizes;
    j["hidden_activation"] = m.spec.hidden_activation == Activation::Elu ? "elu" : "tanh";
    json weights = json::array();
    json biases = json::array();
    for (std::size_t l = 0; l < m.params.weights.size(); ++l) {
        weights.push_back(matrix_to_json(m.params.weights[l]));
        biases.push_back(vector_to_json(m.params.biases[l]));
    }
    j["weights"] = std::move(weights);
    j["biases"] = std::move(biases);
    j["input_mean"] = vector_to_json(m.in_norm.mean);
    j["input_std"] = vector_to_json(m.in_norm.std);
    j["input_constant"] = m.in_norm.constant;
    j["output_mean"] = vector_to_json(m.out_norm.mean);
    j["output_std"] = vector_to_json(m.out_norm.std);
    j["output_constant"] = m.out_norm.constant;
    j["input_names"] = m.input_names;
    j["output_names"] = m.output_names;

    std::ofstream f(path);
    if (!f) throw ConfigError("surrogate: cannot open for writing: " + path);
    f << j.dump(2) << '\n';
    if (!f) throw ConfigError("surrogate: write failed: " + path);
}

SurrogateModel load_surrogate(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("surrogate: cannot open: " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw ConfigError("surrogate: bad JSON in " + path + ": " + e.what());
    }

    SurrogateModel m;
    try {
        if (j.at("format").get<std::string>() != kFormatTag) {
            throw ConfigError("surrogate: unknown format tag in " + path);
        }
        m.env = env_from_name(j.at("environment").get<std::string>());
        m.spec.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
        m.spec.hidden_activation =
            j.at("hidden_activation").get<std::string>() == "tanh" ? Activation::Tanh
                                                                   : Activation::Elu;
        m.spec.validate();
        for (const auto& w : j.at("weights")) m.params.weights.push_back(matrix_from_json(w));
        for (const auto& b : j.at("biases")) m.params.biases.push_back(vector_from_json(b));
        m.in_norm.mean = vector_from_json(j.at("input_mean"));
        m.in_norm.std = vector_from_json(j.at("input_std"));
        m.in_norm.constant = j.at("input_constant").get<std::vector<bool>>();
        m.out_norm.mean = vector_from_json(j.at("output_mean"));
        m.out_norm.std = vector_from_json(j.at("output_std"));
        m.out_norm.constant = j.at("output_constant").get<std::vector<bool>>();
        m.input_names = j.at("input_names").get<std::vector<std::string>>();
        m.output_names = j.at("output_names").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw ConfigError("surrogate: missing fields in " + path + ": " + e.what());
    }

    require(static_cast<int>(m.params.weights.size()) == m.spec.num_layers(),
            "surrogate: layer count mismatch in " + path);
    for (int l = 0; l < m.spec.num_layers(); ++l) {
        const auto& w = m.params.weights[static_cast<std::size_t>(l)];
        require(w.rows() == m.spec.layer_sizes[static_cast<std::size_t>(l) + 1] &&
                    w.cols() == m.spec.layer_sizes[static_cast<std::size_t>(l)],
                "surrogate: weight shape mismatch in " + path);
    }
    require(m.in_norm.mean.size() == m.spec.input_size() &&
                m.out_norm.mean.size() == m.spec.output_size(),
            "surrogate: normalization shape mismatch in " + path);
    return m;
}

} // namespace prorl
