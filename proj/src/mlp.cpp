#include "prorl/mlp.hpp"

#include <cmath>

namespace prorl {

void MlpSpec::validate() const {
    require(layer_sizes.size() >= 2, "MlpSpec: need at least input and output sizes");
    for (int s : layer_sizes)
        require(s >= 1, "MlpSpec: layer sizes must be >= 1");
}

bool MlpParams::all_finite() const {
    for (const auto& w : weights)
        if (!w.allFinite()) return false;
    for (const auto& b : biases)
        if (!b.allFinite()) return false;
    return true;
}

void MlpParams::set_zero() {
    for (auto& w : weights) w.setZero();
    for (auto& b : biases) b.setZero();
}

MlpParams zeros_like(const MlpSpec& spec) {
    spec.validate();
    MlpParams p;
    for (int l = 0; l < spec.num_layers(); ++l) {
        p.weights.emplace_back(
            Eigen::MatrixXd::Zero(spec.layer_sizes[l + 1], spec.layer_sizes[l]));
        p.biases.emplace_back(Eigen::VectorXd::Zero(spec.layer_sizes[l + 1]));
    }
    return p;
}

MlpParams init_params(const MlpSpec& spec, Rng& rng) {
    MlpParams p = zeros_like(spec);
    for (int l = 0; l < spec.num_layers(); ++l) {
        const int fan_in = spec.layer_sizes[l];
        const int fan_out = spec.layer_sizes[l + 1];
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        auto& w = p.weights[l];
        for (Eigen::Index i = 0; i < w.rows(); ++i)
            for (Eigen::Index j = 0; j < w.cols(); ++j)
                w(i, j) = rng.uniform(-bound, bound);
    }
    return p;
}

double huber_loss(const Eigen::VectorXd& pred, const Eigen::VectorXd& target,
                  double delta) {
    require(pred.size() == target.size(), "huber_loss: length mismatch");
    require(pred.size() >= 1, "huber_loss: empty input");
    require(delta > 0.0, "huber_loss: delta must be > 0");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < pred.size(); ++i) {
        const double e = std::abs(pred[i] - target[i]);
        sum += e <= delta ? 0.5 * e * e : delta * (e - 0.5 * delta);
    }
    return sum / static_cast<double>(pred.size());
}

namespace {

void apply_activation(Activation act, const Eigen::MatrixXd& pre,
                      Eigen::MatrixXd& post) {
    if (act == Activation::Elu) {
        // exp argument capped at 0: the value is discarded where pre > 0.
        post = (pre.array() > 0.0)
                   .select(pre.array(), pre.array().min(0.0).exp() - 1.0);
    } else {
        post = pre.array().tanh();
    }
}

// Derivative from cached pre/post values; for ELU, elu'(x) = elu(x) + 1 on
// the negative branch.
Eigen::ArrayXXd activation_derivative(Activation act, const Eigen::MatrixXd& pre,
                                      const Eigen::MatrixXd& post) {
    if (act == Activation::Elu)
        return (pre.array() > 0.0).select(Eigen::ArrayXXd::Ones(pre.rows(), pre.cols()),
                                          post.array() + 1.0);
    return 1.0 - post.array().square();
}

} // namespace

Eigen::MatrixXd forward_batch(const MlpSpec& spec, const MlpParams& params,
                              const Eigen::MatrixXd& input, ForwardCache* cache) {
    spec.validate();
    require(static_cast<int>(params.weights.size()) == spec.num_layers(),
            "forward: params/spec layer count mismatch");
    require(input.cols() == spec.input_size(), "forward: input dimension mismatch");
    require(input.rows() >= 1, "forward: empty batch");

    const int L = spec.num_layers();
    if (cache) {
        cache->input = input;
        cache->pre.assign(L, {});
        cache->post.assign(L, {});
    }

    Eigen::MatrixXd a = input;
    for (int l = 0; l < L; ++l) {
        require(params.weights[l].rows() == spec.layer_sizes[l + 1] &&
                    params.weights[l].cols() == spec.layer_sizes[l],
                "forward: weight shape mismatch");
        Eigen::MatrixXd z = a * params.weights[l].transpose();
        z.rowwise() += params.biases[l].transpose();
        if (l + 1 < L) {
            Eigen::MatrixXd post;
            apply_activation(spec.hidden_activation, z, post);
            if (cache) {
                cache->pre[l] = std::move(z);
                cache->post[l] = post;
            }
            a = std::move(post);
        } else {
            // Identity and PerHead both emit raw affine outputs here.
            if (cache) {
                cache->pre[l] = z;
                cache->post[l] = z;
            }
            a = std::move(z);
        }
    }
    return a;
}

Eigen::VectorXd forward(const MlpSpec& spec, const MlpParams& params,
                        const Eigen::VectorXd& input) {
    return forward_batch(spec, params, input.transpose()).row(0);
}

MlpParams backward_from_output_grads(const MlpSpec& spec, const MlpParams& params,
                                     const ForwardCache& cache,
                                     const Eigen::MatrixXd& output_grads) {
    const int L = spec.num_layers();
    require(static_cast<int>(cache.pre.size()) == L,
            "backward: cache does not match spec");
    require(output_grads.rows() == cache.input.rows() &&
                output_grads.cols() == spec.output_size(),
            "backward: output grad shape mismatch");

    MlpParams grads = zeros_like(spec);
    Eigen::MatrixXd dz = output_grads; // output layer is affine
    for (int l = L - 1; l >= 0; --l) {
        const Eigen::MatrixXd& a_prev = l == 0 ? cache.input : cache.post[l - 1];
        grads.weights[l] = dz.transpose() * a_prev;
        grads.biases[l] = dz.colwise().sum();
        if (l > 0) {
            Eigen::MatrixXd da = dz * params.weights[l];
            dz = da.array() * activation_derivative(spec.hidden_activation,
                                                    cache.pre[l - 1], cache.post[l - 1]);
        }
    }
    return grads;
}

MlpParams backward_huber(const MlpSpec& spec, const MlpParams& params,
                         const Eigen::MatrixXd& inputs,
                         const Eigen::MatrixXd& targets, double delta,
                         double* loss_out) {
    require(inputs.rows() == targets.rows(), "backward_huber: batch size mismatch");
    require(targets.cols() == spec.output_size(), "backward_huber: target dim mismatch");
    require(delta > 0.0, "backward_huber: delta must be > 0");

    ForwardCache cache;
    const Eigen::MatrixXd pred = forward_batch(spec, params, inputs, &cache);
    const Eigen::ArrayXXd err = (pred - targets).array();
    const double scale = 1.0 / static_cast<double>(err.size());

    if (loss_out) {
        const Eigen::ArrayXXd abs_err = err.abs();
        *loss_out = scale * (abs_err <= delta)
                                .select(0.5 * err.square(),
                                        delta * (abs_err - 0.5 * delta))
                                .sum();
    }
    // dHuber/de = clamp(e, -delta, delta); continuous at the knee.
    const Eigen::MatrixXd dpred = scale * err.min(delta).max(-delta).matrix();
    return backward_from_output_grads(spec, params, cache, dpred);
}

AdamState AdamState::init(const MlpSpec& spec, const AdamConfig& cfg) {
    AdamState s;
    s.m = zeros_like(spec);
    s.v = zeros_like(spec);
    s.cfg = cfg;
    return s;
}

namespace {

template <typename T>
void adam_update(T& p, const T& g, T& m, T& v, double corr1, double corr2,
                 const AdamConfig& c) {
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v.array() = c.beta2 * v.array() + (1.0 - c.beta2) * g.array().square();
    p.array() -= c.lr * (m.array() / corr1) / ((v.array() / corr2).sqrt() + c.eps);
    if (c.weight_decay != 0.0) p.array() -= c.lr * c.weight_decay * p.array();
}

} // namespace

void adam_step(MlpParams& params, const MlpParams& grads, AdamState& state) {
    require(params.weights.size() == grads.weights.size(),
            "adam_step: params/grads layer count mismatch");
    require(state.cfg.lr > 0.0, "adam_step: learning rate must be > 0");
    state.t += 1;
    const double corr1 = 1.0 - std::pow(state.cfg.beta1, static_cast<double>(state.t));
    const double corr2 = 1.0 - std::pow(state.cfg.beta2, static_cast<double>(state.t));
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        adam_update(params.weights[l], grads.weights[l], state.m.weights[l],
                    state.v.weights[l], corr1, corr2, state.cfg);
        adam_update(params.biases[l], grads.biases[l], state.m.biases[l],
                    state.v.biases[l], corr1, corr2, state.cfg);
    }
}

AdamVecState AdamVecState::init(int dim, const AdamConfig& cfg) {
    AdamVecState s;
    s.m = Eigen::VectorXd::Zero(dim);
    s.v = Eigen::VectorXd::Zero(dim);
    s.cfg = cfg;
    return s;
}

void adam_step_vec(Eigen::VectorXd& params, const Eigen::VectorXd& grads,
                   AdamVecState& state) {
    require(params.size() == grads.size(), "adam_step_vec: size mismatch");
    state.t += 1;
    const double corr1 = 1.0 - std::pow(state.cfg.beta1, static_cast<double>(state.t));
    const double corr2 = 1.0 - std::pow(state.cfg.beta2, static_cast<double>(state.t));
    adam_update(params, grads, state.m, state.v, corr1, corr2, state.cfg);
}

} // namespace prorl
