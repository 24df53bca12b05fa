#ifndef PRORL_MLP_HPP
#define PRORL_MLP_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "prorl/common.hpp"
#include "prorl/rng.hpp"

// Minimal fully connected network stack shared by the dynamics surrogate,
// the actor and the critic: batched forward, exact backprop for the fixed
// MLP topology, Adam with decoupled weight decay. Everything is double
// precision and sized for desk-scale models (a few thousand parameters).

namespace prorl {

enum class Activation { Elu, Tanh };

// Identity: raw affine outputs. PerHead: also raw outputs, but tagged so the
// owner knows a distribution head (softmax / Gaussian) interprets them.
enum class OutputActivation { Identity, PerHead };

struct MlpSpec {
    std::vector<int> layer_sizes; // input, hidden..., output
    Activation hidden_activation = Activation::Elu;
    OutputActivation output_activation = OutputActivation::Identity;

    // Two hidden layers of 32 ELU units, the default for every network here.
    static MlpSpec dense(int input, int output,
                         OutputActivation out_act = OutputActivation::Identity) {
        MlpSpec s;
        s.layer_sizes = {input, 32, 32, output};
        s.output_activation = out_act;
        return s;
    }

    void validate() const;
    int input_size() const { return layer_sizes.front(); }
    int output_size() const { return layer_sizes.back(); }
    int num_layers() const { return static_cast<int>(layer_sizes.size()) - 1; }
};

// Weight matrices are (out x in); also reused as the gradient container.
struct MlpParams {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    bool all_finite() const;
    void set_zero();
};

MlpParams zeros_like(const MlpSpec& spec);

// Uniform +-sqrt(6 / (fan_in + fan_out)) weights, zero biases.
MlpParams init_params(const MlpSpec& spec, Rng& rng);

// ELU with alpha = 1.
inline double elu(double x) { return x > 0.0 ? x : std::expm1(x); }

// Per-element Huber (0.5 e^2 inside |e| <= delta, linear outside), averaged
// over all elements.
double huber_loss(const Eigen::VectorXd& pred, const Eigen::VectorXd& target,
                  double delta);

// Layer activations captured during a forward pass for use by backprop.
// pre[l] / post[l] are the pre- and post-activation values of layer l;
// input is the batch fed to layer 0.
struct ForwardCache {
    Eigen::MatrixXd input;
    std::vector<Eigen::MatrixXd> pre;
    std::vector<Eigen::MatrixXd> post;
};

// Batched forward pass; rows are samples. Passing a cache enables backward.
Eigen::MatrixXd forward_batch(const MlpSpec& spec, const MlpParams& params,
                              const Eigen::MatrixXd& input,
                              ForwardCache* cache = nullptr);

Eigen::VectorXd forward(const MlpSpec& spec, const MlpParams& params,
                        const Eigen::VectorXd& input);

// Backprop of an arbitrary scalar loss given dLoss/dOutput per sample
// (same shape as the forward output). Returns exact parameter gradients.
MlpParams backward_from_output_grads(const MlpSpec& spec, const MlpParams& params,
                                     const ForwardCache& cache,
                                     const Eigen::MatrixXd& output_grads);

// Gradients of the mean Huber loss over the batch. loss_out, when non-null,
// receives the loss value from the same forward pass.
MlpParams backward_huber(const MlpSpec& spec, const MlpParams& params,
                         const Eigen::MatrixXd& inputs,
                         const Eigen::MatrixXd& targets, double delta,
                         double* loss_out = nullptr);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4; // decoupled: shrinks params after the moment step
};

struct AdamState {
    MlpParams m;
    MlpParams v;
    std::int64_t t = 0;
    AdamConfig cfg;

    static AdamState init(const MlpSpec& spec, const AdamConfig& cfg);
};

// One Adam update in place. Bias-corrected moment step first, then the
// decoupled weight-decay shrinkage -lr * decay * theta.
void adam_step(MlpParams& params, const MlpParams& grads, AdamState& state);

// Same update rule for a flat extra parameter vector (e.g. a learned
// log-std that lives outside the MLP).
struct AdamVecState {
    Eigen::VectorXd m;
    Eigen::VectorXd v;
    std::int64_t t = 0;
    AdamConfig cfg;

    static AdamVecState init(int dim, const AdamConfig& cfg);
};

void adam_step_vec(Eigen::VectorXd& params, const Eigen::VectorXd& grads,
                   AdamVecState& state);

} // namespace prorl

#endif
