#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pegfit/rng.hpp"

namespace pegfit {
namespace nn {

// Fully-connected layer, weights out x in row-major. ReLU unless `relu` is
// false (identity, used on output layers).
struct DenseLayer {
    int in = 0;
    int out = 0;
    bool relu = true;
    std::vector<double> w;  // out*in
    std::vector<double> b;  // out
};

struct DenseStack {
    std::vector<DenseLayer> layers;

    int input_dim() const { return layers.front().in; }
    int output_dim() const { return layers.back().out; }
    std::size_t param_count() const;

    // He-uniform weights, zero bias. relu_last=false leaves the final layer
    // linear (regression heads).
    static DenseStack make(const std::vector<int>& dims, bool relu_last, RngStream& rng);
};

// Per-layer post-activation values; acts[0] is the input.
struct StackCache {
    std::vector<std::vector<double>> acts;
};

std::vector<double> forward(const DenseStack& stack, std::span<const double> input,
                            StackCache* cache = nullptr);

// Reverse-mode gradients. `grad` must be a flat buffer laid out as
// (W0, b0, W1, b1, ...) for this stack; contributions are accumulated (+=).
// Returns dL/dinput.
std::vector<double> backward(const DenseStack& stack, const StackCache& cache,
                             std::span<const double> out_grad, std::span<double> grad);

struct MaeResult {
    double loss = 0.0;
    std::vector<double> grad;
};

// Mean absolute error and its subgradient (0 at exact ties).
MaeResult mae_loss(std::span<const double> pred, std::span<const double> target);

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::int64_t t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

// Bias-corrected Adam update over a flat parameter/gradient pair. Throws on
// non-finite gradients.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr);

struct CosineSchedule {
    double lr_max = 1e-3;
    double lr_min = 0.0;
    int cycle_epochs = 100;  // warm restart period

    double lr(int epoch) const;
};

// Flat-parameter view helpers shared by every net in the project: parameters
// are serialized/updated in stack order, (W, b) per layer.
std::size_t stack_params_into(const DenseStack& stack, std::vector<double>& flat);
std::size_t stack_params_from(DenseStack& stack, std::span<const double> flat);

}  // namespace nn
}  // namespace pegfit
