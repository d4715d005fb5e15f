#include "pegfit/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace pegfit {
namespace nn {

std::size_t DenseStack::param_count() const {
    std::size_t n = 0;
    for (const DenseLayer& l : layers) n += l.w.size() + l.b.size();
    return n;
}

DenseStack DenseStack::make(const std::vector<int>& dims, bool relu_last, RngStream& rng) {
    if (dims.size() < 2) throw std::invalid_argument("DenseStack::make: need at least one layer");
    DenseStack stack;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        DenseLayer l;
        l.in = dims[i];
        l.out = dims[i + 1];
        l.relu = (i + 2 < dims.size()) || relu_last;
        double bound = std::sqrt(6.0 / static_cast<double>(l.in));
        l.w.resize(static_cast<std::size_t>(l.in) * static_cast<std::size_t>(l.out));
        for (double& w : l.w) w = rng.uniform(-bound, bound);
        l.b.assign(static_cast<std::size_t>(l.out), 0.0);
        stack.layers.push_back(std::move(l));
    }
    return stack;
}

std::vector<double> forward(const DenseStack& stack, std::span<const double> input, StackCache* cache) {
    if (static_cast<int>(input.size()) != stack.input_dim())
        throw std::invalid_argument("forward: input dimension mismatch");
    std::vector<double> cur(input.begin(), input.end());
    if (cache) {
        cache->acts.clear();
        cache->acts.push_back(cur);
    }
    for (const DenseLayer& l : stack.layers) {
        std::vector<double> next(static_cast<std::size_t>(l.out));
        for (int o = 0; o < l.out; ++o) {
            const double* row = l.w.data() + static_cast<std::size_t>(o) * static_cast<std::size_t>(l.in);
            double acc = l.b[static_cast<std::size_t>(o)];
            for (int i = 0; i < l.in; ++i) acc += row[i] * cur[static_cast<std::size_t>(i)];
            next[static_cast<std::size_t>(o)] = l.relu && acc < 0.0 ? 0.0 : acc;
        }
        cur = std::move(next);
        if (cache) cache->acts.push_back(cur);
    }
    return cur;
}

std::vector<double> backward(const DenseStack& stack, const StackCache& cache,
                             std::span<const double> out_grad, std::span<double> grad) {
    if (cache.acts.size() != stack.layers.size() + 1)
        throw std::invalid_argument("backward: cache does not match stack");
    std::vector<double> g(out_grad.begin(), out_grad.end());
    // Per-layer offsets into the flat grad buffer.
    std::vector<std::size_t> offsets(stack.layers.size());
    std::size_t off = 0;
    for (std::size_t li = 0; li < stack.layers.size(); ++li) {
        offsets[li] = off;
        off += stack.layers[li].w.size() + stack.layers[li].b.size();
    }
    if (grad.size() < off) throw std::invalid_argument("backward: grad buffer too small");

    for (std::size_t li = stack.layers.size(); li-- > 0;) {
        const DenseLayer& l = stack.layers[li];
        const std::vector<double>& x = cache.acts[li];
        const std::vector<double>& y = cache.acts[li + 1];
        // ReLU gate: post-activation is zero exactly where the gate closes
        // (ties get subgradient 0).
        for (int o = 0; o < l.out; ++o)
            if (l.relu && y[static_cast<std::size_t>(o)] <= 0.0) g[static_cast<std::size_t>(o)] = 0.0;
        double* wg = grad.data() + offsets[li];
        double* bg = wg + l.w.size();
        std::vector<double> gx(static_cast<std::size_t>(l.in), 0.0);
        for (int o = 0; o < l.out; ++o) {
            double go = g[static_cast<std::size_t>(o)];
            if (go == 0.0) continue;
            const double* row = l.w.data() + static_cast<std::size_t>(o) * static_cast<std::size_t>(l.in);
            double* wrow = wg + static_cast<std::size_t>(o) * static_cast<std::size_t>(l.in);
            for (int i = 0; i < l.in; ++i) {
                wrow[i] += go * x[static_cast<std::size_t>(i)];
                gx[static_cast<std::size_t>(i)] += go * row[i];
            }
            bg[o] += go;
        }
        g = std::move(gx);
    }
    return g;
}

MaeResult mae_loss(std::span<const double> pred, std::span<const double> target) {
    if (pred.empty() || pred.size() != target.size())
        throw std::invalid_argument("mae_loss: empty or mismatched inputs");
    MaeResult res;
    res.grad.resize(pred.size());
    double inv = 1.0 / static_cast<double>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        double e = pred[i] - target[i];
        res.loss += std::abs(e) * inv;
        res.grad[i] = e > 0.0 ? inv : (e < 0.0 ? -inv : 0.0);
    }
    return res;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw std::invalid_argument("adam_step: size mismatch");
    for (double g : grads)
        if (!std::isfinite(g)) throw std::runtime_error("adam_step: non-finite gradient");
    state.t++;
    double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
        double mhat = state.m[i] / bc1;
        double vhat = state.v[i] / bc2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
}

double CosineSchedule::lr(int epoch) const {
    int e = epoch % cycle_epochs;
    constexpr double pi = 3.14159265358979323846;
    return lr_min + 0.5 * (lr_max - lr_min) *
                        (1.0 + std::cos(pi * static_cast<double>(e) / static_cast<double>(cycle_epochs)));
}

std::size_t stack_params_into(const DenseStack& stack, std::vector<double>& flat) {
    std::size_t start = flat.size();
    for (const DenseLayer& l : stack.layers) {
        flat.insert(flat.end(), l.w.begin(), l.w.end());
        flat.insert(flat.end(), l.b.begin(), l.b.end());
    }
    return flat.size() - start;
}

std::size_t stack_params_from(DenseStack& stack, std::span<const double> flat) {
    std::size_t pos = 0;
    for (DenseLayer& l : stack.layers) {
        for (double& w : l.w) w = flat[pos++];
        for (double& b : l.b) b = flat[pos++];
    }
    return pos;
}

}  // namespace nn
}  // namespace pegfit
