#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "pegfit/nn.hpp"

using namespace pegfit;
using namespace pegfit::nn;

TEST_CASE("single linear layer gradients have the closed form g * x^T") {
    RngStream rng(1);
    DenseStack stack = DenseStack::make({3, 2}, false, rng);
    std::vector<double> x = {0.5, -1.0, 2.0};
    StackCache cache;
    forward(stack, x, &cache);
    std::vector<double> g = {1.0, -2.0};
    std::vector<double> grad(stack.param_count(), 0.0);
    std::vector<double> gx = backward(stack, cache, g, grad);
    // dL/dW[o][i] = g[o] * x[i]
    for (int o = 0; o < 2; ++o)
        for (int i = 0; i < 3; ++i)
            CHECK(grad[(std::size_t)(o * 3 + i)] == doctest::Approx(g[(std::size_t)o] * x[(std::size_t)i]).epsilon(1e-15));
    // bias grads
    CHECK(grad[6] == doctest::Approx(1.0));
    CHECK(grad[7] == doctest::Approx(-2.0));
    // input grad = W^T g
    for (int i = 0; i < 3; ++i) {
        double want = stack.layers[0].w[(std::size_t)i] * g[0] + stack.layers[0].w[(std::size_t)(3 + i)] * g[1];
        CHECK(gx[(std::size_t)i] == doctest::Approx(want).epsilon(1e-15));
    }
}

TEST_CASE("relu blocks gradient at negative pre-activation") {
    DenseStack stack;
    DenseLayer l;
    l.in = 1;
    l.out = 1;
    l.relu = true;
    l.w = {1.0};
    l.b = {-2.0};  // pre-activation negative for x=1
    stack.layers.push_back(l);
    StackCache cache;
    std::vector<double> y = forward(stack, std::vector<double>{1.0}, &cache);
    CHECK(y[0] == 0.0);
    std::vector<double> grad(stack.param_count(), 0.0);
    std::vector<double> gx = backward(stack, cache, std::vector<double>{1.0}, grad);
    CHECK(grad[0] == 0.0);
    CHECK(grad[1] == 0.0);
    CHECK(gx[0] == 0.0);
}

TEST_CASE("random 3-layer stack matches central finite differences") {
    RngStream rng(7);
    DenseStack stack = DenseStack::make({6, 16, 16, 4}, false, rng);
    std::vector<double> x(6), target(4);
    for (double& v : x) v = rng.gaussian();
    for (double& v : target) v = rng.gaussian();

    std::vector<double> params;
    stack_params_into(stack, params);

    auto loss_at = [&](const std::vector<double>& p) {
        DenseStack s2 = stack;
        stack_params_from(s2, p);
        std::vector<double> y = forward(s2, x);
        return mae_loss(y, target).loss;
    };

    StackCache cache;
    std::vector<double> y = forward(stack, x, &cache);
    MaeResult mae = mae_loss(y, target);
    std::vector<double> grad(stack.param_count(), 0.0);
    backward(stack, cache, mae.grad, grad);

    RngStream pick(99);
    int checked = 0;
    for (int t = 0; t < 1000; ++t) {
        std::size_t i = static_cast<std::size_t>(pick.next_u64() % params.size());
        double fd = oracle::central_diff(loss_at, params, i);
        double denom = std::max({std::abs(fd), std::abs(grad[i]), 1e-6});
        CHECK(std::abs(fd - grad[i]) / denom < 1e-4);
        checked++;
    }
    CHECK(checked == 1000);
}

TEST_CASE("mae examples") {
    CHECK(mae_loss(std::vector<double>{1, 2}, std::vector<double>{1, 2}).loss == 0.0);
    CHECK(mae_loss(std::vector<double>{0, 0}, std::vector<double>{1, -1}).loss == doctest::Approx(1.0));
    CHECK_THROWS(mae_loss(std::vector<double>{}, std::vector<double>{}));
    // gradient away from ties
    MaeResult r = mae_loss(std::vector<double>{2.0, -3.0}, std::vector<double>{1.0, 1.0});
    CHECK(r.grad[0] == doctest::Approx(0.5));
    CHECK(r.grad[1] == doctest::Approx(-0.5));
    // tie subgradient is zero
    MaeResult tie = mae_loss(std::vector<double>{1.0}, std::vector<double>{1.0});
    CHECK(tie.grad[0] == 0.0);
}

TEST_CASE("adam first step magnitude is about lr, zero grad is a no-op") {
    std::vector<double> params = {1.0, -2.0};
    AdamState state(2);
    adam_step(params, std::vector<double>{0.5, -0.1}, state, 1e-3);
    CHECK(std::abs(params[0] - 1.0) == doctest::Approx(1e-3).epsilon(1e-3));
    CHECK(std::abs(params[1] + 2.0) == doctest::Approx(1e-3).epsilon(1e-3));

    std::vector<double> frozen = {3.0};
    AdamState s2(1);
    adam_step(frozen, std::vector<double>{0.0}, s2, 1e-3);
    CHECK(frozen[0] == 3.0);

    std::vector<double> p3 = {1.0};
    AdamState s3(1);
    CHECK_THROWS(adam_step(p3, std::vector<double>{std::nan("")}, s3, 1e-3));
}

TEST_CASE("adam drives |theta - 3| to the minimum") {
    double theta = 0.0;
    AdamState state(1);
    for (int i = 0; i < 200; ++i) {
        double g = theta > 3.0 ? 1.0 : (theta < 3.0 ? -1.0 : 0.0);
        std::vector<double> p = {theta};
        adam_step(p, std::vector<double>{g}, state, 0.05);
        theta = p[0];
    }
    CHECK(std::abs(theta - 3.0) < 0.05);
}

TEST_CASE("cosine schedule hits the pinned values") {
    CosineSchedule sched;
    CHECK(sched.lr(0) == doctest::Approx(1e-3).epsilon(1e-12));
    CHECK(sched.lr(100) == doctest::Approx(1e-3).epsilon(1e-12));  // warm restart
    CHECK(sched.lr(50) == doctest::Approx(5e-4).epsilon(1e-12));
    for (int e = 0; e < 250; ++e) {
        CHECK(sched.lr(e) <= sched.lr_max + 1e-15);
        CHECK(sched.lr(e) >= sched.lr_min - 1e-15);
    }
}

TEST_CASE("one epoch on a linear toy regression reduces training mae") {
    RngStream rng(17);
    DenseStack stack = DenseStack::make({4, 8, 2}, false, rng);
    std::vector<std::vector<double>> xs, ys;
    for (int i = 0; i < 128; ++i) {
        std::vector<double> x(4), y(2, 0.0);
        for (double& v : x) v = rng.uniform(-1, 1);
        y[0] = 0.5 * x[0] - x[1];
        y[1] = 0.25 * x[2] + 0.75 * x[3];
        xs.push_back(x);
        ys.push_back(y);
    }
    auto epoch_mae = [&]() {
        double sum = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) sum += mae_loss(forward(stack, xs[i]), ys[i]).loss;
        return sum / static_cast<double>(xs.size());
    };
    double before = epoch_mae();
    std::vector<double> params;
    stack_params_into(stack, params);
    AdamState adam(params.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        StackCache cache;
        std::vector<double> y = forward(stack, xs[i], &cache);
        MaeResult mae = mae_loss(y, ys[i]);
        std::vector<double> grad(params.size(), 0.0);
        backward(stack, cache, mae.grad, grad);
        adam_step(params, grad, adam, 1e-2);
        stack_params_from(stack, params);
    }
    double after = epoch_mae();
    CHECK(after < before);
}

TEST_CASE("dimension mismatches are rejected") {
    RngStream rng(3);
    DenseStack stack = DenseStack::make({3, 2}, false, rng);
    CHECK_THROWS(forward(stack, std::vector<double>{1.0}));
    StackCache cache;
    forward(stack, std::vector<double>{1, 2, 3}, &cache);
    std::vector<double> small_grad(2, 0.0);
    CHECK_THROWS(backward(stack, cache, std::vector<double>{1.0, 1.0}, small_grad));
}
