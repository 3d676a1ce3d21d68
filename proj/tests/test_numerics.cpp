#include "doctest.h"

#include "mmhcl/errors.hpp"
#include "mmhcl/numerics.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace mmhcl;

TEST_CASE("softmax basics") {
    const Vec flat = softmax({0, 0, 0, 0});
    for (double p : flat) CHECK(p == doctest::Approx(0.25).epsilon(1e-14));

    const Vec extreme = softmax({1000.0, 0.0});
    CHECK(extreme[0] == doctest::Approx(1.0));
    CHECK(extreme[1] == doctest::Approx(0.0));
    CHECK(all_finite(extreme));

    const Vec p = softmax({1, 2, 3});
    CHECK(p[0] == doctest::Approx(0.09003057).epsilon(1e-7));
    CHECK(p[1] == doctest::Approx(0.24472847).epsilon(1e-7));
    CHECK(p[2] == doctest::Approx(0.66524096).epsilon(1e-7));
    const Vec q = oracle::softmax({1, 2, 3});
    for (int i = 0; i < 3; ++i)
        CHECK(std::fabs(p[static_cast<std::size_t>(i)] - q[static_cast<std::size_t>(i)]) < 1e-12);

    CHECK_THROWS_AS(softmax({}), std::invalid_argument);
}

TEST_CASE("softmax sums to one and is shift invariant") {
    SeededRng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const Vec z = oracle::random_vec(1 + rng.below(12), rng, 10.0);
        const Vec p = softmax(z);
        double sum = 0.0;
        for (double x : p) {
            CHECK(x > 0.0);
            CHECK(x <= 1.0);
            sum += x;
        }
        CHECK(std::fabs(sum - 1.0) < 1e-12);

        Vec shifted = z;
        const double c = rng.uniform_in(-50, 50);
        for (double& x : shifted) x += c;
        const Vec ps = softmax(shifted);
        for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::fabs(p[i] - ps[i]) < 1e-12);
    }
}

TEST_CASE("entropy values and bounds") {
    CHECK(entropy({1, 0, 0}) == 0.0);
    CHECK(entropy({0.25, 0.25, 0.25, 0.25}) == doctest::Approx(std::log(4.0)).epsilon(1e-14));
    CHECK(entropy({0.5, 0.25, 0.25}) == doctest::Approx(1.5 * std::log(2.0)).epsilon(1e-12));
    CHECK(std::fabs(entropy({0.5, 0.25, 0.25}) - oracle::entropy({0.5, 0.25, 0.25})) < 1e-12);
    CHECK_THROWS_AS(entropy({-0.1, 1.1}), std::invalid_argument);

    SeededRng rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.below(10);
        const Vec z = oracle::random_vec(n, rng, 5.0);
        const double h = entropy(softmax(z));
        CHECK(h >= 0.0);
        CHECK(h <= std::log(static_cast<double>(n)) + 1e-12);
    }
}

TEST_CASE("cosine values and errors") {
    const Vec v = {3.0, -1.5, 2.0};
    CHECK(cosine(v, v) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cosine({1, 0}, {0, 1}) == 0.0);
    CHECK(cosine({1, 2}, {2, 1}) == doctest::Approx(0.8).epsilon(1e-12));
    CHECK_THROWS_AS(cosine({0, 0}, {1, 0}), zero_norm_error);
    CHECK_THROWS_AS(cosine({1, 0}, {1, 0, 0}), std::invalid_argument);

    SeededRng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.below(8);
        const Vec a = oracle::random_vec(n, rng);
        const Vec b = oracle::random_vec(n, rng);
        const double c = cosine(a, b);
        CHECK(c >= -1.0 - 1e-12);
        CHECK(c <= 1.0 + 1e-12);
        CHECK(std::fabs(c - oracle::cosine(a, b)) < 1e-12);
    }
}

TEST_CASE("mlp forward: identity layer and zero input") {
    MlpParams id = make_mlp(3, {}, 3);
    for (int i = 0; i < 3; ++i) id.weights[0](i, i) = 1.0;
    Mat batch(2, 3);
    batch(0, 0) = 1.0;
    batch(0, 1) = -2.0;
    batch(0, 2) = 0.5;
    batch(1, 0) = 4.0;
    batch(1, 1) = 5.0;
    batch(1, 2) = -6.0;
    const Mat out = mlp_forward(id, batch);
    CHECK(out.data == batch.data);

    MlpParams net = make_mlp(4, {5}, 2);
    SeededRng rng(3);
    init_glorot(net, rng); // biases stay zero
    const Mat zero(3, 4, 0.0);
    const Mat z = mlp_forward(net, zero);
    for (double x : z.data) CHECK(x == 0.0);

    Mat wrong(2, 5);
    CHECK_THROWS_AS(mlp_forward(net, wrong), std::invalid_argument);
}

TEST_CASE("mlp forward matches a scalar-loop oracle") {
    SeededRng rng(23);
    MlpParams net = make_mlp(6, {7}, 4);
    init_glorot(net, rng);
    for (Vec& b : net.biases)
        for (double& x : b) x = rng.gaussian();
    Mat batch = oracle::random_mat(3, 6, rng);
    const Mat out = mlp_forward(net, batch);
    for (int r = 0; r < 3; ++r) {
        const Vec expect = oracle::mlp_apply(net.weights, net.biases, row_copy(batch, r));
        for (int c = 0; c < 4; ++c)
            CHECK(out(r, c) == doctest::Approx(expect[static_cast<std::size_t>(c)]).epsilon(1e-12));
    }
}

TEST_CASE("mlp backward: linear layer with sum loss") {
    MlpParams net = make_mlp(3, {}, 2);
    SeededRng rng(29);
    init_glorot(net, rng);
    const Mat batch = oracle::random_mat(5, 3, rng);
    MlpCache cache;
    mlp_forward(net, batch, &cache);
    const Mat ones(5, 2, 1.0);
    const MlpGrads g = mlp_backward(net, cache, ones);
    // d/dW of sum(outputs) = ones^T * batch: each weight row collects the
    // column sums of the batch.
    for (int o = 0; o < 2; ++o) {
        for (int i = 0; i < 3; ++i) {
            double col = 0.0;
            for (int r = 0; r < 5; ++r) col += batch(r, i);
            CHECK(g.d_weights[0](o, i) == doctest::Approx(col).epsilon(1e-12));
        }
        CHECK(g.d_biases[0][static_cast<std::size_t>(o)] == doctest::Approx(5.0));
    }
}

TEST_CASE("mlp backward: inactive rectifier blocks hidden gradients") {
    MlpParams net = make_mlp(2, {3}, 2);
    // negative weights, negative bias, positive inputs: hidden pre-acts < 0
    for (double& x : net.weights[0].data) x = -1.0;
    for (double& x : net.biases[0]) x = -0.5;
    for (double& x : net.weights[1].data) x = 0.7;
    Mat batch(4, 2, 1.0);
    MlpCache cache;
    mlp_forward(net, batch, &cache);
    const Mat g_out(4, 2, 1.0);
    const MlpGrads g = mlp_backward(net, cache, g_out);
    for (double x : g.d_weights[0].data) CHECK(x == 0.0);
    for (double x : g.d_biases[0]) CHECK(x == 0.0);
    for (double x : g.d_weights[1].data) CHECK(x == 0.0); // hidden activations are zero
    for (double x : g.d_biases[1]) CHECK(x == doctest::Approx(4.0));
}

namespace {

// Central finite differences of a scalar loss over every parameter.
template <typename Loss>
void check_grads_fd(MlpParams& net, const MlpGrads& analytic, Loss&& loss, double h = 1e-5,
                    double tol = 1e-4) {
    auto check_one = [&](double& theta, double got) {
        const double keep = theta;
        theta = keep + h;
        const double up = loss();
        theta = keep - h;
        const double down = loss();
        theta = keep;
        const double fd = (up - down) / (2.0 * h);
        const double denom = std::max({std::fabs(fd), std::fabs(got), 1e-6});
        CHECK(std::fabs(fd - got) / denom < tol);
    };
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        for (std::size_t i = 0; i < net.weights[l].data.size(); ++i)
            check_one(net.weights[l].data[i], analytic.d_weights[l].data[i]);
        for (std::size_t i = 0; i < net.biases[l].size(); ++i)
            check_one(net.biases[l][i], analytic.d_biases[l][i]);
    }
}

} // namespace

TEST_CASE("mlp backward matches central finite differences") {
    SeededRng rng(31);
    MlpParams net = make_mlp(4, {6, 5}, 3);
    init_glorot(net, rng);
    for (Vec& b : net.biases)
        for (double& x : b) x = 0.1 * rng.gaussian();
    const Mat batch = oracle::random_mat(4, 4, rng);
    const Mat target = oracle::random_mat(4, 3, rng);

    // loss = 0.5 sum (out - target)^2, so dL/dout = out - target
    auto loss = [&]() {
        const Mat out = mlp_forward(net, batch);
        double s = 0.0;
        for (std::size_t i = 0; i < out.data.size(); ++i) {
            const double d = out.data[i] - target.data[i];
            s += 0.5 * d * d;
        }
        return s;
    };
    MlpCache cache;
    const Mat out = mlp_forward(net, batch, &cache);
    Mat g_out(4, 3);
    for (std::size_t i = 0; i < out.data.size(); ++i) g_out.data[i] = out.data[i] - target.data[i];
    const MlpGrads g = mlp_backward(net, cache, g_out);
    check_grads_fd(net, g, loss);
}

TEST_CASE("mlp backward rejects mismatched caches") {
    MlpParams net = make_mlp(3, {4}, 2);
    MlpCache cache;
    mlp_forward(net, Mat(2, 3), &cache);
    CHECK_THROWS_AS(mlp_backward(net, cache, Mat(5, 2)), invalid_state_error);
    MlpParams other = make_mlp(3, {9}, 2);
    CHECK_THROWS_AS(mlp_backward(other, cache, Mat(2, 2)), invalid_state_error);
}

TEST_CASE("adam: zero gradient with zero decay is the identity") {
    MlpParams net = make_mlp(3, {4}, 2);
    SeededRng rng(37);
    init_glorot(net, rng);
    const MlpParams before = net;
    AdamState opt = make_adam(net, 1e-3, 0.0);
    MlpGrads zeros;
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        zeros.d_weights.emplace_back(net.weights[l].rows, net.weights[l].cols);
        zeros.d_biases.emplace_back(net.biases[l].size(), 0.0);
    }
    adam_step(opt, net, zeros);
    CHECK(opt.step == 1);
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        CHECK(net.weights[l].data == before.weights[l].data);
        CHECK(net.biases[l] == before.biases[l]);
    }
}

TEST_CASE("adam: first step moves by ~lr * sign(g)") {
    MlpParams net = make_mlp(1, {}, 1); // single scalar weight
    AdamState opt = make_adam(net, 0.05, 0.0);
    MlpGrads g;
    g.d_weights.emplace_back(1, 1, 0.73);
    g.d_biases.emplace_back(1, 0.0);
    adam_step(opt, net, g);
    CHECK(net.weights[0](0, 0) == doctest::Approx(-0.05).epsilon(1e-6));
}

TEST_CASE("adam: three-step scalar trace matches the reference") {
    MlpParams net = make_mlp(1, {}, 1);
    net.weights[0](0, 0) = 0.4;
    AdamState opt = make_adam(net, 0.1, 0.01);
    oracle::ScalarAdam ref;
    double theta = 0.4;
    const double grads[3] = {1.0, -0.5, 0.25};
    for (double gv : grads) {
        MlpGrads g;
        g.d_weights.emplace_back(1, 1, gv);
        g.d_biases.emplace_back(1, 0.0);
        adam_step(opt, net, g);
        theta = ref.step(theta, gv, 0.1, opt.beta1, opt.beta2, opt.epsilon, 0.01);
        CHECK(net.weights[0](0, 0) == doctest::Approx(theta).epsilon(1e-15));
    }
    CHECK(opt.step == 3);
}

TEST_CASE("adam rejects non-finite gradients and names the tensor") {
    MlpParams net = make_mlp(2, {}, 1);
    AdamState opt = make_adam(net, 0.1, 0.0);
    MlpGrads g;
    g.d_weights.emplace_back(1, 2, 0.0);
    g.d_biases.emplace_back(1, 0.0);
    g.d_weights[0](0, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_WITH_AS(adam_step(opt, net, g),
                         doctest::Contains("layer 0 weights"), numeric_error);
}
