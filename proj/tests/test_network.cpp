#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lownoise/network.hpp"
#include "lownoise/rng.hpp"
#include "test_helpers.hpp"

using namespace lownoise;
using lownoise::testing::rel_vec_error;

namespace {

NetworkParams small_net(std::uint64_t seed) {
    return init_network({3, 16, 16, 2}, Activation::SiLU, seed);
}

}  // namespace

TEST_CASE("init_network shapes and determinism") {
    NetworkParams p = init_network({3, 64, 2}, Activation::SiLU, 5);
    REQUIRE(p.weights.size() == 2);
    CHECK(p.weights[0].rows == 64);
    CHECK(p.weights[0].cols == 3);
    CHECK(p.weights[1].rows == 2);
    CHECK(p.weights[1].cols == 64);
    CHECK(p.biases[0].size() == 64);
    CHECK(p.biases[1].size() == 2);
    for (double b : p.biases[0]) CHECK(b == 0.0);
    p.validate();

    NetworkParams q = init_network({3, 64, 2}, Activation::SiLU, 5);
    CHECK(p.weights[0].data == q.weights[0].data);
    CHECK(p.weights[1].data == q.weights[1].data);
}

TEST_CASE("init_network weight scale follows sqrt(2/fan_in)") {
    NetworkParams p = init_network({3, 4096, 2}, Activation::SiLU, 11);
    double sq = 0.0;
    for (double v : p.weights[0].data) sq += v * v;
    double stddev = std::sqrt(sq / static_cast<double>(p.weights[0].data.size()));
    CHECK(stddev == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(0.10));
}

TEST_CASE("forward: zero net, linear net, conditioning sensitivity") {
    NetworkParams zero;
    zero.layer_dims = {3, 2};
    zero.activation = Activation::SiLU;
    zero.weights.emplace_back(2, 3, 0.0);
    zero.biases.emplace_back(2, 0.0);
    CHECK(forward(zero, {1.5, -2.0}, 0.3) == Vec{0.0, 0.0});

    // identity on the data slots, zero on the conditioning slot
    NetworkParams lin = zero;
    lin.weights[0](0, 0) = 1.0;
    lin.weights[0](1, 1) = 1.0;
    Vec x = {0.7, -0.1};
    CHECK(forward(lin, x, 0.9) == x);

    // conditioning slot is live for a random net
    NetworkParams p = small_net(3);
    Vec at_low = forward(p, x, 0.001);
    Vec at_high = forward(p, x, 1.0);
    CHECK(lownoise::testing::l2_dist(at_low, at_high) > 1e-8);

    CHECK_THROWS_AS(forward(p, {std::nan(""), 0.0}, 0.1), NumericalError);
}

TEST_CASE("forward is deterministic") {
    NetworkParams p = small_net(8);
    Vec x = {0.2, 0.4};
    CHECK(forward(p, x, 0.05) == forward(p, x, 0.05));
}

TEST_CASE("grad_params: zero upstream, linear case, finite differences") {
    NetworkParams p = small_net(21);
    Vec x = {0.3, -0.8};

    GradientBundle gz = grad_params(p, x, 0.1, {0.0, 0.0});
    for (const auto& w : gz.weights)
        for (double v : w.data) CHECK(v == 0.0);

    // single linear layer: d(u . Wx)/dW = u x^T
    NetworkParams lin;
    lin.layer_dims = {3, 2};
    lin.activation = Activation::SiLU;
    lin.weights.emplace_back(2, 3, 0.0);
    lin.biases.emplace_back(2, 0.0);
    Vec up = {2.0, -1.0};
    GradientBundle gl = grad_params(lin, {0.5, 1.5}, 0.2, up);
    Vec in = {0.5, 1.5, conditioning_value(0.2)};
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(gl.weights[0](i, j) == doctest::Approx(up[i] * in[j]).epsilon(1e-12));

    // finite differences over every parameter
    Rng rng(33);
    Vec upstream = {0.7, 1.3};
    const double sigma = 0.07;
    GradientBundle g = grad_params(p, x, sigma, upstream);
    const double h = 1e-5;
    int checked = 0;
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        for (std::size_t idx = 0; idx < p.weights[l].data.size(); idx += 7) {
            NetworkParams pp = p, pm = p;
            pp.weights[l].data[idx] += h;
            pm.weights[l].data[idx] -= h;
            Vec fp = forward(pp, x, sigma), fm = forward(pm, x, sigma);
            double want = 0.0;
            for (std::size_t q = 0; q < 2; ++q) want += upstream[q] * (fp[q] - fm[q]) / (2.0 * h);
            double got = g.weights[l].data[idx];
            CHECK(std::abs(got - want) <= 1e-4 * std::max(std::abs(want), 1e-6));
            ++checked;
        }
        for (std::size_t idx = 0; idx < p.biases[l].size(); idx += 3) {
            NetworkParams pp = p, pm = p;
            pp.biases[l][idx] += h;
            pm.biases[l][idx] -= h;
            Vec fp = forward(pp, x, sigma), fm = forward(pm, x, sigma);
            double want = 0.0;
            for (std::size_t q = 0; q < 2; ++q) want += upstream[q] * (fp[q] - fm[q]) / (2.0 * h);
            CHECK(std::abs(g.biases[l][idx] - want) <= 1e-4 * std::max(std::abs(want), 1e-6));
            ++checked;
        }
    }
    CHECK(checked > 50);
}

TEST_CASE("jvp_input: zero tangent, linear jacobian, finite differences, linearity") {
    NetworkParams p = small_net(44);
    Vec x = {-0.2, 0.9};

    CHECK(jvp_input(p, x, 0.1, {0.0, 0.0}) == Vec{0.0, 0.0});

    // linear net with data block A: jvp = A v
    NetworkParams lin;
    lin.layer_dims = {3, 2};
    lin.activation = Activation::SiLU;
    lin.weights.emplace_back(2, 3, 0.0);
    lin.biases.emplace_back(2, 0.0);
    lin.weights[0](0, 0) = 2.0;
    lin.weights[0](0, 1) = -1.0;
    lin.weights[0](1, 0) = 0.5;
    lin.weights[0](1, 1) = 3.0;
    Vec v = {1.0, 2.0};
    Vec jv = jvp_input(lin, x, 0.4, v);
    CHECK(jv[0] == doctest::Approx(2.0 * 1.0 - 1.0 * 2.0).epsilon(1e-14));
    CHECK(jv[1] == doctest::Approx(0.5 * 1.0 + 3.0 * 2.0).epsilon(1e-14));

    // finite-difference directional derivative
    const double sigma = 0.03, h = 1e-5;
    Vec dir = {0.6, -1.1};
    Vec got = jvp_input(p, x, sigma, dir);
    Vec xp = x, xm = x;
    for (std::size_t i = 0; i < 2; ++i) {
        xp[i] += h * dir[i];
        xm[i] -= h * dir[i];
    }
    Vec fp = forward(p, xp, sigma), fm = forward(p, xm, sigma);
    Vec want(2);
    for (std::size_t i = 0; i < 2; ++i) want[i] = (fp[i] - fm[i]) / (2.0 * h);
    CHECK(rel_vec_error(got, want) < 1e-4);

    // linearity: jvp(a v1 + v2) = a jvp(v1) + jvp(v2)
    Vec v1 = {0.3, -0.7}, v2 = {-1.2, 0.25};
    double alpha = 1.7;
    Vec combo(2);
    for (std::size_t i = 0; i < 2; ++i) combo[i] = alpha * v1[i] + v2[i];
    Vec lhs = jvp_input(p, x, sigma, combo);
    Vec j1 = jvp_input(p, x, sigma, v1), j2 = jvp_input(p, x, sigma, v2);
    Vec rhs(2);
    for (std::size_t i = 0; i < 2; ++i) rhs[i] = alpha * j1[i] + j2[i];
    CHECK(rel_vec_error(lhs, rhs, 1e-12) < 1e-10);
}

TEST_CASE("adam: zero grads, first step, constant-gradient limit") {
    NetworkParams p = small_net(50);
    NetworkParams before = p;
    AdamState st = AdamState::zeros_like(p);

    GradientBundle zeros = GradientBundle::zeros_like(p);
    adam_step(p, zeros, st, 0.001, 1);
    CHECK(p.weights[0].data == before.weights[0].data);
    for (double v : st.m_w[0].data) CHECK(v == 0.0);

    // one step from zero moments: delta ~= -lr * sign(g)
    NetworkParams q = small_net(51);
    NetworkParams q0 = q;
    AdamState st2 = AdamState::zeros_like(q);
    GradientBundle g = GradientBundle::zeros_like(q);
    for (auto& w : g.weights)
        for (double& v : w.data) v = 0.37;
    adam_step(q, g, st2, 0.01, 1);
    for (std::size_t i = 0; i < q.weights[0].data.size(); ++i) {
        double delta = q.weights[0].data[i] - q0.weights[0].data[i];
        CHECK(delta == doctest::Approx(-0.01).epsilon(1e-4));
    }

    // constant gradient: |delta| -> lr after many steps
    NetworkParams r = small_net(52);
    AdamState st3 = AdamState::zeros_like(r);
    double prev = r.weights[0].data[0];
    double lr = 0.003;
    double delta = 0.0;
    for (long t = 1; t <= 1000; ++t) {
        adam_step(r, g, st3, lr, t);
        delta = r.weights[0].data[0] - prev;
        prev = r.weights[0].data[0];
    }
    CHECK(std::abs(std::abs(delta) - lr) <= 0.01 * lr);

    GradientBundle bad = GradientBundle::zeros_like(r);
    bad.weights[0].data[0] = std::nan("");
    CHECK_THROWS_AS(adam_step(r, bad, st3, lr, 1001), TrainingError);
}

TEST_CASE("checkpoint save/load round trip is exact") {
    NetworkParams p = small_net(60);
    Checkpoint c;
    c.params = p;
    c.objective = "ncsn";
    c.sigma_ladder = {1.0, 0.1, 0.001};
    c.seed = 99;
    c.epochs = 42;
    std::string path = "/tmp/lownoise_test.ckpt.json";
    save_checkpoint(c, path);
    Checkpoint back = load_checkpoint(path);
    CHECK(back.objective == "ncsn");
    CHECK(back.sigma_ladder == c.sigma_ladder);
    CHECK(back.seed == 99);
    CHECK(back.epochs == 42);
    CHECK(back.params.layer_dims == p.layer_dims);
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        CHECK(back.params.weights[l].data == p.weights[l].data);
        CHECK(back.params.biases[l] == p.biases[l]);
    }
}
