#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <functional>

#include "doctest.h"
#include "eegsal/graph.hpp"
#include "eegsal/rng.hpp"

using namespace eegsal;

namespace {

Tensor randt(std::vector<int> shape, Rng& rng, double scale = 1.0) {
    Tensor t(std::move(shape));
    for (auto& x : t.v) x = scale * rng.normal();
    return t;
}

// scalar head: <probe, y> reduced exactly via reshape + ones matmul
int dot_head(Graph& g, int y, const Tensor& probe) {
    int prod = g_mul(g, y, g.leaf(probe));
    int n = (int)g.cval(prod).numel();
    int row = g_reshape(g, prod, {1, n});
    Tensor ones({n, 1});
    ones.fill(1.0);
    return g_matmul(g, row, g.leaf(ones));
}

// Central-difference check of every input element of an op against the tape.
void fd_check(const std::vector<Tensor>& inputs,
              const std::function<int(Graph&, const std::vector<int>&)>& build) {
    Rng prng(999, 0);
    Graph g0;
    std::vector<int> ids0;
    for (auto& t : inputs) ids0.push_back(g0.leaf(t));
    Tensor probe = randt(g0.cval(build(g0, ids0)).shape, prng);

    auto scalar = [&](const std::vector<Tensor>& ins) {
        Graph g;
        std::vector<int> ids;
        for (auto& t : ins) ids.push_back(g.leaf(t));
        return g.val(dot_head(g, build(g, ids), probe)).v[0];
    };

    Graph g;
    std::vector<int> ids;
    for (auto& t : inputs) ids.push_back(g.leaf(t));
    g.backward(dot_head(g, build(g, ids), probe));

    double h = 1e-5;
    for (size_t k = 0; k < inputs.size(); ++k)
        for (size_t i = 0; i < inputs[k].v.size(); ++i) {
            auto plus = inputs, minus = inputs;
            plus[k].v[i] += h;
            minus[k].v[i] -= h;
            double fd = (scalar(plus) - scalar(minus)) / (2 * h);
            double an = g.grad(ids[k]).v[i];
            CHECK(an == doctest::Approx(fd).epsilon(1e-4).scale(1.0));
        }
}

}  // namespace

TEST_CASE("backward seeds the loss with 1 and accumulates through shared nodes") {
    Graph g;
    int x = g.leaf(Tensor({1, 1}, {3.0}));
    int y = g_add(g, x, x);
    g.backward(y);
    CHECK(g.grad(x).v[0] == doctest::Approx(2.0));
}

TEST_CASE("param leaves push gradients into the store and accumulate across tapes") {
    ParamStore ps;
    ps.add("w", Tensor({1, 2}, {1.0, 2.0}));
    Tensor ones({2, 1});
    ones.fill(1.0);
    for (int pass = 0; pass < 2; ++pass) {
        Graph g;
        int a = g.param(ps, "w");
        g.backward(g_matmul(g, a, g.leaf(ones)));
    }
    CHECK(ps.grad("w").v[0] == doctest::Approx(2.0));
    CHECK(ps.grad("w").v[1] == doctest::Approx(2.0));
}

TEST_CASE("half_params rounds parameter values onto the fp16 grid") {
    ParamStore ps;
    ps.add("w", Tensor({1, 1}, {0.1}));
    Graph g;
    g.half_params = true;
    int a = g.param(ps, "w");
    CHECK(g.cval(a).v[0] == half_round(0.1));
    CHECK(g.cval(a).v[0] != 0.1);          // 0.1 is not representable
    CHECK(half_round(0.5) == 0.5);         // powers of two are
    CHECK(half_round(half_round(0.1)) == half_round(0.1));  // idempotent
    CHECK(ps.param("w").v[0] == 0.1);      // master weight untouched
}

TEST_CASE("elementwise op gradients match finite differences") {
    Rng rng(1, 0);
    auto a = randt({2, 3}, rng), b = randt({2, 3}, rng);
    fd_check({a, b}, [](Graph& g, const std::vector<int>& in) { return g_add(g, in[0], in[1]); });
    fd_check({a, b}, [](Graph& g, const std::vector<int>& in) { return g_sub(g, in[0], in[1]); });
    fd_check({a, b}, [](Graph& g, const std::vector<int>& in) { return g_mul(g, in[0], in[1]); });
    fd_check({a}, [](Graph& g, const std::vector<int>& in) { return g_scale(g, in[0], -1.7); });
    fd_check({a}, [](Graph& g, const std::vector<int>& in) { return g_gelu(g, in[0]); });
    fd_check({a}, [](Graph& g, const std::vector<int>& in) { return g_sigmoid(g, in[0]); });
    fd_check({a}, [](Graph& g, const std::vector<int>& in) { return g_tanh(g, in[0]); });
}

TEST_CASE("matrix op gradients match finite differences") {
    Rng rng(2, 0);
    auto x = randt({3, 4}, rng), w = randt({5, 4}, rng), b = randt({5}, rng);
    fd_check({x, w}, [](Graph& g, const std::vector<int>& in) { return g_linear(g, in[0], in[1]); });
    fd_check({randt({3, 5}, rng), b},
             [](Graph& g, const std::vector<int>& in) { return g_bias_rows(g, in[0], in[1]); });
    fd_check({randt({3, 4}, rng), randt({4, 2}, rng)},
             [](Graph& g, const std::vector<int>& in) { return g_matmul(g, in[0], in[1]); });
    fd_check({randt({3, 4}, rng), randt({2, 4}, rng)},
             [](Graph& g, const std::vector<int>& in) { return g_matmul_nt(g, in[0], in[1]); });
    fd_check({randt({3, 5}, rng)},
             [](Graph& g, const std::vector<int>& in) { return g_softmax_rows(g, in[0]); });
}

TEST_CASE("softmax rows sum to one and are shift invariant") {
    Graph g;
    Tensor x({2, 3}, {1.0, 2.0, 3.0, -5.0, 0.0, 5.0});
    Tensor xs({2, 3}, {101.0, 102.0, 103.0, 95.0, 100.0, 105.0});
    Tensor y = g.cval(g_softmax_rows(g, g.leaf(x)));
    Tensor ys = g.cval(g_softmax_rows(g, g.leaf(xs)));
    for (int r = 0; r < 2; ++r) {
        double s = y.at2(r, 0) + y.at2(r, 1) + y.at2(r, 2);
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
    for (size_t i = 0; i < y.v.size(); ++i) CHECK(y.v[i] == doctest::Approx(ys.v[i]).epsilon(1e-12));
}

TEST_CASE("spatial op gradients match finite differences") {
    Rng rng(3, 0);
    auto x = randt({2, 4, 4}, rng);
    auto w = randt({3, 2, 3, 3}, rng);
    auto b = randt({3}, rng);
    fd_check({x, w, b}, [](Graph& g, const std::vector<int>& in) {
        return g_conv2d(g, in[0], in[1], in[2], 1, 1);
    });
    fd_check({x, w, b}, [](Graph& g, const std::vector<int>& in) {
        return g_conv2d(g, in[0], in[1], in[2], 2, 1);
    });
    fd_check({x}, [](Graph& g, const std::vector<int>& in) { return g_upsample2x(g, in[0]); });
    fd_check({x, randt({2}, rng)},
             [](Graph& g, const std::vector<int>& in) { return g_bias_chan(g, in[0], in[1]); });
    fd_check({x}, [](Graph& g, const std::vector<int>& in) { return g_spatial_mean(g, in[0]); });
}

TEST_CASE("groupnorm gradient matches finite differences") {
    Rng rng(4, 0);
    auto x = randt({4, 3, 3}, rng);
    auto gamma = randt({4}, rng), beta = randt({4}, rng);
    fd_check({x, gamma, beta}, [](Graph& g, const std::vector<int>& in) {
        return g_groupnorm(g, in[0], in[1], in[2], 2);
    });
}

TEST_CASE("groupnorm normalizes each group to zero mean unit variance") {
    Rng rng(5, 0);
    auto x = randt({4, 5, 5}, rng, 3.0);
    Tensor gamma({4}), beta({4});
    gamma.fill(1.0);
    Graph g;
    const Tensor& y = g.cval(g_groupnorm(g, g.leaf(x), g.leaf(gamma), g.leaf(beta), 2));
    for (int grp = 0; grp < 2; ++grp) {
        double mean = 0.0, var = 0.0;
        int n = 2 * 5 * 5;
        for (int c = grp * 2; c < grp * 2 + 2; ++c)
            for (int i = 0; i < 25; ++i) mean += y.v[(size_t)c * 25 + i];
        mean /= n;
        for (int c = grp * 2; c < grp * 2 + 2; ++c)
            for (int i = 0; i < 25; ++i) {
                double d = y.v[(size_t)c * 25 + i] - mean;
                var += d * d;
            }
        CHECK(mean == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
        CHECK(var / n == doctest::Approx(1.0).epsilon(1e-3));
    }
}

TEST_CASE("EEG helper gradients match finite differences") {
    Rng rng(6, 0);
    auto x = randt({3, 7}, rng);
    // row_abs_mean is non-differentiable at 0; keep inputs away from it
    for (auto& v : x.v) v += (v >= 0 ? 0.5 : -0.5);
    fd_check({x}, [](Graph& g, const std::vector<int>& in) { return g_row_abs_mean(g, in[0]); });
    fd_check({x, randt({1, 3}, rng)},
             [](Graph& g, const std::vector<int>& in) { return g_mul_rows(g, in[0], in[1]); });
}

TEST_CASE("layout op gradients match finite differences") {
    Rng rng(7, 0);
    auto x = randt({3, 2, 4}, rng);
    fd_check({x}, [](Graph& g, const std::vector<int>& in) { return g_reshape(g, in[0], {6, 4}); });
    fd_check({x}, [](Graph& g, const std::vector<int>& in) { return g_chw_to_nc(g, in[0]); });
    fd_check({randt({8, 3}, rng)},
             [](Graph& g, const std::vector<int>& in) { return g_nc_to_chw(g, in[0], 2, 4); });
}

TEST_CASE("chw_to_nc and nc_to_chw are inverse layouts") {
    Rng rng(8, 0);
    auto x = randt({3, 2, 4}, rng);
    Graph g;
    int back = g_nc_to_chw(g, g_chw_to_nc(g, g.leaf(x)), 2, 4);
    CHECK(g.cval(back).v == x.v);
    CHECK(g.cval(back).shape == x.shape);
}

TEST_CASE("mse value and gradient") {
    Rng rng(9, 0);
    auto a = randt({2, 3}, rng), b = randt({2, 3}, rng);
    Graph g;
    int loss = g_mse(g, g.leaf(a), g.leaf(b));
    double want = 0.0;
    for (size_t i = 0; i < a.v.size(); ++i) want += (a.v[i] - b.v[i]) * (a.v[i] - b.v[i]);
    want /= (double)a.v.size();
    CHECK(g.cval(loss).v[0] == doctest::Approx(want).epsilon(1e-12));
    fd_check({a, b}, [](Graph& g2, const std::vector<int>& in) { return g_mse(g2, in[0], in[1]); });
}

TEST_CASE("upsample2x repeats pixels 2x2") {
    Tensor x({1, 2, 2}, {1.0, 2.0, 3.0, 4.0});
    Graph g;
    const Tensor& y = g.cval(g_upsample2x(g, g.leaf(x)));
    CHECK(y.shape == std::vector<int>{1, 4, 4});
    CHECK(y.at3(0, 0, 0) == 1.0);
    CHECK(y.at3(0, 0, 1) == 1.0);
    CHECK(y.at3(0, 1, 1) == 1.0);
    CHECK(y.at3(0, 3, 3) == 4.0);
    CHECK(y.at3(0, 2, 1) == 3.0);
}

TEST_CASE("shape mismatches are rejected") {
    Graph g;
    int a = g.leaf(Tensor({2, 3}));
    int b = g.leaf(Tensor({3, 2}));
    CHECK_THROWS_AS(g_add(g, a, b), std::invalid_argument);
    CHECK_THROWS_AS(g_matmul(g, a, a), std::invalid_argument);
    CHECK_THROWS_AS(g_reshape(g, a, {4, 2}), std::invalid_argument);
}
