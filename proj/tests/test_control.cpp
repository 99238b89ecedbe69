#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "eegsal/control.hpp"
#include "eegsal/lora.hpp"

using namespace eegsal;

namespace {

UNetConfig toy_unet() {
    UNetConfig c;
    c.latent_ch = 2;
    c.latent_hw = 8;
    c.c0 = 8;
    c.c1 = 8;
    c.c2 = 8;
    c.ctx_tokens = 2;
    c.ctx_dim = 8;
    c.temb_feat = 8;
    c.temb_dim = 8;
    c.groups = 2;
    return c;
}

Tensor randt(std::vector<int> shape, Rng& rng) {
    Tensor t(std::move(shape));
    for (auto& x : t.v) x = rng.normal();
    return t;
}

SaliencyMap random_map(int hw, Rng& rng) {
    SaliencyMap m;
    m.data = Tensor({hw, hw});
    for (auto& v : m.data.v) v = rng.uniform();
    return normalize(m, SalNorm::max1);
}

}  // namespace

TEST_CASE("init copies the merged encoder-path weights and adds zero projections") {
    UNetConfig cfg = toy_unet();
    ParamStore ps;
    init_unet(cfg, 1, ps);
    // adapter with nonzero B so merged != stored base
    LoRAConfig lc;
    lc.rank = 2;
    inject(ps, lc, 3);
    for (auto& v : ps.param("lora.unet.attn1.wq.B").v) v = 0.02;

    init_control(ps, cfg, ControlConfig{4}, 9);
    CHECK(has_control(ps));
    for (auto& suffix : encoder_path_suffixes(ps)) {
        Tensor want = merged_weight(ps, "unet." + suffix);
        CHECK(ps.param("control." + suffix).v == want.v);
    }
    // the adapted matrix is copied merged, not raw
    CHECK(ps.param("control.attn1.wq").v != ps.param("unet.attn1.wq").v);
    for (const char* zp : {"control.zp0.w", "control.zp1.w", "control.zp2.w"})
        for (double v : ps.param(zp).v) CHECK(v == 0.0);
}

TEST_CASE("decoder-side and adapter arrays are not copied into the branch") {
    UNetConfig cfg = toy_unet();
    ParamStore ps;
    init_unet(cfg, 1, ps);
    init_control(ps, cfg, ControlConfig{4}, 9);
    for (auto& [name, t] : ps.params()) {
        if (name.rfind("control.", 0) != 0) continue;
        CHECK(name.find("up") == std::string::npos);
        CHECK(name.find("dec") == std::string::npos);
        CHECK(name.find("out.") == std::string::npos);
        CHECK(name.find("null_token") == std::string::npos);
    }
}

TEST_CASE("init without a base model or on an existing branch is an error") {
    UNetConfig cfg = toy_unet();
    ParamStore empty;
    CHECK_THROWS_AS(init_control(empty, cfg, ControlConfig{4}, 9), std::invalid_argument);
    ParamStore ps;
    init_unet(cfg, 1, ps);
    init_control(ps, cfg, ControlConfig{4}, 9);
    CHECK_THROWS_AS(init_control(ps, cfg, ControlConfig{4}, 9), std::invalid_argument);
}

TEST_CASE("hint encoder maps the image-resolution map to latent-resolution features") {
    UNetConfig cfg = toy_unet();
    ParamStore ps;
    init_unet(cfg, 1, ps);
    init_control(ps, cfg, ControlConfig{4}, 9);
    Rng rng(2, 0);
    SaliencyMap sal = random_map(32, rng);  // 4 * latent_hw
    Tensor h = hint_encode(ps, cfg, sal);
    CHECK(h.shape == std::vector<int>{cfg.c0, 8, 8});
    CHECK(h.all_finite());

    SaliencyMap wrong = random_map(16, rng);
    CHECK_THROWS_AS(hint_encode(ps, cfg, wrong), std::invalid_argument);
}

TEST_CASE("fresh branch emits exactly zero residuals (transparency)") {
    UNetConfig cfg = toy_unet();
    ParamStore ps;
    init_unet(cfg, 1, ps);
    init_control(ps, cfg, ControlConfig{4}, 9);
    Rng rng(3, 0);
    Tensor x = randt({2, 8, 8}, rng);
    Tensor tok = randt({2, 8}, rng);
    ControlState st = control_forward(ps, cfg, x, 5, tok, random_map(32, rng));
    CHECK(st.residuals[0].shape == std::vector<int>{cfg.c0, 8, 8});
    CHECK(st.residuals[1].shape == std::vector<int>{cfg.c1, 4, 4});
    CHECK(st.residuals[2].shape == std::vector<int>{cfg.c2, 2, 2});
    for (auto& r : st.residuals)
        for (double v : r.v) CHECK(v == 0.0);

    // and through the base model: identical eps with or without the branch
    Tensor with = unet_forward(ps, cfg, x, 5, tok, &st);
    Tensor without = unet_forward(ps, cfg, x, 5, tok);
    CHECK(with.v == without.v);
}

TEST_CASE("nonzero projections produce map-dependent residuals") {
    UNetConfig cfg = toy_unet();
    ParamStore ps;
    init_unet(cfg, 1, ps);
    init_control(ps, cfg, ControlConfig{4}, 9);
    Rng rng(4, 0);
    for (auto& v : ps.param("control.zp0.w").v) v = 0.1 * rng.normal();
    Tensor x = randt({2, 8, 8}, rng);
    Tensor tok = randt({2, 8}, rng);
    ControlState a = control_forward(ps, cfg, x, 5, tok, random_map(32, rng));
    ControlState b = control_forward(ps, cfg, x, 5, tok, random_map(32, rng));
    double diff = 0.0;
    for (size_t i = 0; i < a.residuals[0].v.size(); ++i)
        diff += std::abs(a.residuals[0].v[i] - b.residuals[0].v[i]);
    CHECK(diff > 0.0);
}

TEST_CASE("hint encoder seeding is isolated from the base model seed") {
    UNetConfig cfg = toy_unet();
    ParamStore a, b;
    init_unet(cfg, 1, a);
    init_unet(cfg, 1, b);
    init_control(a, cfg, ControlConfig{4}, 100);
    init_control(b, cfg, ControlConfig{4}, 101);
    CHECK(a.param("control.hint1.w").v != b.param("control.hint1.w").v);
    // copied trunk weights are seed-independent (they come from the base)
    CHECK(a.param("control.in.w").v == b.param("control.in.w").v);
}

TEST_CASE("branch gradient (hint encoder) matches finite differences") {
    UNetConfig cfg = toy_unet();
    ParamStore ps;
    init_unet(cfg, 1, ps);
    init_control(ps, cfg, ControlConfig{4}, 9);
    Rng rng(5, 0);
    // nonzero projections so gradients reach the hint stack
    for (auto& v : ps.param("control.zp0.w").v) v = 0.05 * rng.normal();
    for (auto& v : ps.param("control.zp1.w").v) v = 0.05 * rng.normal();
    for (auto& v : ps.param("control.zp2.w").v) v = 0.05 * rng.normal();
    Tensor x = randt({2, 8, 8}, rng);
    Tensor tok = randt({2, 8}, rng);
    SaliencyMap sal = random_map(32, rng);
    Tensor target = randt({2, 8, 8}, rng);

    auto loss_value = [&]() {
        Graph g;
        auto res = control_forward_graph(g, ps, cfg, g.leaf(x), 3, g.leaf(tok),
                                         g.leaf(Tensor({1, 32, 32}, sal.data.v)));
        std::array<int, 3> arr{res[0], res[1], res[2]};
        int eh = unet_forward_graph(g, ps, cfg, g.leaf(x), 3, g.leaf(tok), &arr);
        return g.val(g_mse(g, eh, g.leaf(target))).v[0];
    };
    ps.zero_grad();
    {
        Graph g;
        auto res = control_forward_graph(g, ps, cfg, g.leaf(x), 3, g.leaf(tok),
                                         g.leaf(Tensor({1, 32, 32}, sal.data.v)));
        std::array<int, 3> arr{res[0], res[1], res[2]};
        int eh = unet_forward_graph(g, ps, cfg, g.leaf(x), 3, g.leaf(tok), &arr);
        g.backward(g_mse(g, eh, g.leaf(target)));
    }
    double h = 1e-4;
    for (const char* name : {"control.hint1.w", "control.hint3.w", "control.zp1.w"}) {
        Tensor& p = ps.param(name);
        for (size_t i = 0; i < p.v.size(); i += std::max<size_t>(1, p.v.size() / 5)) {
            double save = p.v[i];
            p.v[i] = save + h;
            double fp = loss_value();
            p.v[i] = save - h;
            double fm = loss_value();
            p.v[i] = save;
            double fd = (fp - fm) / (2 * h);
            if (std::abs(fd) < 1e-10) continue;
            CHECK(ps.grad(name).v[i] == doctest::Approx(fd).epsilon(1e-4).scale(1e-7));
        }
    }
}
