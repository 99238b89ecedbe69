#include "eegsal/control.hpp"

#include "eegsal/lora.hpp"

namespace eegsal {

std::vector<std::string> encoder_path_suffixes(const ParamStore& ps) {
    std::vector<std::string> out;
    for (auto& [name, t] : ps.params()) {
        if (name.rfind("unet.", 0) != 0) continue;
        std::string suffix = name.substr(5);
        // decoder-side and output params stay unique to the base model
        if (suffix.rfind("up", 0) == 0 || suffix.rfind("dec", 0) == 0 ||
            suffix.rfind("out", 0) == 0 || suffix == "null_token")
            continue;
        out.push_back(suffix);
    }
    return out;
}

void init_control(ParamStore& ps, const UNetConfig& cfg, const ControlConfig& ccfg, uint64_t seed) {
    if (!ps.has("unet.in.w")) throw std::invalid_argument("init_control: base model not built");
    if (ps.has("control.in.w")) throw std::invalid_argument("init_control: branch already built");
    if (ccfg.hint_ch < 1) throw std::invalid_argument("init_control: bad hint width");
    for (auto& suffix : encoder_path_suffixes(ps))
        ps.add("control." + suffix, merged_weight(ps, "unet." + suffix));

    Rng rng(seed, 50);
    int ch = ccfg.hint_ch;
    ps.add("control.hint1.w", init_uniform({ch, 1, 3, 3}, 9, rng));
    ps.add("control.hint1.b", Tensor({ch}));
    ps.add("control.hint2.w", init_uniform({ch, ch, 3, 3}, ch * 9, rng));
    ps.add("control.hint2.b", Tensor({ch}));
    ps.add("control.hint3.w", init_uniform({cfg.c0, ch, 3, 3}, ch * 9, rng));
    ps.add("control.hint3.b", Tensor({cfg.c0}));

    ps.add("control.zp0.w", Tensor({cfg.c0, cfg.c0, 1, 1}));
    ps.add("control.zp0.b", Tensor({cfg.c0}));
    ps.add("control.zp1.w", Tensor({cfg.c1, cfg.c1, 1, 1}));
    ps.add("control.zp1.b", Tensor({cfg.c1}));
    ps.add("control.zp2.w", Tensor({cfg.c2, cfg.c2, 1, 1}));
    ps.add("control.zp2.b", Tensor({cfg.c2}));
}

bool has_control(const ParamStore& ps) { return ps.has("control.in.w"); }

int hint_encode_graph(Graph& g, ParamStore& ps, const UNetConfig& cfg, int sal) {
    int hw = cfg.latent_hw;
    require_shape(g.cval(sal), {1, 4 * hw, 4 * hw}, "hint_encode");
    int h = g_gelu(g, g_conv2d(g, sal, g.param(ps, "control.hint1.w"),
                               g.param(ps, "control.hint1.b"), 2, 1));
    h = g_gelu(g, g_conv2d(g, h, g.param(ps, "control.hint2.w"), g.param(ps, "control.hint2.b"), 2,
                           1));
    return g_conv2d(g, h, g.param(ps, "control.hint3.w"), g.param(ps, "control.hint3.b"), 1, 1);
}

Tensor hint_encode(ParamStore& ps, const UNetConfig& cfg, const SaliencyMap& sal) {
    if (sal.data.shape.size() != 2) throw std::invalid_argument("hint_encode: expected [H,W] map");
    Graph g;
    Tensor in({1, sal.data.shape[0], sal.data.shape[1]}, sal.data.v);
    return g.val(hint_encode_graph(g, ps, cfg, g.leaf(std::move(in))));
}

std::array<int, 3> control_forward_graph(Graph& g, ParamStore& ps, const UNetConfig& cfg, int x,
                                         int t, int tokens, int sal) {
    int temb = time_embedding_graph(g, ps, cfg, t, "control.");
    int hint = hint_encode_graph(g, ps, cfg, sal);
    EncoderTaps taps = unet_encoder_graph(g, ps, cfg, "control.", x, temb, tokens, hint);
    int r0 = g_conv2d(g, taps.h0, g.param(ps, "control.zp0.w"), g.param(ps, "control.zp0.b"), 1, 0);
    int r1 = g_conv2d(g, taps.h1, g.param(ps, "control.zp1.w"), g.param(ps, "control.zp1.b"), 1, 0);
    int r2 = g_conv2d(g, taps.h2, g.param(ps, "control.zp2.w"), g.param(ps, "control.zp2.b"), 1, 0);
    return {r0, r1, r2};
}

ControlState control_forward(ParamStore& ps, const UNetConfig& cfg, const Tensor& x_t, int t,
                             const Tensor& tokens, const SaliencyMap& sal) {
    Graph g;
    Tensor in({1, sal.data.shape[0], sal.data.shape[1]}, sal.data.v);
    auto r = control_forward_graph(g, ps, cfg, g.leaf(x_t), t, g.leaf(tokens),
                                   g.leaf(std::move(in)));
    return ControlState{{g.val(r[0]), g.val(r[1]), g.val(r[2])}};
}

}  // namespace eegsal
