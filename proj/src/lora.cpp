#include "eegsal/lora.hpp"

#include "eegsal/kernels.hpp"

namespace eegsal {

LoRAHandle inject(ParamStore& ps, const LoRAConfig& cfg, uint64_t seed) {
    cfg.validate();
    for (auto& t : cfg.targets)
        if (t != "wq" && t != "wk" && t != "wv" && t != "wo")
            throw std::invalid_argument("lora: unknown target " + t);

    std::vector<std::string> matches;
    for (auto& [name, tensor] : ps.params()) {
        if (name.rfind("unet.attn", 0) != 0) continue;
        auto dot = name.rfind('.');
        std::string suffix = name.substr(dot + 1);
        for (auto& t : cfg.targets)
            if (suffix == t) matches.push_back(name);
    }
    if (matches.empty()) throw std::invalid_argument("lora: selector matches no projection matrix");

    Rng rng(seed, 30);
    LoRAHandle handle;
    for (auto& name : matches) {
        if (ps.has("lora." + name + ".A"))
            throw std::invalid_argument("lora: adapter already attached to " + name + " (no stacking)");
        const Tensor& w = ps.param(name);
        int d_out = w.shape[0], d_in = w.shape[1];
        ps.add("lora." + name + ".A", init_normal({cfg.rank, d_in}, 0.02, rng));
        ps.add("lora." + name + ".B", Tensor({d_out, cfg.rank}));  // zero: injection is identity
        Tensor sc({1});
        sc.v[0] = cfg.alpha / (double)cfg.rank;
        ps.add("lora." + name + ".scale", std::move(sc), /*trainable=*/false);
        ps.set_trainable(name, false);
        handle.target_weights.push_back(name);
        handle.adapter_arrays.push_back("lora." + name + ".A");
        handle.adapter_arrays.push_back("lora." + name + ".B");
    }
    return handle;
}

Tensor adapted_forward(const Tensor& x, const Tensor& W, const LoRAAdapter& adapter) {
    if (x.shape.size() != 2 || W.shape.size() != 2 || x.shape[1] != W.shape[1] ||
        adapter.A.shape[1] != W.shape[1] || adapter.B.shape[0] != W.shape[0] ||
        adapter.A.shape[0] != adapter.B.shape[1])
        throw std::invalid_argument("adapted_forward: shape mismatch");
    int m = x.shape[0], d_in = x.shape[1], d_out = W.shape[0], r = adapter.A.shape[0];
    Tensor y({m, d_out});
    kernels::matmul_nt(m, d_in, d_out, x.v.data(), W.v.data(), y.v.data());
    Tensor xa({m, r});
    kernels::matmul_nt(m, d_in, r, x.v.data(), adapter.A.v.data(), xa.v.data());
    Tensor xab({m, d_out});
    kernels::matmul_nt(m, r, d_out, xa.v.data(), adapter.B.v.data(), xab.v.data());
    for (size_t i = 0; i < y.v.size(); ++i) y.v[i] += adapter.scale * xab.v[i];
    return y;
}

Tensor merge(const Tensor& W, const LoRAAdapter& adapter) {
    if (adapter.A.shape[1] != W.shape[1] || adapter.B.shape[0] != W.shape[0] ||
        adapter.A.shape[0] != adapter.B.shape[1])
        throw std::invalid_argument("merge: shape mismatch");
    int d_out = W.shape[0], d_in = W.shape[1], r = adapter.A.shape[0];
    Tensor ba({d_out, d_in});
    kernels::matmul(d_out, r, d_in, adapter.B.v.data(), adapter.A.v.data(), ba.v.data());
    Tensor out = W;
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] += adapter.scale * ba.v[i];
    return out;
}

int64_t trainable_count(const ParamStore& ps) {
    int64_t n = 0;
    for (auto& [name, t] : ps.params()) {
        if (name.rfind("lora.", 0) != 0) continue;
        auto suffix = name.substr(name.rfind('.') + 1);
        if (suffix == "A" || suffix == "B") n += t.numel();
    }
    return n;
}

int adapted_weight_node(Graph& g, ParamStore& ps, const std::string& name) {
    int w = g.param(ps, name);
    if (!ps.has("lora." + name + ".A")) return w;
    int a = g.param(ps, "lora." + name + ".A");
    int b = g.param(ps, "lora." + name + ".B");
    double scale = ps.param("lora." + name + ".scale").v[0];
    return g_add(g, w, g_scale(g, g_matmul(g, b, a), scale));
}

Tensor merged_weight(const ParamStore& ps, const std::string& name) {
    const Tensor& w = ps.param(name);
    if (!ps.has("lora." + name + ".A")) return w;
    LoRAAdapter ad{ps.param("lora." + name + ".A"), ps.param("lora." + name + ".B"),
                   ps.param("lora." + name + ".scale").v[0]};
    return merge(w, ad);
}

}  // namespace eegsal
