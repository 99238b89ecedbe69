#include "eegsal/diffusion.hpp"

#include "eegsal/lora.hpp"

namespace eegsal {

// ------------------------------------------------------------- schedule

NoiseSchedule build_schedule(int T_steps, double beta_start, double beta_end) {
    if (T_steps < 1) throw std::invalid_argument("schedule: T_steps must be >= 1");
    if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
        throw std::invalid_argument("schedule: need 0 < beta_start <= beta_end < 1");
    NoiseSchedule s;
    s.T_steps = T_steps;
    s.betas.resize((size_t)T_steps);
    s.alpha_bars.resize((size_t)T_steps);
    double prod = 1.0;
    for (int t = 0; t < T_steps; ++t) {
        double b = T_steps == 1
                       ? beta_start
                       : beta_start + (beta_end - beta_start) * (double)t / (double)(T_steps - 1);
        s.betas[(size_t)t] = b;
        prod *= 1.0 - b;
        s.alpha_bars[(size_t)t] = prod;
    }
    return s;
}

Tensor add_noise(const Tensor& x0, const Tensor& eps, int t, const NoiseSchedule& sched) {
    if (!x0.same_shape(eps)) throw std::invalid_argument("add_noise: shape mismatch");
    if (t < 1 || t > sched.T_steps) throw std::invalid_argument("add_noise: t out of range");
    double ab = sched.alpha_bar(t);
    double ca = std::sqrt(ab), cb = std::sqrt(1.0 - ab);
    Tensor out = x0;
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = ca * x0.v[i] + cb * eps.v[i];
    return out;
}

// ------------------------------------------------------------- UNet params

void UNetConfig::validate() const {
    if (latent_ch < 1 || latent_hw < 4 || latent_hw % 4 || c0 < 1 || c1 < 1 || c2 < 1 ||
        ctx_tokens < 1 || ctx_dim < 1 || temb_feat < 2 || temb_feat % 2 || temb_dim < 1)
        throw std::invalid_argument("unet config: bad dims");
    if (c0 % groups || c1 % groups || c2 % groups)
        throw std::invalid_argument("unet config: channels must be divisible by groups");
}

static void add_resblock(ParamStore& ps, const std::string& p, int ch, int tdim, Rng& rng) {
    Tensor ones({ch});
    ones.fill(1.0);
    ps.add(p + ".gn1.g", ones);
    ps.add(p + ".gn1.b", Tensor({ch}));
    ps.add(p + ".conv1.w", init_uniform({ch, ch, 3, 3}, ch * 9, rng));
    ps.add(p + ".conv1.b", Tensor({ch}));
    ps.add(p + ".temb.w", init_uniform({ch, tdim}, tdim, rng));
    ps.add(p + ".temb.b", Tensor({ch}));
    ps.add(p + ".gn2.g", ones);
    ps.add(p + ".gn2.b", Tensor({ch}));
    // second conv starts small so blocks begin near the identity
    ps.add(p + ".conv2.w", init_uniform({ch, ch, 3, 3}, ch * 9, rng, 0.2));
    ps.add(p + ".conv2.b", Tensor({ch}));
}

static void add_attn(ParamStore& ps, const std::string& p, int ch, int ctx_dim, Rng& rng) {
    ps.add(p + ".wq", init_uniform({ch, ch}, ch, rng));
    ps.add(p + ".wk", init_uniform({ch, ctx_dim}, ctx_dim, rng));
    ps.add(p + ".wv", init_uniform({ch, ctx_dim}, ctx_dim, rng));
    // output projection starts small; attention begins as a gentle residual
    ps.add(p + ".wo", init_uniform({ch, ch}, ch, rng, 0.2));
}

void init_unet(const UNetConfig& cfg, uint64_t seed, ParamStore& ps, const std::string& prefix) {
    cfg.validate();
    Rng rng(seed, 20);
    ps.add(prefix + "in.w", init_uniform({cfg.c0, cfg.latent_ch, 3, 3}, cfg.latent_ch * 9, rng));
    ps.add(prefix + "in.b", Tensor({cfg.c0}));
    ps.add(prefix + "temb.w1", init_uniform({cfg.temb_dim, cfg.temb_feat}, cfg.temb_feat, rng));
    ps.add(prefix + "temb.b1", Tensor({cfg.temb_dim}));
    ps.add(prefix + "temb.w2", init_uniform({cfg.temb_dim, cfg.temb_dim}, cfg.temb_dim, rng));
    ps.add(prefix + "temb.b2", Tensor({cfg.temb_dim}));
    add_resblock(ps, prefix + "down0", cfg.c0, cfg.temb_dim, rng);
    ps.add(prefix + "ds1.w", init_uniform({cfg.c1, cfg.c0, 3, 3}, cfg.c0 * 9, rng));
    ps.add(prefix + "ds1.b", Tensor({cfg.c1}));
    add_resblock(ps, prefix + "down1", cfg.c1, cfg.temb_dim, rng);
    add_attn(ps, prefix + "attn1", cfg.c1, cfg.ctx_dim, rng);
    ps.add(prefix + "ds2.w", init_uniform({cfg.c2, cfg.c1, 3, 3}, cfg.c1 * 9, rng));
    ps.add(prefix + "ds2.b", Tensor({cfg.c2}));
    add_resblock(ps, prefix + "mid1", cfg.c2, cfg.temb_dim, rng);
    add_attn(ps, prefix + "attn2", cfg.c2, cfg.ctx_dim, rng);
    add_resblock(ps, prefix + "mid2", cfg.c2, cfg.temb_dim, rng);

    if (prefix == "unet.") {
        ps.add(prefix + "up1.w", init_uniform({cfg.c1, cfg.c2, 3, 3}, cfg.c2 * 9, rng));
        ps.add(prefix + "up1.b", Tensor({cfg.c1}));
        add_resblock(ps, prefix + "dec1", cfg.c1, cfg.temb_dim, rng);
        ps.add(prefix + "up2.w", init_uniform({cfg.c0, cfg.c1, 3, 3}, cfg.c1 * 9, rng));
        ps.add(prefix + "up2.b", Tensor({cfg.c0}));
        add_resblock(ps, prefix + "dec0", cfg.c0, cfg.temb_dim, rng);
        Tensor ones({cfg.c0});
        ones.fill(1.0);
        ps.add(prefix + "outgn.g", ones);
        ps.add(prefix + "outgn.b", Tensor({cfg.c0}));
        ps.add(prefix + "out.w", init_uniform({cfg.latent_ch, cfg.c0, 3, 3}, cfg.c0 * 9, rng, 0.2));
        ps.add(prefix + "out.b", Tensor({cfg.latent_ch}));
        ps.add(prefix + "null_token", init_normal({cfg.ctx_tokens, cfg.ctx_dim}, 0.02, rng));
    }
}

// ------------------------------------------------------------- UNet forward

int time_embedding_graph(Graph& g, ParamStore& ps, const UNetConfig& cfg, int t,
                         const std::string& prefix) {
    int half = cfg.temb_feat / 2;
    Tensor feat({1, cfg.temb_feat});
    for (int i = 0; i < half; ++i) {
        double w = std::exp(-std::log(10000.0) * (double)i / (double)std::max(1, half - 1));
        feat.v[(size_t)(2 * i)] = std::sin(w * (double)t);
        feat.v[(size_t)(2 * i + 1)] = std::cos(w * (double)t);
    }
    int f = g.leaf(std::move(feat));
    int h = g_gelu(g, g_bias_rows(g, g_linear(g, f, g.param(ps, prefix + "temb.w1")),
                                  g.param(ps, prefix + "temb.b1")));
    return g_bias_rows(g, g_linear(g, h, g.param(ps, prefix + "temb.w2")),
                       g.param(ps, prefix + "temb.b2"));
}

static int resblock_graph(Graph& g, ParamStore& ps, const UNetConfig& cfg, const std::string& p,
                          int h, int temb) {
    int a = g_gelu(g, g_groupnorm(g, h, g.param(ps, p + ".gn1.g"), g.param(ps, p + ".gn1.b"),
                                  cfg.groups));
    a = g_conv2d(g, a, g.param(ps, p + ".conv1.w"), g.param(ps, p + ".conv1.b"), 1, 1);
    int tproj = g_bias_rows(g, g_linear(g, temb, g.param(ps, p + ".temb.w")),
                            g.param(ps, p + ".temb.b"));
    a = g_bias_chan(g, a, tproj);
    a = g_gelu(g, g_groupnorm(g, a, g.param(ps, p + ".gn2.g"), g.param(ps, p + ".gn2.b"),
                              cfg.groups));
    a = g_conv2d(g, a, g.param(ps, p + ".conv2.w"), g.param(ps, p + ".conv2.b"), 1, 1);
    return g_add(g, h, a);
}

// Cross-attention over the conditioning tokens, additive residual.
static int attn_graph(Graph& g, ParamStore& ps, const std::string& p, int h, int tokens) {
    const Tensor& th = g.cval(h);
    int C = th.shape[0], H = th.shape[1], W = th.shape[2];
    int xn = g_chw_to_nc(g, h);  // [hw, C]
    int q = g_linear(g, xn, adapted_weight_node(g, ps, p + ".wq"));
    int k = g_linear(g, tokens, adapted_weight_node(g, ps, p + ".wk"));
    int v = g_linear(g, tokens, adapted_weight_node(g, ps, p + ".wv"));
    int scores = g_scale(g, g_matmul_nt(g, q, k), 1.0 / std::sqrt((double)C));
    int attn = g_matmul(g, g_softmax_rows(g, scores), v);
    int out = g_linear(g, attn, adapted_weight_node(g, ps, p + ".wo"));
    return g_nc_to_chw(g, g_add(g, xn, out), H, W);
}

EncoderTaps unet_encoder_graph(Graph& g, ParamStore& ps, const UNetConfig& cfg,
                               const std::string& prefix, int x, int temb, int tokens,
                               int hint_at_input) {
    int h0 = g_conv2d(g, x, g.param(ps, prefix + "in.w"), g.param(ps, prefix + "in.b"), 1, 1);
    if (hint_at_input >= 0) h0 = g_add(g, h0, hint_at_input);
    h0 = resblock_graph(g, ps, cfg, prefix + "down0", h0, temb);
    int h1 = g_conv2d(g, h0, g.param(ps, prefix + "ds1.w"), g.param(ps, prefix + "ds1.b"), 2, 1);
    h1 = resblock_graph(g, ps, cfg, prefix + "down1", h1, temb);
    h1 = attn_graph(g, ps, prefix + "attn1", h1, tokens);
    int h2 = g_conv2d(g, h1, g.param(ps, prefix + "ds2.w"), g.param(ps, prefix + "ds2.b"), 2, 1);
    h2 = resblock_graph(g, ps, cfg, prefix + "mid1", h2, temb);
    h2 = attn_graph(g, ps, prefix + "attn2", h2, tokens);
    h2 = resblock_graph(g, ps, cfg, prefix + "mid2", h2, temb);
    return {h0, h1, h2};
}

int unet_forward_graph(Graph& g, ParamStore& ps, const UNetConfig& cfg, int x, int t, int tokens,
                       const std::array<int, 3>* control) {
    require_shape(g.cval(x), {cfg.latent_ch, cfg.latent_hw, cfg.latent_hw}, "unet_forward: latent");
    require_shape(g.cval(tokens), {cfg.ctx_tokens, cfg.ctx_dim}, "unet_forward: tokens");
    if (control) {
        int hw = cfg.latent_hw;
        require_shape(g.cval((*control)[0]), {cfg.c0, hw, hw}, "unet_forward: control[0]");
        require_shape(g.cval((*control)[1]), {cfg.c1, hw / 2, hw / 2}, "unet_forward: control[1]");
        require_shape(g.cval((*control)[2]), {cfg.c2, hw / 4, hw / 4}, "unet_forward: control[2]");
    }
    int temb = time_embedding_graph(g, ps, cfg, t, "unet.");
    EncoderTaps taps = unet_encoder_graph(g, ps, cfg, "unet.", x, temb, tokens);

    int h2 = taps.h2;
    if (control) h2 = g_add(g, h2, (*control)[2]);
    int u1 = g_conv2d(g, g_upsample2x(g, h2), g.param(ps, "unet.up1.w"), g.param(ps, "unet.up1.b"),
                      1, 1);
    u1 = g_add(g, u1, taps.h1);
    if (control) u1 = g_add(g, u1, (*control)[1]);
    u1 = resblock_graph(g, ps, cfg, "unet.dec1", u1, temb);
    int u0 = g_conv2d(g, g_upsample2x(g, u1), g.param(ps, "unet.up2.w"), g.param(ps, "unet.up2.b"),
                      1, 1);
    u0 = g_add(g, u0, taps.h0);
    if (control) u0 = g_add(g, u0, (*control)[0]);
    u0 = resblock_graph(g, ps, cfg, "unet.dec0", u0, temb);
    int o = g_gelu(g, g_groupnorm(g, u0, g.param(ps, "unet.outgn.g"), g.param(ps, "unet.outgn.b"),
                                  cfg.groups));
    return g_conv2d(g, o, g.param(ps, "unet.out.w"), g.param(ps, "unet.out.b"), 1, 1);
}

Tensor unet_forward(ParamStore& ps, const UNetConfig& cfg, const Tensor& x_t, int t,
                    const Tensor& tokens, const ControlState* control) {
    Graph g;
    int x = g.leaf(x_t);
    int tok = g.leaf(tokens);
    if (control) {
        std::array<int, 3> c{g.leaf(control->residuals[0]), g.leaf(control->residuals[1]),
                             g.leaf(control->residuals[2])};
        return g.val(unet_forward_graph(g, ps, cfg, x, t, tok, &c));
    }
    return g.val(unet_forward_graph(g, ps, cfg, x, t, tok, nullptr));
}

// ------------------------------------------------------------- autoencoder

void AEConfig::validate() const {
    if (img_hw < 8 || img_hw % 4 || base_ch < 1 || latent_ch < 1)
        throw std::invalid_argument("ae config: bad dims");
}

void init_autoencoder(const AEConfig& cfg, uint64_t seed, ParamStore& ps) {
    cfg.validate();
    Rng rng(seed, 40);
    ps.add("ae.enc1.w", init_uniform({cfg.base_ch, 3, 3, 3}, 27, rng));
    ps.add("ae.enc1.b", Tensor({cfg.base_ch}));
    ps.add("ae.enc2.w", init_uniform({cfg.base_ch, cfg.base_ch, 3, 3}, cfg.base_ch * 9, rng));
    ps.add("ae.enc2.b", Tensor({cfg.base_ch}));
    ps.add("ae.enc3.w", init_uniform({cfg.latent_ch, cfg.base_ch, 3, 3}, cfg.base_ch * 9, rng));
    ps.add("ae.enc3.b", Tensor({cfg.latent_ch}));
    ps.add("ae.dec1.w", init_uniform({cfg.base_ch, cfg.latent_ch, 3, 3}, cfg.latent_ch * 9, rng));
    ps.add("ae.dec1.b", Tensor({cfg.base_ch}));
    ps.add("ae.dec2.w", init_uniform({cfg.base_ch, cfg.base_ch, 3, 3}, cfg.base_ch * 9, rng));
    ps.add("ae.dec2.b", Tensor({cfg.base_ch}));
    ps.add("ae.dec3.w", init_uniform({3, cfg.base_ch, 3, 3}, cfg.base_ch * 9, rng));
    ps.add("ae.dec3.b", Tensor({3}));
}

int ae_encode_graph(Graph& g, ParamStore& ps, const AEConfig& cfg, int image) {
    require_shape(g.cval(image), {3, cfg.img_hw, cfg.img_hw}, "ae_encode");
    int h = g_gelu(g, g_conv2d(g, image, g.param(ps, "ae.enc1.w"), g.param(ps, "ae.enc1.b"), 2, 1));
    h = g_gelu(g, g_conv2d(g, h, g.param(ps, "ae.enc2.w"), g.param(ps, "ae.enc2.b"), 2, 1));
    h = g_conv2d(g, h, g.param(ps, "ae.enc3.w"), g.param(ps, "ae.enc3.b"), 1, 1);
    return g_tanh(g, h);  // bounded latent keeps the diffusion prior sensible
}

int ae_decode_graph(Graph& g, ParamStore& ps, const AEConfig& cfg, int latent) {
    require_shape(g.cval(latent), {cfg.latent_ch, cfg.img_hw / 4, cfg.img_hw / 4}, "ae_decode");
    int h = g_gelu(g, g_conv2d(g, latent, g.param(ps, "ae.dec1.w"), g.param(ps, "ae.dec1.b"), 1, 1));
    h = g_gelu(g, g_conv2d(g, g_upsample2x(g, h), g.param(ps, "ae.dec2.w"),
                           g.param(ps, "ae.dec2.b"), 1, 1));
    h = g_conv2d(g, g_upsample2x(g, h), g.param(ps, "ae.dec3.w"), g.param(ps, "ae.dec3.b"), 1, 1);
    return g_sigmoid(g, h);
}

Tensor ae_encode(ParamStore& ps, const AEConfig& cfg, const Tensor& image) {
    Graph g;
    return g.val(ae_encode_graph(g, ps, cfg, g.leaf(image)));
}

Tensor ae_decode(ParamStore& ps, const AEConfig& cfg, const Tensor& latent) {
    Graph g;
    return g.val(ae_decode_graph(g, ps, cfg, g.leaf(latent)));
}

// ------------------------------------------------------------- objective / sampling

double training_loss(const std::vector<std::pair<Tensor, Tensor>>& batch, const EpsModel& model,
                     const NoiseSchedule& sched, uint64_t seed, uint64_t step) {
    if (batch.empty()) throw std::invalid_argument("training_loss: empty batch");
    double total = 0.0;
    for (size_t i = 0; i < batch.size(); ++i) {
        Rng rng = step_rng(seed, step, i);
        int t = 1 + (int)rng.uniform_int((uint64_t)sched.T_steps);
        Tensor eps(batch[i].first.shape);
        for (auto& e : eps.v) e = rng.normal();
        Tensor x_t = add_noise(batch[i].first, eps, t, sched);
        Tensor eps_hat = model(x_t, t, batch[i].second);
        if (!eps_hat.same_shape(eps)) throw std::invalid_argument("training_loss: model shape");
        double s = 0.0;
        for (size_t j = 0; j < eps.v.size(); ++j) {
            double d = eps_hat.v[j] - eps.v[j];
            s += d * d;
        }
        total += s / (double)eps.numel();
    }
    return total / (double)batch.size();
}

std::vector<int> ddim_timesteps(int T_steps, int n_steps) {
    if (n_steps < 1 || n_steps > T_steps)
        throw std::invalid_argument("ddim: need 1 <= n_steps <= T_steps");
    std::vector<int> ts;
    for (int i = 0; i < n_steps; ++i) {
        int t = (int)std::llround((double)(i + 1) * (double)T_steps / (double)n_steps);
        if (ts.empty() || t > ts.back()) ts.push_back(t);
    }
    return ts;
}

Tensor ddim_sample_latent(const EpsFn& model, const NoiseSchedule& sched,
                          const std::vector<int>& latent_shape, int n_steps, uint64_t seed) {
    std::vector<int> ts = ddim_timesteps(sched.T_steps, n_steps);
    Rng rng(seed, 77);
    Tensor x(latent_shape);
    for (auto& v : x.v) v = rng.normal();
    for (int i = (int)ts.size() - 1; i >= 0; --i) {
        int t = ts[(size_t)i];
        int t_prev = i > 0 ? ts[(size_t)(i - 1)] : 0;
        Tensor eps_hat = model(x, t);
        double ab = sched.alpha_bar(t), ab_prev = sched.alpha_bar(t_prev);
        double sa = std::sqrt(ab), sb = std::sqrt(1.0 - ab);
        double pa = std::sqrt(ab_prev), pb = std::sqrt(1.0 - ab_prev);
        for (size_t j = 0; j < x.v.size(); ++j) {
            // clean latents are tanh-bounded, so clip the denoised estimate;
            // unclipped, early steps amplify model error by 1/sqrt(alpha_bar)
            // and the trajectory can leave the data range entirely
            double x0_pred = (x.v[j] - sb * eps_hat.v[j]) / sa;
            x0_pred = std::min(1.0, std::max(-1.0, x0_pred));
            double eps_impl = (x.v[j] - sa * x0_pred) / sb;  // == eps_hat unless clipped
            x.v[j] = pa * x0_pred + pb * eps_impl;
        }
    }
    return x;
}

}  // namespace eegsal
