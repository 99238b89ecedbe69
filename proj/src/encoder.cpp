#include "eegsal/encoder.hpp"

namespace eegsal {

void EncoderConfig::validate() const {
    if (channels < 1 || samples < 1 || tokens < 1 || dim < 1 || conv1_ch < 1 || conv2_ch < 1 ||
        k1 < 1 || k2 < 1)
        throw std::invalid_argument("encoder config: dims must be positive");
    if (conv_out_len() < 1)
        throw std::invalid_argument("encoder config: conv stack longer than the epoch");
}

int EncoderConfig::conv_out_len() const {
    int t1 = (samples - k1) / 2 + 1;
    if (samples < k1) return 0;
    int t2 = (t1 - k2) / 2 + 1;
    if (t1 < k2) return 0;
    return t2;
}

void init_encoder(const EncoderConfig& cfg, uint64_t seed, ParamStore& ps) {
    cfg.validate();
    Rng rng(seed, 10);
    int C = cfg.channels;
    ps.add("enc.attn.w", init_uniform({C, C}, C, rng));
    ps.add("enc.attn.b", Tensor({C}));
    // the softmax reweighting shrinks the signal by ~1/C and temporal mean
    // pooling cancels most oscillatory content, so the conv/projection stack
    // is initialized hot to keep token magnitudes near unity
    double gain = std::cbrt((double)C) * 2.0;
    ps.add("enc.conv1.w", init_uniform({cfg.conv1_ch, C, 1, cfg.k1}, C * cfg.k1, rng, gain));
    ps.add("enc.conv1.b", Tensor({cfg.conv1_ch}));
    ps.add("enc.conv2.w",
           init_uniform({cfg.conv2_ch, cfg.conv1_ch, 1, cfg.k2}, cfg.conv1_ch * cfg.k2, rng, gain));
    ps.add("enc.conv2.b", Tensor({cfg.conv2_ch}));
    ps.add("enc.proj.w", init_uniform({cfg.tokens * cfg.dim, cfg.conv2_ch}, cfg.conv2_ch, rng, gain));
    ps.add("enc.proj.b", Tensor({cfg.tokens * cfg.dim}));
}

int channel_attention_graph(Graph& g, ParamStore& ps, int x, int* weights_out) {
    const Tensor& tx = g.cval(x);
    if (tx.shape.size() != 2) throw std::invalid_argument("channel_attention: expected [C,T]");
    int C = tx.shape[0];
    if (ps.param("enc.attn.w").shape[0] != C)
        throw std::invalid_argument("channel_attention: epoch channels do not match params");
    // per-channel summary -> linear score head -> softmax over channels
    int summary = g_row_abs_mean(g, x);  // [1,C]
    int scores = g_bias_rows(g, g_linear(g, summary, g.param(ps, "enc.attn.w")),
                             g.param(ps, "enc.attn.b"));
    int weights = g_softmax_rows(g, scores);
    if (weights_out) *weights_out = weights;
    return g_mul_rows(g, x, weights);
}

int encode_graph(Graph& g, ParamStore& ps, const EncoderConfig& cfg, int x) {
    const Tensor& tx = g.cval(x);
    require_shape(tx, {cfg.channels, cfg.samples}, "encode");
    if (!tx.all_finite()) throw std::invalid_argument("encode: non-finite input");
    int att = channel_attention_graph(g, ps, x);
    // [C,T] as a 1-row image so the temporal convs reuse the conv2d kernels
    int img = g_reshape(g, att, {cfg.channels, 1, cfg.samples});
    int h1 = g_gelu(g, g_conv2d(g, img, g.param(ps, "enc.conv1.w"), g.param(ps, "enc.conv1.b"), 2, 0));
    int h2 = g_gelu(g, g_conv2d(g, h1, g.param(ps, "enc.conv2.w"), g.param(ps, "enc.conv2.b"), 2, 0));
    int pooled = g_spatial_mean(g, h2);  // [1, conv2_ch]
    int proj = g_bias_rows(g, g_linear(g, pooled, g.param(ps, "enc.proj.w")),
                           g.param(ps, "enc.proj.b"));
    return g_reshape(g, proj, {cfg.tokens, cfg.dim});
}

Tensor channel_attention(const EEGEpoch& epoch, ParamStore& ps) {
    Graph g;
    int y = channel_attention_graph(g, ps, g.leaf(epoch.data));
    return g.val(y);
}

Tensor channel_attention_weights(const EEGEpoch& epoch, ParamStore& ps) {
    Graph g;
    int w = -1;
    channel_attention_graph(g, ps, g.leaf(epoch.data), &w);
    return g.val(w);
}

Tensor encode(const EEGEpoch& epoch, ParamStore& ps, const EncoderConfig& cfg) {
    Graph g;
    return g.val(encode_graph(g, ps, cfg, g.leaf(epoch.data)));
}

}  // namespace eegsal
