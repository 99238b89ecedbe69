#include "eegsal/pipeline.hpp"

namespace eegsal {

void ModelSpec::validate() const {
    enc.validate();
    unet.validate();
    ae.validate();
    if (ae.latent_ch != unet.latent_ch || ae.img_hw != 4 * unet.latent_hw)
        throw std::invalid_argument("spec: autoencoder and UNet geometry disagree");
    if (enc.tokens != unet.ctx_tokens || enc.dim != unet.ctx_dim)
        throw std::invalid_argument("spec: encoder token shape does not match UNet context");
    if (sched_T < 1 || sample_steps < 1 || sample_steps > sched_T)
        throw std::invalid_argument("spec: bad schedule/sampler steps");
    if (!(guidance > 0)) throw std::invalid_argument("spec: guidance must be > 0");
    lora.validate();
}

ModelSpec desk_spec(int eeg_channels, int eeg_samples) {
    ModelSpec s;
    s.enc.channels = eeg_channels;
    s.enc.samples = eeg_samples;
    s.enc.tokens = 2;
    s.enc.dim = 32;
    s.enc.conv1_ch = 16;
    s.enc.conv2_ch = 32;
    s.enc.k1 = 7;
    s.enc.k2 = 3;
    s.unet.latent_ch = 4;
    s.unet.latent_hw = 8;
    s.unet.c0 = 16;
    s.unet.c1 = 24;
    s.unet.c2 = 32;
    s.unet.ctx_tokens = 2;
    s.unet.ctx_dim = 32;
    s.unet.temb_feat = 16;
    s.unet.temb_dim = 32;
    s.unet.groups = 4;
    s.ae.img_hw = 32;
    s.ae.base_ch = 16;
    s.ae.latent_ch = 4;
    s.control.hint_ch = 8;
    s.sched_T = 50;
    s.beta_start = 0.002;
    s.beta_end = 0.25;
    s.sample_steps = 25;
    s.guidance = 3.0;  // small models need the extra conditioning weight
    s.lora.rank = 4;
    s.lora.alpha = 4.0;
    s.validate();
    return s;
}

nlohmann::json spec_to_json(const ModelSpec& s) {
    return {
        {"encoder",
         {{"channels", s.enc.channels},
          {"samples", s.enc.samples},
          {"tokens", s.enc.tokens},
          {"dim", s.enc.dim},
          {"conv1_ch", s.enc.conv1_ch},
          {"conv2_ch", s.enc.conv2_ch},
          {"k1", s.enc.k1},
          {"k2", s.enc.k2}}},
        {"unet",
         {{"latent_ch", s.unet.latent_ch},
          {"latent_hw", s.unet.latent_hw},
          {"c0", s.unet.c0},
          {"c1", s.unet.c1},
          {"c2", s.unet.c2},
          {"ctx_tokens", s.unet.ctx_tokens},
          {"ctx_dim", s.unet.ctx_dim},
          {"temb_feat", s.unet.temb_feat},
          {"temb_dim", s.unet.temb_dim},
          {"groups", s.unet.groups}}},
        {"autoencoder",
         {{"img_hw", s.ae.img_hw}, {"base_ch", s.ae.base_ch}, {"latent_ch", s.ae.latent_ch}}},
        {"control", {{"hint_ch", s.control.hint_ch}}},
        {"schedule", {{"T", s.sched_T}, {"beta_start", s.beta_start}, {"beta_end", s.beta_end}}},
        {"sampler", {{"steps", s.sample_steps}, {"guidance", s.guidance}}},
        {"lora", {{"rank", s.lora.rank}, {"alpha", s.lora.alpha}, {"targets", s.lora.targets}}},
    };
}

ModelSpec spec_from_json(const nlohmann::json& j) {
    ModelSpec s;
    auto& e = j.at("encoder");
    s.enc.channels = e.at("channels");
    s.enc.samples = e.at("samples");
    s.enc.tokens = e.at("tokens");
    s.enc.dim = e.at("dim");
    s.enc.conv1_ch = e.at("conv1_ch");
    s.enc.conv2_ch = e.at("conv2_ch");
    s.enc.k1 = e.at("k1");
    s.enc.k2 = e.at("k2");
    auto& u = j.at("unet");
    s.unet.latent_ch = u.at("latent_ch");
    s.unet.latent_hw = u.at("latent_hw");
    s.unet.c0 = u.at("c0");
    s.unet.c1 = u.at("c1");
    s.unet.c2 = u.at("c2");
    s.unet.ctx_tokens = u.at("ctx_tokens");
    s.unet.ctx_dim = u.at("ctx_dim");
    s.unet.temb_feat = u.at("temb_feat");
    s.unet.temb_dim = u.at("temb_dim");
    s.unet.groups = u.at("groups");
    auto& a = j.at("autoencoder");
    s.ae.img_hw = a.at("img_hw");
    s.ae.base_ch = a.at("base_ch");
    s.ae.latent_ch = a.at("latent_ch");
    s.control.hint_ch = j.at("control").at("hint_ch");
    auto& sc = j.at("schedule");
    s.sched_T = sc.at("T");
    s.beta_start = sc.at("beta_start");
    s.beta_end = sc.at("beta_end");
    s.sample_steps = j.at("sampler").at("steps");
    s.guidance = j.at("sampler").at("guidance");
    auto& l = j.at("lora");
    s.lora.rank = l.at("rank");
    s.lora.alpha = l.at("alpha");
    s.lora.targets = l.at("targets").get<std::vector<std::string>>();
    s.validate();
    return s;
}

void init_model(const ModelSpec& spec, uint64_t seed, ParamStore& ps) {
    spec.validate();
    init_encoder(spec.enc, seed, ps);
    init_unet(spec.unet, seed, ps);
    init_autoencoder(spec.ae, seed, ps);
}

NoiseSchedule schedule_of(const ModelSpec& spec) {
    return build_schedule(spec.sched_T, spec.beta_start, spec.beta_end);
}

Tensor tokens_for(ParamStore& ps, const ModelSpec& spec, const EEGEpoch& epoch) {
    return encode(epoch, ps, spec.enc);
}

Tensor generate_latent(ParamStore& ps, const ModelSpec& spec, const Tensor& tokens,
                       const SaliencyMap* sal, uint64_t seed) {
    require_shape(tokens, {spec.unet.ctx_tokens, spec.unet.ctx_dim}, "generate: tokens");
    NoiseSchedule sched = schedule_of(spec);
    Tensor sal_chw;
    if (sal) {
        if (!has_control(ps))
            throw std::runtime_error("generate: saliency conditioning requested but no control branch");
        SaliencyMap m = normalize(resize_map(*sal, spec.ae.img_hw, spec.ae.img_hw), SalNorm::max1);
        sal_chw = Tensor({1, spec.ae.img_hw, spec.ae.img_hw}, m.data.v);
    }
    Tensor null_tok = ps.param("unet.null_token");
    auto predict = [&](const Tensor& x_t, int t, const Tensor& tok) {
        if (!sal) return unet_forward(ps, spec.unet, x_t, t, tok);
        Graph g;
        int x = g.leaf(x_t);
        auto ctrl = control_forward_graph(g, ps, spec.unet, x, t, g.leaf(tok), g.leaf(sal_chw));
        return g.val(unet_forward_graph(g, ps, spec.unet, x, t, g.leaf(tok), &ctrl));
    };
    EpsFn fn = [&](const Tensor& x_t, int t) {
        Tensor cond = predict(x_t, t, tokens);
        if (spec.guidance == 1.0) return cond;
        Tensor uncond = predict(x_t, t, null_tok);
        Tensor out = cond;
        for (size_t i = 0; i < out.v.size(); ++i)
            out.v[i] = uncond.v[i] + spec.guidance * (cond.v[i] - uncond.v[i]);
        return out;
    };
    std::vector<int> shape{spec.unet.latent_ch, spec.unet.latent_hw, spec.unet.latent_hw};
    return ddim_sample_latent(fn, sched, shape, spec.sample_steps, seed);
}

Tensor generate_image(ParamStore& ps, const ModelSpec& spec, const Tensor& tokens,
                      const SaliencyMap* sal, uint64_t seed) {
    Tensor latent = generate_latent(ps, spec, tokens, sal, seed);
    Tensor img = ae_decode(ps, spec.ae, latent);
    for (auto& v : img.v) v = std::min(1.0, std::max(0.0, v));
    return img;
}

}  // namespace eegsal
