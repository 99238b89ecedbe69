#include "eegsal/train.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace eegsal {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- configs

void StageConfig::validate() const {
    if (stage != 1 && stage != 2) throw std::invalid_argument("stage config: stage must be 1 or 2");
    if (!(lr_max > eta_min && eta_min > 0))
        throw std::invalid_argument("stage config: need lr_max > eta_min > 0");
    if (total_steps < 1 || batch_size < 1 || grad_accum < 1 || T0 < 1)
        throw std::invalid_argument("stage config: counts must be >= 1");
    if (precision != "full" && precision != "half")
        throw std::invalid_argument("stage config: precision must be full or half");
    if (pretrain_ae_steps < 0 || pretrain_unet_steps < 0 || !(pretrain_lr > 0) ||
        weight_decay < 0 || checkpoint_every < 0)
        throw std::invalid_argument("stage config: bad auxiliary values");
}

StageConfig stage1_defaults() { return StageConfig{}; }

StageConfig stage2_defaults() {
    StageConfig c;
    c.stage = 2;
    c.lr_max = 1e-4;
    c.total_steps = 65000;
    c.batch_size = 2;
    c.grad_accum = 4;
    c.eta_min = 1e-5;
    c.precision = "full";
    c.pretrain_ae_steps = 0;
    c.pretrain_unet_steps = 0;
    return c;
}

StageConfig desk_stage1() {
    StageConfig c;
    c.total_steps = 500;
    c.precision = "full";
    c.pretrain_ae_steps = 1200;
    c.pretrain_unet_steps = 250;
    c.pretrain_lr = 2e-3;
    return c;
}

StageConfig desk_stage2() {
    StageConfig c = stage2_defaults();
    c.total_steps = 1000;
    c.lr_max = 1e-3;
    return c;
}

double lr_at(int64_t step, const StageConfig& cfg) {
    if (step < 0) throw std::invalid_argument("lr_at: negative step");
    double t_cur = (double)(step % cfg.T0);
    double cosine = std::cos(M_PI * t_cur / (double)cfg.T0);
    return cfg.eta_min + (cfg.lr_max - cfg.eta_min) * (1.0 + cosine) / 2.0;
}

nlohmann::json stage_to_json(const StageConfig& c) {
    return {{"stage", c.stage},
            {"lr_max", c.lr_max},
            {"total_steps", c.total_steps},
            {"batch_size", c.batch_size},
            {"grad_accum", c.grad_accum},
            {"eta_min", c.eta_min},
            {"T0", c.T0},
            {"precision", c.precision},
            {"weight_decay", c.weight_decay},
            {"betas", {0.9, 0.999}},
            {"seed", c.seed},
            {"pretrain_ae_steps", c.pretrain_ae_steps},
            {"pretrain_unet_steps", c.pretrain_unet_steps},
            {"pretrain_lr", c.pretrain_lr},
            {"checkpoint_every", c.checkpoint_every}};
}

StageConfig stage_from_json(const nlohmann::json& j) {
    StageConfig c;
    c.stage = j.at("stage");
    c.lr_max = j.at("lr_max");
    c.total_steps = j.at("total_steps");
    c.batch_size = j.at("batch_size");
    c.grad_accum = j.at("grad_accum");
    c.eta_min = j.at("eta_min");
    c.T0 = j.at("T0");
    c.precision = j.at("precision");
    c.weight_decay = j.at("weight_decay");
    c.seed = j.at("seed");
    c.pretrain_ae_steps = j.at("pretrain_ae_steps");
    c.pretrain_unet_steps = j.at("pretrain_unet_steps");
    c.pretrain_lr = j.at("pretrain_lr");
    c.checkpoint_every = j.at("checkpoint_every");
    c.validate();
    return c;
}

// ---------------------------------------------------------------- optimizer

void optimizer_step(ParamStore& ps, AdamState& st, double lr, double weight_decay, double beta1,
                    double beta2) {
    constexpr double eps = 1e-8;
    st.t += 1;
    double bc1 = 1.0 - std::pow(beta1, (double)st.t);
    double bc2 = 1.0 - std::pow(beta2, (double)st.t);
    for (auto& [name, p] : ps.params()) {
        if (!ps.is_trainable(name)) continue;
        Tensor& g = ps.grad(name);
        if (!g.all_finite())
            throw std::runtime_error("optimizer: non-finite gradient in " + name + " at step " +
                                     std::to_string(st.t));
        Tensor& m = st.m.try_emplace(name, Tensor(p.shape)).first->second;
        Tensor& v = st.v.try_emplace(name, Tensor(p.shape)).first->second;
        for (size_t i = 0; i < p.v.size(); ++i) {
            m.v[i] = beta1 * m.v[i] + (1.0 - beta1) * g.v[i];
            v.v[i] = beta2 * v.v[i] + (1.0 - beta2) * g.v[i] * g.v[i];
            double mh = m.v[i] / bc1, vh = v.v[i] / bc2;
            p.v[i] -= lr * weight_decay * p.v[i];
            p.v[i] -= lr * mh / (std::sqrt(vh) + eps);
        }
    }
}

// ---------------------------------------------------------------- checkpoints

static uint64_t fnv1a(uint64_t h, const void* data, size_t n) {
    const unsigned char* p = (const unsigned char*)data;
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

static std::string hash_arrays(const std::map<std::string, Tensor>& arrays,
                               const std::string& skip_prefix) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (auto& [name, t] : arrays) {
        if (name.rfind("opt.", 0) == 0) continue;
        if (!skip_prefix.empty() && name.rfind(skip_prefix, 0) == 0) continue;
        h = fnv1a(h, name.data(), name.size() + 1);
        for (int d : t.shape) {
            int64_t dd = d;
            h = fnv1a(h, &dd, sizeof(dd));
        }
        h = fnv1a(h, t.v.data(), t.v.size() * sizeof(double));
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
    return buf;
}

std::string checkpoint_hash(const Checkpoint& ck) { return hash_arrays(ck.arrays, ""); }

void save_checkpoint(Checkpoint& ck, const std::string& path) {
    ck.meta["content_hash"] = checkpoint_hash(ck);
    nlohmann::json header;
    header["format"] = 1;
    header["dtype"] = "f64le";
    nlohmann::json arr = nlohmann::json::array();
    for (auto& [name, t] : ck.arrays) {
        bool tr = ck.trainable.count(name) ? ck.trainable.at(name) : false;
        arr.push_back({{"name", name}, {"shape", t.shape}, {"trainable", tr}});
    }
    header["arrays"] = std::move(arr);
    header["meta"] = ck.meta;
    std::string hs = header.dump();
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("checkpoint: cannot write " + path);
    uint64_t n = hs.size();
    f.write((const char*)&n, 8);
    f.write(hs.data(), (std::streamsize)hs.size());
    for (auto& [name, t] : ck.arrays)
        f.write((const char*)t.v.data(), (std::streamsize)(t.v.size() * sizeof(double)));
    if (!f) throw std::runtime_error("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
    uint64_t n = 0;
    f.read((char*)&n, 8);
    std::string hs(n, '\0');
    f.read(hs.data(), (std::streamsize)n);
    if (!f) throw std::runtime_error("checkpoint: truncated header in " + path);
    nlohmann::json header = nlohmann::json::parse(hs);
    if (header.at("format") != 1) throw std::runtime_error("checkpoint: unknown format");
    Checkpoint ck;
    ck.meta = header.at("meta");
    for (auto& a : header.at("arrays")) {
        std::string name = a.at("name");
        Tensor t(a.at("shape").get<std::vector<int>>());
        f.read((char*)t.v.data(), (std::streamsize)(t.v.size() * sizeof(double)));
        ck.trainable[name] = a.at("trainable");
        ck.arrays[name] = std::move(t);
    }
    if (!f) throw std::runtime_error("checkpoint: truncated payload in " + path);
    std::string want = ck.meta.value("content_hash", "");
    if (!want.empty() && want != checkpoint_hash(ck))
        throw std::runtime_error("checkpoint: content hash mismatch in " + path);
    return ck;
}

Checkpoint snapshot(const ParamStore& ps, const AdamState* opt, nlohmann::json meta) {
    Checkpoint ck;
    for (auto& [name, t] : ps.params()) {
        ck.arrays[name] = t;
        ck.trainable[name] = ps.is_trainable(name);
    }
    if (opt) {
        for (auto& [name, t] : opt->m) ck.arrays["opt.m." + name] = t;
        for (auto& [name, t] : opt->v) ck.arrays["opt.v." + name] = t;
        meta["opt_t"] = opt->t;
    }
    ck.meta = std::move(meta);
    return ck;
}

void restore(const Checkpoint& ck, ParamStore& ps, AdamState* opt) {
    if (!ps.params().empty()) throw std::invalid_argument("restore: store not empty");
    for (auto& [name, t] : ck.arrays) {
        if (name.rfind("opt.", 0) == 0) continue;
        bool tr = ck.trainable.count(name) ? ck.trainable.at(name) : false;
        ps.add(name, t, tr);
    }
    if (opt) {
        for (auto& [name, t] : ck.arrays) {
            if (name.rfind("opt.m.", 0) == 0) opt->m[name.substr(6)] = t;
            if (name.rfind("opt.v.", 0) == 0) opt->v[name.substr(6)] = t;
        }
        opt->t = ck.meta.value("opt_t", (int64_t)0);
    }
}

Checkpoint partial_checkpoint(const Checkpoint& full, const std::string& prefix) {
    Checkpoint part;
    for (auto& [name, t] : full.arrays) {
        std::string base = name;
        if (base.rfind("opt.m.", 0) == 0 || base.rfind("opt.v.", 0) == 0) base = base.substr(6);
        if (base.rfind(prefix, 0) != 0) continue;
        part.arrays[name] = t;
        if (full.trainable.count(name)) part.trainable[name] = full.trainable.at(name);
    }
    if (part.arrays.empty()) throw std::invalid_argument("partial checkpoint: nothing under " + prefix);
    part.meta = full.meta;
    part.meta["partial_prefix"] = prefix;
    part.meta["base_hash"] = hash_arrays(full.arrays, prefix);
    return part;
}

void apply_partial(const Checkpoint& part, ParamStore& ps, const std::string& base_hash) {
    std::string want = part.meta.value("base_hash", "");
    if (want.empty()) throw std::runtime_error("apply_partial: checkpoint carries no base hash");
    if (want != base_hash)
        throw std::runtime_error("apply_partial: base hash mismatch (checkpoint expects " + want +
                                 ", got " + base_hash + ")");
    for (auto& [name, t] : part.arrays) {
        if (name.rfind("opt.", 0) == 0) continue;
        bool tr = part.trainable.count(name) ? part.trainable.at(name) : false;
        if (ps.has(name)) {
            ps.param(name) = t;
            ps.set_trainable(name, tr);
        } else {
            ps.add(name, t, tr);
        }
    }
}

// ---------------------------------------------------------------- stage loops

static void set_trainable_prefix(ParamStore& ps, const std::string& prefix, bool t) {
    for (auto& [name, p] : ps.params())
        if (name.rfind(prefix, 0) == 0) ps.set_trainable(name, t);
}

static void append_trace(const std::string& path, int64_t step, double loss, double lr,
                         bool truncate) {
    std::ofstream f(path, truncate ? std::ios::trunc : std::ios::app);
    if (!f) throw std::runtime_error("trace: cannot write " + path);
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%" PRId64 ",%.17g,%.17g\n", step, loss, lr);
    f << buf;
}

static void abort_with_checkpoint(ParamStore& ps, const AdamState& opt, const StageConfig& cfg,
                                  const ModelSpec& spec, int64_t step, const std::string& out_dir) {
    nlohmann::json meta{{"step", step},
                        {"aborted", true},
                        {"config", stage_to_json(cfg)},
                        {"spec", spec_to_json(spec)}};
    Checkpoint ck = snapshot(ps, &opt, meta);
    std::string path = out_dir + "/stage" + std::to_string(cfg.stage) + "_abort.ckpt";
    save_checkpoint(ck, path);
    throw std::runtime_error("non-finite loss at step " + std::to_string(step) +
                             "; last good state saved to " + path);
}

static nlohmann::json run_meta(const StageConfig& cfg, const ModelSpec& spec, int64_t step) {
    // the rng "state" is fully determined by (seed, step): streams are
    // counter-based, so the pair is what gets persisted
    return {{"step", step},
            {"config", stage_to_json(cfg)},
            {"spec", spec_to_json(spec)},
            {"rng", {{"seed", cfg.seed}, {"next_step", step}}}};
}

TrainResult run_stage1(const PairedDataset& ds, const ModelSpec& spec, ParamStore& ps,
                       const StageConfig& cfg, const std::string& out_dir,
                       const std::string& resume_ckpt) {
    cfg.validate();
    spec.validate();
    if (cfg.stage != 1) throw std::invalid_argument("run_stage1: config is not stage 1");
    auto recs = ds.split_records(Split::train);
    if (recs.empty()) throw std::invalid_argument("run_stage1: empty training split");
    fs::create_directories(out_dir);
    NoiseSchedule sched = schedule_of(spec);
    size_t n = recs.size();
    int64_t start_step = 0;
    AdamState opt;
    TrainResult res;
    res.init_ckpt = out_dir + "/stage1_init.ckpt";
    res.final_ckpt = out_dir + "/stage1.ckpt";
    std::string trace = out_dir + "/stage1_loss.csv";

    if (!resume_ckpt.empty()) {
        Checkpoint ck = load_checkpoint(resume_ckpt);
        restore(ck, ps, &opt);
        start_step = ck.meta.at("step");
    } else {
        // codec pretraining (reconstruction objective, codec weights only)
        ps.freeze_all();
        set_trainable_prefix(ps, "ae.", true);
        AdamState aopt;
        const int ae_batch = 4;
        for (int64_t k = 0; k < cfg.pretrain_ae_steps; ++k) {
            ps.zero_grad();
            Graph g;
            Rng ord = step_rng(cfg.seed, (uint64_t)k, 1999);
            int loss = -1;
            for (int i = 0; i < ae_batch; ++i) {
                size_t idx = (size_t)ord.uniform_int((uint64_t)n);
                int img = g.leaf(recs[idx]->image);
                int rec = ae_decode_graph(g, ps, spec.ae, ae_encode_graph(g, ps, spec.ae, img));
                int li = g_mse(g, rec, img);
                loss = i == 0 ? li : g_add(g, loss, li);
            }
            loss = g_scale(g, loss, 1.0 / ae_batch);
            if (!std::isfinite(g.val(loss).v[0])) abort_with_checkpoint(ps, aopt, cfg, spec, k, out_dir);
            g.backward(loss);
            optimizer_step(ps, aopt, cfg.pretrain_lr, 0.0);
        }

        // no pretrained base exists at this scale: the first
        // pretrain_unet_steps of the stage train the compact base model from
        // scratch (unconditionally, against the null token) before the
        // adapters are attached and the fine-tuning segment begins
        if (cfg.pretrain_unet_steps > 0) {
            ps.freeze_all();
            set_trainable_prefix(ps, "unet.", true);
        }
    }

    std::vector<Tensor> lat;
    for (auto* r : recs) lat.push_back(ae_encode(ps, spec.ae, r->image));

    const int64_t P = std::min(cfg.pretrain_unet_steps, cfg.total_steps);
    bool injected = false;
    for (auto& [name, p] : ps.params())
        if (name.rfind("lora.", 0) == 0) injected = true;

    for (int64_t k = start_step; k < cfg.total_steps; ++k) {
        if (k >= P && !injected) {
            // attach adapters; trainable surface = adapters + EEG encoder
            inject(ps, spec.lora, cfg.seed);
            ps.freeze_all();
            set_trainable_prefix(ps, "enc.", true);
            for (auto& [name, p] : ps.params()) {
                if (name.rfind("lora.", 0) != 0) continue;
                auto suffix = name.substr(name.rfind('.') + 1);
                ps.set_trainable(name, suffix == "A" || suffix == "B");
            }
            Checkpoint ic = snapshot(ps, nullptr, run_meta(cfg, spec, k));
            save_checkpoint(ic, res.init_ckpt);
            injected = true;
        }
        bool base_phase = k < P;
        double lr = base_phase ? cfg.pretrain_lr : lr_at(k, cfg);
        ps.zero_grad();
        Graph g;
        g.half_params = cfg.precision == "half";
        Rng ord = step_rng(cfg.seed, (uint64_t)k, 999);
        int loss = -1;
        for (int i = 0; i < cfg.batch_size; ++i) {
            size_t idx = (size_t)ord.uniform_int((uint64_t)n);
            Rng r = step_rng(cfg.seed, (uint64_t)k, (uint64_t)i);
            int t = 1 + (int)r.uniform_int((uint64_t)sched.T_steps);
            Tensor eps(lat[idx].shape);
            for (auto& e : eps.v) e = r.normal();
            int tok = base_phase ? g.param(ps, "unet.null_token")
                                 : encode_graph(g, ps, spec.enc, g.leaf(recs[idx]->eeg.data));
            int eh = unet_forward_graph(g, ps, spec.unet,
                                        g.leaf(add_noise(lat[idx], eps, t, sched)), t, tok);
            int li = g_mse(g, eh, g.leaf(eps));
            loss = i == 0 ? li : g_add(g, loss, li);
        }
        loss = g_scale(g, loss, 1.0 / cfg.batch_size);
        double lv = g.val(loss).v[0];
        if (!std::isfinite(lv)) abort_with_checkpoint(ps, opt, cfg, spec, k, out_dir);
        g.backward(loss);
        optimizer_step(ps, opt, lr, base_phase ? 0.0 : cfg.weight_decay);
        append_trace(trace, k, lv, lr, k == 0 && resume_ckpt.empty());
        res.losses.push_back(lv);
        if (cfg.checkpoint_every > 0 && (k + 1) % cfg.checkpoint_every == 0 &&
            k + 1 < cfg.total_steps) {
            Checkpoint ck = snapshot(ps, &opt, run_meta(cfg, spec, k + 1));
            save_checkpoint(ck, out_dir + "/stage1_step" + std::to_string(k + 1) + ".ckpt");
        }
    }

    Checkpoint fc = snapshot(ps, &opt, run_meta(cfg, spec, cfg.total_steps));
    save_checkpoint(fc, res.final_ckpt);
    return res;
}

TrainResult run_stage2(const PairedDataset& ds, const ModelSpec& spec, ParamStore& ps,
                       const StageConfig& cfg, const std::string& out_dir,
                       const std::string& resume_ckpt) {
    cfg.validate();
    spec.validate();
    if (cfg.stage != 2) throw std::invalid_argument("run_stage2: config is not stage 2");
    auto recs = ds.split_records(Split::train);
    if (recs.empty()) throw std::invalid_argument("run_stage2: empty training split");
    fs::create_directories(out_dir);
    NoiseSchedule sched = schedule_of(spec);
    size_t n = recs.size();
    int64_t start_step = 0;
    AdamState opt;
    TrainResult res;
    res.init_ckpt = out_dir + "/stage2_init.ckpt";
    res.final_ckpt = out_dir + "/stage2.ckpt";
    std::string trace = out_dir + "/stage2_loss.csv";

    if (!resume_ckpt.empty()) {
        Checkpoint ck = load_checkpoint(resume_ckpt);
        restore(ck, ps, &opt);
        start_step = ck.meta.at("step");
    } else {
        if (!ps.has("unet.in.w")) throw std::invalid_argument("run_stage2: stage-1 model missing");
        if (!has_control(ps)) init_control(ps, spec.unet, spec.control, cfg.seed);
        ps.freeze_all();
        set_trainable_prefix(ps, "control.", true);
        Checkpoint ic = snapshot(ps, nullptr, run_meta(cfg, spec, 0));
        save_checkpoint(ic, res.init_ckpt);
    }

    // everything outside the branch is frozen, so conditioning is precomputable
    std::vector<Tensor> lat, toks, sals;
    for (auto* r : recs) {
        lat.push_back(ae_encode(ps, spec.ae, r->image));
        toks.push_back(encode(r->eeg, ps, spec.enc));
        SaliencyMap m = normalize(resize_map(r->saliency, spec.ae.img_hw, spec.ae.img_hw),
                                  SalNorm::max1);
        sals.emplace_back(std::vector<int>{1, spec.ae.img_hw, spec.ae.img_hw}, m.data.v);
    }

    for (int64_t k = start_step; k < cfg.total_steps; ++k) {
        double lr = lr_at(k, cfg);
        ps.zero_grad();
        Rng ord = step_rng(cfg.seed, (uint64_t)k, 999);
        double lv = 0.0;
        for (int m = 0; m < cfg.grad_accum; ++m) {
            Graph g;
            g.half_params = cfg.precision == "half";
            int loss = -1;
            for (int i = 0; i < cfg.batch_size; ++i) {
                size_t idx = (size_t)ord.uniform_int((uint64_t)n);
                uint64_t j = (uint64_t)(m * cfg.batch_size + i);
                Rng r = step_rng(cfg.seed, (uint64_t)k, j);
                int t = 1 + (int)r.uniform_int((uint64_t)sched.T_steps);
                Tensor eps(lat[idx].shape);
                for (auto& e : eps.v) e = r.normal();
                int x = g.leaf(add_noise(lat[idx], eps, t, sched));
                int tok = g.leaf(toks[idx]);
                auto ctrl = control_forward_graph(g, ps, spec.unet, x, t, tok, g.leaf(sals[idx]));
                int eh = unet_forward_graph(g, ps, spec.unet, x, t, tok, &ctrl);
                int li = g_mse(g, eh, g.leaf(eps));
                loss = i == 0 ? li : g_add(g, loss, li);
            }
            loss = g_scale(g, loss, 1.0 / (double)(cfg.batch_size * cfg.grad_accum));
            double part = g.val(loss).v[0];
            if (!std::isfinite(part)) abort_with_checkpoint(ps, opt, cfg, spec, k, out_dir);
            g.backward(loss);
            lv += part;
        }
        optimizer_step(ps, opt, lr, cfg.weight_decay);
        append_trace(trace, k, lv, lr, k == 0 && resume_ckpt.empty());
        res.losses.push_back(lv);
        if (cfg.checkpoint_every > 0 && (k + 1) % cfg.checkpoint_every == 0 &&
            k + 1 < cfg.total_steps) {
            Checkpoint ck = snapshot(ps, &opt, run_meta(cfg, spec, k + 1));
            save_checkpoint(ck, out_dir + "/stage2_step" + std::to_string(k + 1) + ".ckpt");
        }
    }

    Checkpoint fc = snapshot(ps, &opt, run_meta(cfg, spec, cfg.total_steps));
    save_checkpoint(fc, res.final_ckpt);
    Checkpoint pc = partial_checkpoint(fc, "control.");
    save_checkpoint(pc, out_dir + "/stage2_control.ckpt");
    return res;
}

}  // namespace eegsal
