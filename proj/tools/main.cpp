#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "eegsal/image_io.hpp"
#include "eegsal/metrics.hpp"
#include "eegsal/train.hpp"

namespace fs = std::filesystem;
using namespace eegsal;
using nlohmann::json;

static void write_echo(const std::string& out_dir, const std::string& cmd, const json& cfg) {
    fs::create_directories(out_dir);
    std::ofstream f(out_dir + "/" + cmd + "_config.json");
    f << cfg.dump(2) << "\n";
}

struct LoadedModel {
    ParamStore ps;
    ModelSpec spec;
    std::string hash;
    json meta;
};

static LoadedModel load_model(const std::string& ckpt_path) {
    LoadedModel m;
    Checkpoint ck = load_checkpoint(ckpt_path);
    m.spec = spec_from_json(ck.meta.at("spec"));
    m.hash = checkpoint_hash(ck);
    m.meta = ck.meta;
    restore(ck, m.ps, nullptr);
    return m;
}

// flags default to sentinels; anything the user left alone falls back to the
// preset so the config echo always shows fully resolved values
struct StageFlags {
    int64_t steps = -1;
    int batch = -1, accum = -1;
    double lr = -1, eta_min = -1, wd = -1;
    int64_t t0 = -1, ckpt_every = -1;
    std::string precision;
    int64_t pre_ae = -1, pre_unet = -1;
    double pre_lr = -1;
    uint64_t seed = 0;
    std::string preset = "paper";

    void add_to(CLI::App* c) {
        c->add_option("--preset", preset, "paper | desk")->check(CLI::IsMember({"paper", "desk"}));
        c->add_option("--seed", seed, "run seed");
        c->add_option("--steps", steps, "optimizer steps");
        c->add_option("--batch", batch, "batch size");
        c->add_option("--grad-accum", accum, "gradient accumulation micro-batches");
        c->add_option("--lr", lr, "peak learning rate");
        c->add_option("--eta-min", eta_min, "cosine floor");
        c->add_option("--t0", t0, "warm-restart period");
        c->add_option("--precision", precision, "full | half")
            ->check(CLI::IsMember({"full", "half"}));
        c->add_option("--weight-decay", wd, "decoupled weight decay");
        c->add_option("--pretrain-ae", pre_ae, "codec pretraining steps (stage 1)");
        c->add_option("--pretrain-unet", pre_unet, "base-model pretraining steps (stage 1)");
        c->add_option("--pretrain-lr", pre_lr, "pretraining learning rate");
        c->add_option("--checkpoint-every", ckpt_every, "intermediate checkpoint period");
    }

    StageConfig resolve(int stage) const {
        StageConfig c;
        if (stage == 1) c = preset == "desk" ? desk_stage1() : stage1_defaults();
        if (stage == 2) c = preset == "desk" ? desk_stage2() : stage2_defaults();
        if (steps >= 0) c.total_steps = steps;
        if (batch >= 0) c.batch_size = batch;
        if (accum >= 0) c.grad_accum = accum;
        if (lr >= 0) c.lr_max = lr;
        if (eta_min >= 0) c.eta_min = eta_min;
        if (t0 >= 0) c.T0 = t0;
        if (!precision.empty()) c.precision = precision;
        if (wd >= 0) c.weight_decay = wd;
        if (pre_ae >= 0) c.pretrain_ae_steps = pre_ae;
        if (pre_unet >= 0) c.pretrain_unet_steps = pre_unet;
        if (pre_lr >= 0) c.pretrain_lr = pre_lr;
        if (ckpt_every >= 0) c.checkpoint_every = ckpt_every;
        c.seed = seed;
        c.validate();
        return c;
    }

    ModelSpec resolve_spec(const PairedDataset& ds) const {
        if (preset == "desk") return desk_spec(ds.channels, ds.samples);
        ModelSpec s;
        s.enc.channels = ds.channels;
        s.enc.samples = ds.samples;
        s.validate();
        return s;
    }
};

int main(int argc, char** argv) {
    CLI::App app{"EEG + saliency conditioned image reconstruction pipeline"};
    app.require_subcommand(1);

    // ---- synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic paired dataset");
    SyntheticSpec sspec;
    uint64_t synth_seed = 0;
    double test_fraction = 0.25;
    std::string synth_out;
    synth->add_option("--n", sspec.n_records, "number of records");
    synth->add_option("--classes", sspec.n_classes, "number of classes");
    synth->add_option("--channels", sspec.channels, "EEG channels");
    synth->add_option("--samples", sspec.samples, "EEG samples per epoch");
    synth->add_option("--hw", sspec.height, "image height/width");
    synth->add_option("--noise", sspec.noise_level, "EEG noise level");
    synth->add_option("--seed", synth_seed, "dataset seed");
    synth->add_option("--test-fraction", test_fraction, "stratified test fraction");
    synth->add_option("--out", synth_out, "output directory")->required();

    // ---- train1 / train2
    auto* train1 = app.add_subcommand("train1", "stage 1: adapter + encoder fine-tuning");
    StageFlags f1;
    std::string t1_data, t1_out, t1_resume;
    f1.add_to(train1);
    train1->add_option("--data", t1_data, "dataset directory")->required();
    train1->add_option("--out", t1_out, "output directory")->required();
    train1->add_option("--resume", t1_resume, "checkpoint to resume from");

    auto* train2 = app.add_subcommand("train2", "stage 2: control branch training");
    StageFlags f2;
    std::string t2_data, t2_out, t2_ckpt, t2_resume;
    f2.add_to(train2);
    train2->add_option("--data", t2_data, "dataset directory")->required();
    train2->add_option("--ckpt", t2_ckpt, "stage-1 checkpoint");
    train2->add_option("--out", t2_out, "output directory")->required();
    train2->add_option("--resume", t2_resume, "checkpoint to resume from");

    // ---- generate
    auto* gen = app.add_subcommand("generate", "reconstruct the test split");
    std::string g_data, g_ckpt, g_out;
    uint64_t g_seed = 0;
    int g_steps = -1;
    double g_guidance = -1;
    bool g_with_sal = false, g_eeg_only = false, g_mismatch = false;
    gen->add_option("--data", g_data, "dataset directory")->required();
    gen->add_option("--ckpt", g_ckpt, "checkpoint")->required();
    gen->add_option("--out", g_out, "output directory")->required();
    gen->add_option("--seed", g_seed, "sampling seed");
    gen->add_option("--steps", g_steps, "sampler steps");
    gen->add_option("--guidance", g_guidance, "guidance scale (1 = off)");
    gen->add_flag("--with-saliency", g_with_sal, "condition on ground-truth saliency maps");
    gen->add_flag("--eeg-only", g_eeg_only, "skip the control branch");
    gen->add_flag("--mismatch", g_mismatch, "rotate saliency maps across the split by one");

    // ---- evaluate
    auto* ev = app.add_subcommand("evaluate", "metric protocol over a reconstruction directory");
    std::string e_data, e_recon, e_recon2, e_out, e_features;
    ev->add_option("--data", e_data, "dataset directory")->required();
    ev->add_option("--recon", e_recon, "reconstruction directory (recon/{id}.png)")->required();
    ev->add_option("--recon2", e_recon2, "second arm for paired comparison");
    ev->add_option("--out", e_out, "output directory")->required();
    ev->add_option("--features-dir", e_features,
                   "root of precomputed features/{extractor}/{id}.f32");

    // ---- saliency-predict
    auto* sp = app.add_subcommand("saliency-predict", "bottom-up saliency of an image");
    std::string sp_image, sp_out;
    sp->add_option("--image", sp_image, "input PNG")->required();
    sp->add_option("--out", sp_out, "output gray PNG")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 2;
    }

    try {
        if (*synth) {
            if (sspec.n_records < 1) throw std::invalid_argument("synth: --n must be >= 1");
            sspec.width = sspec.height;
            PairedDataset ds = generate_synthetic(sspec, synth_seed);
            ds = split_dataset(ds, test_fraction, synth_seed);
            save_dataset(ds, synth_out);
            write_echo(synth_out, "synth",
                       {{"command", "synth"},
                        {"n", sspec.n_records},
                        {"classes", sspec.n_classes},
                        {"channels", sspec.channels},
                        {"samples", sspec.samples},
                        {"hw", sspec.height},
                        {"noise", sspec.noise_level},
                        {"seed", synth_seed},
                        {"test_fraction", test_fraction},
                        {"out", synth_out}});
            int n_test = (int)ds.split_records(Split::test).size();
            std::cout << "wrote " << ds.records.size() << " records (" << n_test << " test) to "
                      << synth_out << "\n";
        } else if (*train1) {
            PairedDataset ds = load_dataset(t1_data);
            StageConfig cfg = f1.resolve(1);
            ModelSpec spec = f1.resolve_spec(ds);
            write_echo(t1_out, "train1",
                       {{"command", "train1"},
                        {"data", t1_data},
                        {"out", t1_out},
                        {"resume", t1_resume},
                        {"preset", f1.preset},
                        {"config", stage_to_json(cfg)},
                        {"spec", spec_to_json(spec)}});
            ParamStore ps;
            if (t1_resume.empty()) init_model(spec, cfg.seed, ps);
            TrainResult r = run_stage1(ds, spec, ps, cfg, t1_out, t1_resume);
            std::cout << "stage 1 done: " << r.final_ckpt << " (final loss "
                      << (r.losses.empty() ? 0.0 : r.losses.back()) << ")\n";
        } else if (*train2) {
            PairedDataset ds = load_dataset(t2_data);
            StageConfig cfg = f2.resolve(2);
            if (t2_ckpt.empty() && t2_resume.empty())
                throw std::invalid_argument("train2: --ckpt or --resume is required");
            ParamStore ps;
            ModelSpec spec;
            if (!t2_resume.empty()) {
                Checkpoint ck = load_checkpoint(t2_resume);
                spec = spec_from_json(ck.meta.at("spec"));
            } else {
                LoadedModel m = load_model(t2_ckpt);
                ps = std::move(m.ps);
                spec = m.spec;
            }
            write_echo(t2_out, "train2",
                       {{"command", "train2"},
                        {"data", t2_data},
                        {"ckpt", t2_ckpt},
                        {"out", t2_out},
                        {"resume", t2_resume},
                        {"preset", f2.preset},
                        {"config", stage_to_json(cfg)},
                        {"spec", spec_to_json(spec)}});
            TrainResult r = run_stage2(ds, spec, ps, cfg, t2_out, t2_resume);
            std::cout << "stage 2 done: " << r.final_ckpt << " (final loss "
                      << (r.losses.empty() ? 0.0 : r.losses.back()) << ")\n";
        } else if (*gen) {
            if (g_with_sal == g_eeg_only)
                throw std::invalid_argument(
                    "generate: exactly one of --with-saliency / --eeg-only is required");
            PairedDataset ds = load_dataset(g_data);
            LoadedModel m = load_model(g_ckpt);
            if (g_steps > 0) m.spec.sample_steps = g_steps;
            if (g_guidance > 0) m.spec.guidance = g_guidance;
            m.spec.validate();
            if (g_with_sal && !has_control(m.ps))
                throw std::invalid_argument(
                    "generate: --with-saliency needs a checkpoint with a control branch");
            auto test = ds.split_records(Split::test);
            if (test.empty()) throw std::invalid_argument("generate: empty test split");
            fs::create_directories(g_out + "/recon");
            write_echo(g_out, "generate",
                       {{"command", "generate"},
                        {"data", g_data},
                        {"ckpt", g_ckpt},
                        {"ckpt_hash", m.hash},
                        {"out", g_out},
                        {"seed", g_seed},
                        {"steps", m.spec.sample_steps},
                        {"guidance", m.spec.guidance},
                        {"arm", g_with_sal ? "with-saliency" : "eeg-only"},
                        {"mismatch", g_mismatch}});
            for (size_t i = 0; i < test.size(); ++i) {
                Tensor tokens = tokens_for(m.ps, m.spec, test[i]->eeg);
                const SaliencyMap* sal = nullptr;
                if (g_with_sal) sal = &test[g_mismatch ? (i + 1) % test.size() : i]->saliency;
                Tensor img = generate_image(m.ps, m.spec, tokens, sal, g_seed + (uint64_t)i);
                save_image_png(g_out + "/recon/" + test[i]->stimulus_id + ".png", img);
            }
            std::cout << "wrote " << test.size() << " reconstructions to " << g_out << "/recon\n";
        } else if (*ev) {
            PairedDataset ds = load_dataset(e_data);
            auto test = ds.split_records(Split::test);
            if (test.empty()) throw std::invalid_argument("evaluate: empty test split");
            std::vector<FeatureExtractor> extractors{toy_extractor("toy", 1234)};
            if (!e_features.empty())
                for (auto& entry : fs::directory_iterator(e_features))
                    if (entry.is_directory())
                        extractors.push_back(file_extractor(entry.path().filename().string(),
                                                            entry.path().string()));
            auto eval_arm = [&](const std::string& recon_dir, json& extra_missing) {
                std::vector<Tensor> recons, gts;
                std::vector<SaliencyMap> sals;
                std::vector<std::string> ids;
                for (auto* r : test) {
                    std::string p = recon_dir + "/recon/" + r->stimulus_id + ".png";
                    if (!fs::exists(p)) {
                        extra_missing.push_back({{"id", r->stimulus_id},
                                                 {"metric", "reconstruction"},
                                                 {"error", "missing file " + p}});
                        continue;
                    }
                    recons.push_back(load_image_png(p));
                    gts.push_back(r->image);
                    sals.push_back(r->saliency);
                    ids.push_back(r->stimulus_id);
                }
                if (recons.empty())
                    throw std::invalid_argument("evaluate: no reconstructions found under " +
                                                recon_dir);
                MetricReport rep = evaluate_run(recons, gts, sals, ids, extractors);
                for (auto& mrow : extra_missing) rep.missing.push_back(mrow);
                std::vector<SaliencyMap> recon_sal;
                for (auto& img : recons) recon_sal.push_back(spectral_residual(img));
                std::string sheet = e_out + "/grid" +
                                    (recon_dir == e_recon2 ? "_arm_b" : "") + ".png";
                write_grid_sheet(sheet, gts, recons, sals, recon_sal);
                return rep;
            };
            fs::create_directories(e_out);
            json extra_a = json::array();
            MetricReport ra = eval_arm(e_recon, extra_a);
            json report;
            if (e_recon2.empty()) {
                report = report_to_json(ra);
            } else {
                json extra_b = json::array();
                MetricReport rb = eval_arm(e_recon2, extra_b);
                report = {{"arm_a", report_to_json(ra)}, {"arm_b", report_to_json(rb)}};
            }
            write_echo(e_out, "evaluate",
                       {{"command", "evaluate"},
                        {"data", e_data},
                        {"recon", e_recon},
                        {"recon2", e_recon2},
                        {"out", e_out},
                        {"features_dir", e_features}});
            std::ofstream rf(e_out + "/report.json");
            rf << report.dump(2) << "\n";
            std::cout << report.dump(2) << "\n";
        } else if (*sp) {
            Tensor img = load_image_png(sp_image);
            SaliencyMap m = spectral_residual(img);
            if (!fs::path(sp_out).parent_path().empty())
                fs::create_directories(fs::path(sp_out).parent_path());
            save_gray_png(sp_out, normalize(m, SalNorm::max1).data);
            std::cout << "wrote " << sp_out << "\n";
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
