#ifndef EEGSAL_TRAIN_HPP
#define EEGSAL_TRAIN_HPP

#include "eegsal/pipeline.hpp"

namespace eegsal {

// One optimization stage: AdamW + cosine annealing with warm restarts.
struct StageConfig {
    int stage = 1;
    double lr_max = 2e-3;
    int64_t total_steps = 212000;
    int batch_size = 8;
    int grad_accum = 1;
    double eta_min = 1e-6;
    int64_t T0 = 5000;
    std::string precision = "half";  // "full" | "half"
    double weight_decay = 1e-2;
    uint64_t seed = 0;
    // stage-1 only: codec pretraining runs before the stage; the first
    // pretrain_unet_steps of total_steps train the base model unconditionally
    // before the adapters are attached
    int64_t pretrain_ae_steps = 2000;
    int64_t pretrain_unet_steps = 1500;
    double pretrain_lr = 2e-3;
    int64_t checkpoint_every = 0;  // 0 = final only

    void validate() const;
};

StageConfig stage1_defaults();
StageConfig stage2_defaults();
// shrunk step counts for CPU smoke runs
StageConfig desk_stage1();
StageConfig desk_stage2();

// lr = eta_min + (lr_max - eta_min) * (1 + cos(pi * (step mod T0) / T0)) / 2
double lr_at(int64_t step, const StageConfig& cfg);

nlohmann::json stage_to_json(const StageConfig& cfg);
StageConfig stage_from_json(const nlohmann::json& j);

// AdamW with bias correction and decoupled weight decay.
struct AdamState {
    std::map<std::string, Tensor> m, v;
    int64_t t = 0;
};

void optimizer_step(ParamStore& ps, AdamState& st, double lr, double weight_decay,
                    double beta1 = 0.9, double beta2 = 0.999);

// ---------------------------------------------------------------- checkpoints

// On disk: u64 LE header length, JSON header (array names/shapes, trainable
// flags, meta, content hash), then the arrays as contiguous LE doubles in
// header order. Optimizer state rides along under "opt.".
struct Checkpoint {
    std::map<std::string, Tensor> arrays;
    std::map<std::string, bool> trainable;
    nlohmann::json meta;
};

std::string checkpoint_hash(const Checkpoint& ck);                 // over model arrays only
void save_checkpoint(Checkpoint& ck, const std::string& path);     // stamps meta["content_hash"]
Checkpoint load_checkpoint(const std::string& path);

Checkpoint snapshot(const ParamStore& ps, const AdamState* opt, nlohmann::json meta);
void restore(const Checkpoint& ck, ParamStore& ps, AdamState* opt);  // into an empty store

// Partial checkpoint carrying only arrays under `prefix` plus the hash of the
// base it extends; apply verifies the hash before merging.
Checkpoint partial_checkpoint(const Checkpoint& full, const std::string& prefix);
void apply_partial(const Checkpoint& part, ParamStore& ps, const std::string& base_hash);

// ---------------------------------------------------------------- stages

struct TrainResult {
    std::vector<double> losses;  // per optimizer step
    std::string init_ckpt;       // adapter attach point (stage 1) / branch attach (stage 2)
    std::string final_ckpt;
};

// Stage 1: pretrains the codec, trains the unconditional base model for the
// first pretrain_unet_steps, attaches the adapters, then fine-tunes adapters +
// EEG encoder on the noise-prediction objective. Pass a checkpoint path to
// resume mid-stage.
TrainResult run_stage1(const PairedDataset& ds, const ModelSpec& spec, ParamStore& ps,
                       const StageConfig& cfg, const std::string& out_dir,
                       const std::string& resume_ckpt = "");

// Stage 2: builds (or reuses) the control branch on top of the frozen stage-1
// model and trains only it, with gradient accumulation.
TrainResult run_stage2(const PairedDataset& ds, const ModelSpec& spec, ParamStore& ps,
                       const StageConfig& cfg, const std::string& out_dir,
                       const std::string& resume_ckpt = "");

}  // namespace eegsal

#endif
