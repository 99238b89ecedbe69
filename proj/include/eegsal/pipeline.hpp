#ifndef EEGSAL_PIPELINE_HPP
#define EEGSAL_PIPELINE_HPP

#include "eegsal/control.hpp"
#include "eegsal/dataset.hpp"
#include "eegsal/encoder.hpp"
#include "eegsal/lora.hpp"

#include "json.hpp"

namespace eegsal {

// Everything needed to rebuild the full model and its sampler from a config
// echo: geometry of all three networks, the noise schedule, and the adapter
// layout. Serialized into checkpoints and config echo files.
struct ModelSpec {
    EncoderConfig enc;
    UNetConfig unet;
    AEConfig ae;
    ControlConfig control;
    int sched_T = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;
    LoRAConfig lora;
    int sample_steps = 50;
    double guidance = 1.0;  // 1 = single conditioned pass

    void validate() const;
};

// Shrunk geometry sized for CPU smoke runs.
ModelSpec desk_spec(int eeg_channels, int eeg_samples);

nlohmann::json spec_to_json(const ModelSpec& s);
ModelSpec spec_from_json(const nlohmann::json& j);

// encoder + base UNet + autoencoder (adapters and control branch are attached
// separately by the training stages)
void init_model(const ModelSpec& spec, uint64_t seed, ParamStore& ps);

NoiseSchedule schedule_of(const ModelSpec& spec);

Tensor tokens_for(ParamStore& ps, const ModelSpec& spec, const EEGEpoch& epoch);

// Deterministic DDIM sampling; `sal` switches the control branch on (must be
// built) and is resized/max1-normalized to the image resolution internally.
Tensor generate_latent(ParamStore& ps, const ModelSpec& spec, const Tensor& tokens,
                       const SaliencyMap* sal, uint64_t seed);
Tensor generate_image(ParamStore& ps, const ModelSpec& spec, const Tensor& tokens,
                      const SaliencyMap* sal, uint64_t seed);

}  // namespace eegsal

#endif
