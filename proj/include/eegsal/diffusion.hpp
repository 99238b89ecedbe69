#ifndef EEGSAL_DIFFUSION_HPP
#define EEGSAL_DIFFUSION_HPP

#include <array>
#include <functional>

#include "eegsal/graph.hpp"
#include "eegsal/rng.hpp"

namespace eegsal {

// ------------------------------------------------------------- schedule

struct NoiseSchedule {
    int T_steps = 0;
    std::vector<double> betas;       // betas[t-1] for t in 1..T
    std::vector<double> alpha_bars;  // cumulative products

    double beta(int t) const { return betas[(size_t)(t - 1)]; }
    double alpha_bar(int t) const {  // alpha_bar(0) == 1
        if (t == 0) return 1.0;
        return alpha_bars[(size_t)(t - 1)];
    }
};

// Linear schedule, inclusive endpoints.
NoiseSchedule build_schedule(int T_steps, double beta_start, double beta_end);

// x_t = sqrt(abar_t)*x0 + sqrt(1-abar_t)*eps
Tensor add_noise(const Tensor& x0, const Tensor& eps, int t, const NoiseSchedule& sched);

// ------------------------------------------------------------- UNet

// Residual feature maps emitted by the control branch, one per tapped
// resolution (16, 8, 4 at default geometry), added into the decoder side.
struct ControlState {
    std::array<Tensor, 3> residuals;  // [c0,16,16], [c1,8,8], [c2,4,4]
};

struct UNetConfig {
    int latent_ch = 4;
    int latent_hw = 16;   // latent spatial size; resolutions are hw, hw/2, hw/4
    int c0 = 32;
    int c1 = 64;
    int c2 = 64;
    int ctx_tokens = 4;   // S
    int ctx_dim = 128;    // D
    int temb_feat = 32;
    int temb_dim = 64;
    int groups = 4;

    void validate() const;
};

// Adds parameters under `prefix` ("unet." for the base model; the control
// branch reuses the same layout under "control.").
void init_unet(const UNetConfig& cfg, uint64_t seed, ParamStore& ps,
               const std::string& prefix = "unet.");

// Sinusoidal timestep features followed by the shared MLP; returns [1, temb_dim].
int time_embedding_graph(Graph& g, ParamStore& ps, const UNetConfig& cfg, int t,
                         const std::string& prefix);

// Encoder path shared between the base UNet and the control branch.
// Returns feature nodes at the three resolutions: h0 [c0,hw,hw],
// h1 [c1,hw/2,hw/2], h2 [c2,hw/4,hw/4] (after the bottleneck blocks).
struct EncoderTaps {
    int h0, h1, h2;
};
EncoderTaps unet_encoder_graph(Graph& g, ParamStore& ps, const UNetConfig& cfg,
                               const std::string& prefix, int x, int temb, int tokens,
                               int hint_at_input = -1);

// Full epsilon prediction. `control` holds residual node ids or nullptr.
int unet_forward_graph(Graph& g, ParamStore& ps, const UNetConfig& cfg, int x, int t, int tokens,
                       const std::array<int, 3>* control = nullptr);

Tensor unet_forward(ParamStore& ps, const UNetConfig& cfg, const Tensor& x_t, int t,
                    const Tensor& tokens, const ControlState* control = nullptr);

// ------------------------------------------------------------- autoencoder

// Deterministic codec: two stride-2 convs down (factor 4), tanh-bounded
// latent, mirrored decoder with a sigmoid output.
struct AEConfig {
    int img_hw = 64;
    int base_ch = 32;
    int latent_ch = 4;

    void validate() const;
};

void init_autoencoder(const AEConfig& cfg, uint64_t seed, ParamStore& ps);

int ae_encode_graph(Graph& g, ParamStore& ps, const AEConfig& cfg, int image);
int ae_decode_graph(Graph& g, ParamStore& ps, const AEConfig& cfg, int latent);

Tensor ae_encode(ParamStore& ps, const AEConfig& cfg, const Tensor& image);
Tensor ae_decode(ParamStore& ps, const AEConfig& cfg, const Tensor& latent);

// ------------------------------------------------------------- objective / sampling

// Epsilon predictor abstraction; lets tests inject closed-form oracles.
using EpsModel = std::function<Tensor(const Tensor& x_t, int t, const Tensor& tokens)>;
using EpsFn = std::function<Tensor(const Tensor& x_t, int t)>;

// Mean epsilon-prediction error over a batch of (x0 latent, tokens) pairs with
// per-sample uniform t and fresh gaussian noise from the (seed, step) stream.
double training_loss(const std::vector<std::pair<Tensor, Tensor>>& batch, const EpsModel& model,
                     const NoiseSchedule& sched, uint64_t seed, uint64_t step);

// Deterministic DDIM (eta = 0) over an evenly strided timestep subset. The
// denoised estimate is clipped to [-1,1] each step (latents are tanh-bounded).
Tensor ddim_sample_latent(const EpsFn& model, const NoiseSchedule& sched,
                          const std::vector<int>& latent_shape, int n_steps, uint64_t seed);

// strided timestep subset used by the sampler, ascending (walked back to front)
std::vector<int> ddim_timesteps(int T_steps, int n_steps);

}  // namespace eegsal

#endif
