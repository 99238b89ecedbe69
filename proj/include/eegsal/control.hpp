#ifndef EEGSAL_CONTROL_HPP
#define EEGSAL_CONTROL_HPP

#include "eegsal/diffusion.hpp"
#include "eegsal/saliency.hpp"

namespace eegsal {

// Spatial-control branch: a trainable copy of the UNet encoder path driven by
// a saliency hint, emitting per-resolution residuals through zero-initialized
// 1x1 projections. All parameters live under the "control." prefix.

struct ControlConfig {
    int hint_ch = 16;  // width of the hint conv stack
};

// Copies the (merged) encoder-path weights of the base UNet into "control.*",
// seeds the hint encoder, and adds all-zero output projections.
void init_control(ParamStore& ps, const UNetConfig& cfg, const ControlConfig& ccfg, uint64_t seed);

bool has_control(const ParamStore& ps);

// Saliency hint [1,H,W] (max1-normalized, H = 4*latent_hw) -> features at
// latent resolution [c0, latent_hw, latent_hw].
int hint_encode_graph(Graph& g, ParamStore& ps, const UNetConfig& cfg, int sal);
Tensor hint_encode(ParamStore& ps, const UNetConfig& cfg, const SaliencyMap& sal);

// Runs the branch with the same timestep/token conditioning as the base UNet
// and returns residual node ids, outermost resolution first.
std::array<int, 3> control_forward_graph(Graph& g, ParamStore& ps, const UNetConfig& cfg, int x,
                                         int t, int tokens, int sal);
ControlState control_forward(ParamStore& ps, const UNetConfig& cfg, const Tensor& x_t, int t,
                             const Tensor& tokens, const SaliencyMap& sal);

// encoder-path parameter suffixes shared by "unet." and "control."
std::vector<std::string> encoder_path_suffixes(const ParamStore& ps);

}  // namespace eegsal

#endif
