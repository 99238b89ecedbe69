#ifndef EEGSAL_ENCODER_HPP
#define EEGSAL_ENCODER_HPP

#include "eegsal/dataset.hpp"
#include "eegsal/graph.hpp"

namespace eegsal {

// EEG encoder: channel-wise attention, strided temporal convolutions, global
// temporal pooling, projection to [tokens x dim].
struct EncoderConfig {
    int channels = 64;
    int samples = 250;
    int tokens = 4;    // S
    int dim = 128;     // D, must match the UNet context width
    int conv1_ch = 32;
    int conv2_ch = 64;
    int k1 = 9;        // temporal kernel widths, stride 2 each
    int k2 = 5;

    void validate() const;
    // output length of the temporal conv stack (valid convolutions)
    int conv_out_len() const;
};

// Adds "enc.*" parameters; deterministic given seed.
void init_encoder(const EncoderConfig& cfg, uint64_t seed, ParamStore& ps);

// Channel attention sub-step, on the tape. Returns the reweighted [C,T] node;
// if weights_out is non-null it receives the [1,C] softmax-weights node.
int channel_attention_graph(Graph& g, ParamStore& ps, int x, int* weights_out = nullptr);

// Full encoder, on the tape: [C,T] -> [S,D].
int encode_graph(Graph& g, ParamStore& ps, const EncoderConfig& cfg, int x);

// Plain-tensor conveniences (forward only).
Tensor channel_attention(const EEGEpoch& epoch, ParamStore& ps);
Tensor channel_attention_weights(const EEGEpoch& epoch, ParamStore& ps);
Tensor encode(const EEGEpoch& epoch, ParamStore& ps, const EncoderConfig& cfg);

}  // namespace eegsal

#endif
