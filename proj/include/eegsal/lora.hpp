#ifndef EEGSAL_LORA_HPP
#define EEGSAL_LORA_HPP

#include <string>
#include <vector>

#include "eegsal/graph.hpp"

namespace eegsal {

// Low-rank adapter pair for one projection matrix W [d_out, d_in]:
// effective weight W' = W + (alpha/r) * B * A.
struct LoRAAdapter {
    Tensor A;  // [r, d_in], gaussian init
    Tensor B;  // [d_out, r], zero init
    double scale = 1.0;
};

struct LoRAConfig {
    int rank = 8;
    double alpha = 8.0;
    // projection selector: any subset of {"wq","wk","wv","wo"}
    std::vector<std::string> targets = {"wq", "wk", "wv", "wo"};

    void validate() const {
        if (rank < 1) throw std::invalid_argument("lora: rank must be >= 1");
        if (!(alpha > 0)) throw std::invalid_argument("lora: alpha must be > 0");
        if (targets.empty()) throw std::invalid_argument("lora: empty target selector");
    }
};

struct LoRAHandle {
    std::vector<std::string> target_weights;   // adapted base matrices
    std::vector<std::string> adapter_arrays;   // the trainable lora.* arrays
};

// Attaches adapters to every cross-attention projection of the UNet matching
// the selector. Adds "lora.<target>.{A,B,scale}" params, freezes the base
// matrices, and returns the trainable surface. Re-injecting an already
// adapted matrix is an error (no stacking).
LoRAHandle inject(ParamStore& ps, const LoRAConfig& cfg, uint64_t seed);

// y = x*W^T + scale * (x*A^T)*B^T
Tensor adapted_forward(const Tensor& x, const Tensor& W, const LoRAAdapter& adapter);

// W' = W + scale*B*A
Tensor merge(const Tensor& W, const LoRAAdapter& adapter);

// number of adapter scalars (A and B only; scale is not a parameter)
int64_t trainable_count(const ParamStore& ps);

// Tape node for a possibly-adapted weight: W, or W + scale*B*A when an
// adapter named "lora.<name>.*" exists in the store.
int adapted_weight_node(Graph& g, ParamStore& ps, const std::string& name);

// Dense merged copy of a stored weight (adapter applied when present).
Tensor merged_weight(const ParamStore& ps, const std::string& name);

}  // namespace eegsal

#endif
