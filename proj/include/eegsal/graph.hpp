#ifndef EEGSAL_GRAPH_HPP
#define EEGSAL_GRAPH_HPP

#include <functional>
#include <vector>

#include "eegsal/params.hpp"
#include "eegsal/tensor.hpp"

namespace eegsal {

// Reverse-mode tape. Forward passes append nodes; backward() walks the tape in
// reverse and accumulates gradients. Parameter leaves push their gradient into
// the owning ParamStore, so one tape can span several modules.
class Graph {
  public:
    struct Node {
        Tensor val;
        Tensor grad;
        std::function<void(Graph&)> back;  // may be empty (leaf)
    };

    // Round parameter values to the fp16 grid on load (half-precision compute
    // mode; master weights stay full precision in the store).
    bool half_params = false;

    int add(Tensor val, std::function<void(Graph&)> back = {}) {
        nodes_.push_back(Node{std::move(val), Tensor(), std::move(back)});
        nodes_.back().grad = Tensor(nodes_.back().val.shape);
        return (int)nodes_.size() - 1;
    }

    int leaf(Tensor t) { return add(std::move(t)); }

    void set_back(int i, std::function<void(Graph&)> back) {
        nodes_[(size_t)i].back = std::move(back);
    }

    int param(ParamStore& ps, const std::string& name);

    Tensor& val(int i) { return nodes_[(size_t)i].val; }
    const Tensor& cval(int i) const { return nodes_[(size_t)i].val; }
    Tensor& grad(int i) { return nodes_[(size_t)i].grad; }

    void backward(int loss);

    size_t size() const { return nodes_.size(); }

  private:
    std::vector<Node> nodes_;
};

double half_round(double x);

// Elementwise / broadcast
int g_add(Graph& g, int a, int b);            // same shape
int g_sub(Graph& g, int a, int b);
int g_mul(Graph& g, int a, int b);            // same shape
int g_scale(Graph& g, int a, double c);
int g_gelu(Graph& g, int a);
int g_sigmoid(Graph& g, int a);
int g_tanh(Graph& g, int a);

// Matrix ops; weights for g_linear stored [out, in], y = x * W^T (+ b rows)
int g_linear(Graph& g, int x, int w);
int g_bias_rows(Graph& g, int x, int b);      // x[m,n] + b[1,n] or [n]
int g_matmul(Graph& g, int a, int b);         // [m,k]*[k,n]
int g_matmul_nt(Graph& g, int a, int b);      // [m,k]*[n,k]^T
int g_softmax_rows(Graph& g, int x);

// Conv / spatial; x is [C,H,W]
int g_conv2d(Graph& g, int x, int w, int b, int stride, int pad);
int g_upsample2x(Graph& g, int x);
int g_bias_chan(Graph& g, int x, int b);      // + b[C] per channel
int g_groupnorm(Graph& g, int x, int gamma, int beta, int groups);
int g_spatial_mean(Graph& g, int x);          // [C,H,W] -> [1,C]

// EEG helpers; x is [C,T]
int g_row_abs_mean(Graph& g, int x);          // -> [1,C]
int g_mul_rows(Graph& g, int x, int w);       // row c scaled by w[0,c]

int g_reshape(Graph& g, int x, std::vector<int> shape);
int g_chw_to_nc(Graph& g, int x);                    // [C,H,W] -> [H*W, C]
int g_nc_to_chw(Graph& g, int x, int H, int W);      // [H*W, C] -> [C,H,W]
int g_mse(Graph& g, int a, int b);            // -> [1]

}  // namespace eegsal

#endif
