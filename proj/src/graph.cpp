#include "eegsal/graph.hpp"

#include <cmath>
#include <cstring>

#include "eegsal/kernels.hpp"

namespace eegsal {

// ----------------------------------------------------------- fp16 rounding

static uint16_t f32_to_f16(uint32_t x) {
    uint32_t sign = (x >> 16) & 0x8000;
    int32_t exp = (int32_t)((x >> 23) & 0xff) - 127 + 15;
    uint32_t mant = x & 0x7fffff;
    if (((x >> 23) & 0xff) == 0xff) return (uint16_t)(sign | 0x7c00 | (mant ? 0x200 : 0));
    if (exp >= 0x1f) return (uint16_t)(sign | 0x7c00);
    if (exp <= 0) {
        if (exp < -10) return (uint16_t)sign;
        mant |= 0x800000;
        int shift = 14 - exp;
        uint32_t a = mant >> shift;
        uint32_t rem = mant & ((1u << shift) - 1);
        uint32_t half = 1u << (shift - 1);
        if (rem > half || (rem == half && (a & 1))) a++;
        return (uint16_t)(sign | a);
    }
    uint32_t a = mant >> 13;
    uint32_t rem = mant & 0x1fff;
    uint16_t r = (uint16_t)(sign | ((uint32_t)exp << 10) | a);
    if (rem > 0x1000 || (rem == 0x1000 && (a & 1))) r++;
    return r;
}

static uint32_t f16_to_f32(uint16_t h) {
    uint32_t sign = (uint32_t)(h & 0x8000) << 16;
    uint32_t exp = (h >> 10) & 0x1f;
    uint32_t mant = h & 0x3ff;
    if (exp == 0x1f) return sign | 0x7f800000 | (mant << 13);
    if (exp == 0) {
        if (!mant) return sign;
        int e = 0;
        while (!(mant & 0x400)) {
            mant <<= 1;
            e++;
        }
        mant &= 0x3ff;
        return sign | ((uint32_t)(113 - e) << 23) | (mant << 13);
    }
    return sign | ((exp + 112) << 23) | (mant << 13);
}

double half_round(double x) {
    float f = (float)x;
    uint32_t b;
    std::memcpy(&b, &f, 4);
    uint32_t r = f16_to_f32(f32_to_f16(b));
    std::memcpy(&f, &r, 4);
    return (double)f;
}

// ----------------------------------------------------------- graph core

int Graph::param(ParamStore& ps, const std::string& name) {
    Tensor t = ps.param(name);
    if (half_params)
        for (auto& x : t.v) x = half_round(x);
    ParamStore* psp = &ps;
    int id = add(std::move(t));
    set_back(id, [id, psp, name](Graph& g) {
        Tensor& dst = psp->grad(name);
        const Tensor& src = g.grad(id);
        for (size_t i = 0; i < dst.v.size(); ++i) dst.v[i] += src.v[i];
    });
    return id;
}

void Graph::backward(int loss) {
    if (cval(loss).numel() != 1) throw std::invalid_argument("backward: loss must be scalar");
    for (auto& n : nodes_) n.grad.fill(0.0);
    nodes_[(size_t)loss].grad.v[0] = 1.0;
    for (int i = (int)nodes_.size() - 1; i >= 0; --i)
        if (nodes_[(size_t)i].back) nodes_[(size_t)i].back(*this);
}

// ----------------------------------------------------------- elementwise

int g_add(Graph& g, int a, int b) {
    if (!g.cval(a).same_shape(g.cval(b))) throw std::invalid_argument("g_add: shape mismatch");
    Tensor y = g.cval(a);
    for (size_t i = 0; i < y.v.size(); ++i) y.v[i] += g.cval(b).v[i];
    int id = g.add(std::move(y));
    g.set_back(id, [id, a, b](Graph& gg) {
        const Tensor& dy = gg.grad(id);
        for (size_t i = 0; i < dy.v.size(); ++i) {
            gg.grad(a).v[i] += dy.v[i];
            gg.grad(b).v[i] += dy.v[i];
        }
    });
    return id;
}

int g_sub(Graph& g, int a, int b) {
    if (!g.cval(a).same_shape(g.cval(b))) throw std::invalid_argument("g_sub: shape mismatch");
    Tensor y = g.cval(a);
    for (size_t i = 0; i < y.v.size(); ++i) y.v[i] -= g.cval(b).v[i];
    int id = g.add(std::move(y));
    g.set_back(id, [id, a, b](Graph& gg) {
        const Tensor& dy = gg.grad(id);
        for (size_t i = 0; i < dy.v.size(); ++i) {
            gg.grad(a).v[i] += dy.v[i];
            gg.grad(b).v[i] -= dy.v[i];
        }
    });
    return id;
}

int g_mul(Graph& g, int a, int b) {
    if (!g.cval(a).same_shape(g.cval(b))) throw std::invalid_argument("g_mul: shape mismatch");
    Tensor y = g.cval(a);
    for (size_t i = 0; i < y.v.size(); ++i) y.v[i] *= g.cval(b).v[i];
    int id = g.add(std::move(y));
    g.set_back(id, [id, a, b](Graph& gg) {
        const Tensor& dy = gg.grad(id);
        for (size_t i = 0; i < dy.v.size(); ++i) {
            gg.grad(a).v[i] += dy.v[i] * gg.cval(b).v[i];
            gg.grad(b).v[i] += dy.v[i] * gg.cval(a).v[i];
        }
    });
    return id;
}

int g_scale(Graph& g, int a, double c) {
    Tensor y = g.cval(a);
    for (auto& x : y.v) x *= c;
    int id = g.add(std::move(y));
    g.set_back(id, [id, a, c](Graph& gg) {
        const Tensor& dy = gg.grad(id);
        for (size_t i = 0; i < dy.v.size(); ++i) gg.grad(a).v[i] += c * dy.v[i];
    });
    return id;
}

static const double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
static const double kGeluA = 0.044715;

int g_gelu(Graph& g, int a) {
    Tensor y = g.cval(a);
    for (auto& x : y.v) {
        double u = kGeluC * (x + kGeluA * x * x * x);
        x = 0.5 * x * (1.0 + std::tanh(u));
    }
    int id = g.add(std::move(y));
    g.set_back(id, [id, a](Graph& gg) {
        const Tensor& dy = gg.grad(id);
        const Tensor& xin = gg.cval(a);
        for (size_t i = 0; i < dy.v.size(); ++i) {
            double x = xin.v[i];
            double u = kGeluC * (x + kGeluA * x * x * x);
            double t = std::tanh(u);
            double s2 = 1.0 - t * t;
            double d = 0.5 * (1.0 + t) + 0.5 * x * s2 * kGeluC * (1.0 + 3.0 * kGeluA * x * x);
            gg.grad(a).v[i] += dy.v[i] * d;
        }
    });
    return id;
}

int g_sigmoid(Graph& g, int a) {
    Tensor y = g.cval(a);
    for (auto& x : y.v) x = 1.0 / (1.0 + std::exp(-x));
    int id = g.add(std::move(y));
    g.set_back(id, [id, a](Graph& gg) {
        const Tensor& dy = gg.grad(id);
        const Tensor& yv = gg.cval(id);
        for (size_t i = 0; i < dy.v.size(); ++i)
            gg.grad(a).v[i] += dy.v[i] * yv.v[i] * (1.0 - yv.v[i]);
    });
    return id;
}

int g_tanh(Graph& g, int a) {
    Tensor y = g.cval(a);
    for (auto& x : y.v) x = std::tanh(x);
    int id = g.add(std::move(y));
    g.set_back(id, [id, a](Graph& gg) {
        const Tensor& dy = gg.grad(id);
        const Tensor& yv = gg.cval(id);
        for (size_t i = 0; i < dy.v.size(); ++i)
            gg.grad(a).v[i] += dy.v[i] * (1.0 - yv.v[i] * yv.v[i]);
    });
    return id;
}

// ----------------------------------------------------------- matrix ops

int g_linear(Graph& g, int x, int w) {
    const Tensor& tx = g.cval(x);
    const Tensor& tw = g.cval(w);
    if (tx.shape.size() != 2 || tw.shape.size() != 2 || tx.shape[1] != tw.shape[1])
        throw std::invalid_argument("g_linear: shape mismatch");
    int m = tx.shape[0], k = tx.shape[1], n = tw.shape[0];
    Tensor y({m, n});
    kernels::matmul_nt(m, k, n, tx.v.data(), tw.v.data(), y.v.data());
    int id = g.add(std::move(y));
    g.set_back(id, [id, x, w, m, k, n](Graph& gg) {
        const double* dy = gg.grad(id).v.data();
        // dx += dy * W
        Tensor tmp({m, k});
        kernels::matmul(m, n, k, dy, gg.cval(w).v.data(), tmp.v.data());
        for (size_t i = 0; i < tmp.v.size(); ++i) gg.grad(x).v[i] += tmp.v[i];
        // dW += dy^T * x
        kernels::matmul_tn_acc(n, m, k, dy, gg.cval(x).v.data(), gg.grad(w).v.data());
    });
    return id;
}

int g_bias_rows(Graph& g, int x, int b) {
    const Tensor& tx = g.cval(x);
    const Tensor& tb = g.cval(b);
    int m = tx.shape[0], n = tx.shape[1];
    if ((int64_t)n != tb.numel()) throw std::invalid_argument("g_bias_rows: shape mismatch");
    Tensor y = tx;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) y.v[(size_t)(i * n + j)] += tb.v[(size_t)j];
    int id = g.add(std::move(y));
    g.set_back(id, [id, x, b, m, n](Graph& gg) {
        const Tensor& dy = gg.grad(id);
        for (size_t i = 0; i < dy.v.size(); ++i) gg.grad(x).v[i] += dy.v[i];
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) gg.grad(b).v[(size_t)j] += dy.v[(size_t)(i * n + j)];
    });
    return id;
}

int g_matmul(Graph& g, int a, int b) {
    const Tensor& ta = g.cval(a);
    const Tensor& tb = g.cval(b);
    if (ta.shape.size() != 2 || tb.shape.size() != 2 || ta.shape[1] != tb.shape[0])
        throw std::invalid_argument("g_matmul: shape mismatch");
    int m = ta.shape[0], k = ta.shape[1], n = tb.shape[1];
    Tensor y({m, n});
    kernels::matmul(m, k, n, ta.v.data(), tb.v.data(), y.v.data());
    int id = g.add(std::move(y));
    g.set_back(id, [id, a, b, m, k, n](Graph& gg) {
        const double* dy = gg.grad(id).v.data();
        Tensor tmp({m, k});
        kernels::matmul_nt(m, n, k, dy, gg.cval(b).v.data(), tmp.v.data());
        for (size_t i = 0; i < tmp.v.size(); ++i) gg.grad(a).v[i] += tmp.v[i];
        kernels::matmul_tn_acc(k, m, n, gg.cval(a).v.data(), dy, gg.grad(b).v.data());
    });
    return id;
}

int g_matmul_nt(Graph& g, int a, int b) {
    const Tensor& ta = g.cval(a);
    const Tensor& tb = g.cval(b);
    if (ta.shape.size() != 2 || tb.shape.size() != 2 || ta.shape[1] != tb.shape[1])
        throw std::invalid_argument("g_matmul_nt: shape mismatch");
    int m = ta.shape[0], k = ta.shape[1], n = tb.shape[0];
    Tensor y({m, n});
    kernels::matmul_nt(m, k, n, ta.v.data(), tb.v.data(), y.v.data());
    int id = g.add(std::move(y));
    g.set_back(id, [id, a, b, m, k, n](Graph& gg) {
        const double* dy = gg.grad(id).v.data();
        Tensor tmp({m, k});
        kernels::matmul(m, n, k, dy, gg.cval(b).v.data(), tmp.v.data());
        for (size_t i = 0; i < tmp.v.size(); ++i) gg.grad(a).v[i] += tmp.v[i];
        kernels::matmul_tn_acc(n, m, k, dy, gg.cval(a).v.data(), gg.grad(b).v.data());
    });
    return id;
}

int g_softmax_rows(Graph& g, int x) {
    const Tensor& tx = g.cval(x);
    int m = tx.shape[0], n = tx.shape[1];
    Tensor y = tx;
    for (int i = 0; i < m; ++i) {
        double* r = y.v.data() + (int64_t)i * n;
        double mx = r[0];
        for (int j = 1; j < n; ++j) mx = std::max(mx, r[j]);
        double s = 0.0;
        for (int j = 0; j < n; ++j) {
            r[j] = std::exp(r[j] - mx);
            s += r[j];
        }
        for (int j = 0; j < n; ++j) r[j] /= s;
    }
    int id = g.add(std::move(y));
    g.set_back(id, [id, x, m, n](Graph& gg) {
        const Tensor& dy = gg.grad(id);
        const Tensor& yv = gg.cval(id);
        for (int i = 0; i < m; ++i) {
            const double* dyr = dy.v.data() + (int64_t)i * n;
            const double* yr = yv.v.data() + (int64_t)i * n;
            double dot = 0.0;
            for (int j = 0; j < n; ++j) dot += dyr[j] * yr[j];
            double* dxr = gg.grad(x).v.data() + (int64_t)i * n;
            for (int j = 0; j < n; ++j) dxr[j] += yr[j] * (dyr[j] - dot);
        }
    });
    return id;
}

// ----------------------------------------------------------- conv / spatial

int g_conv2d(Graph& g, int x, int w, int b, int stride, int pad) {
    const Tensor& tx = g.cval(x);
    const Tensor& tw = g.cval(w);
    const Tensor& tb = g.cval(b);
    if (tx.shape.size() != 3 || tw.shape.size() != 4 || tx.shape[0] != tw.shape[1])
        throw std::invalid_argument("g_conv2d: shape mismatch");
    int Ci = tx.shape[0], H = tx.shape[1], W = tx.shape[2];
    int O = tw.shape[0], kh = tw.shape[2], kw = tw.shape[3];
    if ((int64_t)O != tb.numel()) throw std::invalid_argument("g_conv2d: bias mismatch");
    int Ho = kernels::conv_out_dim(H, kh, stride, pad);
    int Wo = kernels::conv_out_dim(W, kw, stride, pad);
    Tensor y({O, Ho, Wo});
    kernels::conv2d(Ci, H, W, O, kh, kw, stride, pad, tx.v.data(), tw.v.data(), tb.v.data(),
                    y.v.data());
    int id = g.add(std::move(y));
    g.set_back(id, [id, x, w, b, Ci, H, W, O, kh, kw, stride, pad](Graph& gg) {
        const double* dy = gg.grad(id).v.data();
        kernels::conv2d_bwd_input(Ci, H, W, O, kh, kw, stride, pad, dy, gg.cval(w).v.data(),
                                  gg.grad(x).v.data());
        kernels::conv2d_bwd_weight(Ci, H, W, O, kh, kw, stride, pad, gg.cval(x).v.data(), dy,
                                   gg.grad(w).v.data(), gg.grad(b).v.data());
    });
    return id;
}

int g_upsample2x(Graph& g, int x) {
    const Tensor& tx = g.cval(x);
    int C = tx.shape[0], H = tx.shape[1], W = tx.shape[2];
    Tensor y({C, 2 * H, 2 * W});
    for (int c = 0; c < C; ++c)
        for (int i = 0; i < 2 * H; ++i)
            for (int j = 0; j < 2 * W; ++j) y.at3(c, i, j) = tx.at3(c, i / 2, j / 2);
    int id = g.add(std::move(y));
    g.set_back(id, [id, x, C, H, W](Graph& gg) {
        const Tensor& dy = gg.grad(id);
        Tensor& dx = gg.grad(x);
        for (int c = 0; c < C; ++c)
            for (int i = 0; i < 2 * H; ++i)
                for (int j = 0; j < 2 * W; ++j) dx.at3(c, i / 2, j / 2) += dy.at3(c, i, j);
    });
    return id;
}

int g_bias_chan(Graph& g, int x, int b) {
    const Tensor& tx = g.cval(x);
    const Tensor& tb = g.cval(b);
    int C = tx.shape[0];
    int64_t hw = (int64_t)tx.shape[1] * tx.shape[2];
    if ((int64_t)C != tb.numel()) throw std::invalid_argument("g_bias_chan: shape mismatch");
    Tensor y = tx;
    for (int c = 0; c < C; ++c)
        for (int64_t i = 0; i < hw; ++i) y.v[(size_t)(c * hw + i)] += tb.v[(size_t)c];
    int id = g.add(std::move(y));
    g.set_back(id, [id, x, b, C, hw](Graph& gg) {
        const Tensor& dy = gg.grad(id);
        for (size_t i = 0; i < dy.v.size(); ++i) gg.grad(x).v[i] += dy.v[i];
        for (int c = 0; c < C; ++c) {
            double s = 0.0;
            for (int64_t i = 0; i < hw; ++i) s += dy.v[(size_t)(c * hw + i)];
            gg.grad(b).v[(size_t)c] += s;
        }
    });
    return id;
}

int g_groupnorm(Graph& g, int x, int gamma, int beta, int groups) {
    const Tensor& tx = g.cval(x);
    int C = tx.shape[0], H = tx.shape[1], W = tx.shape[2];
    if (C % groups) throw std::invalid_argument("g_groupnorm: channels not divisible by groups");
    const double eps = 1e-5;
    int cg = C / groups;
    int64_t hw = (int64_t)H * W;
    int64_t m = cg * hw;
    Tensor y = tx;
    std::vector<double> mu(groups), inv_sigma(groups);
    for (int gi = 0; gi < groups; ++gi) {
        const double* base = tx.v.data() + (int64_t)gi * m;
        double s = 0.0;
        for (int64_t i = 0; i < m; ++i) s += base[i];
        double mean = s / (double)m;
        double v = 0.0;
        for (int64_t i = 0; i < m; ++i) v += (base[i] - mean) * (base[i] - mean);
        double is = 1.0 / std::sqrt(v / (double)m + eps);
        mu[(size_t)gi] = mean;
        inv_sigma[(size_t)gi] = is;
        double* out = y.v.data() + (int64_t)gi * m;
        for (int c = 0; c < cg; ++c) {
            double ga = g.cval(gamma).v[(size_t)(gi * cg + c)];
            double be = g.cval(beta).v[(size_t)(gi * cg + c)];
            for (int64_t i = 0; i < hw; ++i) {
                int64_t k = c * hw + i;
                out[k] = (base[k] - mean) * is * ga + be;
            }
        }
    }
    int id = g.add(std::move(y));
    g.set_back(id, [id, x, gamma, beta, groups, cg, hw, m, mu, inv_sigma](Graph& gg) {
        const Tensor& dy = gg.grad(id);
        const Tensor& xin = gg.cval(x);
        for (int gi = 0; gi < groups; ++gi) {
            const double* xb = xin.v.data() + (int64_t)gi * m;
            const double* dyb = dy.v.data() + (int64_t)gi * m;
            double mean = mu[(size_t)gi], is = inv_sigma[(size_t)gi];
            // dhat = dy * gamma; reductions over the group
            double sum_dhat = 0.0, sum_dhat_xhat = 0.0;
            for (int c = 0; c < cg; ++c) {
                double ga = gg.cval(gamma).v[(size_t)(gi * cg + c)];
                for (int64_t i = 0; i < hw; ++i) {
                    int64_t k = c * hw + i;
                    double xhat = (xb[k] - mean) * is;
                    double dhat = dyb[k] * ga;
                    sum_dhat += dhat;
                    sum_dhat_xhat += dhat * xhat;
                }
            }
            double inv_m = 1.0 / (double)m;
            for (int c = 0; c < cg; ++c) {
                double ga = gg.cval(gamma).v[(size_t)(gi * cg + c)];
                double dga = 0.0, dbe = 0.0;
                for (int64_t i = 0; i < hw; ++i) {
                    int64_t k = c * hw + i;
                    double xhat = (xb[k] - mean) * is;
                    double dhat = dyb[k] * ga;
                    gg.grad(x).v[(size_t)((int64_t)gi * m + k)] +=
                        is * (dhat - inv_m * sum_dhat - xhat * inv_m * sum_dhat_xhat);
                    dga += dyb[k] * xhat;
                    dbe += dyb[k];
                }
                gg.grad(gamma).v[(size_t)(gi * cg + c)] += dga;
                gg.grad(beta).v[(size_t)(gi * cg + c)] += dbe;
            }
        }
    });
    return id;
}

int g_spatial_mean(Graph& g, int x) {
    const Tensor& tx = g.cval(x);
    int C = tx.shape[0];
    int64_t hw = (int64_t)tx.shape[1] * tx.shape[2];
    Tensor y({1, C});
    for (int c = 0; c < C; ++c) {
        double s = 0.0;
        for (int64_t i = 0; i < hw; ++i) s += tx.v[(size_t)(c * hw + i)];
        y.v[(size_t)c] = s / (double)hw;
    }
    int id = g.add(std::move(y));
    g.set_back(id, [id, x, C, hw](Graph& gg) {
        const Tensor& dy = gg.grad(id);
        for (int c = 0; c < C; ++c) {
            double d = dy.v[(size_t)c] / (double)hw;
            for (int64_t i = 0; i < hw; ++i) gg.grad(x).v[(size_t)(c * hw + i)] += d;
        }
    });
    return id;
}

// ----------------------------------------------------------- EEG helpers

int g_row_abs_mean(Graph& g, int x) {
    const Tensor& tx = g.cval(x);
    int C = tx.shape[0], T = tx.shape[1];
    Tensor y({1, C});
    for (int c = 0; c < C; ++c) {
        double s = 0.0;
        for (int t = 0; t < T; ++t) s += std::fabs(tx.at2(c, t));
        y.v[(size_t)c] = s / (double)T;
    }
    int id = g.add(std::move(y));
    g.set_back(id, [id, x, C, T](Graph& gg) {
        const Tensor& dy = gg.grad(id);
        const Tensor& xin = gg.cval(x);
        for (int c = 0; c < C; ++c) {
            double d = dy.v[(size_t)c] / (double)T;
            for (int t = 0; t < T; ++t) {
                double s = xin.at2(c, t) > 0 ? 1.0 : (xin.at2(c, t) < 0 ? -1.0 : 0.0);
                gg.grad(x).at2(c, t) += d * s;
            }
        }
    });
    return id;
}

int g_mul_rows(Graph& g, int x, int w) {
    const Tensor& tx = g.cval(x);
    const Tensor& tw = g.cval(w);
    int C = tx.shape[0], T = tx.shape[1];
    if ((int64_t)C != tw.numel()) throw std::invalid_argument("g_mul_rows: shape mismatch");
    Tensor y = tx;
    for (int c = 0; c < C; ++c)
        for (int t = 0; t < T; ++t) y.at2(c, t) *= tw.v[(size_t)c];
    int id = g.add(std::move(y));
    g.set_back(id, [id, x, w, C, T](Graph& gg) {
        const Tensor& dy = gg.grad(id);
        for (int c = 0; c < C; ++c) {
            double dw = 0.0;
            for (int t = 0; t < T; ++t) {
                gg.grad(x).at2(c, t) += dy.at2(c, t) * gg.cval(w).v[(size_t)c];
                dw += dy.at2(c, t) * gg.cval(x).at2(c, t);
            }
            gg.grad(w).v[(size_t)c] += dw;
        }
    });
    return id;
}

int g_reshape(Graph& g, int x, std::vector<int> shape) {
    const Tensor& tx = g.cval(x);
    if (Tensor::numel_of(shape) != tx.numel()) throw std::invalid_argument("g_reshape: numel mismatch");
    Tensor y(shape, tx.v);
    int id = g.add(std::move(y));
    g.set_back(id, [id, x](Graph& gg) {
        const Tensor& dy = gg.grad(id);
        for (size_t i = 0; i < dy.v.size(); ++i) gg.grad(x).v[i] += dy.v[i];
    });
    return id;
}

int g_chw_to_nc(Graph& g, int x) {
    const Tensor& tx = g.cval(x);
    if (tx.shape.size() != 3) throw std::invalid_argument("g_chw_to_nc: expected [C,H,W]");
    int C = tx.shape[0], H = tx.shape[1], W = tx.shape[2];
    Tensor y({H * W, C});
    for (int c = 0; c < C; ++c)
        for (int p = 0; p < H * W; ++p) y.v[(size_t)(p * C + c)] = tx.v[(size_t)(c * H * W + p)];
    int id = g.add(std::move(y));
    g.set_back(id, [id, x, C, H, W](Graph& gg) {
        const Tensor& dy = gg.grad(id);
        for (int c = 0; c < C; ++c)
            for (int p = 0; p < H * W; ++p)
                gg.grad(x).v[(size_t)(c * H * W + p)] += dy.v[(size_t)(p * C + c)];
    });
    return id;
}

int g_nc_to_chw(Graph& g, int x, int H, int W) {
    const Tensor& tx = g.cval(x);
    if (tx.shape.size() != 2 || tx.shape[0] != H * W)
        throw std::invalid_argument("g_nc_to_chw: shape mismatch");
    int C = tx.shape[1];
    Tensor y({C, H, W});
    for (int c = 0; c < C; ++c)
        for (int p = 0; p < H * W; ++p) y.v[(size_t)(c * H * W + p)] = tx.v[(size_t)(p * C + c)];
    int id = g.add(std::move(y));
    g.set_back(id, [id, x, C, H, W](Graph& gg) {
        const Tensor& dy = gg.grad(id);
        for (int c = 0; c < C; ++c)
            for (int p = 0; p < H * W; ++p)
                gg.grad(x).v[(size_t)(p * C + c)] += dy.v[(size_t)(c * H * W + p)];
    });
    return id;
}

int g_mse(Graph& g, int a, int b) {
    if (!g.cval(a).same_shape(g.cval(b))) throw std::invalid_argument("g_mse: shape mismatch");
    int64_t n = g.cval(a).numel();
    double s = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        double d = g.cval(a).v[(size_t)i] - g.cval(b).v[(size_t)i];
        s += d * d;
    }
    Tensor y({1});
    y.v[0] = s / (double)n;
    int id = g.add(std::move(y));
    g.set_back(id, [id, a, b, n](Graph& gg) {
        double dy = gg.grad(id).v[0];
        for (int64_t i = 0; i < n; ++i) {
            double d = 2.0 * (gg.cval(a).v[(size_t)i] - gg.cval(b).v[(size_t)i]) / (double)n;
            gg.grad(a).v[(size_t)i] += dy * d;
            gg.grad(b).v[(size_t)i] -= dy * d;
        }
    });
    return id;
}

}  // namespace eegsal
