#include "eegsal/kernels.hpp"

#include <omp.h>

namespace eegsal::kernels {

static int g_threads = 1;

void set_threads(int n) {
    if (n <= 0) n = omp_get_num_procs();
    g_threads = n;
}

int threads() { return g_threads; }
bool parallel_enabled() { return g_threads > 1; }

// ---------------------------------------------------------------- matmul

void matmul_serial(int m, int k, int n, const double* A, const double* B, double* C) {
    for (int i = 0; i < m; ++i) {
        double* ci = C + (int64_t)i * n;
        for (int j = 0; j < n; ++j) ci[j] = 0.0;
        const double* ai = A + (int64_t)i * k;
        for (int p = 0; p < k; ++p) {
            double a = ai[p];
            const double* bp = B + (int64_t)p * n;
            for (int j = 0; j < n; ++j) ci[j] += a * bp[j];
        }
    }
}

void matmul_omp(int m, int k, int n, const double* A, const double* B, double* C) {
#pragma omp parallel for num_threads(g_threads) schedule(static)
    for (int i = 0; i < m; ++i) {
        double* ci = C + (int64_t)i * n;
        for (int j = 0; j < n; ++j) ci[j] = 0.0;
        const double* ai = A + (int64_t)i * k;
        for (int p = 0; p < k; ++p) {
            double a = ai[p];
            const double* bp = B + (int64_t)p * n;
            for (int j = 0; j < n; ++j) ci[j] += a * bp[j];
        }
    }
}

void matmul(int m, int k, int n, const double* A, const double* B, double* C) {
    if (parallel_enabled())
        matmul_omp(m, k, n, A, B, C);
    else
        matmul_serial(m, k, n, A, B, C);
}

void matmul_nt_serial(int m, int k, int n, const double* A, const double* B, double* C) {
    for (int i = 0; i < m; ++i) {
        const double* ai = A + (int64_t)i * k;
        for (int j = 0; j < n; ++j) {
            const double* bj = B + (int64_t)j * k;
            double s = 0.0;
            for (int p = 0; p < k; ++p) s += ai[p] * bj[p];
            C[(int64_t)i * n + j] = s;
        }
    }
}

void matmul_nt_omp(int m, int k, int n, const double* A, const double* B, double* C) {
#pragma omp parallel for num_threads(g_threads) schedule(static)
    for (int i = 0; i < m; ++i) {
        const double* ai = A + (int64_t)i * k;
        for (int j = 0; j < n; ++j) {
            const double* bj = B + (int64_t)j * k;
            double s = 0.0;
            for (int p = 0; p < k; ++p) s += ai[p] * bj[p];
            C[(int64_t)i * n + j] = s;
        }
    }
}

void matmul_nt(int m, int k, int n, const double* A, const double* B, double* C) {
    if (parallel_enabled())
        matmul_nt_omp(m, k, n, A, B, C);
    else
        matmul_nt_serial(m, k, n, A, B, C);
}

void matmul_tn_acc_serial(int m, int k, int n, const double* A, const double* B, double* C) {
    for (int i = 0; i < m; ++i) {
        double* ci = C + (int64_t)i * n;
        for (int p = 0; p < k; ++p) {
            double a = A[(int64_t)p * m + i];
            const double* bp = B + (int64_t)p * n;
            for (int j = 0; j < n; ++j) ci[j] += a * bp[j];
        }
    }
}

void matmul_tn_acc_omp(int m, int k, int n, const double* A, const double* B, double* C) {
#pragma omp parallel for num_threads(g_threads) schedule(static)
    for (int i = 0; i < m; ++i) {
        double* ci = C + (int64_t)i * n;
        for (int p = 0; p < k; ++p) {
            double a = A[(int64_t)p * m + i];
            const double* bp = B + (int64_t)p * n;
            for (int j = 0; j < n; ++j) ci[j] += a * bp[j];
        }
    }
}

void matmul_tn_acc(int m, int k, int n, const double* A, const double* B, double* C) {
    if (parallel_enabled())
        matmul_tn_acc_omp(m, k, n, A, B, C);
    else
        matmul_tn_acc_serial(m, k, n, A, B, C);
}

// ---------------------------------------------------------------- conv2d

#define CONV2D_BODY(oo)                                                                  \
    const int Ho = conv_out_dim(H, kh, stride, pad);                                     \
    const int Wo = conv_out_dim(W, kw, stride, pad);                                     \
    oo for (int o = 0; o < O; ++o) {                                                     \
        const double* wo = w + (int64_t)o * Ci * kh * kw;                                \
        for (int oy = 0; oy < Ho; ++oy) {                                                \
            for (int ox = 0; ox < Wo; ++ox) {                                            \
                double s = b ? b[o] : 0.0;                                               \
                for (int c = 0; c < Ci; ++c) {                                           \
                    const double* xc = x + (int64_t)c * H * W;                           \
                    const double* wc = wo + (int64_t)c * kh * kw;                        \
                    for (int ky = 0; ky < kh; ++ky) {                                    \
                        int iy = oy * stride + ky - pad;                                 \
                        if (iy < 0 || iy >= H) continue;                                 \
                        for (int kx = 0; kx < kw; ++kx) {                                \
                            int ix = ox * stride + kx - pad;                             \
                            if (ix < 0 || ix >= W) continue;                             \
                            s += xc[(int64_t)iy * W + ix] * wc[ky * kw + kx];            \
                        }                                                                \
                    }                                                                    \
                }                                                                        \
                y[((int64_t)o * Ho + oy) * Wo + ox] = s;                                 \
            }                                                                            \
        }                                                                                \
    }

void conv2d_serial(int Ci, int H, int W, int O, int kh, int kw, int stride, int pad,
                   const double* x, const double* w, const double* b, double* y) {
    CONV2D_BODY()
}

void conv2d_omp(int Ci, int H, int W, int O, int kh, int kw, int stride, int pad,
                const double* x, const double* w, const double* b, double* y) {
    CONV2D_BODY(_Pragma("omp parallel for num_threads(g_threads) schedule(static)"))
}

#undef CONV2D_BODY

void conv2d(int Ci, int H, int W, int O, int kh, int kw, int stride, int pad,
            const double* x, const double* w, const double* b, double* y) {
    if (parallel_enabled())
        conv2d_omp(Ci, H, W, O, kh, kw, stride, pad, x, w, b, y);
    else
        conv2d_serial(Ci, H, W, O, kh, kw, stride, pad, x, w, b, y);
}

// Gather form: each input cell sums over output cells that touched it, so the
// loop parallelizes over disjoint dx entries.
#define CONV2D_BWD_IN_BODY(oo)                                                           \
    const int Ho = conv_out_dim(H, kh, stride, pad);                                     \
    const int Wo = conv_out_dim(W, kw, stride, pad);                                     \
    oo for (int c = 0; c < Ci; ++c) {                                                    \
        double* dxc = dx + (int64_t)c * H * W;                                           \
        for (int iy = 0; iy < H; ++iy) {                                                 \
            for (int ix = 0; ix < W; ++ix) {                                             \
                double s = 0.0;                                                          \
                for (int o = 0; o < O; ++o) {                                            \
                    const double* wc = w + ((int64_t)o * Ci + c) * kh * kw;              \
                    const double* dyo = dy + (int64_t)o * Ho * Wo;                       \
                    for (int ky = 0; ky < kh; ++ky) {                                    \
                        int num = iy + pad - ky;                                         \
                        if (num < 0 || num % stride) continue;                           \
                        int oy = num / stride;                                           \
                        if (oy >= Ho) continue;                                          \
                        for (int kx = 0; kx < kw; ++kx) {                                \
                            int numx = ix + pad - kx;                                    \
                            if (numx < 0 || numx % stride) continue;                     \
                            int ox = numx / stride;                                      \
                            if (ox >= Wo) continue;                                      \
                            s += dyo[(int64_t)oy * Wo + ox] * wc[ky * kw + kx];          \
                        }                                                                \
                    }                                                                    \
                }                                                                        \
                dxc[(int64_t)iy * W + ix] += s;                                          \
            }                                                                            \
        }                                                                                \
    }

void conv2d_bwd_input_serial(int Ci, int H, int W, int O, int kh, int kw, int stride, int pad,
                             const double* dy, const double* w, double* dx) {
    CONV2D_BWD_IN_BODY()
}

void conv2d_bwd_input_omp(int Ci, int H, int W, int O, int kh, int kw, int stride, int pad,
                          const double* dy, const double* w, double* dx) {
    CONV2D_BWD_IN_BODY(_Pragma("omp parallel for num_threads(g_threads) schedule(static)"))
}

#undef CONV2D_BWD_IN_BODY

void conv2d_bwd_input(int Ci, int H, int W, int O, int kh, int kw, int stride, int pad,
                      const double* dy, const double* w, double* dx) {
    if (parallel_enabled())
        conv2d_bwd_input_omp(Ci, H, W, O, kh, kw, stride, pad, dy, w, dx);
    else
        conv2d_bwd_input_serial(Ci, H, W, O, kh, kw, stride, pad, dy, w, dx);
}

// Parallel over output channels: each thread owns disjoint dw[o,...] and db[o].
#define CONV2D_BWD_W_BODY(oo)                                                            \
    const int Ho = conv_out_dim(H, kh, stride, pad);                                     \
    const int Wo = conv_out_dim(W, kw, stride, pad);                                     \
    oo for (int o = 0; o < O; ++o) {                                                     \
        const double* dyo = dy + (int64_t)o * Ho * Wo;                                   \
        double sb = 0.0;                                                                 \
        for (int64_t i = 0; i < (int64_t)Ho * Wo; ++i) sb += dyo[i];                     \
        db[o] += sb;                                                                     \
        for (int c = 0; c < Ci; ++c) {                                                   \
            const double* xc = x + (int64_t)c * H * W;                                   \
            double* dwc = dw + ((int64_t)o * Ci + c) * kh * kw;                          \
            for (int ky = 0; ky < kh; ++ky) {                                            \
                for (int kx = 0; kx < kw; ++kx) {                                        \
                    double s = 0.0;                                                      \
                    for (int oy = 0; oy < Ho; ++oy) {                                    \
                        int iy = oy * stride + ky - pad;                                 \
                        if (iy < 0 || iy >= H) continue;                                 \
                        for (int ox = 0; ox < Wo; ++ox) {                                \
                            int ix = ox * stride + kx - pad;                             \
                            if (ix < 0 || ix >= W) continue;                             \
                            s += xc[(int64_t)iy * W + ix] * dyo[(int64_t)oy * Wo + ox];  \
                        }                                                                \
                    }                                                                    \
                    dwc[ky * kw + kx] += s;                                              \
                }                                                                        \
            }                                                                            \
        }                                                                                \
    }

void conv2d_bwd_weight_serial(int Ci, int H, int W, int O, int kh, int kw, int stride, int pad,
                              const double* x, const double* dy, double* dw, double* db) {
    CONV2D_BWD_W_BODY()
}

void conv2d_bwd_weight_omp(int Ci, int H, int W, int O, int kh, int kw, int stride, int pad,
                           const double* x, const double* dy, double* dw, double* db) {
    CONV2D_BWD_W_BODY(_Pragma("omp parallel for num_threads(g_threads) schedule(static)"))
}

#undef CONV2D_BWD_W_BODY

void conv2d_bwd_weight(int Ci, int H, int W, int O, int kh, int kw, int stride, int pad,
                       const double* x, const double* dy, double* dw, double* db) {
    if (parallel_enabled())
        conv2d_bwd_weight_omp(Ci, H, W, O, kh, kw, stride, pad, x, dy, dw, db);
    else
        conv2d_bwd_weight_serial(Ci, H, W, O, kh, kw, stride, pad, x, dy, dw, db);
}

}  // namespace eegsal::kernels
