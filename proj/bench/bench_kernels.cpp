// Serial vs OpenMP kernel comparison: wall time and bitwise agreement.
#include <chrono>
#include <cstdio>
#include <vector>

#include "eegsal/kernels.hpp"
#include "eegsal/rng.hpp"

using namespace eegsal;
using clk = std::chrono::steady_clock;

static double ms_since(clk::time_point t0) {
    return std::chrono::duration<double, std::milli>(clk::now() - t0).count();
}

template <class F>
static double best_of(int reps, F&& f) {
    double best = 1e300;
    for (int i = 0; i < reps; ++i) {
        auto t0 = clk::now();
        f();
        best = std::min(best, ms_since(t0));
    }
    return best;
}

static bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a == b;
}

int main() {
    std::printf("threads available: %d\n\n", kernels::threads());
    std::printf("%-28s %10s %10s %8s  %s\n", "kernel", "serial ms", "omp ms", "speedup",
                "bitwise");

    Rng rng(42, 0);
    {
        const int m = 256, k = 256, n = 256;
        std::vector<double> A((size_t)m * k), B((size_t)k * n), Cs((size_t)m * n),
            Co((size_t)m * n);
        for (auto& x : A) x = rng.normal();
        for (auto& x : B) x = rng.normal();
        double ts = best_of(3, [&] { kernels::matmul_serial(m, k, n, A.data(), B.data(), Cs.data()); });
        double to = best_of(3, [&] { kernels::matmul_omp(m, k, n, A.data(), B.data(), Co.data()); });
        std::printf("%-28s %10.2f %10.2f %7.2fx  %s\n", "matmul 256^3", ts, to, ts / to,
                    bitwise_equal(Cs, Co) ? "yes" : "NO");
    }
    {
        const int m = 512, k = 128, n = 256;
        std::vector<double> A((size_t)m * k), B((size_t)n * k), Cs((size_t)m * n),
            Co((size_t)m * n);
        for (auto& x : A) x = rng.normal();
        for (auto& x : B) x = rng.normal();
        double ts = best_of(3, [&] { kernels::matmul_nt_serial(m, k, n, A.data(), B.data(), Cs.data()); });
        double to = best_of(3, [&] { kernels::matmul_nt_omp(m, k, n, A.data(), B.data(), Co.data()); });
        std::printf("%-28s %10.2f %10.2f %7.2fx  %s\n", "matmul_nt 512x128x256", ts, to, ts / to,
                    bitwise_equal(Cs, Co) ? "yes" : "NO");
    }
    {
        const int Ci = 32, H = 64, W = 64, O = 32, kk = 3, stride = 1, pad = 1;
        int Ho = kernels::conv_out_dim(H, kk, stride, pad);
        std::vector<double> x((size_t)Ci * H * W), w((size_t)O * Ci * kk * kk), b(O),
            ys((size_t)O * Ho * Ho), yo((size_t)O * Ho * Ho);
        for (auto& v : x) v = rng.normal();
        for (auto& v : w) v = rng.normal();
        for (auto& v : b) v = rng.normal();
        double ts = best_of(3, [&] {
            kernels::conv2d_serial(Ci, H, W, O, kk, kk, stride, pad, x.data(), w.data(), b.data(),
                                   ys.data());
        });
        double to = best_of(3, [&] {
            kernels::conv2d_omp(Ci, H, W, O, kk, kk, stride, pad, x.data(), w.data(), b.data(),
                                yo.data());
        });
        std::printf("%-28s %10.2f %10.2f %7.2fx  %s\n", "conv2d 32x64x64 -> 32", ts, to, ts / to,
                    bitwise_equal(ys, yo) ? "yes" : "NO");
    }
    {
        const int Ci = 16, H = 32, W = 32, O = 32, kk = 3, stride = 2, pad = 1;
        int Ho = kernels::conv_out_dim(H, kk, stride, pad);
        std::vector<double> dy((size_t)O * Ho * Ho), w((size_t)O * Ci * kk * kk),
            dxs((size_t)Ci * H * W, 0.0), dxo((size_t)Ci * H * W, 0.0);
        for (auto& v : dy) v = rng.normal();
        for (auto& v : w) v = rng.normal();
        double ts = best_of(3, [&] {
            std::fill(dxs.begin(), dxs.end(), 0.0);
            kernels::conv2d_bwd_input_serial(Ci, H, W, O, kk, kk, stride, pad, dy.data(), w.data(),
                                             dxs.data());
        });
        double to = best_of(3, [&] {
            std::fill(dxo.begin(), dxo.end(), 0.0);
            kernels::conv2d_bwd_input_omp(Ci, H, W, O, kk, kk, stride, pad, dy.data(), w.data(),
                                          dxo.data());
        });
        std::printf("%-28s %10.2f %10.2f %7.2fx  %s\n", "conv2d_bwd_input s2", ts, to, ts / to,
                    bitwise_equal(dxs, dxo) ? "yes" : "NO");
    }
    return 0;
}
