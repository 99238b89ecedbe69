#ifndef EEGSAL_KERNELS_HPP
#define EEGSAL_KERNELS_HPP

#include <cstdint>

// Hot inner loops, each in a serial reference version and an OpenMP version.
// Parallel variants split work over independent outputs and keep the per-output
// reduction order identical to the serial version, so results are bitwise equal
// for any thread count.
namespace eegsal::kernels {

void set_threads(int n);   // n <= 0 selects omp_get_num_procs()
int threads();
bool parallel_enabled();   // true when threads() > 1

// C[m,n] = A[m,k] * B[k,n]
void matmul_serial(int m, int k, int n, const double* A, const double* B, double* C);
void matmul_omp(int m, int k, int n, const double* A, const double* B, double* C);
void matmul(int m, int k, int n, const double* A, const double* B, double* C);

// C[m,n] = A[m,k] * B[n,k]^T
void matmul_nt_serial(int m, int k, int n, const double* A, const double* B, double* C);
void matmul_nt_omp(int m, int k, int n, const double* A, const double* B, double* C);
void matmul_nt(int m, int k, int n, const double* A, const double* B, double* C);

// C[m,n] += A[k,m]^T * B[k,n]  (accumulating; used for weight gradients)
void matmul_tn_acc_serial(int m, int k, int n, const double* A, const double* B, double* C);
void matmul_tn_acc_omp(int m, int k, int n, const double* A, const double* B, double* C);
void matmul_tn_acc(int m, int k, int n, const double* A, const double* B, double* C);

// y[O,Ho,Wo] = conv2d(x[Ci,H,W], w[O,Ci,kh,kw]) + b[O], zero padding `pad`, stride `stride`
void conv2d_serial(int Ci, int H, int W, int O, int kh, int kw, int stride, int pad,
                   const double* x, const double* w, const double* b, double* y);
void conv2d_omp(int Ci, int H, int W, int O, int kh, int kw, int stride, int pad,
                const double* x, const double* w, const double* b, double* y);
void conv2d(int Ci, int H, int W, int O, int kh, int kw, int stride, int pad,
            const double* x, const double* w, const double* b, double* y);

// dx[Ci,H,W] += conv2d backward w.r.t. input
void conv2d_bwd_input_serial(int Ci, int H, int W, int O, int kh, int kw, int stride, int pad,
                             const double* dy, const double* w, double* dx);
void conv2d_bwd_input_omp(int Ci, int H, int W, int O, int kh, int kw, int stride, int pad,
                          const double* dy, const double* w, double* dx);
void conv2d_bwd_input(int Ci, int H, int W, int O, int kh, int kw, int stride, int pad,
                      const double* dy, const double* w, double* dx);

// dw[O,Ci,kh,kw] += ..., db[O] += ...
void conv2d_bwd_weight_serial(int Ci, int H, int W, int O, int kh, int kw, int stride, int pad,
                              const double* x, const double* dy, double* dw, double* db);
void conv2d_bwd_weight_omp(int Ci, int H, int W, int O, int kh, int kw, int stride, int pad,
                           const double* x, const double* dy, double* dw, double* db);
void conv2d_bwd_weight(int Ci, int H, int W, int O, int kh, int kw, int stride, int pad,
                       const double* x, const double* dy, double* dw, double* db);

inline int conv_out_dim(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}

}  // namespace eegsal::kernels

#endif
