#pragma once

#include <cstddef>
#include <vector>

// Hot inner loops shared by the matrix and tensor layers. Every kernel has a
// single arithmetic order regardless of execution mode, so the parallel path
// is bit-identical to the serial reference (threads only partition independent
// output rows/slabs).

namespace mvcca::kernels {

enum class Exec { Serial, Parallel };

// Process-wide default used when a call site does not pass an Exec.
Exec& default_exec();

// Row-major GEMM variants. C is m x n and is overwritten when beta == 0,
// accumulated into when beta == 1.
// gemm_nn: C = A(m x k) * B(k x n)
// gemm_tn: C = A^T,  A is k x m, B is k x n
// gemm_nt: C = A(m x k) * B(n x k)^T
void gemm_nn(int m, int k, int n, const double* A, const double* B, double* C,
             double beta, Exec exec);
void gemm_tn(int m, int k, int n, const double* A, const double* B, double* C,
             double beta, Exec exec);
void gemm_nt(int m, int k, int n, const double* A, const double* B, double* C,
             double beta, Exec exec);

// T += w * v_0 o v_1 o ... o v_{k-1}, T row-major over dims (last fastest).
void rank1_update(double* T, const std::vector<int>& dims,
                  const std::vector<const double*>& vecs, double w, Exec exec);

// out(lead, p, trail) = sum_q in(lead, q, trail) * U(p, q), U row-major p x d.
void mode_product(const double* in, int lead, int d, int trail,
                  const double* U, int p, double* out, Exec exec);

// Columnwise Kronecker product. factors[s] is d_s x m row-major; out is
// (prod d_s) x m with the first factor's index slowest.
void khatri_rao(const std::vector<const double*>& factors,
                const std::vector<int>& dims, int m, double* out, Exec exec);

// Matricized-tensor-times-Khatri-Rao-product for a dense tensor:
// out(i, l) = sum over entries with mode-index i of T * prod_{s != mode}
// factors[s](idx_s, l). out is dims[mode] x m and is overwritten.
void mttkrp(const double* T, const std::vector<int>& dims, int mode,
            const std::vector<const double*>& factors, int m, double* out,
            Exec exec);

}  // namespace mvcca::kernels
