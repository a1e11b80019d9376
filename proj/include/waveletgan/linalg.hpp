#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace wg::linalg {

// Row-major dense GEMM wrappers. C has M rows and N columns.
// accumulate=false overwrites C, true adds into it.
void matmul(double* c, const double* a, const double* b,
            std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);

// C[M,N] (+)= A^T B where A is [K,M] and B is [K,N].
void matmul_at_b(double* c, const double* a, const double* b,
                 std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);

// C[M,N] (+)= A B^T where A is [M,K] and B is [N,K].
void matmul_a_bt(double* c, const double* a, const double* b,
                 std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);

// y[M] (+)= A x where A is [M,N] row-major.
void matvec(double* y, const double* a, const double* x,
            std::size_t m, std::size_t n, bool accumulate = false);

// y[N] (+)= A^T x where A is [M,N] row-major.
void matvec_t(double* y, const double* a, const double* x,
              std::size_t m, std::size_t n, bool accumulate = false);

// Symmetric eigendecomposition of the d x d matrix a (row-major):
// a = V diag(w) V^T with eigenvalues ascending and eigenvectors in the
// columns of V (row-major [d,d]).
void sym_eig(const double* a, std::size_t d,
             std::vector<double>& eigenvalues, std::vector<double>& eigenvectors);

// Static-partition parallel loop over [0, n). Each worker gets one
// contiguous chunk, so any per-index writes are disjoint and results do not
// depend on scheduling. fn(begin, end) runs on worker threads (and/or the
// caller); fn must not throw.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

// Worker count used by parallel_for. Defaults to the hardware concurrency,
// overridable via set_thread_count or the WAVELETGAN_THREADS env var.
std::size_t thread_count();
void set_thread_count(std::size_t n);

} // namespace wg::linalg
