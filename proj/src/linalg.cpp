#include "waveletgan/linalg.hpp"

#include "waveletgan/errors.hpp"

#include <Eigen/Dense>

#include <atomic>
#include <cstdlib>
#include <thread>

namespace wg::linalg {

namespace {

using MatMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

std::atomic<std::size_t> g_threads{0};

std::size_t default_threads() {
    if (const char* env = std::getenv("WAVELETGAN_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1 && v <= 256) return static_cast<std::size_t>(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

} // namespace

void matmul(double* c, const double* a, const double* b,
            std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    ConstMatMap A(a, m, k), B(b, k, n);
    MatMap C(c, m, n);
    if (accumulate)
        C.noalias() += A * B;
    else
        C.noalias() = A * B;
}

void matmul_at_b(double* c, const double* a, const double* b,
                 std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    ConstMatMap A(a, k, m), B(b, k, n);
    MatMap C(c, m, n);
    if (accumulate)
        C.noalias() += A.transpose() * B;
    else
        C.noalias() = A.transpose() * B;
}

void matmul_a_bt(double* c, const double* a, const double* b,
                 std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    ConstMatMap A(a, m, k), B(b, n, k);
    MatMap C(c, m, n);
    if (accumulate)
        C.noalias() += A * B.transpose();
    else
        C.noalias() = A * B.transpose();
}

void matvec(double* y, const double* a, const double* x,
            std::size_t m, std::size_t n, bool accumulate) {
    ConstMatMap A(a, m, n);
    ConstVecMap X(x, n);
    VecMap Y(y, m);
    if (accumulate)
        Y.noalias() += A * X;
    else
        Y.noalias() = A * X;
}

void matvec_t(double* y, const double* a, const double* x,
              std::size_t m, std::size_t n, bool accumulate) {
    ConstMatMap A(a, m, n);
    ConstVecMap X(x, m);
    VecMap Y(y, n);
    if (accumulate)
        Y.noalias() += A.transpose() * X;
    else
        Y.noalias() = A.transpose() * X;
}

void sym_eig(const double* a, std::size_t d,
             std::vector<double>& eigenvalues, std::vector<double>& eigenvectors) {
    ConstMatMap A(a, d, d);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(A);
    if (solver.info() != Eigen::Success)
        throw NumericError("sym_eig: eigendecomposition failed to converge");
    eigenvalues.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + d);
    eigenvectors.resize(d * d);
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c < d; ++c)
            eigenvectors[r * d + c] = solver.eigenvectors()(static_cast<Eigen::Index>(r),
                                                            static_cast<Eigen::Index>(c));
}

std::size_t thread_count() {
    std::size_t t = g_threads.load(std::memory_order_relaxed);
    if (t == 0) {
        t = default_threads();
        g_threads.store(t, std::memory_order_relaxed);
    }
    return t;
}

void set_thread_count(std::size_t n) {
    g_threads.store(n == 0 ? 1 : n, std::memory_order_relaxed);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    std::size_t workers = std::min(thread_count(), n);
    if (workers <= 1) {
        fn(0, n);
        return;
    }
    std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> threads;
    threads.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) {
        std::size_t lo = w * chunk;
        std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        threads.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    fn(0, std::min(chunk, n));
    for (auto& t : threads) t.join();
}

} // namespace wg::linalg
