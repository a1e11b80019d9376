#pragma once

#include <cstddef>
#include <vector>

namespace wg::wavelet {

// Mexican-hat mother wavelet, the (sign-flipped) normalized second
// derivative of a Gaussian with standard deviation sigma:
//
//   psi(t) = 2 / (pi^{1/4} sqrt(3 sigma)) * (t^2/sigma^2 - 1) * exp(-t^2 / (2 sigma^2))
//
// psi(0) < 0, psi(+-sigma) = 0, even in t, zero mean.
double mexican_hat(double t, double sigma);

// d(psi)/dt in closed form:
//   psi'(t) = 2 / (pi^{1/4} sqrt(3 sigma)) * (t/sigma^2) * (3 - t^2/sigma^2) * exp(-t^2 / (2 sigma^2))
// Odd in t; vanishes at t = 0 and t = +-sqrt(3) sigma.
double mexican_hat_dt(double t, double sigma);

// Scaled and translated wavelet: (1/sqrt(s)) psi((t - b) / s).
double scaled_wavelet(double t, double s, double b, double sigma);

// Set of per-scale discretized kernels and their derivative-in-scale
// kernels. Tap offsets run -(K-1)/2 .. +(K-1)/2, one sample apart.
struct FilterBank {
    std::vector<double> scales;                    // C strictly positive scales
    std::size_t kernel_width = 0;                  // K, odd
    double sigma = 1.0;
    std::vector<std::vector<double>> kernels;          // C kernels of length K
    std::vector<std::vector<double>> dkernels_dscale;  // d(kernel)/d(scale), same layout

    std::size_t channels() const { return scales.size(); }
};

// [scaled_wavelet(j, s, 0, sigma)] for tap offsets j = -(K-1)/2 .. (K-1)/2.
std::vector<double> sample_kernel(double s, std::size_t kernel_width, double sigma);

// Per-tap derivative of sample_kernel with respect to s:
//   d/ds [ s^{-1/2} psi(j/s) ] = -(1/2) s^{-3/2} psi(j/s) - s^{-1/2} psi'(j/s) j / s^2
std::vector<double> sample_kernel_dscale(double s, std::size_t kernel_width, double sigma);

FilterBank build_filter_bank(const std::vector<double>& scales, std::size_t kernel_width,
                             double sigma);

// "Same"-size 1-D convolution with zero padding:
//   out[b] = sum_j kernel[j + (K-1)/2] * signal[b - j],  j = -(K-1)/2 .. (K-1)/2
// Out-of-range signal entries count as zero; output length equals input length.
std::vector<double> convolve_same(const std::vector<double>& signal,
                                  const std::vector<double>& kernel);

// In-place variant: out must hold signal.size() doubles; accumulate adds.
void convolve_same_into(const double* signal, std::size_t n,
                        const double* kernel, std::size_t k,
                        double* out, bool accumulate);

// Transpose of convolve_same with respect to the signal (cross-correlation):
//   out[p] = sum_j kernel[j + (K-1)/2] * signal[p + j]
void correlate_same_into(const double* signal, std::size_t n,
                         const double* kernel, std::size_t k,
                         double* out, bool accumulate);

} // namespace wg::wavelet
