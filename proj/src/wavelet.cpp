#include "waveletgan/wavelet.hpp"

#include "waveletgan/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace wg::wavelet {

namespace {

void check_sigma(double sigma) {
    if (!(sigma > 0.0))
        throw ParameterError("mother wavelet sigma must be positive, got " + std::to_string(sigma));
}

void check_scale(double s) {
    if (!(s > 0.0))
        throw ParameterError("wavelet scale must be positive, got " + std::to_string(s));
}

void check_width(std::size_t k) {
    if (k < 3 || k % 2 == 0)
        throw ParameterError("kernel width must be an odd integer >= 3, got " + std::to_string(k));
}

double norm_const(double sigma) {
    return 2.0 / (std::pow(std::numbers::pi, 0.25) * std::sqrt(3.0 * sigma));
}

} // namespace

double mexican_hat(double t, double sigma) {
    check_sigma(sigma);
    const double u = (t * t) / (sigma * sigma);
    return norm_const(sigma) * (u - 1.0) * std::exp(-0.5 * u);
}

double mexican_hat_dt(double t, double sigma) {
    check_sigma(sigma);
    const double u = (t * t) / (sigma * sigma);
    return norm_const(sigma) * (t / (sigma * sigma)) * (3.0 - u) * std::exp(-0.5 * u);
}

double scaled_wavelet(double t, double s, double b, double sigma) {
    check_scale(s);
    return mexican_hat((t - b) / s, sigma) / std::sqrt(s);
}

std::vector<double> sample_kernel(double s, std::size_t kernel_width, double sigma) {
    check_scale(s);
    check_width(kernel_width);
    const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(kernel_width - 1) / 2;
    std::vector<double> kernel(kernel_width);
    for (std::ptrdiff_t j = -half; j <= half; ++j)
        kernel[static_cast<std::size_t>(j + half)] = scaled_wavelet(static_cast<double>(j), s, 0.0, sigma);
    return kernel;
}

std::vector<double> sample_kernel_dscale(double s, std::size_t kernel_width, double sigma) {
    check_scale(s);
    check_width(kernel_width);
    const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(kernel_width - 1) / 2;
    const double inv_sqrt_s = 1.0 / std::sqrt(s);
    std::vector<double> dkernel(kernel_width);
    for (std::ptrdiff_t j = -half; j <= half; ++j) {
        const double t = static_cast<double>(j) / s;
        const double d = -0.5 * inv_sqrt_s / s * mexican_hat(t, sigma) -
                         inv_sqrt_s * mexican_hat_dt(t, sigma) * static_cast<double>(j) / (s * s);
        dkernel[static_cast<std::size_t>(j + half)] = d;
    }
    return dkernel;
}

FilterBank build_filter_bank(const std::vector<double>& scales, std::size_t kernel_width,
                             double sigma) {
    if (scales.empty()) throw ParameterError("filter bank needs at least one scale");
    check_sigma(sigma);
    check_width(kernel_width);
    FilterBank bank;
    bank.scales = scales;
    bank.kernel_width = kernel_width;
    bank.sigma = sigma;
    bank.kernels.reserve(scales.size());
    bank.dkernels_dscale.reserve(scales.size());
    for (double s : scales) {
        bank.kernels.push_back(sample_kernel(s, kernel_width, sigma));
        bank.dkernels_dscale.push_back(sample_kernel_dscale(s, kernel_width, sigma));
    }
    return bank;
}

void convolve_same_into(const double* signal, std::size_t n,
                        const double* kernel, std::size_t k,
                        double* out, bool accumulate) {
    const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(k - 1) / 2;
    const std::ptrdiff_t sn = static_cast<std::ptrdiff_t>(n);
    for (std::ptrdiff_t b = 0; b < sn; ++b) {
        double acc = 0.0;
        for (std::ptrdiff_t j = -half; j <= half; ++j) {
            const std::ptrdiff_t idx = b - j;
            if (idx >= 0 && idx < sn) acc += kernel[j + half] * signal[idx];
        }
        if (accumulate)
            out[b] += acc;
        else
            out[b] = acc;
    }
}

void correlate_same_into(const double* signal, std::size_t n,
                         const double* kernel, std::size_t k,
                         double* out, bool accumulate) {
    const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(k - 1) / 2;
    const std::ptrdiff_t sn = static_cast<std::ptrdiff_t>(n);
    for (std::ptrdiff_t b = 0; b < sn; ++b) {
        double acc = 0.0;
        for (std::ptrdiff_t j = -half; j <= half; ++j) {
            const std::ptrdiff_t idx = b + j;
            if (idx >= 0 && idx < sn) acc += kernel[j + half] * signal[idx];
        }
        if (accumulate)
            out[b] += acc;
        else
            out[b] = acc;
    }
}

std::vector<double> convolve_same(const std::vector<double>& signal,
                                  const std::vector<double>& kernel) {
    if (signal.empty()) throw ParameterError("convolve_same: empty signal");
    if (kernel.empty() || kernel.size() % 2 == 0)
        throw ParameterError("convolve_same: kernel width must be odd, got " +
                             std::to_string(kernel.size()));
    std::vector<double> out(signal.size());
    convolve_same_into(signal.data(), signal.size(), kernel.data(), kernel.size(), out.data(),
                       false);
    return out;
}

} // namespace wg::wavelet
