#include "waveletgan/wavelet_deconv.hpp"

#include "waveletgan/errors.hpp"

#include <algorithm>
#include <cmath>

namespace wg {

std::vector<std::vector<double>> raster_flatten(const Tensor& noise) {
    require_rank(noise, 4, "raster_flatten");
    const std::size_t B = noise.shape()[0], H = noise.shape()[1], W = noise.shape()[2],
                      C = noise.shape()[3];
    std::vector<std::vector<double>> signals(B * C);
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t c = 0; c < C; ++c) {
            auto& sig = signals[b * C + c];
            sig.resize(H * W);
            for (std::size_t h = 0; h < H; ++h)
                for (std::size_t w = 0; w < W; ++w)
                    sig[h * W + w] = noise.at4(b, h, w, c);
        }
    }
    return signals;
}

Tensor raster_unflatten(const std::vector<std::vector<double>>& signals,
                        const std::vector<std::size_t>& shape) {
    if (shape.size() != 4) throw ShapeError("raster_unflatten: shape must have rank 4");
    const std::size_t B = shape[0], H = shape[1], W = shape[2], C = shape[3];
    if (signals.size() != B * C)
        throw ShapeError("raster_unflatten: expected " + std::to_string(B * C) + " signals, got " +
                         std::to_string(signals.size()));
    Tensor out(shape);
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t c = 0; c < C; ++c) {
            const auto& sig = signals[b * C + c];
            if (sig.size() != H * W)
                throw ShapeError("raster_unflatten: signal length mismatch");
            for (std::size_t h = 0; h < H; ++h)
                for (std::size_t w = 0; w < W; ++w)
                    out.at4(b, h, w, c) = sig[h * W + w];
        }
    }
    return out;
}

WaveletDeconv::WaveletDeconv(std::vector<double> scales, std::size_t kernel_width, double sigma)
    : bank_(wavelet::build_filter_bank(scales, kernel_width, sigma)),
      scale_grad_(scales.size(), 0.0) {}

Tensor WaveletDeconv::forward(const Tensor& noise) {
    require_rank(noise, 4, "WaveletDeconv::forward");
    require_finite(noise, "WaveletDeconv::forward input");

    const std::size_t B = noise.shape()[0], H = noise.shape()[1], W = noise.shape()[2],
                      C_img = noise.shape()[3];
    const std::size_t n = H * W;
    const std::size_t C = bank_.channels();
    const double inv_c = 1.0 / static_cast<double>(C);

    Tensor out(noise.shape());
    std::vector<double> signal(n), acc(n);
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t c = 0; c < C_img; ++c) {
            for (std::size_t h = 0; h < H; ++h)
                for (std::size_t w = 0; w < W; ++w)
                    signal[h * W + w] = noise.at4(b, h, w, c);
            std::fill(acc.begin(), acc.end(), 0.0);
            for (std::size_t i = 0; i < C; ++i)
                wavelet::convolve_same_into(signal.data(), n, bank_.kernels[i].data(),
                                            bank_.kernel_width, acc.data(), true);
            for (std::size_t h = 0; h < H; ++h)
                for (std::size_t w = 0; w < W; ++w)
                    out.at4(b, h, w, c) = acc[h * W + w] * inv_c;
        }
    }

    cached_input_ = noise;
    has_cached_input_ = true;
    return out;
}

Tensor WaveletDeconv::backward(const Tensor& grad_out) {
    if (!has_cached_input_)
        throw StateError("WaveletDeconv::backward called before forward");
    if (!grad_out.same_shape(cached_input_))
        throw ShapeError("WaveletDeconv::backward: grad shape " + grad_out.shape_str() +
                         " does not match cached input " + cached_input_.shape_str());

    const std::size_t B = grad_out.shape()[0], H = grad_out.shape()[1], W = grad_out.shape()[2],
                      C_img = grad_out.shape()[3];
    const std::size_t n = H * W;
    const std::size_t C = bank_.channels();
    const double inv_c = 1.0 / static_cast<double>(C);

    Tensor grad_in(grad_out.shape());
    std::vector<double> g(n), z(n), acc(n), filtered(n);
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t c = 0; c < C_img; ++c) {
            for (std::size_t h = 0; h < H; ++h)
                for (std::size_t w = 0; w < W; ++w) {
                    g[h * W + w] = grad_out.at4(b, h, w, c);
                    z[h * W + w] = cached_input_.at4(b, h, w, c);
                }
            // Input gradient: transpose of the forward convolution.
            std::fill(acc.begin(), acc.end(), 0.0);
            for (std::size_t i = 0; i < C; ++i)
                wavelet::correlate_same_into(g.data(), n, bank_.kernels[i].data(),
                                             bank_.kernel_width, acc.data(), true);
            for (std::size_t h = 0; h < H; ++h)
                for (std::size_t w = 0; w < W; ++w)
                    grad_in.at4(b, h, w, c) = acc[h * W + w] * inv_c;
            // Scale gradients: dE/ds_i = (1/C) sum_b g[b] * (z conv dkernel_i)[b].
            for (std::size_t i = 0; i < C; ++i) {
                wavelet::convolve_same_into(z.data(), n, bank_.dkernels_dscale[i].data(),
                                            bank_.kernel_width, filtered.data(), false);
                double dot = 0.0;
                for (std::size_t p = 0; p < n; ++p) dot += g[p] * filtered[p];
                scale_grad_[i] += dot * inv_c;
            }
        }
    }
    return grad_in;
}

void WaveletDeconv::apply_scale_update(double learning_rate) {
    std::vector<double> updated = bank_.scales;
    for (std::size_t i = 0; i < updated.size(); ++i)
        updated[i] = std::max(kScaleFloor, updated[i] - learning_rate * scale_grad_[i]);
    set_scales(updated);
    zero_scale_grad();
}

void WaveletDeconv::set_scales(const std::vector<double>& scales) {
    if (scales.size() != bank_.channels())
        throw ParameterError("WaveletDeconv::set_scales: channel count mismatch");
    std::vector<double> clamped = scales;
    for (double& s : clamped) s = std::max(kScaleFloor, s);
    bank_ = wavelet::build_filter_bank(clamped, bank_.kernel_width, bank_.sigma);
}

void WaveletDeconv::set_scale_grad(const std::vector<double>& grad) {
    if (grad.size() != bank_.channels())
        throw ParameterError("WaveletDeconv::set_scale_grad: channel count mismatch");
    scale_grad_ = grad;
}

void WaveletDeconv::zero_scale_grad() {
    std::fill(scale_grad_.begin(), scale_grad_.end(), 0.0);
}

} // namespace wg
