#pragma once

#include "waveletgan/tensor.hpp"
#include "waveletgan/wavelet.hpp"

#include <cstddef>
#include <vector>

namespace wg {

// Each (batch, image-channel) plane of a [B,H,W,C] tensor as one 1-D signal
// in row-major raster order. Signals are indexed plane-major: b * C + c.
std::vector<std::vector<double>> raster_flatten(const Tensor& noise);

// Inverse of raster_flatten for the given output shape.
Tensor raster_unflatten(const std::vector<std::vector<double>>& signals,
                        const std::vector<std::size_t>& shape);

// Learnable multi-channel wavelet filtering with channel averaging: each
// raster signal is convolved with every kernel of the bank and the C
// filtered signals are averaged into one output of identical shape. The
// scales are the layer's learnable parameters; backward produces both the
// input gradient and the accumulated per-scale gradient.
//
// Stateful between forward and backward (the forward input is cached), so a
// single instance must be driven by one thread at a time.
class WaveletDeconv {
public:
    WaveletDeconv(std::vector<double> scales, std::size_t kernel_width, double sigma);

    // Average of the per-scale convolutions of every raster signal; output
    // shape equals input shape. Caches the input for backward.
    Tensor forward(const Tensor& noise);

    // Input gradient via the transpose of forward; also accumulates
    // dE/ds_i = (1/C) sum_signals sum_b grad_out[b] * (z (*) dkernel_i)[b]
    // into scale_grad.
    Tensor backward(const Tensor& grad_out);

    // Plain-SGD scale update s_i <- max(s_min, s_i - lr * dE/ds_i), followed
    // by kernel re-sampling and gradient reset. The Adam training path calls
    // set_scales + zero_scale_grad instead.
    void apply_scale_update(double learning_rate);

    const std::vector<double>& scales() const { return bank_.scales; }
    const std::vector<double>& scale_grad() const { return scale_grad_; }
    std::size_t channels() const { return bank_.channels(); }
    std::size_t kernel_width() const { return bank_.kernel_width; }
    double sigma() const { return bank_.sigma; }
    const wavelet::FilterBank& bank() const { return bank_; }

    // Replaces the scales (clamped to the positivity floor) and re-samples
    // the kernels.
    void set_scales(const std::vector<double>& scales);
    void set_scale_grad(const std::vector<double>& grad);
    void zero_scale_grad();

    static constexpr double kScaleFloor = 1e-3;

private:
    wavelet::FilterBank bank_;
    std::vector<double> scale_grad_;
    Tensor cached_input_;
    bool has_cached_input_ = false;
};

} // namespace wg
