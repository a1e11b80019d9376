#pragma once

#include "waveletgan/rng.hpp"
#include "waveletgan/tensor.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace wg::nn {

// Learnable tensor with its gradient accumulator. Names are unique within a
// model and key the checkpoint format.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;

    Parameter() = default;
    Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}
    void zero_grad() { grad.fill(0.0); }
};

struct AdamState {
    Tensor m;
    Tensor v;
    std::int64_t t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Bias-corrected Adam update on a single parameter.
void adam_step(Parameter& param, AdamState& state, double lr);

// Optimizer over an ordered set of parameters. Iteration order is the
// registration order, which keeps trajectories reproducible.
class Adam {
public:
    explicit Adam(double lr = 2e-4, double beta1 = 0.9, double beta2 = 0.999,
                  double epsilon = 1e-8);

    void register_param(Parameter* p);
    void step();
    void zero_grad();

    double learning_rate() const { return lr_; }
    std::size_t size() const { return entries_.size(); }
    std::int64_t step_count() const { return step_count_; }
    void set_step_count(std::int64_t n) { step_count_ = n; }

    struct Entry {
        Parameter* param;
        AdamState state;
    };
    std::vector<Entry>& entries() { return entries_; }

private:
    double lr_, beta1_, beta2_, epsilon_;
    std::vector<Entry> entries_;
    std::int64_t step_count_ = 0;
};

// Persistent left singular-vector estimate for power iteration.
struct SpectralNormState {
    std::vector<double> u;
    std::size_t n_power_iters = 1;
};

// Power-iteration estimate of the largest singular value of w viewed as the
// [rows=cout, cols=rest] matrix A[o][q] = w[q*cout + o] (cout is the fastest
// axis of both dense and conv weights here). update=true runs
// state.n_power_iters u/v refinements first; update=false estimates sigma
// from the stored u without touching it. Returns max(sigma, 1e-12).
double spectral_norm_sigma(const double* w, std::size_t cout, std::size_t rest,
                           SpectralNormState& state, bool update);

// Normalized copy w / sigma (the zero matrix comes back unchanged).
double spectral_norm_apply(const Tensor& w, std::size_t cout, SpectralNormState& state,
                           bool update, Tensor& w_normalized);

// How a forward pass treats normalization statistics:
//   train  - batch statistics; updates BN running stats and SN u
//   sample - batch statistics; mutates nothing (generation, FID)
//   eval   - BN running stats; mutates nothing
enum class Mode { train, sample, eval };

// A differentiable stage. forward caches whatever backward needs; backward
// consumes the cache from the most recent forward and accumulates parameter
// gradients. Single-writer between forward and backward.
class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor forward(const Tensor& x, Mode mode) = 0;
    virtual Tensor backward(const Tensor& grad_out) = 0;
    virtual std::vector<Parameter*> params() { return {}; }
    // Non-learnable state that still belongs in checkpoints (BN running
    // stats, SN u vectors), as (suffix, tensor) pairs.
    virtual std::vector<std::pair<std::string, Tensor*>> state() { return {}; }
    // One-line structural description, e.g. "conv3x3(32->1)".
    virtual std::string describe() const = 0;
};

class Dense : public Layer {
public:
    Dense(std::string name, std::size_t in_dim, std::size_t out_dim, bool spectral_norm,
          Rng& init_rng);

    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<Parameter*> params() override { return {&w_, &b_}; }
    std::vector<std::pair<std::string, Tensor*>> state() override;
    std::string describe() const override;

private:
    std::size_t in_dim_, out_dim_;
    Parameter w_; // [in, out]
    Parameter b_; // [out]
    bool sn_ = false;
    SpectralNormState sn_state_;
    Tensor sn_u_tensor_;
    Tensor cached_x_;
    Tensor w_effective_;
    double sigma_ = 1.0;
};

class Conv2d : public Layer {
public:
    Conv2d(std::string name, std::size_t k, std::size_t cin, std::size_t cout,
           std::size_t stride, bool spectral_norm, Rng& init_rng);

    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<Parameter*> params() override { return {&kernels_}; }
    std::vector<std::pair<std::string, Tensor*>> state() override;
    std::string describe() const override;

private:
    std::size_t k_, cin_, cout_, stride_;
    Parameter kernels_; // [k, k, cin, cout]
    bool sn_ = false;
    SpectralNormState sn_state_;
    Tensor sn_u_tensor_;
    Tensor cached_x_;
    Tensor w_effective_;
    double sigma_ = 1.0;
};

class BatchNorm : public Layer {
public:
    BatchNorm(std::string name, std::size_t channels);

    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<Parameter*> params() override { return {&gamma_, &beta_}; }
    std::vector<std::pair<std::string, Tensor*>> state() override;
    std::string describe() const override;

    static constexpr double kEpsilon = 1e-5;
    static constexpr double kMomentum = 0.9;

private:
    std::size_t channels_;
    Parameter gamma_, beta_;
    Tensor running_mean_, running_var_;
    Tensor cached_x_;
    std::vector<double> mean_, inv_std_;
    Mode cached_mode_ = Mode::train;
};

class Relu : public Layer {
public:
    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    std::string describe() const override { return "relu"; }

private:
    Tensor cached_x_;
};

class Sigmoid : public Layer {
public:
    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    std::string describe() const override { return "sigmoid"; }

private:
    Tensor cached_y_;
};

// Nearest-neighbour 2x spatial upsampling.
class Upsample2x : public Layer {
public:
    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    std::string describe() const override { return "upsample2x"; }

private:
    std::vector<std::size_t> cached_shape_;
};

// 2x2 mean pooling; requires even spatial dims.
class AvgPool2x : public Layer {
public:
    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    std::string describe() const override { return "avgpool2x"; }

private:
    std::vector<std::size_t> cached_shape_;
};

// [B,H,W,C] -> [B,C] by spatial summation.
class GlobalSumPool : public Layer {
public:
    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    std::string describe() const override { return "global_sum_pool"; }

private:
    std::vector<std::size_t> cached_shape_;
};

// [B, prod(tail)] <-> [B, tail...].
class Reshape : public Layer {
public:
    explicit Reshape(std::vector<std::size_t> tail) : tail_(std::move(tail)) {}
    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    std::string describe() const override;

private:
    std::vector<std::size_t> tail_;
    std::vector<std::size_t> cached_shape_;
};

// Pre-activation residual blocks in the SN-GAN style. Generator blocks
// carry BN; discriminator blocks use spectral norm and no BN.
class ResBlockUp : public Layer {
public:
    ResBlockUp(const std::string& name, std::size_t cin, std::size_t cout, Rng& init_rng);
    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<Parameter*> params() override;
    std::vector<std::pair<std::string, Tensor*>> state() override;
    std::string describe() const override;

private:
    std::size_t cin_, cout_;
    BatchNorm bn1_;
    Relu relu1_;
    Upsample2x up_main_;
    Conv2d conv1_;
    BatchNorm bn2_;
    Relu relu2_;
    Conv2d conv2_;
    Upsample2x up_skip_;
    Conv2d conv_skip_;
};

class ResBlockDown : public Layer {
public:
    ResBlockDown(const std::string& name, std::size_t cin, std::size_t cout, Rng& init_rng);
    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<Parameter*> params() override;
    std::vector<std::pair<std::string, Tensor*>> state() override;
    std::string describe() const override;

private:
    std::size_t cin_, cout_;
    Relu relu1_;
    Conv2d conv1_;
    Relu relu2_;
    Conv2d conv2_;
    AvgPool2x pool_main_;
    Conv2d conv_skip_;
    AvgPool2x pool_skip_;
};

// Channel-preserving residual block (no resampling), discriminator style.
class ResBlockFlat : public Layer {
public:
    ResBlockFlat(const std::string& name, std::size_t channels, Rng& init_rng);
    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<Parameter*> params() override;
    std::vector<std::pair<std::string, Tensor*>> state() override;
    std::string describe() const override;

private:
    std::size_t channels_;
    Relu relu1_;
    Conv2d conv1_;
    Relu relu2_;
    Conv2d conv2_;
};

// Ordered layer pipeline with reverse-order backward.
class Stack {
public:
    void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }
    Tensor forward(const Tensor& x, Mode mode);
    Tensor backward(const Tensor& grad_out);
    std::vector<Parameter*> params();
    std::vector<std::pair<std::string, Tensor*>> state();
    std::size_t size() const { return layers_.size(); }
    Layer& at(std::size_t i) { return *layers_[i]; }
    const Layer& at(std::size_t i) const { return *layers_[i]; }
    std::vector<std::string> describe() const;

private:
    std::vector<std::unique_ptr<Layer>> layers_;
};

} // namespace wg::nn
