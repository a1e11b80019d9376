#pragma once

#include "waveletgan/dataio.hpp"
#include "waveletgan/nn.hpp"
#include "waveletgan/rng.hpp"
#include "waveletgan/tensor.hpp"
#include "waveletgan/wavelet_deconv.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace wg::gan {

enum class Variant { mnist28, rgb32 };
enum class LossKind { hinge, minimax };
enum class GenMode { direct, residual };

struct ArchConfig {
    Variant variant = Variant::mnist28;
    std::size_t base_width = 32;   // generator width; discriminator uses half
    std::size_t z_dim = 128;
    bool wavelet_enabled = true;
    std::size_t wavelet_channels = 5;
    std::size_t wavelet_kernel_width = 9;
    double wavelet_sigma = 1.0;
    std::vector<double> wavelet_scales; // empty -> dyadic 1,2,4,...,2^{C-1}
    GenMode mode = GenMode::direct;
    bool conditional = false;
    std::size_t n_classes = 10;
    LossKind loss = LossKind::hinge;
    std::size_t batch = 64;
    std::size_t n_disc = 5;
    double lr = 2e-4;
    double beta1 = 0.0;            // SN-GAN practice; adam_step itself defaults to 0.9
    double beta2 = 0.999;
    double residual_alpha = 0.1;
    std::uint64_t seed = 1;

    std::size_t image_size() const { return variant == Variant::mnist28 ? 28 : 32; }
    std::size_t image_channels() const { return variant == Variant::mnist28 ? 1 : 3; }
    std::size_t gen_width() const { return base_width; }
    std::size_t disc_width() const { return base_width / 2 ? base_width / 2 : 1; }
    std::vector<double> effective_scales() const;
    void validate() const;
};

// nn::Layer adapter around the WaveletDeconv core; the scales live in a
// Parameter so the model optimizer trains them like any other weight.
class WaveletDeconvLayer : public nn::Layer {
public:
    WaveletDeconvLayer(std::string name, std::vector<double> scales, std::size_t kernel_width,
                       double sigma);

    Tensor forward(const Tensor& x, nn::Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<nn::Parameter*> params() override { return {&scales_}; }
    std::string describe() const override;

    // Re-clamps the parameter to the positivity floor after an optimizer
    // step drove it below.
    void clamp_scales();
    std::vector<double> scales() const;
    WaveletDeconv& core() { return core_; }

private:
    void sync_core_scales();
    nn::Parameter scales_;
    WaveletDeconv core_;
};

struct GanModel {
    ArchConfig cfg;
    nn::Stack generator;
    nn::Stack discriminator;
    WaveletDeconvLayer* wavelet = nullptr;    // inside generator when enabled
    std::size_t sigmoid_index = 0;            // generator position of the output sigmoid
    std::unique_ptr<nn::Adam> opt_g;
    std::unique_ptr<nn::Adam> opt_d;
    Rng train_rng;
    std::int64_t step = 0;
    std::int64_t d_update_count = 0;          // protocol instrumentation
    std::int64_t g_update_count = 0;

    std::vector<double> wavelet_scales() const;
};

// Table-style stacks. The generator maps z to an image through dense ->
// reshape -> up-blocks -> BN+ReLU+3x3 conv -> [WaveletDeconv] -> sigmoid;
// the discriminator is spectral-normalized down/flat blocks into a single
// logit.
nn::Stack build_generator(const ArchConfig& cfg, Rng& init_rng, WaveletDeconvLayer** wavelet_out,
                          std::size_t* sigmoid_index_out);
nn::Stack build_discriminator(const ArchConfig& cfg, Rng& init_rng);

GanModel build_gan(const ArchConfig& cfg);

// Adversarial losses on [B,1] logit tensors. The *_grads variants also
// return d(loss)/d(logit) for training.
std::pair<double, double> minimax_loss(const Tensor& d_real_logits, const Tensor& d_fake_logits);
std::pair<double, double> hinge_loss(const Tensor& d_real_logits, const Tensor& d_fake_logits);

struct LossGrads {
    double loss_d = 0.0;
    double loss_g = 0.0;
    Tensor d_loss_wrt_real;  // d(loss_D)/d(real logits)
    Tensor d_loss_wrt_fake;  // d(loss_D)/d(fake logits)
    Tensor g_loss_wrt_fake;  // d(loss_G)/d(fake logits)
};
LossGrads loss_with_grads(LossKind kind, const Tensor& d_real_logits,
                          const Tensor& d_fake_logits);

// One-hot label concat for the conditional mode.
Tensor concat_onehot(const Tensor& z, const std::vector<int>& labels, std::size_t n_classes);
Tensor concat_label_maps(const Tensor& images, const std::vector<int>& labels,
                         std::size_t n_classes);

// Fake samples from latent z0 [B, z_dim]. Direct mode runs the full stack;
// residual mode adds the pre-sigmoid (wavelet-filtered) output onto the
// real batch: x' = clamp_[0,1](x + alpha * W(g(z0))). labels are required
// when cfg.conditional; real_batch when mode == residual.
Tensor generate(GanModel& model, const Tensor& z0, GenMode mode, nn::Mode forward_mode,
                const std::vector<int>* labels = nullptr, const Tensor* real_batch = nullptr);

// z0 ~ N(0, I) of shape [n, z_dim].
Tensor sample_z(std::size_t n, std::size_t z_dim, Rng& rng);

// Convenience batch sampler used by training and FID evaluation; generates
// in chunks of cfg.batch with sample-mode (batch-statistics) normalization.
Tensor sample_images(GanModel& model, std::size_t n, Rng& rng);

struct StepMetrics {
    double d_loss = 0.0;       // mean over the sub-updates
    double g_loss = 0.0;
    int d_updates = 0;
    double g_grad_norm = 0.0;
    double d_grad_norm = 0.0;
    std::vector<double> scales;
    std::optional<double> proxy_fid;
    double wall_ms = 0.0;
};

// Epoch-shuffled minibatch index stream; the permutation and cursor are
// checkpointed so resumed runs replay the exact batch sequence.
class BatchSampler {
public:
    BatchSampler() = default;
    explicit BatchSampler(std::size_t n);
    std::vector<std::size_t> next(std::size_t batch, Rng& rng);

    std::vector<std::uint32_t>& permutation() { return perm_; }
    std::size_t& cursor() { return cursor_; }
    std::size_t size() const { return perm_.size(); }

private:
    std::vector<std::uint32_t> perm_;
    std::size_t cursor_ = 0;
    bool shuffled_ = false;
};

// n_disc discriminator updates on fresh real/latent batches, then one
// generator update (wavelet scales included). Throws NumericError with a
// diagnostic dump if a loss goes non-finite.
StepMetrics train_step(GanModel& model, const io::Dataset& data, BatchSampler& sampler);

struct TrainOptions {
    std::int64_t steps = 0;
    // Called after every step; may attach proxy_fid to the metrics row and
    // gets a read-only model for snapshots.
    std::function<void(GanModel&, std::int64_t, StepMetrics&)> on_step;
};

std::vector<io::MetricsRow> train(GanModel& model, const io::Dataset& data,
                                  const TrainOptions& options, BatchSampler* sampler = nullptr);

} // namespace wg::gan
