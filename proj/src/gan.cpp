#include "waveletgan/gan.hpp"

#include "waveletgan/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <sstream>

namespace wg::gan {

namespace {

double stable_softplus(double x) {
    // log(1 + e^x) without overflow.
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Tensor concat_batch(const Tensor& a, const Tensor& b) {
    if (a.rank() != b.rank()) throw ShapeError("concat_batch: rank mismatch");
    for (std::size_t i = 1; i < a.rank(); ++i)
        if (a.shape()[i] != b.shape()[i]) throw ShapeError("concat_batch: trailing dim mismatch");
    std::vector<std::size_t> shape = a.shape();
    shape[0] = a.shape()[0] + b.shape()[0];
    Tensor out(shape);
    std::memcpy(out.data(), a.data(), a.size() * sizeof(double));
    std::memcpy(out.data() + a.size(), b.data(), b.size() * sizeof(double));
    return out;
}

Tensor slice_batch(const Tensor& t, std::size_t begin, std::size_t end) {
    std::vector<std::size_t> shape = t.shape();
    const std::size_t item = t.size() / shape[0];
    shape[0] = end - begin;
    Tensor out(shape);
    std::memcpy(out.data(), t.data() + begin * item, out.size() * sizeof(double));
    return out;
}

double param_grad_norm(const nn::Adam& opt) {
    double acc = 0.0;
    for (const auto& e : const_cast<nn::Adam&>(opt).entries())
        for (std::size_t i = 0; i < e.param->grad.size(); ++i)
            acc += e.param->grad[i] * e.param->grad[i];
    return std::sqrt(acc);
}

} // namespace

// ------------------------------------------------------------- ArchConfig

std::vector<double> ArchConfig::effective_scales() const {
    if (!wavelet_scales.empty()) {
        if (wavelet_scales.size() != wavelet_channels)
            throw ConfigError("wavelet_scales has " + std::to_string(wavelet_scales.size()) +
                              " entries but wavelet_channels is " +
                              std::to_string(wavelet_channels));
        return wavelet_scales;
    }
    std::vector<double> scales(wavelet_channels);
    for (std::size_t i = 0; i < wavelet_channels; ++i)
        scales[i] = std::pow(2.0, static_cast<double>(i));
    return scales;
}

void ArchConfig::validate() const {
    if (z_dim == 0) throw ConfigError("z_dim must be positive");
    if (batch < 2) throw ConfigError("batch must be >= 2 (batchnorm needs batch statistics)");
    if (n_disc < 1) throw ConfigError("n_disc must be >= 1");
    if (base_width < 2) throw ConfigError("base_width must be >= 2");
    if (wavelet_enabled) {
        if (wavelet_channels < 1)
            throw ConfigError("wavelet_channels must be >= 1 when the wavelet layer is enabled");
        if (wavelet_kernel_width < 3 || wavelet_kernel_width % 2 == 0)
            throw ConfigError("wavelet_K must be an odd integer >= 3");
        if (!(wavelet_sigma > 0.0)) throw ConfigError("sigma must be positive");
        for (double s : effective_scales())
            if (!(s > 0.0)) throw ConfigError("wavelet scales must be positive");
    }
    if (conditional && n_classes < 2) throw ConfigError("conditional mode needs n_classes >= 2");
    if (!(lr > 0.0)) throw ConfigError("lr must be positive");
    if (mode == GenMode::residual && !(residual_alpha > 0.0))
        throw ConfigError("residual_alpha must be positive");
}

// --------------------------------------------------- WaveletDeconvLayer

WaveletDeconvLayer::WaveletDeconvLayer(std::string name, std::vector<double> scales,
                                       std::size_t kernel_width, double sigma)
    : scales_(name + "/scales", Tensor({scales.size()}, scales)),
      core_(scales, kernel_width, sigma) {}

void WaveletDeconvLayer::sync_core_scales() {
    std::vector<double> s(scales_.value.data(), scales_.value.data() + scales_.value.size());
    core_.set_scales(s);
}

Tensor WaveletDeconvLayer::forward(const Tensor& x, nn::Mode) {
    // Kernels are re-sampled from the current scale parameters on every
    // pass, so an optimizer update takes effect immediately.
    sync_core_scales();
    return core_.forward(x);
}

Tensor WaveletDeconvLayer::backward(const Tensor& grad_out) {
    core_.zero_scale_grad();
    Tensor gx = core_.backward(grad_out);
    const auto& sg = core_.scale_grad();
    for (std::size_t i = 0; i < sg.size(); ++i) scales_.grad[i] += sg[i];
    return gx;
}

void WaveletDeconvLayer::clamp_scales() {
    for (std::size_t i = 0; i < scales_.value.size(); ++i)
        scales_.value[i] = std::max(WaveletDeconv::kScaleFloor, scales_.value[i]);
}

std::vector<double> WaveletDeconvLayer::scales() const {
    return {scales_.value.data(), scales_.value.data() + scales_.value.size()};
}

std::string WaveletDeconvLayer::describe() const {
    return "wavelet_deconv(C=" + std::to_string(core_.channels()) +
           ",K=" + std::to_string(core_.kernel_width()) + ",average)";
}

// ------------------------------------------------------------- builders

nn::Stack build_generator(const ArchConfig& cfg, Rng& init_rng, WaveletDeconvLayer** wavelet_out,
                          std::size_t* sigmoid_index_out) {
    cfg.validate();
    const std::size_t w = cfg.gen_width();
    const std::size_t in_dim = cfg.z_dim + (cfg.conditional ? cfg.n_classes : 0);
    const std::size_t seed_hw = cfg.variant == Variant::mnist28 ? 7 : 4;
    const std::size_t n_up = cfg.variant == Variant::mnist28 ? 2 : 3;
    const std::size_t out_ch = cfg.image_channels();

    nn::Stack g;
    g.add(std::make_unique<nn::Dense>("g/dense", in_dim, seed_hw * seed_hw * w, false, init_rng));
    g.add(std::make_unique<nn::Reshape>(std::vector<std::size_t>{seed_hw, seed_hw, w}));
    for (std::size_t i = 0; i < n_up; ++i)
        g.add(std::make_unique<nn::ResBlockUp>("g/up" + std::to_string(i + 1), w, w, init_rng));
    g.add(std::make_unique<nn::BatchNorm>("g/bn_out", w));
    g.add(std::make_unique<nn::Relu>());
    g.add(std::make_unique<nn::Conv2d>("g/conv_out", 3, w, out_ch, 1, false, init_rng));
    if (wavelet_out) *wavelet_out = nullptr;
    if (cfg.wavelet_enabled) {
        auto layer = std::make_unique<WaveletDeconvLayer>("g/wavelet", cfg.effective_scales(),
                                                          cfg.wavelet_kernel_width,
                                                          cfg.wavelet_sigma);
        if (wavelet_out) *wavelet_out = layer.get();
        g.add(std::move(layer));
    }
    if (sigmoid_index_out) *sigmoid_index_out = g.size();
    g.add(std::make_unique<nn::Sigmoid>());
    return g;
}

nn::Stack build_discriminator(const ArchConfig& cfg, Rng& init_rng) {
    cfg.validate();
    const std::size_t w = cfg.disc_width();
    const std::size_t in_ch = cfg.image_channels() + (cfg.conditional ? cfg.n_classes : 0);

    nn::Stack d;
    d.add(std::make_unique<nn::ResBlockDown>("d/down1", in_ch, w, init_rng));
    d.add(std::make_unique<nn::ResBlockDown>("d/down2", w, w, init_rng));
    if (cfg.variant == Variant::rgb32) {
        d.add(std::make_unique<nn::ResBlockFlat>("d/flat1", w, init_rng));
        d.add(std::make_unique<nn::ResBlockFlat>("d/flat2", w, init_rng));
    }
    d.add(std::make_unique<nn::Relu>());
    d.add(std::make_unique<nn::GlobalSumPool>());
    d.add(std::make_unique<nn::Dense>("d/dense", w, 1, true, init_rng));
    return d;
}

GanModel build_gan(const ArchConfig& cfg) {
    cfg.validate();
    GanModel model;
    model.cfg = cfg;
    // One init stream consumed in construction order (generator first),
    // then an independent stream for the training loop.
    Rng init_rng(cfg.seed);
    model.generator = build_generator(cfg, init_rng, &model.wavelet, &model.sigmoid_index);
    model.discriminator = build_discriminator(cfg, init_rng);
    model.train_rng = Rng(cfg.seed ^ 0x9E3779B97F4A7C15ull);
    model.opt_g = std::make_unique<nn::Adam>(cfg.lr, cfg.beta1, cfg.beta2);
    for (nn::Parameter* p : model.generator.params()) model.opt_g->register_param(p);
    model.opt_d = std::make_unique<nn::Adam>(cfg.lr, cfg.beta1, cfg.beta2);
    for (nn::Parameter* p : model.discriminator.params()) model.opt_d->register_param(p);
    return model;
}

std::vector<double> GanModel::wavelet_scales() const {
    return wavelet ? wavelet->scales() : std::vector<double>{};
}

// ---------------------------------------------------------------- losses

std::pair<double, double> minimax_loss(const Tensor& d_real_logits, const Tensor& d_fake_logits) {
    require_finite(d_real_logits, "minimax_loss real logits");
    require_finite(d_fake_logits, "minimax_loss fake logits");
    const std::size_t nr = d_real_logits.size(), nf = d_fake_logits.size();
    double loss_d = 0.0, loss_g = 0.0;
    // -log sigmoid(r) = softplus(-r); -log(1 - sigmoid(f)) = softplus(f).
    for (std::size_t i = 0; i < nr; ++i) loss_d += stable_softplus(-d_real_logits[i]) / nr;
    for (std::size_t i = 0; i < nf; ++i) loss_d += stable_softplus(d_fake_logits[i]) / nf;
    // Non-saturating generator: -log sigmoid(f).
    for (std::size_t i = 0; i < nf; ++i) loss_g += stable_softplus(-d_fake_logits[i]) / nf;
    return {loss_d, loss_g};
}

std::pair<double, double> hinge_loss(const Tensor& d_real_logits, const Tensor& d_fake_logits) {
    require_finite(d_real_logits, "hinge_loss real logits");
    require_finite(d_fake_logits, "hinge_loss fake logits");
    const std::size_t nr = d_real_logits.size(), nf = d_fake_logits.size();
    double loss_d = 0.0, loss_g = 0.0;
    for (std::size_t i = 0; i < nr; ++i) loss_d += std::max(0.0, 1.0 - d_real_logits[i]) / nr;
    for (std::size_t i = 0; i < nf; ++i) loss_d += std::max(0.0, 1.0 + d_fake_logits[i]) / nf;
    for (std::size_t i = 0; i < nf; ++i) loss_g -= d_fake_logits[i] / nf;
    return {loss_d, loss_g};
}

LossGrads loss_with_grads(LossKind kind, const Tensor& d_real_logits,
                          const Tensor& d_fake_logits) {
    LossGrads out;
    out.d_loss_wrt_real = Tensor(d_real_logits.shape());
    out.d_loss_wrt_fake = Tensor(d_fake_logits.shape());
    out.g_loss_wrt_fake = Tensor(d_fake_logits.shape());
    const double inv_nr = 1.0 / static_cast<double>(d_real_logits.size());
    const double inv_nf = 1.0 / static_cast<double>(d_fake_logits.size());
    if (kind == LossKind::minimax) {
        auto [ld, lg] = minimax_loss(d_real_logits, d_fake_logits);
        out.loss_d = ld;
        out.loss_g = lg;
        for (std::size_t i = 0; i < d_real_logits.size(); ++i)
            out.d_loss_wrt_real[i] = -stable_sigmoid(-d_real_logits[i]) * inv_nr;
        for (std::size_t i = 0; i < d_fake_logits.size(); ++i) {
            out.d_loss_wrt_fake[i] = stable_sigmoid(d_fake_logits[i]) * inv_nf;
            out.g_loss_wrt_fake[i] = -stable_sigmoid(-d_fake_logits[i]) * inv_nf;
        }
    } else {
        auto [ld, lg] = hinge_loss(d_real_logits, d_fake_logits);
        out.loss_d = ld;
        out.loss_g = lg;
        for (std::size_t i = 0; i < d_real_logits.size(); ++i)
            out.d_loss_wrt_real[i] = (1.0 - d_real_logits[i]) > 0.0 ? -inv_nr : 0.0;
        for (std::size_t i = 0; i < d_fake_logits.size(); ++i) {
            out.d_loss_wrt_fake[i] = (1.0 + d_fake_logits[i]) > 0.0 ? inv_nf : 0.0;
            out.g_loss_wrt_fake[i] = -inv_nf;
        }
    }
    return out;
}

// ------------------------------------------------------------ generation

Tensor concat_onehot(const Tensor& z, const std::vector<int>& labels, std::size_t n_classes) {
    require_rank(z, 2, "concat_onehot");
    const std::size_t B = z.shape()[0], zd = z.shape()[1];
    if (labels.size() != B) throw ShapeError("concat_onehot: label count != batch");
    Tensor out({B, zd + n_classes});
    for (std::size_t b = 0; b < B; ++b) {
        std::memcpy(out.data() + b * (zd + n_classes), z.data() + b * zd, zd * sizeof(double));
        const int l = labels[b];
        if (l < 0 || static_cast<std::size_t>(l) >= n_classes)
            throw ParameterError("concat_onehot: label out of range");
        out.at2(b, zd + static_cast<std::size_t>(l)) = 1.0;
    }
    return out;
}

Tensor concat_label_maps(const Tensor& images, const std::vector<int>& labels,
                         std::size_t n_classes) {
    require_rank(images, 4, "concat_label_maps");
    const std::size_t B = images.shape()[0], H = images.shape()[1], W = images.shape()[2],
                      C = images.shape()[3];
    if (labels.size() != B) throw ShapeError("concat_label_maps: label count != batch");
    Tensor out({B, H, W, C + n_classes});
    for (std::size_t b = 0; b < B; ++b) {
        const int l = labels[b];
        if (l < 0 || static_cast<std::size_t>(l) >= n_classes)
            throw ParameterError("concat_label_maps: label out of range");
        for (std::size_t h = 0; h < H; ++h)
            for (std::size_t w = 0; w < W; ++w) {
                for (std::size_t c = 0; c < C; ++c) out.at4(b, h, w, c) = images.at4(b, h, w, c);
                out.at4(b, h, w, C + static_cast<std::size_t>(l)) = 1.0;
            }
    }
    return out;
}

Tensor sample_z(std::size_t n, std::size_t z_dim, Rng& rng) {
    Tensor z({n, z_dim});
    rng.fill_gaussian(z.data(), z.size());
    return z;
}

namespace {

struct GenPath {
    Tensor out;
    std::size_t depth = 0;     // layers consumed in the forward pass
    Tensor clamp_mask;         // residual only: 1 where the clamp is inactive
    double alpha = 1.0;
};

GenPath generate_path(GanModel& model, const Tensor& z0, GenMode mode, nn::Mode forward_mode,
                      const std::vector<int>* labels, const Tensor* real_batch) {
    const ArchConfig& cfg = model.cfg;
    require_rank(z0, 2, "generate z0");
    if (z0.shape()[1] != cfg.z_dim)
        throw ShapeError("generate: z0 width " + std::to_string(z0.shape()[1]) + " != z_dim " +
                         std::to_string(cfg.z_dim));
    Tensor gin = z0;
    if (cfg.conditional) {
        if (!labels) throw ParameterError("generate: conditional mode requires labels");
        gin = concat_onehot(z0, *labels, cfg.n_classes);
    }

    GenPath path;
    if (mode == GenMode::direct) {
        path.depth = model.generator.size();
        Tensor h = gin;
        for (std::size_t i = 0; i < path.depth; ++i)
            h = model.generator.at(i).forward(h, forward_mode);
        path.out = std::move(h);
        return path;
    }

    // Residual: x' = clamp_[0,1](x + alpha * W(g(z0))) with the sigmoid
    // skipped; W is the wavelet layer when enabled.
    if (!real_batch)
        throw ParameterError("generate: residual mode requires a real batch");
    path.depth = model.sigmoid_index;
    path.alpha = cfg.residual_alpha;
    Tensor h = gin;
    for (std::size_t i = 0; i < path.depth; ++i)
        h = model.generator.at(i).forward(h, forward_mode);
    if (!real_batch->same_shape(h))
        throw ShapeError("generate: real batch shape " + real_batch->shape_str() +
                         " != noise shape " + h.shape_str());
    Tensor out(h.shape());
    path.clamp_mask = Tensor(h.shape());
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double v = (*real_batch)[i] + path.alpha * h[i];
        out[i] = std::clamp(v, 0.0, 1.0);
        path.clamp_mask[i] = (v > 0.0 && v < 1.0) ? 1.0 : 0.0;
    }
    path.out = std::move(out);
    return path;
}

void generator_backward(GanModel& model, const GenPath& path, const Tensor& grad_wrt_out) {
    Tensor g = grad_wrt_out;
    if (path.depth != model.generator.size()) {
        // Residual path: d(out)/d(stack) = alpha inside the clamp.
        Tensor masked(g.shape());
        for (std::size_t i = 0; i < g.size(); ++i)
            masked[i] = g[i] * path.alpha * path.clamp_mask[i];
        g = std::move(masked);
    }
    for (std::size_t i = path.depth; i-- > 0;) g = model.generator.at(i).backward(g);
}

} // namespace

Tensor generate(GanModel& model, const Tensor& z0, GenMode mode, nn::Mode forward_mode,
                const std::vector<int>* labels, const Tensor* real_batch) {
    return generate_path(model, z0, mode, forward_mode, labels, real_batch).out;
}

Tensor sample_images(GanModel& model, std::size_t n, Rng& rng) {
    const ArchConfig& cfg = model.cfg;
    if (n == 0) throw ParameterError("sample_images: n must be positive");
    Tensor out;
    bool first = true;
    std::size_t produced = 0;
    while (produced < n) {
        std::size_t chunk = std::min(cfg.batch, n - produced);
        std::size_t gen_chunk = std::max<std::size_t>(chunk, 2); // batchnorm floor
        Tensor z = sample_z(gen_chunk, cfg.z_dim, rng);
        std::vector<int> labels;
        if (cfg.conditional) {
            labels.resize(gen_chunk);
            for (auto& l : labels)
                l = static_cast<int>(rng.uniform_index(cfg.n_classes));
        }
        Tensor fake = generate(model, z, GenMode::direct, nn::Mode::sample,
                               cfg.conditional ? &labels : nullptr, nullptr);
        if (gen_chunk != chunk) fake = slice_batch(fake, 0, chunk);
        out = first ? fake : concat_batch(out, fake);
        first = false;
        produced += chunk;
    }
    return out;
}

// ---------------------------------------------------------------- training

BatchSampler::BatchSampler(std::size_t n) : perm_(n) {
    for (std::size_t i = 0; i < n; ++i) perm_[i] = static_cast<std::uint32_t>(i);
}

std::vector<std::size_t> BatchSampler::next(std::size_t batch, Rng& rng) {
    if (batch == 0 || batch > perm_.size())
        throw ParameterError("BatchSampler: batch size " + std::to_string(batch) +
                             " exceeds dataset size " + std::to_string(perm_.size()));
    if (cursor_ + batch > perm_.size()) cursor_ = 0;
    if (cursor_ == 0) rng.shuffle(perm_);
    std::vector<std::size_t> idx(batch);
    for (std::size_t i = 0; i < batch; ++i) idx[i] = perm_[cursor_ + i];
    cursor_ += batch;
    return idx;
}

namespace {

std::vector<int> random_labels(std::size_t n, std::size_t n_classes, Rng& rng) {
    std::vector<int> labels(n);
    for (auto& l : labels) l = static_cast<int>(rng.uniform_index(n_classes));
    return labels;
}

// Generator-side loss and its gradient with respect to the fake logits.
std::pair<double, Tensor> generator_loss(LossKind kind, const Tensor& f_logits) {
    Tensor grad(f_logits.shape());
    const double inv_n = 1.0 / static_cast<double>(f_logits.size());
    double loss = 0.0;
    if (kind == LossKind::minimax) {
        for (std::size_t i = 0; i < f_logits.size(); ++i) {
            loss += stable_softplus(-f_logits[i]) * inv_n;
            grad[i] = -stable_sigmoid(-f_logits[i]) * inv_n;
        }
    } else {
        for (std::size_t i = 0; i < f_logits.size(); ++i) {
            loss -= f_logits[i] * inv_n;
            grad[i] = -inv_n;
        }
    }
    return {loss, std::move(grad)};
}

[[noreturn]] void abort_non_finite(const GanModel& model, const char* what, double loss_d,
                                   double loss_g) {
    std::ostringstream os;
    os << "non-finite loss at step " << model.step << " (" << what << "): d_loss=" << loss_d
       << " g_loss=" << loss_g << "; aborting before the update is applied";
    throw NumericError(os.str());
}

} // namespace

StepMetrics train_step(GanModel& model, const io::Dataset& data, BatchSampler& sampler) {
    const ArchConfig& cfg = model.cfg;
    if (data.size() == 0) throw ParameterError("train_step: empty dataset");
    if (cfg.conditional && data.labels.empty())
        throw ParameterError("train_step: conditional mode needs labelled data");
    const auto t0 = std::chrono::steady_clock::now();

    StepMetrics metrics;
    metrics.d_updates = 0;

    // n_disc discriminator sub-updates, fresh z0 and fresh real sub-batches each.
    for (std::size_t sub = 0; sub < cfg.n_disc; ++sub) {
        io::Dataset real = io::gather(data, sampler.next(cfg.batch, model.train_rng));
        Tensor z = sample_z(cfg.batch, cfg.z_dim, model.train_rng);
        std::vector<int> fake_labels;
        if (cfg.conditional) fake_labels = random_labels(cfg.batch, cfg.n_classes, model.train_rng);

        Tensor fake = generate(model, z, cfg.mode, nn::Mode::train,
                               cfg.conditional ? &fake_labels : nullptr, &real.images);

        Tensor d_real_in = cfg.conditional
                               ? concat_label_maps(real.images, real.labels, cfg.n_classes)
                               : real.images;
        Tensor d_fake_in = cfg.conditional
                               ? concat_label_maps(fake, fake_labels, cfg.n_classes)
                               : fake;
        Tensor logits = model.discriminator.forward(concat_batch(d_real_in, d_fake_in),
                                                    nn::Mode::train);
        Tensor r = slice_batch(logits, 0, cfg.batch);
        Tensor f = slice_batch(logits, cfg.batch, 2 * cfg.batch);
        LossGrads lg = loss_with_grads(cfg.loss, r, f);
        if (!std::isfinite(lg.loss_d)) abort_non_finite(model, "discriminator", lg.loss_d, lg.loss_g);

        model.opt_d->zero_grad();
        model.discriminator.backward(concat_batch(lg.d_loss_wrt_real, lg.d_loss_wrt_fake));
        metrics.d_grad_norm = param_grad_norm(*model.opt_d);
        model.opt_d->step();
        model.d_update_count += 1;
        metrics.d_updates += 1;
        metrics.d_loss += lg.loss_d / static_cast<double>(cfg.n_disc);
    }

    // One generator update.
    {
        io::Dataset real;
        const Tensor* real_ptr = nullptr;
        if (cfg.mode == GenMode::residual) {
            real = io::gather(data, sampler.next(cfg.batch, model.train_rng));
            real_ptr = &real.images;
        }
        Tensor z = sample_z(cfg.batch, cfg.z_dim, model.train_rng);
        std::vector<int> fake_labels;
        if (cfg.conditional) fake_labels = random_labels(cfg.batch, cfg.n_classes, model.train_rng);

        GenPath path = generate_path(model, z, cfg.mode, nn::Mode::train,
                                     cfg.conditional ? &fake_labels : nullptr,
                                     real_ptr ? real_ptr : nullptr);
        Tensor d_fake_in = cfg.conditional
                               ? concat_label_maps(path.out, fake_labels, cfg.n_classes)
                               : path.out;
        Tensor f_logits = model.discriminator.forward(d_fake_in, nn::Mode::train);
        auto [g_loss, g_grad] = generator_loss(cfg.loss, f_logits);
        if (!std::isfinite(g_loss)) abort_non_finite(model, "generator", metrics.d_loss, g_loss);

        model.opt_g->zero_grad();
        model.opt_d->zero_grad(); // discriminator grads from this pass are discarded
        Tensor g_in = model.discriminator.backward(g_grad);
        if (cfg.conditional) {
            // Strip the label channel maps appended to the image.
            const std::size_t B = g_in.shape()[0], H = g_in.shape()[1], W = g_in.shape()[2];
            const std::size_t C = cfg.image_channels();
            Tensor sliced({B, H, W, C});
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t h = 0; h < H; ++h)
                    for (std::size_t w = 0; w < W; ++w)
                        for (std::size_t c = 0; c < C; ++c)
                            sliced.at4(b, h, w, c) = g_in.at4(b, h, w, c);
            g_in = std::move(sliced);
        }
        generator_backward(model, path, g_in);
        metrics.g_grad_norm = param_grad_norm(*model.opt_g);
        model.opt_g->step();
        model.g_update_count += 1;
        if (model.wavelet) model.wavelet->clamp_scales();
        metrics.g_loss = g_loss;
    }

    model.step += 1;
    metrics.scales = model.wavelet_scales();
    const auto t1 = std::chrono::steady_clock::now();
    metrics.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    return metrics;
}

std::vector<io::MetricsRow> train(GanModel& model, const io::Dataset& data,
                                  const TrainOptions& options, BatchSampler* sampler) {
    if (options.steps > 0 && data.size() == 0)
        throw ParameterError("train: empty dataset");
    BatchSampler local;
    if (!sampler) {
        local = BatchSampler(data.size());
        sampler = &local;
    }
    std::vector<io::MetricsRow> rows;
    rows.reserve(static_cast<std::size_t>(std::max<std::int64_t>(options.steps, 0)));
    for (std::int64_t s = 0; s < options.steps; ++s) {
        StepMetrics m = train_step(model, data, *sampler);
        if (options.on_step) options.on_step(model, model.step, m);
        io::MetricsRow row;
        row.step = model.step;
        row.d_loss = m.d_loss;
        row.g_loss = m.g_loss;
        row.proxy_fid = m.proxy_fid;
        row.scales = m.scales;
        row.wall_ms = m.wall_ms;
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace wg::gan
