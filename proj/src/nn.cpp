#include "waveletgan/nn.hpp"

#include "waveletgan/errors.hpp"
#include "waveletgan/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace wg::nn {

namespace {

void add_into(Tensor& dst, const Tensor& src) {
    if (!dst.same_shape(src))
        throw ShapeError("elementwise add: " + dst.shape_str() + " vs " + src.shape_str());
    double* d = dst.data();
    const double* s = src.data();
    for (std::size_t i = 0; i < dst.size(); ++i) d[i] += s[i];
}

double he_stddev(std::size_t fan_in) {
    return std::sqrt(2.0 / static_cast<double>(fan_in));
}

Tensor gaussian_tensor(std::vector<std::size_t> shape, double stddev, Rng& rng) {
    Tensor t(std::move(shape));
    rng.fill_gaussian(t.data(), t.size(), stddev);
    return t;
}

std::vector<double> normalized_gaussian(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    rng.fill_gaussian(v.data(), n, 1.0);
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-12) { v.assign(n, 0.0); v[0] = 1.0; norm = 1.0; }
    for (double& x : v) x /= norm;
    return v;
}

} // namespace

void adam_step(Parameter& param, AdamState& state, double lr) {
    if (!param.grad.same_shape(param.value))
        throw ShapeError("adam_step: grad shape mismatch for " + param.name);
    if (state.m.size() == 0) {
        state.m = Tensor(param.value.shape());
        state.v = Tensor(param.value.shape());
    }
    state.t += 1;
    const double b1 = state.beta1, b2 = state.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
    double* m = state.m.data();
    double* v = state.v.data();
    double* theta = param.value.data();
    const double* g = param.grad.data();
    for (std::size_t i = 0; i < param.value.size(); ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        theta[i] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
    }
}

Adam::Adam(double lr, double beta1, double beta2, double epsilon)
    : lr_(lr), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

void Adam::register_param(Parameter* p) {
    Entry e;
    e.param = p;
    e.state.beta1 = beta1_;
    e.state.beta2 = beta2_;
    e.state.epsilon = epsilon_;
    e.state.m = Tensor(p->value.shape());
    e.state.v = Tensor(p->value.shape());
    entries_.push_back(std::move(e));
}

void Adam::step() {
    for (auto& e : entries_) adam_step(*e.param, e.state, lr_);
    step_count_ += 1;
}

void Adam::zero_grad() {
    for (auto& e : entries_) e.param->zero_grad();
}

double spectral_norm_sigma(const double* w, std::size_t cout, std::size_t rest,
                           SpectralNormState& state, bool update) {
    if (state.u.size() != cout)
        throw StateError("spectral_norm_sigma: u vector not initialized to cout");
    auto normalize = [](std::vector<double>& x) {
        double n = 0.0;
        for (double v : x) n += v * v;
        n = std::sqrt(n);
        if (n < 1e-12) return false;
        for (double& v : x) v /= n;
        return true;
    };
    // A[o][q] = w[q*cout + o]
    std::vector<double> v(rest), au(cout);
    double sigma = 0.0;
    const std::size_t iters = update ? std::max<std::size_t>(1, state.n_power_iters) : 1;
    std::vector<double> u = state.u;
    for (std::size_t it = 0; it < iters; ++it) {
        // v = A^T u, normalized
        for (std::size_t q = 0; q < rest; ++q) {
            double acc = 0.0;
            const double* row = w + q * cout;
            for (std::size_t o = 0; o < cout; ++o) acc += row[o] * u[o];
            v[q] = acc;
        }
        if (!normalize(v)) return 1e-12; // zero matrix
        // u = A v, normalized
        std::fill(au.begin(), au.end(), 0.0);
        for (std::size_t q = 0; q < rest; ++q) {
            const double* row = w + q * cout;
            const double vq = v[q];
            for (std::size_t o = 0; o < cout; ++o) au[o] += row[o] * vq;
        }
        double n = 0.0;
        for (double x : au) n += x * x;
        sigma = std::sqrt(n); // = u^T A v after normalization
        if (sigma < 1e-12) return 1e-12;
        for (std::size_t o = 0; o < cout; ++o) u[o] = au[o] / sigma;
        if (!update) break; // sigma from the stored u; u untouched
    }
    if (update) state.u = u;
    return std::max(sigma, 1e-12);
}

double spectral_norm_apply(const Tensor& w, std::size_t cout, SpectralNormState& state,
                           bool update, Tensor& w_normalized) {
    const std::size_t rest = w.size() / cout;
    const double sigma = spectral_norm_sigma(w.data(), cout, rest, state, update);
    w_normalized = w;
    double* out = w_normalized.data();
    for (std::size_t i = 0; i < w_normalized.size(); ++i) out[i] /= sigma;
    return sigma;
}

// ---------------------------------------------------------------- Dense

Dense::Dense(std::string name, std::size_t in_dim, std::size_t out_dim, bool spectral_norm,
             Rng& init_rng)
    : in_dim_(in_dim),
      out_dim_(out_dim),
      w_(name + "/W", gaussian_tensor({in_dim, out_dim}, he_stddev(in_dim), init_rng)),
      b_(name + "/b", Tensor({out_dim})),
      sn_(spectral_norm) {
    if (sn_) {
        sn_state_.u = normalized_gaussian(out_dim, init_rng);
        sn_u_tensor_ = Tensor({out_dim_}, sn_state_.u);
    }
}

std::vector<std::pair<std::string, Tensor*>> Dense::state() {
    if (!sn_) return {};
    // sn_u_tensor_ is the persisted source of truth; forward syncs from it.
    return {{w_.name + "/sn_u", &sn_u_tensor_}};
}

std::string Dense::describe() const {
    return "dense(" + std::to_string(in_dim_) + "->" + std::to_string(out_dim_) +
           (sn_ ? ",sn)" : ")");
}

Tensor Dense::forward(const Tensor& x, Mode mode) {
    require_rank(x, 2, "dense input");
    if (x.shape()[1] != in_dim_)
        throw ShapeError("dense " + w_.name + ": input width " + std::to_string(x.shape()[1]) +
                         " != " + std::to_string(in_dim_));
    // state() may have been loaded from a checkpoint; resync u.
    if (sn_ && sn_u_tensor_.size() == out_dim_)
        sn_state_.u.assign(sn_u_tensor_.data(), sn_u_tensor_.data() + out_dim_);
    if (sn_) {
        sigma_ = spectral_norm_apply(w_.value, out_dim_, sn_state_, mode == Mode::train,
                                     w_effective_);
        sn_u_tensor_ = Tensor({out_dim_}, sn_state_.u);
    } else {
        w_effective_ = w_.value;
        sigma_ = 1.0;
    }
    const std::size_t batch = x.shape()[0];
    Tensor y({batch, out_dim_});
    linalg::matmul(y.data(), x.data(), w_effective_.data(), batch, in_dim_, out_dim_);
    for (std::size_t r = 0; r < batch; ++r)
        for (std::size_t c = 0; c < out_dim_; ++c) y.at2(r, c) += b_.value[c];
    cached_x_ = x;
    return y;
}

Tensor Dense::backward(const Tensor& grad_out) {
    require_rank(grad_out, 2, "dense grad");
    const std::size_t batch = cached_x_.shape()[0];
    if (grad_out.shape()[0] != batch || grad_out.shape()[1] != out_dim_)
        throw ShapeError("dense backward: bad grad shape " + grad_out.shape_str());
    // dW = x^T g; sigma is treated as constant within the step, so the
    // spectral-norm chain rule reduces to dividing by sigma.
    std::vector<double> gw(in_dim_ * out_dim_);
    linalg::matmul_at_b(gw.data(), cached_x_.data(), grad_out.data(), in_dim_, batch, out_dim_);
    const double inv_sigma = 1.0 / sigma_;
    for (std::size_t i = 0; i < gw.size(); ++i) w_.grad[i] += gw[i] * inv_sigma;
    for (std::size_t r = 0; r < batch; ++r)
        for (std::size_t c = 0; c < out_dim_; ++c) b_.grad[c] += grad_out.at2(r, c);
    Tensor gx({batch, in_dim_});
    linalg::matmul_a_bt(gx.data(), grad_out.data(), w_effective_.data(), batch, out_dim_, in_dim_);
    return gx;
}

// ---------------------------------------------------------------- Conv2d

namespace {

struct ConvGeom {
    std::size_t h_out, w_out, pad_top, pad_left;
};

ConvGeom conv_geometry(std::size_t h, std::size_t w, std::size_t k, std::size_t stride) {
    ConvGeom g;
    g.h_out = (h + stride - 1) / stride;
    g.w_out = (w + stride - 1) / stride;
    const std::size_t need_h = (g.h_out - 1) * stride + k;
    const std::size_t need_w = (g.w_out - 1) * stride + k;
    g.pad_top = need_h > h ? (need_h - h) / 2 : 0;
    g.pad_left = need_w > w ? (need_w - w) / 2 : 0;
    return g;
}

// One sample: x [H,W,Cin] row-major -> col [h_out*w_out, k*k*Cin].
void im2col(const double* x, std::size_t h, std::size_t w, std::size_t cin, std::size_t k,
            std::size_t stride, const ConvGeom& g, double* col) {
    const std::size_t patch = k * k * cin;
    for (std::size_t oy = 0; oy < g.h_out; ++oy) {
        for (std::size_t ox = 0; ox < g.w_out; ++ox) {
            double* row = col + (oy * g.w_out + ox) * patch;
            for (std::size_t dy = 0; dy < k; ++dy) {
                const std::ptrdiff_t iy =
                    static_cast<std::ptrdiff_t>(oy * stride + dy) - static_cast<std::ptrdiff_t>(g.pad_top);
                for (std::size_t dx = 0; dx < k; ++dx) {
                    const std::ptrdiff_t ix =
                        static_cast<std::ptrdiff_t>(ox * stride + dx) - static_cast<std::ptrdiff_t>(g.pad_left);
                    double* dst = row + (dy * k + dx) * cin;
                    if (iy >= 0 && iy < static_cast<std::ptrdiff_t>(h) && ix >= 0 &&
                        ix < static_cast<std::ptrdiff_t>(w)) {
                        const double* src = x + (static_cast<std::size_t>(iy) * w +
                                                 static_cast<std::size_t>(ix)) * cin;
                        std::memcpy(dst, src, cin * sizeof(double));
                    } else {
                        std::memset(dst, 0, cin * sizeof(double));
                    }
                }
            }
        }
    }
}

// Transpose of im2col: scatter-add col gradients back onto the input image.
void col2im_add(const double* col, std::size_t h, std::size_t w, std::size_t cin, std::size_t k,
                std::size_t stride, const ConvGeom& g, double* gx) {
    const std::size_t patch = k * k * cin;
    for (std::size_t oy = 0; oy < g.h_out; ++oy) {
        for (std::size_t ox = 0; ox < g.w_out; ++ox) {
            const double* row = col + (oy * g.w_out + ox) * patch;
            for (std::size_t dy = 0; dy < k; ++dy) {
                const std::ptrdiff_t iy =
                    static_cast<std::ptrdiff_t>(oy * stride + dy) - static_cast<std::ptrdiff_t>(g.pad_top);
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                for (std::size_t dx = 0; dx < k; ++dx) {
                    const std::ptrdiff_t ix =
                        static_cast<std::ptrdiff_t>(ox * stride + dx) - static_cast<std::ptrdiff_t>(g.pad_left);
                    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                    const double* src = row + (dy * k + dx) * cin;
                    double* dst = gx + (static_cast<std::size_t>(iy) * w +
                                        static_cast<std::size_t>(ix)) * cin;
                    for (std::size_t c = 0; c < cin; ++c) dst[c] += src[c];
                }
            }
        }
    }
}

} // namespace

Conv2d::Conv2d(std::string name, std::size_t k, std::size_t cin, std::size_t cout,
               std::size_t stride, bool spectral_norm, Rng& init_rng)
    : k_(k),
      cin_(cin),
      cout_(cout),
      stride_(stride),
      kernels_(name + "/K", gaussian_tensor({k, k, cin, cout}, he_stddev(k * k * cin), init_rng)),
      sn_(spectral_norm) {
    if (k % 2 == 0) throw ParameterError("conv kernel size must be odd");
    if (stride != 1 && stride != 2) throw ParameterError("conv stride must be 1 or 2");
    if (sn_) {
        sn_state_.u = normalized_gaussian(cout, init_rng);
        sn_u_tensor_ = Tensor({cout_}, sn_state_.u);
    }
}

std::vector<std::pair<std::string, Tensor*>> Conv2d::state() {
    if (!sn_) return {};
    return {{kernels_.name + "/sn_u", &sn_u_tensor_}};
}

std::string Conv2d::describe() const {
    return "conv" + std::to_string(k_) + "x" + std::to_string(k_) + "(" + std::to_string(cin_) +
           "->" + std::to_string(cout_) + ",s" + std::to_string(stride_) + (sn_ ? ",sn)" : ")");
}

Tensor Conv2d::forward(const Tensor& x, Mode mode) {
    require_rank(x, 4, "conv input");
    if (x.shape()[3] != cin_)
        throw ShapeError("conv " + kernels_.name + ": input channels " +
                         std::to_string(x.shape()[3]) + " != " + std::to_string(cin_));
    if (sn_ && sn_u_tensor_.size() == cout_)
        sn_state_.u.assign(sn_u_tensor_.data(), sn_u_tensor_.data() + cout_);
    if (sn_) {
        sigma_ = spectral_norm_apply(kernels_.value, cout_, sn_state_, mode == Mode::train,
                                     w_effective_);
        sn_u_tensor_ = Tensor({cout_}, sn_state_.u);
    } else {
        w_effective_ = kernels_.value;
        sigma_ = 1.0;
    }

    const std::size_t B = x.shape()[0], H = x.shape()[1], W = x.shape()[2];
    const ConvGeom g = conv_geometry(H, W, k_, stride_);
    const std::size_t patch = k_ * k_ * cin_;
    const std::size_t n_out = g.h_out * g.w_out;

    Tensor y({B, g.h_out, g.w_out, cout_});
    const double* xp = x.data();
    double* yp = y.data();
    const double* wp = w_effective_.data();
    const std::size_t in_stride = H * W * cin_;
    const std::size_t out_stride = n_out * cout_;

    linalg::parallel_for(B, [&](std::size_t lo, std::size_t hi) {
        std::vector<double> col(n_out * patch);
        for (std::size_t b = lo; b < hi; ++b) {
            im2col(xp + b * in_stride, H, W, cin_, k_, stride_, g, col.data());
            linalg::matmul(yp + b * out_stride, col.data(), wp, n_out, patch, cout_);
        }
    });

    cached_x_ = x;
    return y;
}

Tensor Conv2d::backward(const Tensor& grad_out) {
    require_rank(grad_out, 4, "conv grad");
    const std::size_t B = cached_x_.shape()[0], H = cached_x_.shape()[1],
                      W = cached_x_.shape()[2];
    const ConvGeom g = conv_geometry(H, W, k_, stride_);
    if (grad_out.shape()[0] != B || grad_out.shape()[1] != g.h_out ||
        grad_out.shape()[2] != g.w_out || grad_out.shape()[3] != cout_)
        throw ShapeError("conv backward: bad grad shape " + grad_out.shape_str());

    const std::size_t patch = k_ * k_ * cin_;
    const std::size_t n_out = g.h_out * g.w_out;
    const std::size_t in_stride = H * W * cin_;
    const std::size_t out_stride = n_out * cout_;

    Tensor gx({B, H, W, cin_});
    const double* xp = cached_x_.data();
    const double* gp = grad_out.data();
    const double* wp = w_effective_.data();
    double* gxp = gx.data();

    // Per-worker kernel-gradient partials, reduced in worker order below;
    // bit-identical for a fixed worker count.
    const std::size_t workers = std::min<std::size_t>(linalg::thread_count(), B);
    const std::size_t chunk = (B + workers - 1) / workers;
    std::vector<std::vector<double>> gk_partial(workers);

    linalg::parallel_for(B, [&](std::size_t lo, std::size_t hi) {
        const std::size_t w_idx = lo / chunk;
        auto& gk = gk_partial[w_idx];
        gk.assign(patch * cout_, 0.0);
        std::vector<double> col(n_out * patch), gcol(n_out * patch);
        for (std::size_t b = lo; b < hi; ++b) {
            im2col(xp + b * in_stride, H, W, cin_, k_, stride_, g, col.data());
            // dK += col^T g_b
            linalg::matmul_at_b(gk.data(), col.data(), gp + b * out_stride, patch, n_out, cout_,
                                true);
            // dcol = g_b K^T, scattered back to the input
            linalg::matmul_a_bt(gcol.data(), gp + b * out_stride, wp, n_out, cout_, patch);
            col2im_add(gcol.data(), H, W, cin_, k_, stride_, g, gxp + b * in_stride);
        }
    });

    const double inv_sigma = 1.0 / sigma_;
    for (const auto& gk : gk_partial) {
        if (gk.empty()) continue;
        for (std::size_t i = 0; i < gk.size(); ++i) kernels_.grad[i] += gk[i] * inv_sigma;
    }
    return gx;
}

// ---------------------------------------------------------------- BatchNorm

BatchNorm::BatchNorm(std::string name, std::size_t channels)
    : channels_(channels),
      gamma_(name + "/gamma", Tensor::full({channels}, 1.0)),
      beta_(name + "/beta", Tensor({channels})),
      running_mean_({channels}),
      running_var_(Tensor::full({channels}, 1.0)) {}

std::vector<std::pair<std::string, Tensor*>> BatchNorm::state() {
    return {{gamma_.name + "/running_mean", &running_mean_},
            {gamma_.name + "/running_var", &running_var_}};
}

std::string BatchNorm::describe() const {
    return "batchnorm(" + std::to_string(channels_) + ")";
}

Tensor BatchNorm::forward(const Tensor& x, Mode mode) {
    require_rank(x, 4, "batchnorm input");
    if (x.shape()[3] != channels_)
        throw ShapeError("batchnorm " + gamma_.name + ": channel mismatch");
    const std::size_t B = x.shape()[0], H = x.shape()[1], W = x.shape()[2];
    const std::size_t n = B * H * W;
    cached_mode_ = mode;

    mean_.assign(channels_, 0.0);
    inv_std_.assign(channels_, 0.0);

    if (mode == Mode::eval) {
        for (std::size_t c = 0; c < channels_; ++c) {
            mean_[c] = running_mean_[c];
            inv_std_[c] = 1.0 / std::sqrt(running_var_[c] + kEpsilon);
        }
    } else {
        if (B < 2)
            throw ParameterError("batchnorm: training mode needs batch >= 2, got " +
                                 std::to_string(B));
        std::vector<double> var(channels_, 0.0);
        const double* xp = x.data();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < channels_; ++c) mean_[c] += xp[i * channels_ + c];
        for (std::size_t c = 0; c < channels_; ++c) mean_[c] /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < channels_; ++c) {
                const double d = xp[i * channels_ + c] - mean_[c];
                var[c] += d * d;
            }
        for (std::size_t c = 0; c < channels_; ++c) {
            var[c] /= static_cast<double>(n);
            inv_std_[c] = 1.0 / std::sqrt(var[c] + kEpsilon);
        }
        if (mode == Mode::train) {
            for (std::size_t c = 0; c < channels_; ++c) {
                running_mean_[c] = kMomentum * running_mean_[c] + (1.0 - kMomentum) * mean_[c];
                running_var_[c] = kMomentum * running_var_[c] + (1.0 - kMomentum) * var[c];
            }
        }
    }

    Tensor y(x.shape());
    const double* xp = x.data();
    double* yp = y.data();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < channels_; ++c)
            yp[i * channels_ + c] =
                gamma_.value[c] * (xp[i * channels_ + c] - mean_[c]) * inv_std_[c] +
                beta_.value[c];
    cached_x_ = x;
    return y;
}

Tensor BatchNorm::backward(const Tensor& grad_out) {
    if (!grad_out.same_shape(cached_x_))
        throw ShapeError("batchnorm backward: grad shape mismatch");
    const std::size_t B = cached_x_.shape()[0], H = cached_x_.shape()[1],
                      W = cached_x_.shape()[2];
    const std::size_t n = B * H * W;
    const double* xp = cached_x_.data();
    const double* gp = grad_out.data();

    std::vector<double> sum_g(channels_, 0.0), sum_gxhat(channels_, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < channels_; ++c) {
            const double xhat = (xp[i * channels_ + c] - mean_[c]) * inv_std_[c];
            sum_g[c] += gp[i * channels_ + c];
            sum_gxhat[c] += gp[i * channels_ + c] * xhat;
        }
    for (std::size_t c = 0; c < channels_; ++c) {
        gamma_.grad[c] += sum_gxhat[c];
        beta_.grad[c] += sum_g[c];
    }

    Tensor gx(cached_x_.shape());
    double* gxp = gx.data();
    if (cached_mode_ == Mode::eval) {
        // Running statistics are constants.
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < channels_; ++c)
                gxp[i * channels_ + c] = gp[i * channels_ + c] * gamma_.value[c] * inv_std_[c];
        return gx;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < channels_; ++c) {
            const double xhat = (xp[i * channels_ + c] - mean_[c]) * inv_std_[c];
            gxp[i * channels_ + c] =
                gamma_.value[c] * inv_std_[c] *
                (gp[i * channels_ + c] - inv_n * sum_g[c] - inv_n * xhat * sum_gxhat[c]);
        }
    return gx;
}

// ---------------------------------------------------------------- Pointwise

Tensor Relu::forward(const Tensor& x, Mode) {
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
    cached_x_ = x;
    return y;
}

Tensor Relu::backward(const Tensor& grad_out) {
    if (!grad_out.same_shape(cached_x_)) throw ShapeError("relu backward: grad shape mismatch");
    Tensor gx(grad_out.shape());
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] = cached_x_[i] > 0.0 ? grad_out[i] : 0.0;
    return gx;
}

Tensor Sigmoid::forward(const Tensor& x, Mode) {
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = x[i];
        if (v >= 0.0) {
            y[i] = 1.0 / (1.0 + std::exp(-v));
        } else {
            const double e = std::exp(v);
            y[i] = e / (1.0 + e);
        }
    }
    cached_y_ = y;
    return y;
}

Tensor Sigmoid::backward(const Tensor& grad_out) {
    if (!grad_out.same_shape(cached_y_))
        throw ShapeError("sigmoid backward: grad shape mismatch");
    Tensor gx(grad_out.shape());
    for (std::size_t i = 0; i < gx.size(); ++i)
        gx[i] = grad_out[i] * cached_y_[i] * (1.0 - cached_y_[i]);
    return gx;
}

Tensor Upsample2x::forward(const Tensor& x, Mode) {
    require_rank(x, 4, "upsample2x input");
    const std::size_t B = x.shape()[0], H = x.shape()[1], W = x.shape()[2], C = x.shape()[3];
    Tensor y({B, H * 2, W * 2, C});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t h = 0; h < H; ++h)
            for (std::size_t w = 0; w < W; ++w)
                for (std::size_t c = 0; c < C; ++c) {
                    const double v = x.at4(b, h, w, c);
                    y.at4(b, 2 * h, 2 * w, c) = v;
                    y.at4(b, 2 * h, 2 * w + 1, c) = v;
                    y.at4(b, 2 * h + 1, 2 * w, c) = v;
                    y.at4(b, 2 * h + 1, 2 * w + 1, c) = v;
                }
    cached_shape_ = x.shape();
    return y;
}

Tensor Upsample2x::backward(const Tensor& grad_out) {
    require_rank(grad_out, 4, "upsample2x grad");
    const std::size_t B = cached_shape_[0], H = cached_shape_[1], W = cached_shape_[2],
                      C = cached_shape_[3];
    if (grad_out.shape()[1] != H * 2 || grad_out.shape()[2] != W * 2)
        throw ShapeError("upsample2x backward: grad shape mismatch");
    Tensor gx(cached_shape_);
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t h = 0; h < H; ++h)
            for (std::size_t w = 0; w < W; ++w)
                for (std::size_t c = 0; c < C; ++c)
                    gx.at4(b, h, w, c) = grad_out.at4(b, 2 * h, 2 * w, c) +
                                         grad_out.at4(b, 2 * h, 2 * w + 1, c) +
                                         grad_out.at4(b, 2 * h + 1, 2 * w, c) +
                                         grad_out.at4(b, 2 * h + 1, 2 * w + 1, c);
    return gx;
}

Tensor AvgPool2x::forward(const Tensor& x, Mode) {
    require_rank(x, 4, "avgpool2x input");
    const std::size_t B = x.shape()[0], H = x.shape()[1], W = x.shape()[2], C = x.shape()[3];
    if (H % 2 != 0 || W % 2 != 0)
        throw ShapeError("avgpool2x: spatial dims must be even, got " + x.shape_str());
    Tensor y({B, H / 2, W / 2, C});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t h = 0; h < H / 2; ++h)
            for (std::size_t w = 0; w < W / 2; ++w)
                for (std::size_t c = 0; c < C; ++c)
                    y.at4(b, h, w, c) = 0.25 * (x.at4(b, 2 * h, 2 * w, c) +
                                                x.at4(b, 2 * h, 2 * w + 1, c) +
                                                x.at4(b, 2 * h + 1, 2 * w, c) +
                                                x.at4(b, 2 * h + 1, 2 * w + 1, c));
    cached_shape_ = x.shape();
    return y;
}

Tensor AvgPool2x::backward(const Tensor& grad_out) {
    require_rank(grad_out, 4, "avgpool2x grad");
    const std::size_t B = cached_shape_[0], H = cached_shape_[1], W = cached_shape_[2],
                      C = cached_shape_[3];
    Tensor gx(cached_shape_);
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t h = 0; h < H / 2; ++h)
            for (std::size_t w = 0; w < W / 2; ++w)
                for (std::size_t c = 0; c < C; ++c) {
                    const double v = 0.25 * grad_out.at4(b, h, w, c);
                    gx.at4(b, 2 * h, 2 * w, c) = v;
                    gx.at4(b, 2 * h, 2 * w + 1, c) = v;
                    gx.at4(b, 2 * h + 1, 2 * w, c) = v;
                    gx.at4(b, 2 * h + 1, 2 * w + 1, c) = v;
                }
    return gx;
}

Tensor GlobalSumPool::forward(const Tensor& x, Mode) {
    require_rank(x, 4, "global_sum_pool input");
    const std::size_t B = x.shape()[0], H = x.shape()[1], W = x.shape()[2], C = x.shape()[3];
    Tensor y({B, C});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t h = 0; h < H; ++h)
            for (std::size_t w = 0; w < W; ++w)
                for (std::size_t c = 0; c < C; ++c) y.at2(b, c) += x.at4(b, h, w, c);
    cached_shape_ = x.shape();
    return y;
}

Tensor GlobalSumPool::backward(const Tensor& grad_out) {
    require_rank(grad_out, 2, "global_sum_pool grad");
    const std::size_t B = cached_shape_[0], H = cached_shape_[1], W = cached_shape_[2],
                      C = cached_shape_[3];
    Tensor gx(cached_shape_);
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t h = 0; h < H; ++h)
            for (std::size_t w = 0; w < W; ++w)
                for (std::size_t c = 0; c < C; ++c) gx.at4(b, h, w, c) = grad_out.at2(b, c);
    return gx;
}

Tensor Reshape::forward(const Tensor& x, Mode) {
    cached_shape_ = x.shape();
    std::vector<std::size_t> shape{x.shape()[0]};
    shape.insert(shape.end(), tail_.begin(), tail_.end());
    return x.reshaped(shape);
}

Tensor Reshape::backward(const Tensor& grad_out) {
    return grad_out.reshaped(cached_shape_);
}

std::string Reshape::describe() const {
    std::string s = "reshape(B";
    for (std::size_t d : tail_) s += "," + std::to_string(d);
    return s + ")";
}

// ---------------------------------------------------------------- ResBlocks

ResBlockUp::ResBlockUp(const std::string& name, std::size_t cin, std::size_t cout, Rng& init_rng)
    : cin_(cin),
      cout_(cout),
      bn1_(name + "/bn1", cin),
      conv1_(name + "/conv1", 3, cin, cout, 1, false, init_rng),
      bn2_(name + "/bn2", cout),
      conv2_(name + "/conv2", 3, cout, cout, 1, false, init_rng),
      conv_skip_(name + "/conv_skip", 1, cin, cout, 1, false, init_rng) {}

Tensor ResBlockUp::forward(const Tensor& x, Mode mode) {
    Tensor t = bn1_.forward(x, mode);
    t = relu1_.forward(t, mode);
    t = up_main_.forward(t, mode);
    t = conv1_.forward(t, mode);
    t = bn2_.forward(t, mode);
    t = relu2_.forward(t, mode);
    t = conv2_.forward(t, mode);
    Tensor s = up_skip_.forward(x, mode);
    s = conv_skip_.forward(s, mode);
    add_into(t, s);
    return t;
}

Tensor ResBlockUp::backward(const Tensor& grad_out) {
    Tensor gs = conv_skip_.backward(grad_out);
    gs = up_skip_.backward(gs);
    Tensor gt = conv2_.backward(grad_out);
    gt = relu2_.backward(gt);
    gt = bn2_.backward(gt);
    gt = conv1_.backward(gt);
    gt = up_main_.backward(gt);
    gt = relu1_.backward(gt);
    gt = bn1_.backward(gt);
    add_into(gt, gs);
    return gt;
}

std::vector<Parameter*> ResBlockUp::params() {
    std::vector<Parameter*> out;
    for (Layer* l : std::initializer_list<Layer*>{&bn1_, &conv1_, &bn2_, &conv2_, &conv_skip_})
        for (Parameter* p : l->params()) out.push_back(p);
    return out;
}

std::vector<std::pair<std::string, Tensor*>> ResBlockUp::state() {
    std::vector<std::pair<std::string, Tensor*>> out;
    for (Layer* l : std::initializer_list<Layer*>{&bn1_, &conv1_, &bn2_, &conv2_, &conv_skip_})
        for (auto& s : l->state()) out.push_back(s);
    return out;
}

std::string ResBlockUp::describe() const {
    return "resblock_up(" + std::to_string(cin_) + "->" + std::to_string(cout_) + ")";
}

ResBlockDown::ResBlockDown(const std::string& name, std::size_t cin, std::size_t cout,
                           Rng& init_rng)
    : cin_(cin),
      cout_(cout),
      conv1_(name + "/conv1", 3, cin, cout, 1, true, init_rng),
      conv2_(name + "/conv2", 3, cout, cout, 1, true, init_rng),
      conv_skip_(name + "/conv_skip", 1, cin, cout, 1, true, init_rng) {}

Tensor ResBlockDown::forward(const Tensor& x, Mode mode) {
    Tensor t = relu1_.forward(x, mode);
    t = conv1_.forward(t, mode);
    t = relu2_.forward(t, mode);
    t = conv2_.forward(t, mode);
    t = pool_main_.forward(t, mode);
    Tensor s = conv_skip_.forward(x, mode);
    s = pool_skip_.forward(s, mode);
    add_into(t, s);
    return t;
}

Tensor ResBlockDown::backward(const Tensor& grad_out) {
    Tensor gs = pool_skip_.backward(grad_out);
    gs = conv_skip_.backward(gs);
    Tensor gt = pool_main_.backward(grad_out);
    gt = conv2_.backward(gt);
    gt = relu2_.backward(gt);
    gt = conv1_.backward(gt);
    gt = relu1_.backward(gt);
    add_into(gt, gs);
    return gt;
}

std::vector<Parameter*> ResBlockDown::params() {
    std::vector<Parameter*> out;
    for (Layer* l : std::initializer_list<Layer*>{&conv1_, &conv2_, &conv_skip_})
        for (Parameter* p : l->params()) out.push_back(p);
    return out;
}

std::vector<std::pair<std::string, Tensor*>> ResBlockDown::state() {
    std::vector<std::pair<std::string, Tensor*>> out;
    for (Layer* l : std::initializer_list<Layer*>{&conv1_, &conv2_, &conv_skip_})
        for (auto& s : l->state()) out.push_back(s);
    return out;
}

std::string ResBlockDown::describe() const {
    return "resblock_down(" + std::to_string(cin_) + "->" + std::to_string(cout_) + ")";
}

ResBlockFlat::ResBlockFlat(const std::string& name, std::size_t channels, Rng& init_rng)
    : channels_(channels),
      conv1_(name + "/conv1", 3, channels, channels, 1, true, init_rng),
      conv2_(name + "/conv2", 3, channels, channels, 1, true, init_rng) {}

Tensor ResBlockFlat::forward(const Tensor& x, Mode mode) {
    Tensor t = relu1_.forward(x, mode);
    t = conv1_.forward(t, mode);
    t = relu2_.forward(t, mode);
    t = conv2_.forward(t, mode);
    add_into(t, x);
    return t;
}

Tensor ResBlockFlat::backward(const Tensor& grad_out) {
    Tensor gt = conv2_.backward(grad_out);
    gt = relu2_.backward(gt);
    gt = conv1_.backward(gt);
    gt = relu1_.backward(gt);
    add_into(gt, grad_out);
    return gt;
}

std::vector<Parameter*> ResBlockFlat::params() {
    std::vector<Parameter*> out;
    for (Parameter* p : conv1_.params()) out.push_back(p);
    for (Parameter* p : conv2_.params()) out.push_back(p);
    return out;
}

std::vector<std::pair<std::string, Tensor*>> ResBlockFlat::state() {
    std::vector<std::pair<std::string, Tensor*>> out;
    for (auto& s : conv1_.state()) out.push_back(s);
    for (auto& s : conv2_.state()) out.push_back(s);
    return out;
}

std::string ResBlockFlat::describe() const {
    return "resblock(" + std::to_string(channels_) + ")";
}

// ---------------------------------------------------------------- Stack

Tensor Stack::forward(const Tensor& x, Mode mode) {
    Tensor h = x;
    for (auto& l : layers_) h = l->forward(h, mode);
    return h;
}

Tensor Stack::backward(const Tensor& grad_out) {
    Tensor g = grad_out;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
    return g;
}

std::vector<Parameter*> Stack::params() {
    std::vector<Parameter*> out;
    for (auto& l : layers_)
        for (Parameter* p : l->params()) out.push_back(p);
    return out;
}

std::vector<std::pair<std::string, Tensor*>> Stack::state() {
    std::vector<std::pair<std::string, Tensor*>> out;
    for (auto& l : layers_)
        for (auto& s : l->state()) out.push_back(s);
    return out;
}

std::vector<std::string> Stack::describe() const {
    std::vector<std::string> out;
    out.reserve(layers_.size());
    for (const auto& l : layers_) out.push_back(l->describe());
    return out;
}

} // namespace wg::nn
