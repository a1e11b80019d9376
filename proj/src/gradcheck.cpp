#include "waveletgan/gradcheck.hpp"

#include "waveletgan/dataio.hpp"
#include "waveletgan/gan.hpp"
#include "waveletgan/nn.hpp"
#include "waveletgan/rng.hpp"
#include "waveletgan/tensor.hpp"
#include "waveletgan/wavelet_deconv.hpp"

#include <cmath>
#include <functional>
#include <sstream>

namespace wg::gradcheck {

namespace {

constexpr double kAbsFloor = 1e-6;
constexpr double kTol = 1e-4;
constexpr double kH = 1e-5;

double rel_err(double analytic, double fd) {
    const double diff = std::abs(analytic - fd);
    if (diff <= kAbsFloor) return 0.0;
    return diff / std::max({std::abs(analytic), std::abs(fd), 1e-12});
}

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double stddev = 1.0) {
    Tensor t(std::move(shape));
    rng.fill_gaussian(t.data(), t.size(), stddev);
    return t;
}

double weighted_sum(const Tensor& y, const Tensor& weights) {
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += y[i] * weights[i];
    return acc;
}

// Max relative error between the analytic gradient of E = sum(R . f(x))
// with respect to `values` and its central finite difference.
double fd_check(Tensor& values, const Tensor& analytic_grad,
                const std::function<double()>& eval) {
    double worst = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double keep = values[i];
        values[i] = keep + kH;
        const double ep = eval();
        values[i] = keep - kH;
        const double em = eval();
        values[i] = keep;
        worst = std::max(worst, rel_err(analytic_grad[i], (ep - em) / (2.0 * kH)));
    }
    return worst;
}

OpReport check_layer_input(const std::string& name, nn::Layer& layer, Tensor x,
                           Rng& rng, double tol = kTol) {
    Tensor y = layer.forward(x, nn::Mode::sample);
    Tensor weights = random_tensor(y.shape(), rng);
    Tensor analytic = layer.backward(weights);
    const double err = fd_check(
        x, analytic, [&] { return weighted_sum(layer.forward(x, nn::Mode::sample), weights); });
    return {name, err, tol, err < tol};
}

OpReport check_param(const std::string& name, nn::Layer& layer, nn::Parameter& param,
                     const Tensor& x, Rng& rng) {
    Tensor y = layer.forward(x, nn::Mode::sample);
    Tensor weights = random_tensor(y.shape(), rng);
    param.zero_grad();
    layer.backward(weights);
    Tensor analytic = param.grad;
    const double err = fd_check(
        param.value, analytic,
        [&] { return weighted_sum(layer.forward(x, nn::Mode::sample), weights); });
    return {name, err, kTol, err < kTol};
}

} // namespace

std::vector<OpReport> run_all(std::uint64_t seed) {
    Rng rng(seed);
    std::vector<OpReport> reports;

    { // dense: input and both parameters
        Rng init(seed + 1);
        nn::Dense dense("gc/dense", 4, 5, false, init);
        Tensor x = random_tensor({3, 4}, rng);
        reports.push_back(check_layer_input("dense/input", dense, x, rng));
        reports.push_back(check_param("dense/W", dense, *dense.params()[0], x, rng));
        reports.push_back(check_param("dense/b", dense, *dense.params()[1], x, rng));
    }
    { // spectral-norm dense: input gradient (sigma frozen in sample mode)
        Rng init(seed + 2);
        nn::Dense dense("gc/dense_sn", 6, 4, true, init);
        Tensor x = random_tensor({3, 6}, rng);
        reports.push_back(check_layer_input("dense_sn/input", dense, x, rng));
    }
    { // conv stride 1
        Rng init(seed + 3);
        nn::Conv2d conv("gc/conv", 3, 3, 2, 1, false, init);
        Tensor x = random_tensor({2, 4, 4, 3}, rng);
        reports.push_back(check_layer_input("conv3x3_s1/input", conv, x, rng));
        reports.push_back(check_param("conv3x3_s1/K", conv, *conv.params()[0], x, rng));
    }
    { // conv stride 2 (uneven SAME padding)
        Rng init(seed + 4);
        nn::Conv2d conv("gc/conv_s2", 3, 2, 3, 2, false, init);
        Tensor x = random_tensor({2, 5, 5, 2}, rng);
        reports.push_back(check_layer_input("conv3x3_s2/input", conv, x, rng));
        reports.push_back(check_param("conv3x3_s2/K", conv, *conv.params()[0], x, rng));
    }
    { // spectral-norm conv: input gradient
        Rng init(seed + 5);
        nn::Conv2d conv("gc/conv_sn", 3, 2, 2, 1, true, init);
        Tensor x = random_tensor({2, 4, 4, 2}, rng);
        reports.push_back(check_layer_input("conv_sn/input", conv, x, rng));
    }
    { // batchnorm (training statistics)
        nn::BatchNorm bn("gc/bn", 2);
        Tensor x = random_tensor({4, 3, 3, 2}, rng);
        Tensor y = bn.forward(x, nn::Mode::sample);
        Tensor weights = random_tensor(y.shape(), rng);
        Tensor gx = bn.backward(weights);
        double err = fd_check(
            x, gx, [&] { return weighted_sum(bn.forward(x, nn::Mode::sample), weights); });
        reports.push_back({"batchnorm/input", err, kTol, err < kTol});
        reports.push_back(check_param("batchnorm/gamma", bn, *bn.params()[0], x, rng));
        reports.push_back(check_param("batchnorm/beta", bn, *bn.params()[1], x, rng));
    }
    { // relu away from the kink
        nn::Relu relu;
        Tensor x = random_tensor({3, 7}, rng);
        for (std::size_t i = 0; i < x.size(); ++i)
            if (std::abs(x[i]) < 0.1) x[i] = x[i] < 0.0 ? x[i] - 0.2 : x[i] + 0.2;
        reports.push_back(check_layer_input("relu/input", relu, x, rng));
    }
    {
        nn::Sigmoid sig;
        Tensor x = random_tensor({3, 7}, rng);
        reports.push_back(check_layer_input("sigmoid/input", sig, x, rng));
    }
    {
        nn::Upsample2x up;
        Tensor x = random_tensor({2, 3, 3, 2}, rng);
        reports.push_back(check_layer_input("upsample2x/input", up, x, rng));
    }
    {
        nn::AvgPool2x pool;
        Tensor x = random_tensor({2, 4, 4, 2}, rng);
        reports.push_back(check_layer_input("avgpool2x/input", pool, x, rng));
    }
    {
        nn::GlobalSumPool gsp;
        Tensor x = random_tensor({2, 3, 4, 2}, rng);
        reports.push_back(check_layer_input("global_sum_pool/input", gsp, x, rng));
    }
    { // residual blocks end to end
        Rng init(seed + 6);
        nn::ResBlockUp up("gc/up", 2, 2, init);
        Tensor x = random_tensor({2, 3, 3, 2}, rng);
        reports.push_back(check_layer_input("resblock_up/input", up, x, rng));
        Rng init2(seed + 7);
        nn::ResBlockDown down("gc/down", 2, 2, init2);
        Tensor x2 = random_tensor({2, 4, 4, 2}, rng);
        reports.push_back(check_layer_input("resblock_down/input", down, x2, rng));
    }
    { // losses: d(loss)/d(logits) vs FD (hinge probed away from its kinks)
        const std::size_t n = 6;
        Tensor r = random_tensor({n, 1}, rng), f = random_tensor({n, 1}, rng);
        for (std::size_t i = 0; i < n; ++i) {
            if (std::abs(1.0 - r[i]) < 0.1) r[i] += 0.3;
            if (std::abs(1.0 + f[i]) < 0.1) f[i] += 0.3;
        }
        for (auto kind : {gan::LossKind::minimax, gan::LossKind::hinge}) {
            const char* base = kind == gan::LossKind::minimax ? "minimax" : "hinge";
            gan::LossGrads lg = gan::loss_with_grads(kind, r, f);
            auto eval_d = [&] {
                return kind == gan::LossKind::minimax ? gan::minimax_loss(r, f).first
                                                      : gan::hinge_loss(r, f).first;
            };
            auto eval_g = [&] {
                return kind == gan::LossKind::minimax ? gan::minimax_loss(r, f).second
                                                      : gan::hinge_loss(r, f).second;
            };
            double err = fd_check(r, lg.d_loss_wrt_real, eval_d);
            reports.push_back({std::string(base) + "/d_loss_wrt_real", err, kTol, err < kTol});
            err = fd_check(f, lg.d_loss_wrt_fake, eval_d);
            reports.push_back({std::string(base) + "/d_loss_wrt_fake", err, kTol, err < kTol});
            err = fd_check(f, lg.g_loss_wrt_fake, eval_g);
            reports.push_back({std::string(base) + "/g_loss_wrt_fake", err, kTol, err < kTol});
        }
    }
    { // WaveletDeconv: input gradient on a length-16 signal
        WaveletDeconv layer({1.0, 2.0, 4.0}, 9, 1.0);
        Tensor z = random_tensor({1, 4, 4, 1}, rng);
        Tensor y = layer.forward(z);
        Tensor weights = random_tensor(y.shape(), rng);
        Tensor gin = layer.backward(weights);
        double err = fd_check(z, gin, [&] { return weighted_sum(layer.forward(z), weights); });
        reports.push_back({"wavelet_deconv/input", err, kTol, err < kTol});
    }
    { // WaveletDeconv: scale gradients on a length-32 signal
        std::vector<double> scales{1.0, 2.0, 4.0, 8.0, 16.0};
        WaveletDeconv layer(scales, 9, 1.0);
        Tensor z = random_tensor({1, 32, 1, 1}, rng);
        Tensor y = layer.forward(z);
        Tensor weights = random_tensor(y.shape(), rng);
        layer.zero_scale_grad();
        layer.backward(weights);
        std::vector<double> analytic = layer.scale_grad();
        double worst = 0.0;
        for (std::size_t i = 0; i < scales.size(); ++i) {
            auto eval_at = [&](double s) {
                std::vector<double> probe = scales;
                probe[i] = s;
                WaveletDeconv probe_layer(probe, 9, 1.0);
                return weighted_sum(probe_layer.forward(z), weights);
            };
            const double fd = (eval_at(scales[i] + kH) - eval_at(scales[i] - kH)) / (2.0 * kH);
            worst = std::max(worst, rel_err(analytic[i], fd));
        }
        reports.push_back({"wavelet_deconv/scales", worst, kTol, worst < kTol});
    }
    { // end-to-end: d(loss_G)/d(scale) through generator + discriminator
      // on a tiny frozen model; tolerance relaxed to 1e-3 for depth.
        gan::ArchConfig cfg;
        cfg.base_width = 8;
        cfg.z_dim = 12;
        cfg.batch = 4;
        cfg.seed = seed + 8;
        cfg.wavelet_channels = 3;
        gan::GanModel model = gan::build_gan(cfg);
        Tensor z = gan::sample_z(4, cfg.z_dim, rng);

        auto loss_g_of_model = [&]() {
            Tensor fake = gan::generate(model, z, gan::GenMode::direct, nn::Mode::sample);
            Tensor logits = model.discriminator.forward(fake, nn::Mode::sample);
            return gan::hinge_loss(logits, logits).second; // -mean(logits)
        };

        // analytic: full backward through D then G
        Tensor fake = gan::generate(model, z, gan::GenMode::direct, nn::Mode::sample);
        Tensor logits = model.discriminator.forward(fake, nn::Mode::sample);
        Tensor g_grad(logits.shape());
        const double inv_n = 1.0 / static_cast<double>(logits.size());
        for (std::size_t i = 0; i < g_grad.size(); ++i) g_grad[i] = -inv_n;
        model.opt_g->zero_grad();
        model.opt_d->zero_grad();
        Tensor gx = model.discriminator.backward(g_grad);
        model.generator.backward(gx);

        nn::Parameter* scales_param = model.wavelet->params()[0];
        Tensor analytic = scales_param->grad;
        const double err = fd_check(scales_param->value, analytic, loss_g_of_model);
        reports.push_back({"gan/loss_g_wrt_scales", err, 1e-3, err < 1e-3});
    }
    return reports;
}

bool all_pass(const std::vector<OpReport>& reports) {
    for (const auto& r : reports)
        if (!r.pass) return false;
    return true;
}

std::string format_report(const std::vector<OpReport>& reports) {
    std::ostringstream os;
    for (const auto& r : reports) {
        os << (r.pass ? "[PASS] " : "[FAIL] ") << r.op << ": max rel err = ";
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3e", r.max_rel_err);
        os << buf << " (tolerance " << r.tolerance << ")\n";
    }
    return os.str();
}

} // namespace wg::gradcheck
