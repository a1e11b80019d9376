#include "waveletgan/fid.hpp"

#include "waveletgan/errors.hpp"
#include "waveletgan/linalg.hpp"
#include "waveletgan/nn.hpp"
#include "waveletgan/rng.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace wg::fid {

namespace {

// Mean-pool 2x2 windows, dropping a trailing odd row/column.
Tensor avgpool_floor(const Tensor& x) {
    const std::size_t B = x.shape()[0], H = x.shape()[1], W = x.shape()[2], C = x.shape()[3];
    const std::size_t ho = std::max<std::size_t>(H / 2, 1), wo = std::max<std::size_t>(W / 2, 1);
    if (H < 2 || W < 2) return x;
    Tensor y({B, ho, wo, C});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t h = 0; h < ho; ++h)
            for (std::size_t w = 0; w < wo; ++w)
                for (std::size_t c = 0; c < C; ++c)
                    y.at4(b, h, w, c) = 0.25 * (x.at4(b, 2 * h, 2 * w, c) +
                                                x.at4(b, 2 * h, 2 * w + 1, c) +
                                                x.at4(b, 2 * h + 1, 2 * w, c) +
                                                x.at4(b, 2 * h + 1, 2 * w + 1, c));
    return y;
}

void relu_inplace(Tensor& t) {
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] < 0.0) t[i] = 0.0;
}

Tensor frozen_conv_features(const Tensor& images, std::uint64_t seed, std::size_t d) {
    const std::size_t C = images.shape()[3];
    // Weights are regenerated from the seed on every call; the extractor
    // stays frozen by construction.
    Rng rng(seed);
    nn::Conv2d conv1("fx/conv1", 3, C, 16, 1, false, rng);
    nn::Conv2d conv2("fx/conv2", 3, 16, 32, 1, false, rng);
    nn::Conv2d conv3("fx/conv3", 3, 32, d, 1, false, rng);

    Tensor h = conv1.forward(images, nn::Mode::sample);
    relu_inplace(h);
    h = avgpool_floor(h);
    h = conv2.forward(h, nn::Mode::sample);
    relu_inplace(h);
    h = avgpool_floor(h);
    h = conv3.forward(h, nn::Mode::sample);
    relu_inplace(h);
    h = avgpool_floor(h);

    const std::size_t N = h.shape()[0], H = h.shape()[1], W = h.shape()[2];
    Tensor out({N, d});
    const double inv = 1.0 / static_cast<double>(H * W);
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t y = 0; y < H; ++y)
            for (std::size_t x = 0; x < W; ++x)
                for (std::size_t c = 0; c < d; ++c) out.at2(n, c) += h.at4(n, y, x, c) * inv;
    return out;
}

Tensor raw_moment_features(const Tensor& images, std::size_t d) {
    const std::size_t N = images.shape()[0], H = images.shape()[1], W = images.shape()[2],
                      C = images.shape()[3];
    constexpr std::size_t kGrid = 4;
    Tensor out({N, d});
    const std::size_t natural = C * (2 + kGrid * kGrid);
    std::vector<double> feats(natural);
    for (std::size_t n = 0; n < N; ++n) {
        std::size_t k = 0;
        for (std::size_t c = 0; c < C; ++c) {
            double mean = 0.0, var = 0.0;
            for (std::size_t y = 0; y < H; ++y)
                for (std::size_t x = 0; x < W; ++x) mean += images.at4(n, y, x, c);
            mean /= static_cast<double>(H * W);
            for (std::size_t y = 0; y < H; ++y)
                for (std::size_t x = 0; x < W; ++x) {
                    const double dlt = images.at4(n, y, x, c) - mean;
                    var += dlt * dlt;
                }
            var /= static_cast<double>(H * W);
            feats[k++] = mean;
            feats[k++] = var;
            for (std::size_t gy = 0; gy < kGrid; ++gy)
                for (std::size_t gx = 0; gx < kGrid; ++gx) {
                    const std::size_t y0 = gy * H / kGrid, y1 = (gy + 1) * H / kGrid;
                    const std::size_t x0 = gx * W / kGrid, x1 = (gx + 1) * W / kGrid;
                    double block = 0.0;
                    for (std::size_t y = y0; y < y1; ++y)
                        for (std::size_t x = x0; x < x1; ++x) block += images.at4(n, y, x, c);
                    feats[k++] = block / static_cast<double>((y1 - y0) * (x1 - x0));
                }
        }
        for (std::size_t j = 0; j < d; ++j) out.at2(n, j) = j < natural ? feats[j] : 0.0;
    }
    return out;
}

} // namespace

FeatureExtractor::FeatureExtractor(ExtractorKind kind, std::uint64_t seed, std::size_t feature_dim)
    : kind_(kind), seed_(seed), feature_dim_(feature_dim) {
    if (feature_dim_ < 1) throw ParameterError("feature_dim must be positive");
}

Tensor FeatureExtractor::extract(const Tensor& images) const {
    require_rank(images, 4, "extract_features");
    if (images.shape()[0] < 2)
        throw ParameterError("extract_features: need at least 2 images (covariance undefined)");
    require_finite(images, "extract_features input");
    return kind_ == ExtractorKind::frozen_random_conv
               ? frozen_conv_features(images, seed_, feature_dim_)
               : raw_moment_features(images, feature_dim_);
}

Tensor extract_features(const FeatureExtractor& extractor, const Tensor& images) {
    return extractor.extract(images);
}

GaussianStats fit_gaussian(const Tensor& features) {
    require_rank(features, 2, "fit_gaussian");
    const std::size_t N = features.shape()[0], d = features.shape()[1];
    if (N < 2) throw ParameterError("fit_gaussian: need at least 2 rows");
    GaussianStats stats;
    stats.dim = d;
    stats.mu.assign(d, 0.0);
    stats.cov.assign(d * d, 0.0);
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t j = 0; j < d; ++j) stats.mu[j] += features.at2(n, j);
    for (double& m : stats.mu) m /= static_cast<double>(N);
    std::vector<double> centered(d);
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t j = 0; j < d; ++j) centered[j] = features.at2(n, j) - stats.mu[j];
        for (std::size_t r = 0; r < d; ++r)
            for (std::size_t c = 0; c < d; ++c) stats.cov[r * d + c] += centered[r] * centered[c];
    }
    const double inv = 1.0 / static_cast<double>(N - 1); // unbiased
    for (double& v : stats.cov) v *= inv;
    // symmetrize against accumulation asymmetry
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = r + 1; c < d; ++c) {
            const double s = 0.5 * (stats.cov[r * d + c] + stats.cov[c * d + r]);
            stats.cov[r * d + c] = s;
            stats.cov[c * d + r] = s;
        }
    return stats;
}

std::vector<double> sqrtm_spd(const std::vector<double>& a, std::size_t d) {
    if (a.size() != d * d) throw ShapeError("sqrtm_spd: matrix size mismatch");
    double max_abs = 0.0, max_asym = 0.0;
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c < d; ++c) {
            max_abs = std::max(max_abs, std::abs(a[r * d + c]));
            max_asym = std::max(max_asym, std::abs(a[r * d + c] - a[c * d + r]));
        }
    if (max_asym > 1e-8 * std::max(1.0, max_abs))
        throw NumericError("sqrtm_spd: matrix is not symmetric (max asymmetry " +
                           std::to_string(max_asym) + ")");

    std::vector<double> w, q;
    linalg::sym_eig(a.data(), d, w, q);
    const double floor = -1e-10 * std::max(1.0, max_abs);
    for (double& ev : w) {
        if (ev < floor)
            throw NumericError("sqrtm_spd: matrix indefinite beyond tolerance (eigenvalue " +
                               std::to_string(ev) + ")");
        if (ev < 0.0) ev = 0.0;
    }
    // Q sqrt(L) Q^T
    std::vector<double> qs(d * d);
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c < d; ++c) qs[r * d + c] = q[r * d + c] * std::sqrt(w[c]);
    std::vector<double> out(d * d);
    linalg::matmul_a_bt(out.data(), qs.data(), q.data(), d, d, d);
    return out;
}

double frechet_distance(const GaussianStats& a, const GaussianStats& b) {
    if (a.dim != b.dim)
        throw ShapeError("frechet_distance: dimension mismatch " + std::to_string(a.dim) + " vs " +
                         std::to_string(b.dim));
    const std::size_t d = a.dim;
    double mean_term = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        const double dlt = a.mu[j] - b.mu[j];
        mean_term += dlt * dlt;
    }
    // symmetric product form: (C_a^{1/2} C_b C_a^{1/2})^{1/2}
    std::vector<double> sa = sqrtm_spd(a.cov, d);
    std::vector<double> tmp(d * d), m(d * d);
    linalg::matmul(tmp.data(), sa.data(), b.cov.data(), d, d, d);
    linalg::matmul(m.data(), tmp.data(), sa.data(), d, d, d);
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = r + 1; c < d; ++c) {
            const double s = 0.5 * (m[r * d + c] + m[c * d + r]);
            m[r * d + c] = s;
            m[c * d + r] = s;
        }
    std::vector<double> cross = sqrtm_spd(m, d);
    double trace_term = 0.0;
    for (std::size_t j = 0; j < d; ++j)
        trace_term += a.cov[j * d + j] + b.cov[j * d + j] - 2.0 * cross[j * d + j];
    double dist = mean_term + trace_term;
    if (dist < 0.0) {
        if (dist < -1e-6)
            throw NumericError("frechet_distance: strongly negative result " +
                               std::to_string(dist));
        dist = 0.0;
    }
    return dist;
}

FidReport evaluate_fid(const SampleFn& sampler, const FeatureExtractor& extractor,
                       const Tensor& real_images, std::size_t n_repeats, std::uint64_t seed) {
    require_rank(real_images, 4, "evaluate_fid real images");
    const std::size_t n = real_images.shape()[0];
    if (n < 2) throw ParameterError("evaluate_fid: real set too small");
    if (n_repeats < 1) throw ParameterError("evaluate_fid: n_repeats must be >= 1");

    const GaussianStats real_stats = fit_gaussian(extractor.extract(real_images));
    FidReport report;
    report.n_samples = n;
    report.per_repeat.reserve(n_repeats);
    for (std::size_t r = 0; r < n_repeats; ++r) {
        Tensor fakes = sampler(n, seed ^ static_cast<std::uint64_t>(r));
        if (fakes.rank() != 4 || fakes.shape()[0] != n)
            throw ShapeError("evaluate_fid: sampler returned wrong shape " + fakes.shape_str());
        const GaussianStats fake_stats = fit_gaussian(extractor.extract(fakes));
        report.per_repeat.push_back(frechet_distance(real_stats, fake_stats));
    }
    for (double v : report.per_repeat) report.mean += v;
    report.mean /= static_cast<double>(report.per_repeat.size());
    return report;
}

} // namespace wg::fid
