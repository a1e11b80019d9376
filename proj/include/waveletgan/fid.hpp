#pragma once

#include "waveletgan/tensor.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace wg::fid {

// The metric is computed with a seed-frozen feature extractor instead of
// the Inception network, so absolute values are not comparable to published
// FIDs; every report labels it with this name.
inline constexpr const char* kMetricLabel = "proxy-FID";
inline constexpr std::uint64_t kDefaultExtractorSeed = 0xF1D;

struct GaussianStats {
    std::vector<double> mu;   // [d]
    std::vector<double> cov;  // [d*d] row-major, symmetric
    std::size_t dim = 0;
};

enum class ExtractorKind { frozen_random_conv, raw_moments };

// Feature map for the Frechet machinery. frozen_random_conv runs three
// seed-fixed conv+relu+avgpool stages and a global average; raw_moments
// concatenates per-channel means, variances and 4x4 block means. Weights
// are generated deterministically from the seed and never trained.
class FeatureExtractor {
public:
    explicit FeatureExtractor(ExtractorKind kind = ExtractorKind::frozen_random_conv,
                              std::uint64_t seed = kDefaultExtractorSeed,
                              std::size_t feature_dim = 64);

    // images [N,H,W,C] with N >= 2 -> features [N, feature_dim].
    Tensor extract(const Tensor& images) const;

    ExtractorKind kind() const { return kind_; }
    std::uint64_t seed() const { return seed_; }
    std::size_t feature_dim() const { return feature_dim_; }

private:
    ExtractorKind kind_;
    std::uint64_t seed_;
    std::size_t feature_dim_;
};

Tensor extract_features(const FeatureExtractor& extractor, const Tensor& images);

// Column means and unbiased (N-1) sample covariance, symmetrized.
GaussianStats fit_gaussian(const Tensor& features);

// Symmetric PSD square root via eigendecomposition; eigenvalues within
// -1e-10 clamp to zero, anything more negative is an error.
std::vector<double> sqrtm_spd(const std::vector<double>& a, std::size_t d);

// ||mu_a - mu_b||^2 + Tr(C_a + C_b - 2 (C_a^{1/2} C_b C_a^{1/2})^{1/2}).
double frechet_distance(const GaussianStats& a, const GaussianStats& b);

// Produces n fake images [n,H,W,C] for the given sampling seed.
using SampleFn = std::function<Tensor(std::size_t n, std::uint64_t seed)>;

struct FidReport {
    std::vector<double> per_repeat;
    double mean = 0.0;
    std::size_t n_samples = 0;
};

// The repeat-and-average protocol: for each repeat r (0-based) sample
// |real| fakes with seed xor r and compute the distance between the fitted
// Gaussians; report per-repeat values and their mean.
FidReport evaluate_fid(const SampleFn& sampler, const FeatureExtractor& extractor,
                       const Tensor& real_images, std::size_t n_repeats, std::uint64_t seed);

} // namespace wg::fid
