#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "waveletgan/errors.hpp"
#include "waveletgan/fid.hpp"
#include "waveletgan/rng.hpp"

#include <cmath>

using namespace wg;
using namespace wg::fid;

namespace {

Tensor random_images(std::size_t n, std::size_t hw, std::size_t c, Rng& rng) {
    Tensor t({n, hw, hw, c});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform();
    return t;
}

// Closed form for commuting (diagonal) covariances:
// ||mu_a-mu_b||^2 + sum_i (sqrt(ca_i) - sqrt(cb_i))^2
double diag_frechet(const std::vector<double>& mu_a, const std::vector<double>& ca,
                    const std::vector<double>& mu_b, const std::vector<double>& cb) {
    double acc = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
        const double dm = mu_a[i] - mu_b[i];
        const double ds = std::sqrt(ca[i]) - std::sqrt(cb[i]);
        acc += dm * dm + ds * ds;
    }
    return acc;
}

GaussianStats diag_stats(const std::vector<double>& mu, const std::vector<double>& var) {
    GaussianStats s;
    s.dim = mu.size();
    s.mu = mu;
    s.cov.assign(s.dim * s.dim, 0.0);
    for (std::size_t i = 0; i < s.dim; ++i) s.cov[i * s.dim + i] = var[i];
    return s;
}

} // namespace

TEST_CASE("extract_features determinism and shape") {
    Rng rng(1);
    Tensor imgs = random_images(4, 28, 1, rng);
    FeatureExtractor fx;
    Tensor f1 = fx.extract(imgs);
    REQUIRE(f1.shape() == std::vector<std::size_t>{4, 64});
    Tensor f2 = fx.extract(imgs);
    for (std::size_t i = 0; i < f1.size(); ++i) CHECK(f1[i] == f2[i]);

    // identical image repeated -> identical feature rows
    Tensor rep({3, 28, 28, 1});
    for (std::size_t n = 0; n < 3; ++n)
        for (std::size_t i = 0; i < 784; ++i) rep[n * 784 + i] = imgs[i];
    Tensor fr = fx.extract(rep);
    for (std::size_t j = 0; j < 64; ++j) {
        CHECK(fr.at2(0, j) == fr.at2(1, j));
        CHECK(fr.at2(1, j) == fr.at2(2, j));
    }

    CHECK_THROWS_AS(fx.extract(random_images(1, 28, 1, rng)), ParameterError);

    FeatureExtractor moments(ExtractorKind::raw_moments);
    Tensor fm = moments.extract(imgs);
    REQUIRE(fm.shape() == std::vector<std::size_t>{4, 64});
}

TEST_CASE("fit_gaussian hand case") {
    Tensor feats({2, 2}, {0.0, 0.0, 2.0, 2.0});
    GaussianStats s = fit_gaussian(feats);
    CHECK(s.mu[0] == 1.0);
    CHECK(s.mu[1] == 1.0);
    // unbiased covariance with divisor N-1 = 1
    CHECK(s.cov[0] == 2.0);
    CHECK(s.cov[1] == 2.0);
    CHECK(s.cov[2] == 2.0);
    CHECK(s.cov[3] == 2.0);

    Tensor constant = Tensor::full({5, 3}, 0.7);
    GaussianStats sc = fit_gaussian(constant);
    for (double v : sc.cov) CHECK(v == 0.0);

    CHECK_THROWS_AS(fit_gaussian(Tensor({1, 4})), ParameterError);

    // symmetry to machine precision on random features
    Rng rng(2);
    Tensor rf({16, 6});
    rng.fill_gaussian(rf.data(), rf.size());
    GaussianStats sr = fit_gaussian(rf);
    for (std::size_t r = 0; r < 6; ++r)
        for (std::size_t c = 0; c < 6; ++c) CHECK(sr.cov[r * 6 + c] == sr.cov[c * 6 + r]);
}

TEST_CASE("sqrtm_spd") {
    SUBCASE("identity and diagonal") {
        std::vector<double> eye{1, 0, 0, 1};
        auto s = sqrtm_spd(eye, 2);
        CHECK(s[0] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(s[3] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(s[1]) < 1e-12);

        std::vector<double> d{4, 0, 0, 9};
        auto sd = sqrtm_spd(d, 2);
        CHECK(sd[0] == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(sd[3] == doctest::Approx(3.0).epsilon(1e-12));
    }
    SUBCASE("reconstruction ||S^2 - A||_F / ||A||_F < 1e-8 up to d = 64") {
        Rng rng(3);
        for (std::size_t d : {3ul, 16ul, 64ul}) {
            // A = B B^T + eps I
            std::vector<double> b(d * d);
            for (auto& v : b) v = rng.gaussian();
            std::vector<double> a(d * d, 0.0);
            for (std::size_t r = 0; r < d; ++r)
                for (std::size_t c = 0; c < d; ++c) {
                    double acc = 0.0;
                    for (std::size_t k = 0; k < d; ++k) acc += b[r * d + k] * b[c * d + k];
                    a[r * d + c] = acc;
                }
            for (std::size_t i = 0; i < d; ++i) a[i * d + i] += 1e-6;
            auto s = sqrtm_spd(a, d);
            double err = 0.0, norm = 0.0;
            for (std::size_t r = 0; r < d; ++r)
                for (std::size_t c = 0; c < d; ++c) {
                    double acc = 0.0;
                    for (std::size_t k = 0; k < d; ++k) acc += s[r * d + k] * s[k * d + c];
                    const double diff = acc - a[r * d + c];
                    err += diff * diff;
                    norm += a[r * d + c] * a[r * d + c];
                }
            CHECK(std::sqrt(err) / std::sqrt(norm) < 1e-8);
        }
    }
    SUBCASE("asymmetric and indefinite inputs are rejected") {
        std::vector<double> asym{1, 2, 0, 1};
        CHECK_THROWS_AS(sqrtm_spd(asym, 2), NumericError);
        std::vector<double> indef{1, 0, 0, -1};
        CHECK_THROWS_AS(sqrtm_spd(indef, 2), NumericError);
    }
}

TEST_CASE("frechet_distance") {
    SUBCASE("self-distance is zero") {
        Rng rng(4);
        Tensor f({32, 5});
        rng.fill_gaussian(f.data(), f.size());
        GaussianStats s = fit_gaussian(f);
        CHECK(frechet_distance(s, s) < 1e-6);
    }
    SUBCASE("diagonal closed form: the spec example equals 2") {
        GaussianStats a = diag_stats({0, 0}, {1, 1});
        GaussianStats b = diag_stats({1, 0}, {4, 1});
        CHECK(frechet_distance(a, b) == doctest::Approx(2.0).epsilon(1e-10));
    }
    SUBCASE("diagonal oracle for d <= 3 within 1e-10") {
        Rng rng(5);
        for (int t = 0; t < 25; ++t) {
            const std::size_t d = 1 + rng.uniform_index(3);
            std::vector<double> mu_a(d), mu_b(d), ca(d), cb(d);
            for (std::size_t i = 0; i < d; ++i) {
                mu_a[i] = rng.gaussian();
                mu_b[i] = rng.gaussian();
                ca[i] = 0.1 + rng.uniform() * 3.0;
                cb[i] = 0.1 + rng.uniform() * 3.0;
            }
            const double got = frechet_distance(diag_stats(mu_a, ca), diag_stats(mu_b, cb));
            const double want = diag_frechet(mu_a, ca, mu_b, cb);
            CHECK(std::abs(got - want) < 1e-10);
        }
    }
    SUBCASE("symmetry within 1e-8 and nonnegativity") {
        Rng rng(6);
        for (int t = 0; t < 10; ++t) {
            Tensor fa({20, 4}), fb({20, 4});
            rng.fill_gaussian(fa.data(), fa.size());
            rng.fill_gaussian(fb.data(), fb.size(), 1.7);
            GaussianStats a = fit_gaussian(fa), b = fit_gaussian(fb);
            const double ab = frechet_distance(a, b);
            const double ba = frechet_distance(b, a);
            CHECK(ab >= 0.0);
            CHECK(std::abs(ab - ba) < 1e-8);
        }
    }
    SUBCASE("inflating one covariance strictly increases the distance") {
        GaussianStats a = diag_stats({0, 0, 0}, {1, 1, 1});
        double prev = frechet_distance(a, diag_stats({0, 0, 0}, {1, 1, 1}));
        for (double inflate : {2.0, 4.0, 8.0}) {
            const double cur =
                frechet_distance(a, diag_stats({0, 0, 0}, {inflate, inflate, inflate}));
            CHECK(cur > prev);
            prev = cur;
        }
    }
    SUBCASE("dimension mismatch") {
        CHECK_THROWS_AS(frechet_distance(diag_stats({0}, {1}), diag_stats({0, 0}, {1, 1})),
                        ShapeError);
    }
}

TEST_CASE("evaluate_fid protocol") {
    Rng rng(7);
    Tensor real = random_images(24, 28, 1, rng);
    FeatureExtractor fx;

    SUBCASE("sampling the real set itself gives 0 within 1e-6") {
        SampleFn self = [&real](std::size_t n, std::uint64_t) {
            REQUIRE(n == real.shape()[0]);
            return real;
        };
        FidReport r = evaluate_fid(self, fx, real, 3, 123);
        REQUIRE(r.per_repeat.size() == 3);
        for (double v : r.per_repeat) CHECK(v < 1e-6);
        CHECK(r.mean < 1e-6);
    }
    SUBCASE("3 repeats, per-repeat seeds seed^r, deterministic") {
        std::vector<std::uint64_t> seeds_seen;
        SampleFn noisy = [&](std::size_t n, std::uint64_t seed) {
            seeds_seen.push_back(seed);
            Rng srng(seed);
            return random_images(n, 28, 1, srng);
        };
        FidReport a = evaluate_fid(noisy, fx, real, 3, 40);
        REQUIRE(a.per_repeat.size() == 3);
        CHECK(seeds_seen == std::vector<std::uint64_t>{40 ^ 0ull, 40 ^ 1ull, 40 ^ 2ull});
        FidReport b = evaluate_fid(noisy, fx, real, 3, 40);
        for (std::size_t i = 0; i < 3; ++i) CHECK(a.per_repeat[i] == b.per_repeat[i]);
        CHECK(a.mean == b.mean);
    }
}
