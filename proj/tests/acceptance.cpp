// Acceptance suite: one pass/fail line per criterion.
//
// Heavy training criteria (6-8) run real training loops; the full suite is
// sized for a multi-core desktop and prints progress as it goes. A single
// criterion can be selected with --only N.

#include "support/oracles.hpp"
#include "waveletgan/checkpoint.hpp"
#include "waveletgan/dataio.hpp"
#include "waveletgan/fid.hpp"
#include "waveletgan/gan.hpp"
#include "waveletgan/gradcheck.hpp"
#include "waveletgan/linalg.hpp"
#include "waveletgan/rng.hpp"
#include "waveletgan/wavelet.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace wg;

namespace {

struct Check {
    bool ok = true;
    std::ostringstream log;
    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            log << "    FAILED: " << what << "\n";
        }
    }
    void note(const std::string& what) { log << "    " << what << "\n"; }
};

std::filesystem::path scratch_dir() {
    auto p = std::filesystem::temp_directory_path() / "waveletgan_acceptance";
    std::filesystem::create_directories(p);
    return p;
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------- criteria

// Criterion 1: the full-scale Table-2 numbers are out of reach by design;
// the tool must label its metric as a proxy everywhere.
bool criterion_1(Check& c) {
    c.note("Table-2 FIDs (7.945 FMNIST cond., 4.874 KMNIST uncond.) come from 100k-step GPU "
           "runs scored with the Inception network; this artifact does NOT reproduce them.");
    c.note("Acceptance rests on the property suites below; sample quality is scored with a "
           "seed-frozen feature extractor.");
    c.require(std::string(fid::kMetricLabel) == "proxy-FID",
              "metric label must be proxy-FID, not FID");
    c.require(fid::kDefaultExtractorSeed == 0xF1D, "documented extractor seed 0xF1D");
    return c.ok;
}

// Criterion 2: gradcheck, every op < 1e-4 (abs floor 1e-6), under 60 s.
bool criterion_2(Check& c) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto reports = gradcheck::run_all(1234);
    const double secs = elapsed_s(t0);
    for (const auto& r : reports) {
        c.require(r.pass, r.op + " max rel err " + std::to_string(r.max_rel_err));
    }
    c.note("ops checked: " + std::to_string(reports.size()) + ", runtime " +
           std::to_string(secs) + " s");
    c.require(secs < 60.0, "gradcheck runtime under 60 s");
    return c.ok;
}

// Criterion 3: kernel symmetry, truncated zero-mean, scale-derivative FD.
bool criterion_3(Check& c) {
    Rng rng(3);
    for (int t = 0; t < 40; ++t) {
        const double s = 0.3 + 10.0 * rng.uniform();
        const std::size_t K = 3 + 2 * rng.uniform_index(40);
        auto kernel = wavelet::sample_kernel(s, K, 1.0);
        for (std::size_t j = 0; j < K; ++j)
            c.require(kernel[j] == kernel[K - 1 - j],
                      "even symmetry (exact) at s=" + std::to_string(s));
    }
    for (double s : {1.0, 2.0, 3.0, 4.0, 8.0, 10.0, 16.0}) {
        const std::size_t K = 2 * static_cast<std::size_t>(std::ceil(16.5 * s)) + 1;
        auto kernel = wavelet::sample_kernel(s, K, 1.0);
        double sum = 0.0;
        for (double v : kernel) sum += v;
        c.require(std::abs(sum) < 1e-3, "zero-mean |sum| < 1e-3 at s=" + std::to_string(s) +
                                            " K=" + std::to_string(K) +
                                            " (got " + std::to_string(std::abs(sum)) + ")");
    }
    const double h = 1e-6;
    for (double s : {0.5, 1.0, 3.0, 10.0}) {
        const std::size_t K = 2 * static_cast<std::size_t>(std::ceil(16.0 * s)) + 1;
        auto analytic = wavelet::sample_kernel_dscale(s, K, 1.0);
        auto plus = wavelet::sample_kernel(s + h, K, 1.0);
        auto minus = wavelet::sample_kernel(s - h, K, 1.0);
        double worst = 0.0;
        for (std::size_t j = 0; j < K; ++j) {
            const double fd = (plus[j] - minus[j]) / (2 * h);
            worst = std::max(worst, std::abs(analytic[j] - fd) / (std::abs(analytic[j]) + 1e-12));
        }
        c.require(worst < 1e-5,
                  "scale-derivative FD rel err < 1e-5 at s=" + std::to_string(s) + " (got " +
                      std::to_string(worst) + ")");
    }
    return c.ok;
}

// Criterion 4: shape preservation and the exact layer-insertion position.
bool criterion_4(Check& c) {
    Rng rng(4);
    WaveletDeconv layer({1, 2, 4, 8, 16}, 9, 1.0);
    for (int t = 0; t < 30; ++t) {
        const std::size_t b = 1 + rng.uniform_index(8);
        const std::size_t h = 1 + rng.uniform_index(32);
        const std::size_t w = 1 + rng.uniform_index(32);
        Tensor z({b, h, w, 1});
        rng.fill_gaussian(z.data(), z.size());
        c.require(layer.forward(z).shape() == z.shape(), "shape preserved over random shapes");
    }

    gan::ArchConfig with;
    with.base_width = 8;
    with.z_dim = 16;
    with.batch = 4;
    with.seed = 4;
    gan::ArchConfig without = with;
    without.wavelet_enabled = false;
    gan::GanModel a = gan::build_gan(with);
    gan::GanModel b = gan::build_gan(without);
    auto da = a.generator.describe();
    auto db = b.generator.describe();
    c.require(da.size() == db.size() + 1, "exactly one extra layer when enabled");
    const std::size_t pos = a.sigmoid_index - 1;
    bool prefix_equal = true;
    for (std::size_t i = 0; i < pos && i < db.size(); ++i)
        if (da[i] != db[i]) prefix_equal = false;
    c.require(prefix_equal, "layer-for-layer identical prefix");
    c.require(da[pos].rfind("wavelet_deconv", 0) == 0, "inserted layer is the WaveletDeconv");
    c.require(da[pos - 1].rfind("conv3x3", 0) == 0, "sits after the final 3x3 conv");
    c.require(da[pos + 1] == "sigmoid" && db[pos] == "sigmoid", "sits before the sigmoid");
    for (std::size_t i = pos + 1; i < db.size(); ++i)
        c.require(da[i + 1] == db[i], "identical suffix after the insertion");
    c.note("generator with layer: " + std::to_string(da.size()) + " layers; baseline: " +
           std::to_string(db.size()));
    return c.ok;
}

// Criterion 5: Frechet machinery and the spectral-norm-vs-SVD oracle.
bool criterion_5(Check& c) {
    Rng rng(5);
    { // FID(a,a) = 0 and symmetry
        Tensor f({40, 6});
        rng.fill_gaussian(f.data(), f.size());
        auto s = fid::fit_gaussian(f);
        c.require(fid::frechet_distance(s, s) < 1e-6, "FID(a,a) < 1e-6");
        Tensor g({40, 6});
        rng.fill_gaussian(g.data(), g.size(), 1.3);
        auto s2 = fid::fit_gaussian(g);
        c.require(std::abs(fid::frechet_distance(s, s2) - fid::frechet_distance(s2, s)) < 1e-8,
                  "symmetry within 1e-8");
    }
    { // diagonal closed form within 1e-10
        for (int t = 0; t < 30; ++t) {
            const std::size_t d = 1 + rng.uniform_index(3);
            fid::GaussianStats a, b;
            a.dim = b.dim = d;
            a.mu.resize(d);
            b.mu.resize(d);
            a.cov.assign(d * d, 0.0);
            b.cov.assign(d * d, 0.0);
            double want = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                a.mu[i] = rng.gaussian();
                b.mu[i] = rng.gaussian();
                const double ca = 0.2 + 2.0 * rng.uniform(), cb = 0.2 + 2.0 * rng.uniform();
                a.cov[i * d + i] = ca;
                b.cov[i * d + i] = cb;
                want += (a.mu[i] - b.mu[i]) * (a.mu[i] - b.mu[i]) +
                        (std::sqrt(ca) - std::sqrt(cb)) * (std::sqrt(ca) - std::sqrt(cb));
            }
            c.require(std::abs(fid::frechet_distance(a, b) - want) < 1e-10,
                      "diagonal closed form within 1e-10");
        }
    }
    { // sqrtm reconstruction up to d = 64
        for (std::size_t d : {8ul, 32ul, 64ul}) {
            std::vector<double> bmat(d * d);
            for (auto& v : bmat) v = rng.gaussian();
            std::vector<double> a(d * d, 0.0);
            for (std::size_t r = 0; r < d; ++r)
                for (std::size_t cc = 0; cc < d; ++cc) {
                    double acc = 0.0;
                    for (std::size_t k = 0; k < d; ++k) acc += bmat[r * d + k] * bmat[cc * d + k];
                    a[r * d + cc] = acc;
                }
            for (std::size_t i = 0; i < d; ++i) a[i * d + i] += 1e-9;
            auto s = fid::sqrtm_spd(a, d);
            double err = 0.0, norm = 0.0;
            for (std::size_t r = 0; r < d; ++r)
                for (std::size_t cc = 0; cc < d; ++cc) {
                    double acc = 0.0;
                    for (std::size_t k = 0; k < d; ++k) acc += s[r * d + k] * s[k * d + cc];
                    err += (acc - a[r * d + cc]) * (acc - a[r * d + cc]);
                    norm += a[r * d + cc] * a[r * d + cc];
                }
            c.require(std::sqrt(err / norm) < 1e-8,
                      "sqrtm reconstruction < 1e-8 at d=" + std::to_string(d));
        }
    }
    { // spectral-norm estimate within 1% of the Jacobi SVD oracle
        Tensor w({8, 8});
        rng.fill_gaussian(w.data(), w.size());
        nn::SpectralNormState st;
        st.u.assign(8, 0.0);
        for (auto& u : st.u) u = rng.gaussian();
        double nrm = 0.0;
        for (double u : st.u) nrm += u * u;
        for (auto& u : st.u) u /= std::sqrt(nrm);
        st.n_power_iters = 50;
        const double sigma = nn::spectral_norm_sigma(w.data(), 8, 8, st, true);
        const double want = oracles::largest_singular_value(w.vec(), 8, 8);
        c.require(std::abs(sigma - want) / want < 0.01,
                  "power iteration within 1% of the SVD oracle after 50 iterations");
        c.note("sigma=" + std::to_string(sigma) + " svd=" + std::to_string(want));
    }
    return c.ok;
}

// Criterion 6: protocol counters over an instrumented 10-step run.
bool criterion_6(Check& c) {
    gan::ArchConfig cfg; // defaults: batch 64, z 128, n_disc 5, lr 2e-4
    cfg.base_width = 8;  // width does not affect the protocol counters
    cfg.seed = 6;
    c.require(cfg.batch == 64, "batch defaults to 64");
    c.require(cfg.z_dim == 128, "z dimension defaults to 128");
    c.require(cfg.n_disc == 5, "n_disc defaults to 5");
    c.require(cfg.lr == 0.0002, "Adam learning rate 0.0002");

    io::Dataset data = io::synthetic_shapes(512, 28, 1, 6);
    gan::GanModel model = gan::build_gan(cfg);
    gan::TrainOptions options;
    options.steps = 10;
    auto rows = gan::train(model, data, options);
    c.require(rows.size() == 10, "10 metric rows");
    c.require(model.d_update_count == 50, "exactly 5 discriminator sub-updates per step");
    c.require(model.g_update_count == 10, "exactly 1 generator update per step");
    c.require(model.opt_d->step_count() == 50, "optimizer-side D counter agrees");
    c.require(model.opt_g->step_count() == 10, "optimizer-side G counter agrees");
    c.require(model.opt_g->learning_rate() == 0.0002, "G Adam lr 0.0002");
    c.require(model.opt_d->learning_rate() == 0.0002, "D Adam lr 0.0002");
    c.note("d_updates=" + std::to_string(model.d_update_count) +
           " g_updates=" + std::to_string(model.g_update_count));
    return c.ok;
}

// Criterion 7: the desk-scale smoke experiment.
bool criterion_7(Check& c) {
    const auto dir = scratch_dir();
    io::Dataset train_set = io::synthetic_shapes(3000, 28, 1, 7);
    io::Dataset test_set = io::synthetic_shapes(500, 28, 1, 7 ^ 0x7E57ull);
    const fid::FeatureExtractor extractor;

    gan::ArchConfig cfg; // batch 64, z 128, n_disc 5, lr 2e-4, width 32, hinge
    cfg.seed = 1;

    auto fid_of = [&](gan::GanModel& m) {
        fid::SampleFn sampler = [&m](std::size_t n, std::uint64_t seed) {
            Rng rng(seed);
            return gan::sample_images(m, n, rng);
        };
        return fid::evaluate_fid(sampler, extractor, test_set.images, 3, 99);
    };

    // --- WaveletGAN run
    gan::GanModel model = gan::build_gan(cfg);
    fid::FidReport fid_step0 = fid_of(model);
    c.note("step-0 proxy-FID: " + std::to_string(fid_step0.mean));

    gan::TrainOptions options;
    options.steps = 2000;
    bool all_finite = true;
    options.on_step = [&](gan::GanModel&, std::int64_t step, gan::StepMetrics& m) {
        if (!std::isfinite(m.d_loss) || !std::isfinite(m.g_loss)) all_finite = false;
        if (step % 200 == 0)
            std::cout << "      [c7 waveletgan] step " << step << " d=" << m.d_loss
                      << " g=" << m.g_loss << " (" << m.wall_ms << " ms)" << std::endl;
    };
    const auto t0 = std::chrono::steady_clock::now();
    auto rows = gan::train(model, train_set, options);
    const double train_secs = elapsed_s(t0);
    c.require(rows.size() == 2000, "2000 steps completed");
    c.require(all_finite, "all losses finite");
    c.note("wall time " + std::to_string(train_secs) + " s on " +
           std::to_string(std::thread::hardware_concurrency()) + " hardware threads");
    c.require(train_secs < 1800.0, "training under 30 minutes (criterion states 4-core CPU)");

    fid::FidReport fid_trained = fid_of(model);
    c.note("trained proxy-FID: " + std::to_string(fid_trained.mean) + " (repeats: " +
           std::to_string(fid_trained.per_repeat[0]) + ", " +
           std::to_string(fid_trained.per_repeat[1]) + ", " +
           std::to_string(fid_trained.per_repeat[2]) + ")");
    c.require(fid_trained.per_repeat.size() == 3, "3-repeat protocol");
    c.require(fid_trained.mean < fid_step0.mean,
              "trained proxy-FID strictly below the step-0 snapshot");

    // --- baseline run (same seed, wavelet removed); reported, not gated
    gan::ArchConfig base_cfg = cfg;
    base_cfg.wavelet_enabled = false;
    gan::GanModel baseline = gan::build_gan(base_cfg);
    gan::TrainOptions base_options;
    base_options.steps = 2000;
    base_options.on_step = [&](gan::GanModel&, std::int64_t step, gan::StepMetrics& m) {
        if (step % 200 == 0)
            std::cout << "      [c7 baseline] step " << step << " d=" << m.d_loss
                      << " g=" << m.g_loss << std::endl;
    };
    gan::train(baseline, train_set, base_options);
    fid::FidReport fid_base = fid_of(baseline);
    c.note("baseline (SN-ResNet-style, wavelet off) proxy-FID: " + std::to_string(fid_base.mean));
    c.note(std::string("comparison (same seed, not gated): waveletgan ") +
           std::to_string(fid_trained.mean) +
           (fid_trained.mean < fid_base.mean ? " < " : " >= ") + "baseline " +
           std::to_string(fid_base.mean) +
           "; a single seed cannot certify the paper's ~2-4% improvement-rate claim");

    io::save_checkpoint(model, (dir / "smoke_waveletgan.wgc1").string());
    return c.ok;
}

// Criterion 8: bit-exact persistence and split-run determinism.
bool criterion_8(Check& c) {
    const auto dir = scratch_dir();
    gan::ArchConfig cfg;
    cfg.base_width = 8;
    cfg.z_dim = 16;
    cfg.batch = 8;
    cfg.n_disc = 2;
    cfg.seed = 8;
    cfg.wavelet_channels = 3;
    io::Dataset data = io::synthetic_shapes(64, 28, 1, 8);

    { // checkpoint round-trip stability
        gan::GanModel m = gan::build_gan(cfg);
        gan::BatchSampler sampler(data.size());
        for (int i = 0; i < 3; ++i) gan::train_step(m, data, sampler);
        const std::string p1 = (dir / "rt1.wgc1").string();
        const std::string p2 = (dir / "rt2.wgc1").string();
        io::save_checkpoint(m, p1, &sampler);
        gan::BatchSampler s2;
        gan::GanModel back = io::load_checkpoint(p1, &s2);
        io::save_checkpoint(back, p2, &s2);
        c.require(io::read_file(p1) == io::read_file(p2), "save -> load -> save is bit-stable");
    }

    // straight 2000 vs split 1000 + resume 1000
    auto to_csv = [](const std::vector<io::MetricsRow>& rows, std::size_t n_scales) {
        std::string text = io::metrics_csv_header(n_scales) + "\n";
        for (const auto& r : rows) text += io::metrics_csv_line(r, n_scales) + "\n";
        return text;
    };

    std::cout << "      [c8] straight 2000-step run..." << std::endl;
    gan::GanModel straight = gan::build_gan(cfg);
    gan::BatchSampler s_straight(data.size());
    gan::TrainOptions opt2000;
    opt2000.steps = 2000;
    auto rows_straight = gan::train(straight, data, opt2000, &s_straight);

    std::cout << "      [c8] split run: 1000 steps, checkpoint, resume 1000..." << std::endl;
    gan::GanModel split = gan::build_gan(cfg);
    gan::BatchSampler s_split(data.size());
    gan::TrainOptions opt1000;
    opt1000.steps = 1000;
    auto rows_a = gan::train(split, data, opt1000, &s_split);
    const std::string ckpt = (dir / "split_1000.wgc1").string();
    io::save_checkpoint(split, ckpt, &s_split);

    gan::BatchSampler s_resume;
    gan::GanModel resumed = io::load_checkpoint(ckpt, &s_resume);
    auto rows_b = gan::train(resumed, data, opt1000, &s_resume);

    std::vector<io::MetricsRow> rows_split = rows_a;
    rows_split.insert(rows_split.end(), rows_b.begin(), rows_b.end());
    c.require(rows_split.size() == rows_straight.size(), "same row count");
    const std::size_t n_scales = cfg.wavelet_channels;
    c.require(io::metrics_csv_equal_ignoring_wall(to_csv(rows_straight, n_scales),
                                                  to_csv(rows_split, n_scales)),
              "split-run metrics match the straight run bit-for-bit "
              "(wall_ms column excluded; wall time is not reproducible)");
    return c.ok;
}

// Criterion 9: IDX byte-level golden tests.
bool criterion_9(Check& c) {
    std::vector<std::uint8_t> img{0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2,
                                  0, 51, 102, 153, 204, 255, 128, 64};
    Tensor t = io::parse_idx_images(img, "golden");
    c.require(t.shape() == std::vector<std::size_t>({2, 2, 2, 1}), "dims parsed big-endian");
    c.require(t[0] == 0.0 && t[5] == 1.0, "1/255 scaling endpoints");
    c.require(std::abs(t[1] - 51.0 / 255.0) < 1e-15, "1/255 scaling interior");

    auto expect_offset_error = [&](std::vector<std::uint8_t> bytes, const char* what) {
        try {
            io::parse_idx_images(bytes, "golden");
            c.require(false, std::string(what) + ": expected a FormatError");
        } catch (const FormatError& e) {
            c.require(std::string(e.what()).find("offset") != std::string::npos,
                      std::string(what) + ": error names a byte offset");
        }
    };
    auto bad_magic = img;
    bad_magic[3] = 1;
    expect_offset_error(bad_magic, "label magic on image call");
    auto truncated = img;
    truncated.resize(20);
    expect_offset_error(truncated, "truncated payload");
    auto huge = img;
    huge[8] = 0xFF; // rows = 0xFF000002
    expect_offset_error(huge, "dimension overflow");

    std::vector<std::uint8_t> lbl{0, 0, 8, 1, 0, 0, 0, 3, 9, 1, 2};
    auto labels = io::parse_idx_labels(lbl, "golden");
    c.require(labels == std::vector<int>({9, 1, 2}), "label payload");
    return c.ok;
}

} // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) only = std::atoi(argv[i + 1]);
    }

    struct Criterion {
        int id;
        const char* title;
        std::function<bool(Check&)> run;
    };
    const std::vector<Criterion> criteria{
        {1, "full-scale non-reproducibility stated; metric labelled proxy-FID", criterion_1},
        {2, "gradient suite: every op matches finite differences (< 1e-4, < 60 s)", criterion_2},
        {3, "wavelet properties: symmetry, truncated zero-mean, scale-derivative FD", criterion_3},
        {4, "shape preservation and exact WaveletDeconv placement", criterion_4},
        {5, "Frechet machinery and spectral-norm-vs-SVD oracle", criterion_5},
        {6, "protocol fidelity: 5 D sub-updates, batch 64, z 128, Adam lr 2e-4", criterion_6},
        {7, "desk-scale smoke: 2000 steps, finite losses, proxy-FID improves over step 0",
         criterion_7},
        {8, "persistence: bit-exact checkpoints; split run matches straight run", criterion_8},
        {9, "IDX ingestion: golden bytes, offset-bearing errors", criterion_9},
    };

    int failures = 0;
    for (const auto& crit : criteria) {
        if (only != 0 && crit.id != only) continue;
        std::cout << "criterion " << crit.id << ": " << crit.title << std::endl;
        Check check;
        bool ok = false;
        try {
            ok = crit.run(check);
        } catch (const std::exception& e) {
            check.log << "    EXCEPTION: " << e.what() << "\n";
            ok = false;
        }
        std::cout << check.log.str();
        std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << crit.id << std::endl;
        if (!ok) ++failures;
    }
    if (failures) {
        std::cout << failures << " criterion(s) failed" << std::endl;
        return 1;
    }
    std::cout << "all criteria passed" << std::endl;
    return 0;
}
