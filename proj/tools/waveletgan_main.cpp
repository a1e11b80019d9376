#include "waveletgan/checkpoint.hpp"
#include "waveletgan/config.hpp"
#include "waveletgan/dataio.hpp"
#include "waveletgan/errors.hpp"
#include "waveletgan/fid.hpp"
#include "waveletgan/gan.hpp"
#include "waveletgan/gradcheck.hpp"
#include "waveletgan/linalg.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace wg;

std::vector<std::pair<std::string, std::string>> split_overrides(
    const std::vector<std::string>& sets) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--set expects key=value, got \"" + s + "\"");
        out.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    return out;
}

io::Dataset load_train_set(const io::RunConfig& cfg) {
    if (cfg.dataset == "idx") {
        if (cfg.idx_images.empty())
            throw ConfigError("dataset = idx requires idx_images");
        io::Dataset d;
        d.images = io::load_idx_images(cfg.idx_images);
        if (!cfg.idx_labels.empty()) d.labels = io::load_idx_labels(cfg.idx_labels);
        d.name = cfg.idx_images;
        d.split = "train";
        return d;
    }
    io::Dataset d = io::synthetic_shapes(cfg.train_n, cfg.arch.image_size(),
                                         cfg.arch.image_channels(), cfg.data_seed);
    d.split = "train";
    return d;
}

io::Dataset load_test_set(const io::RunConfig& cfg) {
    if (cfg.dataset == "idx") {
        // Without a separate test file the loaded set doubles as the FID
        // reference.
        return load_train_set(cfg);
    }
    io::Dataset d = io::synthetic_shapes(cfg.test_n, cfg.arch.image_size(),
                                         cfg.arch.image_channels(), cfg.data_seed ^ 0x7E57ull);
    d.split = "test";
    return d;
}

fid::FeatureExtractor make_extractor(const io::RunConfig& cfg) {
    const auto kind = cfg.extractor == "raw_moments" ? fid::ExtractorKind::raw_moments
                                                     : fid::ExtractorKind::frozen_random_conv;
    return fid::FeatureExtractor(kind, fid::kDefaultExtractorSeed, cfg.feature_dim);
}

fid::SampleFn model_sampler(gan::GanModel& model) {
    return [&model](std::size_t n, std::uint64_t seed) {
        Rng rng(seed);
        return gan::sample_images(model, n, rng);
    };
}

std::string zero_pad(std::int64_t v, int width = 6) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%0*lld", width, static_cast<long long>(v));
    return buf;
}

int cmd_train(const io::RunConfig& cfg, const std::string& resume) {
    if (cfg.threads > 0) linalg::set_thread_count(cfg.threads);
    std::filesystem::create_directories(cfg.out_dir);

    io::Dataset train_set = load_train_set(cfg);
    io::Dataset test_set = load_test_set(cfg);
    const fid::FeatureExtractor extractor = make_extractor(cfg);

    gan::GanModel model;
    gan::BatchSampler sampler;
    if (!resume.empty()) {
        model = io::load_checkpoint(resume, &sampler);
        if (sampler.size() == 0) sampler = gan::BatchSampler(train_set.size());
        std::cout << "resumed from " << resume << " at step " << model.step << "\n";
    } else {
        model = gan::build_gan(cfg.arch);
        sampler = gan::BatchSampler(train_set.size());
    }

    const std::int64_t remaining = cfg.steps - model.step;
    std::cout << "training " << (cfg.arch.wavelet_enabled ? "waveletgan" : "baseline")
              << ": steps " << model.step << " -> " << cfg.steps << " (batch "
              << cfg.arch.batch << ", n_disc " << cfg.arch.n_disc << ", lr " << cfg.arch.lr
              << ")\n";

    gan::TrainOptions options;
    options.steps = remaining > 0 ? remaining : 0;
    options.on_step = [&](gan::GanModel& m, std::int64_t step, gan::StepMetrics& metrics) {
        if (cfg.fid_every > 0 && step % cfg.fid_every == 0) {
            fid::FidReport report = fid::evaluate_fid(model_sampler(m), extractor,
                                                      test_set.images, cfg.fid_repeats,
                                                      cfg.fid_seed);
            metrics.proxy_fid = report.mean;
            std::cout << "step " << step << ": " << fid::kMetricLabel << " = " << report.mean
                      << "\n";
        }
        if (cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0)
            io::save_checkpoint(m, cfg.out_dir + "/checkpoint_" + zero_pad(step) + ".wgc1",
                                &sampler);
        if (cfg.sample_every > 0 && step % cfg.sample_every == 0) {
            Rng rng(cfg.fid_seed + static_cast<std::uint64_t>(step));
            Tensor grid = gan::sample_images(m, cfg.grid_rows * cfg.grid_cols, rng);
            const char* ext = cfg.arch.image_channels() == 1 ? ".pgm" : ".ppm";
            io::save_image_grid(grid, cfg.grid_rows, cfg.grid_cols,
                                cfg.out_dir + "/samples_" + zero_pad(step) + ext);
        }
        if (step % 100 == 0)
            std::cout << "step " << step << ": d_loss=" << metrics.d_loss
                      << " g_loss=" << metrics.g_loss << " (" << metrics.wall_ms << " ms)\n";
    };

    std::vector<io::MetricsRow> rows = gan::train(model, train_set, options, &sampler);

    const std::size_t n_scales = model.wavelet ? model.wavelet->scales().size() : 0;
    io::write_metrics_csv(cfg.out_dir + "/metrics.csv", rows, n_scales);
    io::save_checkpoint(model, cfg.out_dir + "/checkpoint_final.wgc1", &sampler);
    if (options.steps > 0) {
        Rng rng(cfg.fid_seed);
        Tensor grid = gan::sample_images(model, cfg.grid_rows * cfg.grid_cols, rng);
        const char* ext = cfg.arch.image_channels() == 1 ? ".pgm" : ".ppm";
        io::save_image_grid(grid, cfg.grid_rows, cfg.grid_cols,
                            cfg.out_dir + "/samples_final" + std::string(ext));
    }
    std::cout << "done: " << rows.size() << " steps, outputs in " << cfg.out_dir << "\n";
    return 0;
}

int cmd_sample(const std::string& ckpt, const std::string& out, std::size_t rows,
               std::size_t cols, std::uint64_t seed) {
    gan::GanModel model = io::load_checkpoint(ckpt);
    Rng rng(seed);
    Tensor grid = gan::sample_images(model, rows * cols, rng);
    io::save_image_grid(grid, rows, cols, out);
    std::cout << "wrote " << rows << "x" << cols << " grid to " << out << "\n";
    return 0;
}

int cmd_fid(const std::string& ckpt, const io::RunConfig& cfg) {
    gan::GanModel model = io::load_checkpoint(ckpt);
    io::Dataset real = load_test_set(cfg);
    const fid::FeatureExtractor extractor = make_extractor(cfg);
    fid::FidReport report = fid::evaluate_fid(model_sampler(model), extractor, real.images,
                                              cfg.fid_repeats, cfg.fid_seed);
    std::cout << fid::kMetricLabel << " report (" << report.per_repeat.size() << " repeats, "
              << report.n_samples << " samples each; frozen-feature metric, not comparable to "
              << "Inception FIDs)\n";
    for (std::size_t r = 0; r < report.per_repeat.size(); ++r)
        std::cout << "  repeat " << r << ": " << report.per_repeat[r] << "\n";
    std::cout << "  mean " << fid::kMetricLabel << ": " << report.mean << "\n";
    return 0;
}

int cmd_gradcheck(std::uint64_t seed) {
    const auto reports = gradcheck::run_all(seed);
    std::cout << gradcheck::format_report(reports);
    if (!gradcheck::all_pass(reports)) {
        std::cerr << "gradcheck: FAILURES above tolerance\n";
        return 1;
    }
    std::cout << "gradcheck: all " << reports.size() << " checks passed\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"WaveletGAN: desk-scale GAN training with a learnable Mexican-hat "
                 "wavelet deconvolution layer"};
    app.require_subcommand(1);

    std::string config_path, resume, ckpt, out_path;
    std::vector<std::string> sets;
    std::size_t rows = 8, cols = 8;
    std::uint64_t seed = 1;

    auto add_config_opts = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "key = value config file");
        cmd->add_option("--set", sets, "override a config key, e.g. --set steps=100")
            ->take_all();
    };

    CLI::App* train = app.add_subcommand("train", "train a model (checkpoints, metrics CSV, "
                                                  "sample grids)");
    add_config_opts(train);
    train->add_option("--resume", resume, "checkpoint to resume from");

    CLI::App* sample = app.add_subcommand("sample", "render an image grid from a checkpoint");
    sample->add_option("--ckpt", ckpt, "checkpoint path")->required();
    sample->add_option("--out", out_path, "output PGM/PPM path")->required();
    sample->add_option("--rows", rows, "grid rows");
    sample->add_option("--cols", cols, "grid columns");
    sample->add_option("--seed", seed, "sampling seed");

    CLI::App* fid_cmd = app.add_subcommand("fid", "proxy-FID of a checkpoint against the real "
                                                  "set (3-repeat protocol)");
    fid_cmd->add_option("--ckpt", ckpt, "checkpoint path")->required();
    add_config_opts(fid_cmd);

    CLI::App* gradcheck_cmd = app.add_subcommand("gradcheck", "finite-difference verification "
                                                              "of every differentiable op");
    gradcheck_cmd->add_option("--seed", seed, "probe seed");

    CLI::App* inspect = app.add_subcommand("inspect", "list checkpoint contents and wavelet "
                                                      "scales");
    inspect->add_option("--ckpt", ckpt, "checkpoint path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2; // usage errors exit 2, --help exits 0
    }

    try {
        if (train->parsed()) {
            const auto cfg = wg::io::parse_config(
                config_path.empty() ? std::nullopt : std::optional<std::string>(config_path),
                split_overrides(sets));
            return cmd_train(cfg, resume);
        }
        if (sample->parsed()) return cmd_sample(ckpt, out_path, rows, cols, seed);
        if (fid_cmd->parsed()) {
            const auto cfg = wg::io::parse_config(
                config_path.empty() ? std::nullopt : std::optional<std::string>(config_path),
                split_overrides(sets));
            return cmd_fid(ckpt, cfg);
        }
        if (gradcheck_cmd->parsed()) return cmd_gradcheck(seed);
        if (inspect->parsed()) {
            std::cout << wg::io::describe_checkpoint(ckpt);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
