#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "waveletgan/checkpoint.hpp"
#include "waveletgan/config.hpp"
#include "waveletgan/dataio.hpp"
#include "waveletgan/errors.hpp"
#include "waveletgan/gan.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace wg;
using namespace wg::io;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("wg_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::vector<std::uint8_t> idx_image_bytes() {
    // magic 0x00000803, dims 2,2,2, 8 pixel bytes
    std::vector<std::uint8_t> b{0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2};
    for (std::uint8_t v : {0, 51, 102, 153, 204, 255, 128, 64}) b.push_back(v);
    return b;
}

} // namespace

TEST_CASE("IDX image parsing, scaling, golden bytes") {
    auto bytes = idx_image_bytes();
    Tensor t = parse_idx_images(bytes, "golden");
    REQUIRE(t.shape() == std::vector<std::size_t>{2, 2, 2, 1});
    CHECK(t[0] == 0.0);
    CHECK(t[5] == 1.0);
    CHECK(t[1] == doctest::Approx(51.0 / 255.0).epsilon(1e-15));
    CHECK(t[6] == doctest::Approx(128.0 / 255.0).epsilon(1e-15));
}

TEST_CASE("IDX malformed inputs carry byte offsets") {
    auto good = idx_image_bytes();

    SUBCASE("label magic on an image call") {
        auto bad = good;
        bad[2] = 8;
        bad[3] = 1; // 0x00000801
        CHECK_THROWS_AS(parse_idx_images(bad, "golden"), FormatError);
        try {
            parse_idx_images(bad, "golden");
        } catch (const FormatError& e) {
            CHECK(std::string(e.what()).find("offset 0") != std::string::npos);
        }
    }
    SUBCASE("truncated payload") {
        auto bad = good;
        bad.resize(bad.size() - 3);
        CHECK_THROWS_AS(parse_idx_images(bad, "golden"), FormatError);
        try {
            parse_idx_images(bad, "golden");
        } catch (const FormatError& e) {
            CHECK(std::string(e.what()).find("offset") != std::string::npos);
        }
    }
    SUBCASE("truncated header") {
        std::vector<std::uint8_t> tiny{0, 0};
        CHECK_THROWS_AS(parse_idx_images(tiny, "golden"), FormatError);
    }
    SUBCASE("labels golden") {
        std::vector<std::uint8_t> lb{0, 0, 8, 1, 0, 0, 0, 3, 7, 0, 2};
        auto labels = parse_idx_labels(lb, "golden");
        CHECK(labels == std::vector<int>{7, 0, 2});
        lb[3] = 3; // image magic on a label call
        CHECK_THROWS_AS(parse_idx_labels(lb, "golden"), FormatError);
    }
    SUBCASE("round-trip through a file") {
        TempDir dir;
        const std::string path = dir.file("img.idx");
        write_file_atomic(path, good.data(), good.size());
        Tensor t = load_idx_images(path);
        CHECK(t.shape() == std::vector<std::size_t>{2, 2, 2, 1});
    }
}

TEST_CASE("synthetic corpus: determinism, range, class balance") {
    Dataset a = synthetic_shapes(10, 28, 1, 7);
    Dataset b = synthetic_shapes(10, 28, 1, 7);
    REQUIRE(a.images.size() == b.images.size());
    for (std::size_t i = 0; i < a.images.size(); ++i) CHECK(a.images[i] == b.images[i]);
    CHECK(a.labels == b.labels);

    for (std::size_t i = 0; i < a.images.size(); ++i) {
        CHECK(a.images[i] >= 0.0);
        CHECK(a.images[i] <= 1.0);
    }

    Dataset big = synthetic_shapes(3000, 28, 1, 13);
    std::size_t counts[3] = {0, 0, 0};
    for (int l : big.labels) counts[l] += 1;
    for (std::size_t c = 0; c < 3; ++c) {
        const double frac = static_cast<double>(counts[c]) / 3000.0;
        CHECK(frac > 1.0 / 3.0 - 0.05);
        CHECK(frac < 1.0 / 3.0 + 0.05);
    }

    Dataset rgb = synthetic_shapes(4, 32, 3, 3);
    CHECK(rgb.images.shape() == std::vector<std::size_t>{4, 32, 32, 3});
    CHECK_THROWS_AS(synthetic_shapes(0, 28, 1, 1), ParameterError);
    CHECK_THROWS_AS(synthetic_shapes(4, 30, 1, 1), ParameterError);
}

TEST_CASE("image grid: quantization and dimensions") {
    TempDir dir;
    SUBCASE("single 2x2 image of ones -> all 255 payload") {
        Tensor img = Tensor::full({1, 2, 2, 1}, 1.0);
        const std::string path = dir.file("ones.pgm");
        save_image_grid(img, 1, 1, path);
        auto bytes = read_file(path);
        const std::string head(reinterpret_cast<const char*>(bytes.data()), 15);
        CHECK(head.substr(0, 2) == "P5");
        REQUIRE(bytes.size() >= 4);
        for (std::size_t i = bytes.size() - 4; i < bytes.size(); ++i) CHECK(bytes[i] == 255);
    }
    SUBCASE("0.5 quantizes to byte 128") {
        Tensor img = Tensor::full({1, 1, 1, 1}, 0.5);
        const std::string path = dir.file("half.pgm");
        save_image_grid(img, 1, 1, path);
        auto bytes = read_file(path);
        CHECK(bytes.back() == 128);
    }
    SUBCASE("8x8 grid of 28x28 images: 238x238 with separators") {
        Tensor imgs({64, 28, 28, 1});
        const std::string path = dir.file("grid.pgm");
        save_image_grid(imgs, 8, 8, path);
        auto bytes = read_file(path);
        const std::string head(reinterpret_cast<const char*>(bytes.data()),
                               std::min<std::size_t>(bytes.size(), 20));
        CHECK(head.find("238 238") != std::string::npos);
        CHECK(bytes.size() == std::string("P5\n238 238\n255\n").size() + 238 * 238);
    }
    SUBCASE("3-channel grids write P6") {
        Tensor imgs({4, 8, 8, 3});
        const std::string path = dir.file("rgb.ppm");
        save_image_grid(imgs, 2, 2, path);
        auto bytes = read_file(path);
        CHECK(bytes[0] == 'P');
        CHECK(bytes[1] == '6');
    }
    SUBCASE("grid larger than the batch is rejected") {
        Tensor imgs({3, 8, 8, 1});
        CHECK_THROWS_AS(save_image_grid(imgs, 2, 2, dir.file("x.pgm")), ParameterError);
    }
}

TEST_CASE("checkpoint: named-tensor container golden behaviour") {
    TempDir dir;
    std::vector<NamedTensor> tensors;
    tensors.push_back({"alpha", Tensor({2, 2}, {1.5, -2.25, 0.0, 1e-300})});
    tensors.push_back({"beta/gamma", Tensor({3}, {-1.0, 0.5, 2.0})});

    auto blob = encode_tensor_file(tensors);
    // magic + version + count
    CHECK(blob[0] == 'W');
    CHECK(blob[1] == 'G');
    CHECK(blob[2] == 'C');
    CHECK(blob[3] == '1');
    CHECK(blob[4] == 1); // version LE
    CHECK(blob[8] == 2); // tensor count LE

    auto back = decode_tensor_file(blob, "mem");
    REQUIRE(back.size() == 2);
    CHECK(back[0].name == "alpha");
    CHECK(back[0].tensor.shape() == std::vector<std::size_t>{2, 2});
    for (std::size_t i = 0; i < 4; ++i) CHECK(back[0].tensor[i] == tensors[0].tensor[i]);

    SUBCASE("wrong magic is rejected with no partial result") {
        auto bad = blob;
        bad[0] = 'X';
        CHECK_THROWS_AS(decode_tensor_file(bad, "mem"), FormatError);
    }
    SUBCASE("bad version") {
        auto bad = blob;
        bad[4] = 9;
        CHECK_THROWS_AS(decode_tensor_file(bad, "mem"), FormatError);
    }
    SUBCASE("truncation carries an offset") {
        auto bad = blob;
        bad.resize(bad.size() - 5);
        try {
            decode_tensor_file(bad, "mem");
            CHECK(false);
        } catch (const FormatError& e) {
            CHECK(std::string(e.what()).find("offset") != std::string::npos);
        }
    }
    SUBCASE("file round-trip is bit-stable") {
        const std::string p1 = dir.file("a.wgc1"), p2 = dir.file("b.wgc1");
        save_tensor_file(p1, tensors);
        auto loaded = load_tensor_file(p1);
        save_tensor_file(p2, loaded);
        CHECK(read_file(p1) == read_file(p2));
    }
}

TEST_CASE("model checkpoint round-trip is bit-exact") {
    TempDir dir;
    gan::ArchConfig cfg;
    cfg.base_width = 8;
    cfg.z_dim = 16;
    cfg.batch = 4;
    cfg.n_disc = 2;
    cfg.seed = 33;
    cfg.wavelet_channels = 3;
    gan::GanModel model = gan::build_gan(cfg);
    io::Dataset data = synthetic_shapes(16, 28, 1, 5);
    gan::BatchSampler sampler(data.size());
    for (int i = 0; i < 2; ++i) gan::train_step(model, data, sampler);

    const std::string p1 = dir.file("m1.wgc1"), p2 = dir.file("m2.wgc1");
    save_checkpoint(model, p1, &sampler);
    gan::BatchSampler sampler2;
    gan::GanModel back = load_checkpoint(p1, &sampler2);
    save_checkpoint(back, p2, &sampler2);
    CHECK(read_file(p1) == read_file(p2));
    CHECK(back.step == model.step);
    CHECK(back.wavelet_scales() == model.wavelet_scales());
}

TEST_CASE("config parsing") {
    TempDir dir;
    SUBCASE("empty file keeps every default") {
        const std::string path = dir.file("empty.cfg");
        write_file_atomic(path, "", 0);
        RunConfig cfg = parse_config(path);
        CHECK(cfg.arch.batch == 64);
        CHECK(cfg.arch.z_dim == 128);
        CHECK(cfg.arch.n_disc == 5);
        CHECK(cfg.arch.lr == 0.0002);
        CHECK(cfg.arch.wavelet_channels == 5);
        CHECK(cfg.arch.wavelet_kernel_width == 9);
        CHECK(cfg.arch.wavelet_sigma == 1.0);
        CHECK(cfg.steps == 2000);
        CHECK(cfg.arch.base_width == 32);
        CHECK(cfg.arch.loss == gan::LossKind::hinge);
        CHECK(cfg.arch.mode == gan::GenMode::direct);
        CHECK(cfg.arch.effective_scales() == std::vector<double>{1, 2, 4, 8, 16});
    }
    SUBCASE("comments, spacing, overrides") {
        const std::string body =
            "# a comment\n"
            "batch = 32   # trailing comment\n"
            "scales = 1, 2, 4\n"
            "wavelet_channels = 3\n"
            "loss = minimax\n";
        const std::string path = dir.file("ok.cfg");
        write_file_atomic(path, body.data(), body.size());
        RunConfig cfg = parse_config(path, {{"batch", "16"}});
        CHECK(cfg.arch.batch == 16); // CLI override wins
        CHECK(cfg.arch.loss == gan::LossKind::minimax);
        CHECK(cfg.arch.effective_scales() == std::vector<double>{1, 2, 4});
    }
    SUBCASE("unknown keys name the line") {
        const std::string body = "steps = 5\nbatchsize = 64\n";
        const std::string path = dir.file("bad.cfg");
        write_file_atomic(path, body.data(), body.size());
        try {
            parse_config(path);
            CHECK(false);
        } catch (const ConfigError& e) {
            const std::string msg = e.what();
            CHECK(msg.find(":2") != std::string::npos);
            CHECK(msg.find("batchsize") != std::string::npos);
        }
    }
    SUBCASE("unparsable values and invalid settings") {
        const std::string body = "batch = many\n";
        const std::string path = dir.file("bad2.cfg");
        write_file_atomic(path, body.data(), body.size());
        CHECK_THROWS_AS(parse_config(path), ConfigError);
        CHECK_THROWS_AS(parse_config(std::nullopt, {{"wavelet_channels", "0"}}), ConfigError);
    }
}

TEST_CASE("metrics CSV format and wall-clock-insensitive comparison") {
    MetricsRow row;
    row.step = 3;
    row.d_loss = 1.25;
    row.g_loss = -0.5;
    row.scales = {1.0, 2.0};
    row.wall_ms = 17.25;
    CHECK(metrics_csv_header(2) == "step,d_loss,g_loss,proxy_fid,scale_0,scale_1,wall_ms");
    CHECK(metrics_csv_line(row, 2) == "3,1.25,-0.5,,1,2,17.25");
    row.proxy_fid = 4.75;
    CHECK(metrics_csv_line(row, 2) == "3,1.25,-0.5,4.75,1,2,17.25");

    const std::string a = "step,d,wall_ms\n1,0.5,100\n";
    const std::string b = "step,d,wall_ms\n1,0.5,222\n";
    const std::string c = "step,d,wall_ms\n1,0.75,100\n";
    CHECK(metrics_csv_equal_ignoring_wall(a, b));
    CHECK(!metrics_csv_equal_ignoring_wall(a, c));
}
