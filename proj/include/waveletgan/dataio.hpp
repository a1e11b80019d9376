#pragma once

#include "waveletgan/tensor.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace wg::io {

// Images in [0,1] plus optional class labels.
struct Dataset {
    Tensor images;                 // [N,H,W,C]
    std::vector<int> labels;       // empty or N entries in [0, n_classes)
    std::string name;
    std::string split;

    std::size_t size() const { return images.rank() == 4 ? images.shape()[0] : 0; }
};

// Big-endian IDX containers (the MNIST-family format).
// Image files: magic 0x00000803, dims N,rows,cols, u8 pixels -> [N,H,W,1] / 255.
Tensor load_idx_images(const std::string& path);
// Label files: magic 0x00000801, dim N, u8 labels.
std::vector<int> load_idx_labels(const std::string& path);

// Parse from memory; offsets in error messages are byte offsets into `bytes`.
Tensor parse_idx_images(const std::vector<std::uint8_t>& bytes, const std::string& origin);
std::vector<int> parse_idx_labels(const std::vector<std::uint8_t>& bytes,
                                  const std::string& origin);

// Seeded procedural corpus: filled rectangles, circles and crosses at random
// positions/sizes/intensities. Labels are the shape class (0,1,2).
Dataset synthetic_shapes(std::size_t n, std::size_t size, std::size_t channels,
                         std::uint64_t seed);
constexpr std::size_t kSyntheticClasses = 3;

// Binary PGM (P5, 1 channel) / PPM (P6, 3 channels) grid with 2-pixel black
// separators; values clamped to [0,1] and quantized as round(v * 255).
void save_image_grid(const Tensor& images, std::size_t rows, std::size_t cols,
                     const std::string& path);

// Gather a batch of images (and labels when present) by index.
Dataset gather(const Dataset& d, const std::vector<std::size_t>& indices);

// Metrics CSV with the fixed column order:
//   step,d_loss,g_loss,proxy_fid,scale_0..scale_{C-1},wall_ms
// proxy_fid is empty on rows without an evaluation. Numbers print with
// enough digits to round-trip doubles exactly.
struct MetricsRow {
    std::int64_t step = 0;
    double d_loss = 0.0;
    double g_loss = 0.0;
    std::optional<double> proxy_fid;
    std::vector<double> scales;
    double wall_ms = 0.0;
};

std::string metrics_csv_header(std::size_t n_scales);
std::string metrics_csv_line(const MetricsRow& row, std::size_t n_scales);
void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows,
                       std::size_t n_scales);

// Byte-identical except for the wall_ms column (wall time is not
// reproducible; see the metrics format notes in the README).
bool metrics_csv_equal_ignoring_wall(const std::string& csv_a, const std::string& csv_b);

// Whole-file helpers; writes go through a temp file + rename.
std::vector<std::uint8_t> read_file(const std::string& path);
void write_file_atomic(const std::string& path, const void* data, std::size_t size);

} // namespace wg::io
