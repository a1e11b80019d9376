#include "waveletgan/dataio.hpp"

#include "waveletgan/errors.hpp"
#include "waveletgan/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace wg::io {

namespace {

constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset,
                        const std::string& origin) {
    if (offset + 4 > bytes.size())
        throw FormatError(origin + ": truncated at byte offset " + std::to_string(offset) +
                          " (need 4 bytes)");
    return (static_cast<std::uint32_t>(bytes[offset]) << 24) |
           (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
           (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) |
           static_cast<std::uint32_t>(bytes[offset + 3]);
}

} // namespace

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    in.seekg(0, std::ios::end);
    const std::streamoff len = in.tellg();
    in.seekg(0);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(len));
    if (len > 0) in.read(reinterpret_cast<char*>(bytes.data()), len);
    if (!in) throw IoError("read failed for " + path);
    return bytes;
}

void write_file_atomic(const std::string& path, const void* data, std::size_t size) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp + " for writing");
        out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
        if (!out) throw IoError("write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw IoError("rename failed for " + path);
}

Tensor parse_idx_images(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
    const std::uint32_t magic = read_be32(bytes, 0, origin);
    if (magic != kIdxImageMagic) {
        std::ostringstream os;
        os << origin << ": bad image magic 0x" << std::hex << magic << " at byte offset 0 (want 0x"
           << kIdxImageMagic << ")";
        throw FormatError(os.str());
    }
    const std::uint32_t n = read_be32(bytes, 4, origin);
    const std::uint32_t rows = read_be32(bytes, 8, origin);
    const std::uint32_t cols = read_be32(bytes, 12, origin);
    if (rows == 0 || cols == 0 || rows > 4096 || cols > 4096)
        throw FormatError(origin + ": unreasonable image dims " + std::to_string(rows) + "x" +
                          std::to_string(cols) + " at byte offset 8");
    const std::size_t payload = static_cast<std::size_t>(n) * rows * cols;
    if (bytes.size() < 16 + payload)
        throw FormatError(origin + ": truncated pixel payload at byte offset " +
                          std::to_string(bytes.size()) + " (need " + std::to_string(16 + payload) +
                          " bytes)");
    Tensor t({n, rows, cols, 1});
    for (std::size_t i = 0; i < payload; ++i) t[i] = static_cast<double>(bytes[16 + i]) / 255.0;
    return t;
}

std::vector<int> parse_idx_labels(const std::vector<std::uint8_t>& bytes,
                                  const std::string& origin) {
    const std::uint32_t magic = read_be32(bytes, 0, origin);
    if (magic != kIdxLabelMagic) {
        std::ostringstream os;
        os << origin << ": bad label magic 0x" << std::hex << magic << " at byte offset 0 (want 0x"
           << kIdxLabelMagic << ")";
        throw FormatError(os.str());
    }
    const std::uint32_t n = read_be32(bytes, 4, origin);
    if (bytes.size() < 8 + static_cast<std::size_t>(n))
        throw FormatError(origin + ": truncated label payload at byte offset " +
                          std::to_string(bytes.size()) + " (need " + std::to_string(8 + n) +
                          " bytes)");
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(bytes[8 + i]);
    return labels;
}

Tensor load_idx_images(const std::string& path) {
    return parse_idx_images(read_file(path), path);
}

std::vector<int> load_idx_labels(const std::string& path) {
    return parse_idx_labels(read_file(path), path);
}

namespace {

void draw_rect(Tensor& img, std::size_t n, std::size_t size, std::size_t ch, Rng& rng) {
    const std::size_t x0 = rng.uniform_index(size - 6);
    const std::size_t y0 = rng.uniform_index(size - 6);
    const std::size_t w = 4 + rng.uniform_index(8);
    const std::size_t h = 4 + rng.uniform_index(8);
    const double v = rng.uniform(0.4, 1.0);
    for (std::size_t y = y0; y < std::min(size, y0 + h); ++y)
        for (std::size_t x = x0; x < std::min(size, x0 + w); ++x)
            img.at4(n, y, x, ch) = v;
}

void draw_circle(Tensor& img, std::size_t n, std::size_t size, std::size_t ch, Rng& rng) {
    const double r = 3.0 + rng.uniform() * (static_cast<double>(size) / 4.0 - 3.0);
    const double cx = r + 1.0 + rng.uniform() * (static_cast<double>(size) - 2.0 * (r + 1.0));
    const double cy = r + 1.0 + rng.uniform() * (static_cast<double>(size) - 2.0 * (r + 1.0));
    const double v = rng.uniform(0.4, 1.0);
    for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x) {
            const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
            if (dx * dx + dy * dy <= r * r) img.at4(n, y, x, ch) = v;
        }
}

void draw_cross(Tensor& img, std::size_t n, std::size_t size, std::size_t ch, Rng& rng) {
    const std::size_t arm = 2 + rng.uniform_index(3); // arm half-width
    const std::size_t cx = size / 4 + rng.uniform_index(size / 2);
    const std::size_t cy = size / 4 + rng.uniform_index(size / 2);
    const std::size_t len = size / 4 + rng.uniform_index(size / 4);
    const double v = rng.uniform(0.4, 1.0);
    for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x) {
            const std::size_t adx = x > cx ? x - cx : cx - x;
            const std::size_t ady = y > cy ? y - cy : cy - y;
            if ((adx < arm && ady <= len) || (ady < arm && adx <= len)) img.at4(n, y, x, ch) = v;
        }
}

} // namespace

Dataset synthetic_shapes(std::size_t n, std::size_t size, std::size_t channels,
                         std::uint64_t seed) {
    if (n < 1) throw ParameterError("synthetic_shapes: n must be >= 1");
    if (size != 28 && size != 32)
        throw ParameterError("synthetic_shapes: size must be 28 or 32");
    if (channels != 1 && channels != 3)
        throw ParameterError("synthetic_shapes: channels must be 1 or 3");
    Rng rng(seed);
    Dataset d;
    d.images = Tensor({n, size, size, channels});
    d.labels.resize(n);
    d.name = "synthetic_shapes";
    for (std::size_t i = 0; i < n; ++i) {
        const int cls = static_cast<int>(rng.uniform_index(kSyntheticClasses));
        d.labels[i] = cls;
        // faint background level
        const double bg = rng.uniform(0.0, 0.08);
        for (std::size_t y = 0; y < size; ++y)
            for (std::size_t x = 0; x < size; ++x)
                for (std::size_t c = 0; c < channels; ++c) d.images.at4(i, y, x, c) = bg;
        for (std::size_t c = 0; c < channels; ++c) {
            switch (cls) {
                case 0: draw_rect(d.images, i, size, c, rng); break;
                case 1: draw_circle(d.images, i, size, c, rng); break;
                default: draw_cross(d.images, i, size, c, rng); break;
            }
        }
    }
    return d;
}

void save_image_grid(const Tensor& images, std::size_t rows, std::size_t cols,
                     const std::string& path) {
    require_rank(images, 4, "save_image_grid");
    const std::size_t N = images.shape()[0], H = images.shape()[1], W = images.shape()[2],
                      C = images.shape()[3];
    if (rows * cols > N)
        throw ParameterError("save_image_grid: grid " + std::to_string(rows) + "x" +
                             std::to_string(cols) + " needs more images than provided (" +
                             std::to_string(N) + ")");
    if (C != 1 && C != 3)
        throw ParameterError("save_image_grid: images must have 1 or 3 channels");
    constexpr std::size_t sep = 2;
    const std::size_t out_h = rows * H + (rows - 1) * sep;
    const std::size_t out_w = cols * W + (cols - 1) * sep;

    std::vector<std::uint8_t> pixels(out_h * out_w * C, 0);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t img = r * cols + c;
            const std::size_t oy = r * (H + sep), ox = c * (W + sep);
            for (std::size_t y = 0; y < H; ++y)
                for (std::size_t x = 0; x < W; ++x)
                    for (std::size_t ch = 0; ch < C; ++ch) {
                        double v = images.at4(img, y, x, ch);
                        v = std::clamp(v, 0.0, 1.0);
                        pixels[((oy + y) * out_w + (ox + x)) * C + ch] =
                            static_cast<std::uint8_t>(std::lround(v * 255.0));
                    }
        }
    }

    std::ostringstream header;
    header << (C == 1 ? "P5" : "P6") << "\n" << out_w << " " << out_h << "\n255\n";
    const std::string head = header.str();
    std::vector<std::uint8_t> blob(head.size() + pixels.size());
    std::memcpy(blob.data(), head.data(), head.size());
    std::memcpy(blob.data() + head.size(), pixels.data(), pixels.size());
    write_file_atomic(path, blob.data(), blob.size());
}

Dataset gather(const Dataset& d, const std::vector<std::size_t>& indices) {
    require_rank(d.images, 4, "gather");
    const auto& s = d.images.shape();
    const std::size_t item = s[1] * s[2] * s[3];
    Dataset out;
    out.images = Tensor({indices.size(), s[1], s[2], s[3]});
    out.name = d.name;
    out.split = d.split;
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= s[0]) throw ParameterError("gather: index out of range");
        std::memcpy(out.images.data() + i * item, d.images.data() + indices[i] * item,
                    item * sizeof(double));
    }
    if (!d.labels.empty()) {
        out.labels.resize(indices.size());
        for (std::size_t i = 0; i < indices.size(); ++i) out.labels[i] = d.labels[indices[i]];
    }
    return out;
}

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

std::string metrics_csv_header(std::size_t n_scales) {
    std::string h = "step,d_loss,g_loss,proxy_fid";
    for (std::size_t i = 0; i < n_scales; ++i) h += ",scale_" + std::to_string(i);
    h += ",wall_ms";
    return h;
}

std::string metrics_csv_line(const MetricsRow& row, std::size_t n_scales) {
    if (row.scales.size() != n_scales)
        throw ParameterError("metrics row has " + std::to_string(row.scales.size()) +
                             " scales, header expects " + std::to_string(n_scales));
    std::string line = std::to_string(row.step);
    line += "," + fmt_double(row.d_loss);
    line += "," + fmt_double(row.g_loss);
    line += ",";
    if (row.proxy_fid) line += fmt_double(*row.proxy_fid);
    for (double s : row.scales) line += "," + fmt_double(s);
    line += "," + fmt_double(row.wall_ms);
    return line;
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows,
                       std::size_t n_scales) {
    std::string body = metrics_csv_header(n_scales) + "\n";
    for (const auto& r : rows) body += metrics_csv_line(r, n_scales) + "\n";
    write_file_atomic(path, body.data(), body.size());
}

bool metrics_csv_equal_ignoring_wall(const std::string& csv_a, const std::string& csv_b) {
    auto strip = [](const std::string& text) {
        std::istringstream in(text);
        std::string out, line;
        while (std::getline(in, line)) {
            const std::size_t comma = line.rfind(',');
            out += line.substr(0, comma == std::string::npos ? line.size() : comma);
            out += '\n';
        }
        return out;
    };
    return strip(csv_a) == strip(csv_b);
}

} // namespace wg::io
