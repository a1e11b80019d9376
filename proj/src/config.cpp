#include "waveletgan/config.hpp"

#include "waveletgan/errors.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace wg::io {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& v, const std::string& where) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(where + ": cannot parse \"" + v + "\" as a number");
    }
}

std::int64_t parse_int(const std::string& v, const std::string& where) {
    try {
        std::size_t pos = 0;
        const long long i = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return i;
    } catch (const std::exception&) {
        throw ConfigError(where + ": cannot parse \"" + v + "\" as an integer");
    }
}

std::size_t parse_size(const std::string& v, const std::string& where) {
    const std::int64_t i = parse_int(v, where);
    if (i < 0) throw ConfigError(where + ": value must be non-negative, got " + v);
    return static_cast<std::size_t>(i);
}

std::uint64_t parse_u64(const std::string& v, const std::string& where) {
    try {
        std::size_t pos = 0;
        const unsigned long long i = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return i;
    } catch (const std::exception&) {
        throw ConfigError(where + ": cannot parse \"" + v + "\" as an unsigned integer");
    }
}

bool parse_bool(const std::string& v, const std::string& where) {
    if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
    if (v == "off" || v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(where + ": cannot parse \"" + v + "\" as a flag (use on/off)");
}

std::vector<double> parse_scales(const std::string& v, const std::string& where) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError(where + ": empty entry in scale list");
        out.push_back(parse_double(item, where));
    }
    if (out.empty()) throw ConfigError(where + ": empty scale list");
    return out;
}

} // namespace

void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value,
                        const std::string& where) {
    gan::ArchConfig& a = cfg.arch;
    if (key == "variant") {
        if (value == "mnist28") a.variant = gan::Variant::mnist28;
        else if (value == "rgb32") a.variant = gan::Variant::rgb32;
        else throw ConfigError(where + ": variant must be mnist28 or rgb32, got \"" + value + "\"");
    } else if (key == "base_width") a.base_width = parse_size(value, where);
    else if (key == "z_dim") a.z_dim = parse_size(value, where);
    else if (key == "wavelet") a.wavelet_enabled = parse_bool(value, where);
    else if (key == "wavelet_channels") {
        a.wavelet_channels = parse_size(value, where);
        if (a.wavelet_channels == 0)
            throw ConfigError(where + ": wavelet_channels must be >= 1 when wavelet enabled");
    }
    else if (key == "wavelet_K") a.wavelet_kernel_width = parse_size(value, where);
    else if (key == "sigma") a.wavelet_sigma = parse_double(value, where);
    else if (key == "scales") a.wavelet_scales = parse_scales(value, where);
    else if (key == "mode") {
        if (value == "direct") a.mode = gan::GenMode::direct;
        else if (value == "residual") a.mode = gan::GenMode::residual;
        else throw ConfigError(where + ": mode must be direct or residual, got \"" + value + "\"");
    }
    else if (key == "conditional") a.conditional = parse_bool(value, where);
    else if (key == "n_classes") a.n_classes = parse_size(value, where);
    else if (key == "loss") {
        if (value == "hinge") a.loss = gan::LossKind::hinge;
        else if (value == "minimax") a.loss = gan::LossKind::minimax;
        else throw ConfigError(where + ": loss must be hinge or minimax, got \"" + value + "\"");
    }
    else if (key == "batch") a.batch = parse_size(value, where);
    else if (key == "n_disc") a.n_disc = parse_size(value, where);
    else if (key == "lr") a.lr = parse_double(value, where);
    else if (key == "beta1") a.beta1 = parse_double(value, where);
    else if (key == "beta2") a.beta2 = parse_double(value, where);
    else if (key == "residual_alpha") a.residual_alpha = parse_double(value, where);
    else if (key == "seed") a.seed = parse_u64(value, where);
    else if (key == "steps") cfg.steps = parse_int(value, where);
    else if (key == "out_dir") cfg.out_dir = value;
    else if (key == "dataset") {
        if (value != "synthetic" && value != "idx")
            throw ConfigError(where + ": dataset must be synthetic or idx, got \"" + value + "\"");
        cfg.dataset = value;
    }
    else if (key == "idx_images") cfg.idx_images = value;
    else if (key == "idx_labels") cfg.idx_labels = value;
    else if (key == "train_n") cfg.train_n = parse_size(value, where);
    else if (key == "test_n") cfg.test_n = parse_size(value, where);
    else if (key == "data_seed") cfg.data_seed = parse_u64(value, where);
    else if (key == "checkpoint_every") cfg.checkpoint_every = parse_int(value, where);
    else if (key == "sample_every") cfg.sample_every = parse_int(value, where);
    else if (key == "fid_every") cfg.fid_every = parse_int(value, where);
    else if (key == "fid_repeats") cfg.fid_repeats = parse_size(value, where);
    else if (key == "fid_seed") cfg.fid_seed = parse_u64(value, where);
    else if (key == "feature_dim") cfg.feature_dim = parse_size(value, where);
    else if (key == "extractor") {
        if (value != "frozen_random_conv" && value != "raw_moments")
            throw ConfigError(where + ": extractor must be frozen_random_conv or raw_moments");
        cfg.extractor = value;
    }
    else if (key == "threads") cfg.threads = parse_size(value, where);
    else if (key == "grid_rows") cfg.grid_rows = parse_size(value, where);
    else if (key == "grid_cols") cfg.grid_cols = parse_size(value, where);
    else throw ConfigError(where + ": unknown key \"" + key + "\"");
}

RunConfig parse_config(const std::optional<std::string>& path,
                       const std::vector<std::pair<std::string, std::string>>& overrides) {
    RunConfig cfg;
    if (path) {
        std::ifstream in(*path);
        if (!in) throw IoError("cannot open config file " + *path);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            const std::string where = *path + ":" + std::to_string(line_no);
            if (eq == std::string::npos)
                throw ConfigError(where + ": expected `key = value`, got \"" + line + "\"");
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty()) throw ConfigError(where + ": empty key");
            apply_config_entry(cfg, key, value, where);
        }
    }
    for (const auto& [key, value] : overrides)
        apply_config_entry(cfg, key, value, "command line (--set " + key + ")");
    return cfg;
}

std::string config_reference() {
    return
        "variant = mnist28         # mnist28 | rgb32\n"
        "base_width = 32           # generator width (paper 256); discriminator uses half\n"
        "z_dim = 128\n"
        "wavelet = on              # off builds the SN-ResNet-style baseline\n"
        "wavelet_channels = 5\n"
        "wavelet_K = 9             # odd filter width\n"
        "sigma = 1.0               # mother-wavelet width\n"
        "scales = 1,2,4,8,16       # initial scales (dyadic when omitted)\n"
        "mode = direct             # direct | residual\n"
        "conditional = off\n"
        "n_classes = 10\n"
        "loss = hinge              # hinge | minimax\n"
        "batch = 64\n"
        "n_disc = 5                # discriminator sub-updates per generator update\n"
        "lr = 0.0002\n"
        "beta1 = 0.0\n"
        "beta2 = 0.999\n"
        "residual_alpha = 0.1\n"
        "seed = 1\n"
        "steps = 2000\n"
        "out_dir = runs/out\n"
        "dataset = synthetic       # synthetic | idx\n"
        "idx_images =              # IDX image file when dataset = idx\n"
        "idx_labels =              # IDX label file (optional)\n"
        "train_n = 3000\n"
        "test_n = 500\n"
        "data_seed = 7\n"
        "checkpoint_every = 0      # steps between checkpoints (0: final only)\n"
        "sample_every = 0          # steps between sample grids (0: final only)\n"
        "fid_every = 0             # steps between proxy-FID evals (0: never)\n"
        "fid_repeats = 3\n"
        "fid_seed = 99\n"
        "feature_dim = 64\n"
        "extractor = frozen_random_conv   # | raw_moments\n"
        "threads = 0               # 0: hardware default\n"
        "grid_rows = 8\n"
        "grid_cols = 8\n";
}

} // namespace wg::io
