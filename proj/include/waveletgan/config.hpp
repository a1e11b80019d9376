#pragma once

#include "waveletgan/gan.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace wg::io {

// Everything a run needs: architecture plus tool settings. Populated from
// defaults, then a `key = value` config file, then CLI overrides.
struct RunConfig {
    gan::ArchConfig arch;
    std::int64_t steps = 2000;
    std::string out_dir = "runs/out";
    std::string dataset = "synthetic";       // synthetic | idx
    std::string idx_images;                  // for dataset = idx
    std::string idx_labels;
    std::size_t train_n = 3000;              // synthetic corpus sizes
    std::size_t test_n = 500;
    std::uint64_t data_seed = 7;
    std::int64_t checkpoint_every = 0;       // 0 = only at the end
    std::int64_t sample_every = 0;           // 0 = only at the end
    std::int64_t fid_every = 0;              // 0 = never during training
    std::size_t fid_repeats = 3;
    std::uint64_t fid_seed = 99;
    std::size_t feature_dim = 64;
    std::string extractor = "frozen_random_conv"; // | raw_moments
    std::size_t threads = 0;                 // 0 = hardware default
    std::size_t grid_rows = 8;
    std::size_t grid_cols = 8;
};

// Parses the file (when given), then applies overrides in order. Unknown
// keys and malformed values raise ConfigError naming the offending line.
RunConfig parse_config(const std::optional<std::string>& path,
                       const std::vector<std::pair<std::string, std::string>>& overrides = {});

// Single assignment, shared by file lines and CLI --set overrides.
void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value,
                        const std::string& where);

// The full key set with defaults, for --help and the README.
std::string config_reference();

} // namespace wg::io
