#pragma once

#include "waveletgan/gan.hpp"
#include "waveletgan/tensor.hpp"

#include <string>
#include <vector>

namespace wg::io {

// "WGC1" named-tensor container: magic (4 bytes), version u32 LE, tensor
// count u32 LE, then per tensor: name length u16 LE, UTF-8 name, rank u8,
// dims u32[] LE, payload as little-endian IEEE-754 doubles.
inline constexpr char kCheckpointMagic[4] = {'W', 'G', 'C', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
    std::string name;
    Tensor tensor;
};

std::vector<std::uint8_t> encode_tensor_file(const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> decode_tensor_file(const std::vector<std::uint8_t>& bytes,
                                            const std::string& origin);

void save_tensor_file(const std::string& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_tensor_file(const std::string& path);

// Full training snapshot: architecture metadata, every named parameter
// (wavelet scales included), Adam moments, spectral-norm u vectors, BN
// running statistics, step counters, the training RNG state, and the batch
// sampler permutation/cursor when one is supplied.
void save_checkpoint(gan::GanModel& model, const std::string& path,
                     const gan::BatchSampler* sampler = nullptr);
gan::GanModel load_checkpoint(const std::string& path, gan::BatchSampler* sampler_out = nullptr);

// Human-readable listing for the `inspect` subcommand.
std::string describe_checkpoint(const std::string& path);

} // namespace wg::io
