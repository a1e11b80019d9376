#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace wg {

// Deterministic random source. All randomness in the toolkit flows through
// this wrapper so that trajectories are reproducible and the full state can
// be checkpointed. Gaussian draws use a stateless Box-Muller (one value per
// two engine words) instead of std::normal_distribution, whose internal
// cache is awkward to serialize.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    std::size_t uniform_index(std::size_t n);

    // Standard normal draw.
    double gaussian();

    void fill_gaussian(double* out, std::size_t n, double stddev = 1.0);

    // In-place Fisher-Yates; the permutation depends only on the engine state.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = uniform_index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    // Engine state as the standard textual serialization of mt19937_64.
    std::string state_string() const;
    void set_state_string(const std::string& s);

private:
    std::mt19937_64 engine_;
};

} // namespace wg
