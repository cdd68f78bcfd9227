#pragma once

#include <array>
#include <cstdint>

#include "sdelab/linalg.hpp"

namespace sdelab {

// Philox 4x32, 10 rounds. A pure counter-based block cipher: the output is
// a function of (counter, key) alone, so any (path, step) pair can be
// generated independently of scheduling or draw order.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

// Standard normal variates for one (seed, path, step) cell, filled into
// z[0..dim). Uses Box-Muller over 53-bit uniforms; two normals per Philox
// block, blocks indexed within the step.
class NormalStream {
  public:
    NormalStream(std::uint64_t seed, std::uint64_t path_index)
        : key_{static_cast<std::uint32_t>(seed),
               static_cast<std::uint32_t>(seed >> 32)},
          path_lo_(static_cast<std::uint32_t>(path_index)),
          path_hi_(static_cast<std::uint32_t>(path_index >> 32)) {}

    void fill(std::uint32_t step_index, double* z, int dim) const;
    void fill(std::uint32_t step_index, Vec& z) const {
        fill(step_index, z.data(), static_cast<int>(z.size()));
    }

  private:
    std::array<std::uint32_t, 2> key_;
    std::uint32_t path_lo_, path_hi_;
};

// Uniform 64-bit stream for shuffles and subsampling; deterministic per
// (seed, stream) and position.
class CounterRng {
  public:
    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : key_{static_cast<std::uint32_t>(seed),
               static_cast<std::uint32_t>(seed >> 32)},
          stream_lo_(static_cast<std::uint32_t>(stream)),
          stream_hi_(static_cast<std::uint32_t>(stream >> 32)) {}

    std::uint64_t next_u64();
    // Unbiased integer in [0, bound) by rejection.
    std::uint64_t next_below(std::uint64_t bound);

  private:
    std::array<std::uint32_t, 2> key_;
    std::uint32_t stream_lo_, stream_hi_;
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> block_{};
    int avail_ = 0;
};

}  // namespace sdelab
