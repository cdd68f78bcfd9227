#include "sdelab/rng.hpp"

#include <cmath>
#include <numbers>

namespace sdelab {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void round_once(std::array<std::uint32_t, 4>& x,
                       const std::array<std::uint32_t, 2>& k) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * x[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * x[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    x = {hi1 ^ x[1] ^ k[0], lo1, hi0 ^ x[3] ^ k[1], lo0};
}

// (word_hi, word_lo) -> uniform double in (0, 1]; 53 significant bits.
inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t v =
        (static_cast<std::uint64_t>(hi) << 32) | lo;
    return static_cast<double>((v >> 11) + 1) * 0x1p-53;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) {
    for (int r = 0; r < 10; ++r) {
        round_once(counter, key);
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return counter;
}

void NormalStream::fill(std::uint32_t step_index, double* z, int dim) const {
    int produced = 0;
    std::uint32_t block = 0;
    while (produced < dim) {
        const auto words =
            philox4x32({path_lo_, path_hi_, step_index, block}, key_);
        ++block;
        const double u1 = to_unit(words[0], words[1]);
        const double u2 = to_unit(words[2], words[3]);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        z[produced++] = r * std::cos(theta);
        if (produced < dim) z[produced++] = r * std::sin(theta);
    }
}

std::uint64_t CounterRng::next_u64() {
    if (avail_ == 0) {
        block_ = philox4x32({stream_lo_, stream_hi_,
                             static_cast<std::uint32_t>(counter_),
                             static_cast<std::uint32_t>(counter_ >> 32)},
                            key_);
        ++counter_;
        avail_ = 2;
    }
    --avail_;
    const int base = avail_ * 2;
    return (static_cast<std::uint64_t>(block_[base]) << 32) | block_[base + 1];
}

std::uint64_t CounterRng::next_below(std::uint64_t bound) {
    const std::uint64_t limit = bound * (UINT64_MAX / bound);
    for (;;) {
        const std::uint64_t v = next_u64();
        if (v < limit) return v % bound;
    }
}

}  // namespace sdelab
