#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace bprelab {

// splitmix64 finalizer; also usable as a standalone mixing step.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// xoshiro256** with state derived from (seed, stream) by a splitmix64 chain.
// Streams are a counter-based split of the master seed: stream i is fully
// determined by (seed, i), no jumping or shared state, so a batch of
// trajectories can be partitioned across threads in any order.
class StreamRng {
public:
    using result_type = std::uint64_t;

    StreamRng() : StreamRng(0, 0) {}

    StreamRng(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t h = mix64(seed) ^ mix64(stream ^ 0x6A09E667F3BCC908ull);
        for (auto& word : state_) {
            h = mix64(h);
            word = h;
        }
        // all-zero state is invalid for xoshiro
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<std::uint64_t>::max(); }

    result_type operator()() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // uniform on (0,1]: never 0, so log(u) and floor(1/u) are safe
    double uniform01() {
        return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53;
    }

    bool operator==(const StreamRng& other) const { return state_ == other.state_; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::array<std::uint64_t, 4> state_{};
};

}  // namespace bprelab
