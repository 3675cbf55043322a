#pragma once

#include <cstdint>
#include <cmath>
#include <string_view>

namespace pamlab {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// FNV-1a over the purpose string, so stream tags are stable across runs.
inline std::uint64_t hash_tag(std::string_view tag) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// (master seed, replicate index, purpose tag) -> one reproducible stream.
// Streams with distinct triples are independent for all practical purposes,
// and the mapping does not depend on the order streams are created in, so
// any parallel schedule reproduces the same numbers.
struct RngStream {
    std::uint64_t master_seed = 0;
    std::uint64_t replicate = 0;
    std::uint64_t tag = 0;

    RngStream() = default;
    RngStream(std::uint64_t seed, std::uint64_t rep, std::string_view purpose)
        : master_seed(seed), replicate(rep), tag(hash_tag(purpose)) {}
    RngStream(std::uint64_t seed, std::uint64_t rep, std::uint64_t tag_)
        : master_seed(seed), replicate(rep), tag(tag_) {}
};

// xoshiro256++ seeded by mixing the stream triple through splitmix64.
// Gaussians use Box-Muller (no rejection step), so the draw count per
// variate is fixed and platform-independent.
class Rng {
public:
    explicit Rng(const RngStream& s) {
        std::uint64_t x = s.master_seed;
        x ^= 0x632be59bd9b4e019ull ^ (s.replicate * 0xff51afd7ed558ccdull);
        x ^= (s.tag * 0xc4ceb9fe1a85ec53ull);
        for (auto& w : state_) w = splitmix64(x);
        // avoid the all-zero state (probability ~0, but cheap to rule out)
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // uniform on (0,1]
    double u01() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = u01();
        const double u2 = u01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double exponential() { return -std::log(u01()); }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t state_[4];
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace pamlab
