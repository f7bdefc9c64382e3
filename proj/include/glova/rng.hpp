#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace glova {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Named random stream keyed by (master seed, purpose, index...).
///
/// Every consumer derives its own stream from a key instead of sharing a
/// generator, so results do not depend on call order across subsystems or on
/// how evaluation work is split between threads.
class RngStream {
public:
    using Engine = std::mt19937_64;

    RngStream(std::uint64_t master_seed, std::string_view purpose, std::uint64_t a = 0,
              std::uint64_t b = 0)
        : engine_(derive(master_seed, purpose, a, b)) {}

    static std::uint64_t derive(std::uint64_t master_seed, std::string_view purpose,
                                std::uint64_t a, std::uint64_t b) {
        std::uint64_t k = splitmix64(master_seed);
        k = splitmix64(k ^ fnv1a(purpose));
        k = splitmix64(k ^ a);
        k = splitmix64(k ^ (b * 0xd1b54a32d192ed03ULL));
        return k;
    }

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }
    std::size_t index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }
    Engine& engine() { return engine_; }

private:
    Engine engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace glova
