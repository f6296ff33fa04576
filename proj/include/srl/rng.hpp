#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace srl {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// xoshiro256** keyed from a 64-bit value. Satisfies UniformRandomBitGenerator.
class Engine {
public:
    using result_type = std::uint64_t;

    explicit Engine(std::uint64_t key) noexcept {
        std::uint64_t z = key;
        for (auto& s : state_) {
            z = splitmix64(z);
            s = z;
        }
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
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

    /// Uniform on the open interval (0, 1).
    double uniform() noexcept {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal() {
        std::normal_distribution<double> dist;
        return dist(*this);
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t state_[4];
};

/// Counter-based stream: `at(k)` is a pure function of (seed, id, k), so draws
/// do not depend on evaluation order or on how work is split across workers.
class Stream {
public:
    Stream() = default;
    explicit Stream(std::uint64_t seed, std::uint64_t id = 0) noexcept : seed_(seed), id_(id) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t id() const noexcept { return id_; }

    /// Independent child stream, e.g. one per replica.
    Stream child(std::uint64_t index) const noexcept {
        return Stream(seed_, splitmix64(id_ ^ splitmix64(index + 0x632be59bd9b4e019ULL)));
    }

    Engine at(std::uint64_t counter) const noexcept {
        return Engine(splitmix64(seed_ ^ splitmix64(id_)) ^ splitmix64(counter * 0xd1342543de82ef95ULL + 1));
    }

    friend bool operator==(const Stream&, const Stream&) = default;

private:
    std::uint64_t seed_ = 0;
    std::uint64_t id_ = 0;
};

/// Identifies the draw used by one transition: stream plus step counter.
struct SeedTag {
    Stream stream;
    std::uint64_t counter = 0;
    friend bool operator==(const SeedTag&, const SeedTag&) = default;
};

}  // namespace srl
