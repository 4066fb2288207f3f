#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

namespace bnm {

// splitmix64; used to seed xoshiro and to derive independent stream seeds.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

// Named sub-streams derived from one master seed. Each consumer owns its
// stream so that e.g. the objective choice never shifts batch order.
enum class Stream : std::uint64_t {
    Data = 1,
    Init = 2,
    LabeledBatches = 3,
    UnlabeledBatches = 4,
    Evaluation = 5,
    Population = 6,
};

std::uint64_t derive_seed(std::uint64_t master, Stream stream) noexcept;

// xoshiro256++ with splitmix64 seeding. uniform() takes the top 53 bits;
// normal() is the cosine branch of Box-Muller and consumes two uniforms.
class Xoshiro256pp {
public:
    explicit Xoshiro256pp(std::uint64_t seed) noexcept;

    std::uint64_t next() noexcept;
    double uniform() noexcept;                          // [0, 1)
    double uniform(double lo, double hi) noexcept;      // [lo, hi)
    double normal() noexcept;                           // N(0, 1)
    std::size_t below(std::size_t n) noexcept;          // [0, n), n > 0

    friend bool operator==(const Xoshiro256pp&, const Xoshiro256pp&) = default;

private:
    std::array<std::uint64_t, 4> s_{};
};

} // namespace bnm
