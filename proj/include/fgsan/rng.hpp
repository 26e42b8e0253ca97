#ifndef FGSAN_RNG_HPP
#define FGSAN_RNG_HPP

#include <array>
#include <cstdint>
#include <initializer_list>

namespace fgsan {

/// xoshiro256** seeded through splitmix64. Every random draw in the project
/// goes through this generator so results are identical across platforms
/// and standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    /// Independent stream derived from (seed, path...). Used to give each
    /// component, fold and repeat its own generator.
    static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

    std::uint64_t next_u64();
    /// Uniform on [0, 1).
    double uniform();
    /// Uniform on the open interval (0, 1).
    double uniform_open();
    double uniform(double lo, double hi);
    /// Standard normal via Box-Muller.
    double normal();
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

private:
    std::array<std::uint64_t, 4> state_{};
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace fgsan

#endif  // FGSAN_RNG_HPP
