#pragma once
// Deterministic per-trajectory random streams. Trajectory k of a run with
// seed s always sees the same sequence, independent of execution order or
// thread count, and the generators are fully specified by the standard, so
// sequences are bit-stable across platforms.

#include <cmath>
#include <cstdint>
#include <random>

namespace fit {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}

    static RngStream for_trajectory(std::uint64_t seed, std::uint64_t index) {
        return RngStream(splitmix64(splitmix64(seed) + index));
    }

    // 53-bit uniform in [0, 1)
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // standard normal via Box-Muller (fixed evaluation order, no library
    // distribution objects whose streams may differ between implementations)
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform(); // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

  private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace fit
