#pragma once

#include <cmath>
#include <cstdint>
#include <complex>

namespace stbc {

// Self-contained PRNG so results are reproducible across platforms and across
// thread schedules: each work item derives its own stream from (seed, index).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {
        // warm up so nearby seeds decorrelate
        next();
        next();
    }

    static Rng stream(std::uint64_t seed, std::uint64_t index) {
        return Rng(seed ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
    }

    std::uint64_t next() {  // splitmix64
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    double uniform01() {  // (0,1)
        return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
    }

    std::uint64_t uniform_below(std::uint64_t n) { return next() % n; }

    double gaussian() {  // standard normal, Box-Muller
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u = uniform01();
        const double v = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u));
        spare_ = r * std::sin(2.0 * M_PI * v);
        have_spare_ = true;
        return r * std::cos(2.0 * M_PI * v);
    }

    // circularly symmetric complex Gaussian, zero mean, unit variance
    std::complex<double> cgaussian() {
        const double re = gaussian() * M_SQRT1_2;
        const double im = gaussian() * M_SQRT1_2;
        return {re, im};
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace stbc
