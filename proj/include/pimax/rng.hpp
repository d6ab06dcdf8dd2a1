#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace pimax {

// Seedable, portable random source. std::mt19937_64 has a fully specified
// algorithm, so identical seeds give identical streams on every platform.
// Distribution classes from <random> are *not* portable, hence the explicit
// conversions below.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // uniform in [0, 1), 53-bit resolution
    double next_double() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    // draw an index with the given (normalized) weights via CDF scan
    int sample(std::span<const double> weights) {
        double u = next_double();
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
            acc += weights[i];
            if (u < acc) return static_cast<int>(i);
        }
        return static_cast<int>(weights.size()) - 1;
    }

private:
    std::mt19937_64 gen_;
};

} // namespace pimax
