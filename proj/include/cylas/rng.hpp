// SPDX-License-Identifier: MIT
//
// Seeded random sampling helpers. All draws go through one conversion
// (top 53 bits of mt19937_64), so a fixed seed yields the same stream on
// every platform; distribution adapters from <random> are avoided because
// their output is implementation-defined.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace cylas {

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform draw in [0, 1).
    [[nodiscard]] double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    /// Uniform draw in [lo, hi).
    [[nodiscard]] double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    /// Standard normal via the Marsaglia polar method.
    [[nodiscard]] double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = uniform(-1.0, 1.0);
            v = uniform(-1.0, 1.0);
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        have_spare_ = true;
        return u * m;
    }

    /// Uniform point on the unit sphere S^{n-1} in R^n.
    [[nodiscard]] std::vector<double> unit_vector(int n) {
        if (n < 1) throw std::invalid_argument("unit_vector: n >= 1 required");
        std::vector<double> x(static_cast<size_t>(n));
        double r2;
        do {
            r2 = 0.0;
            for (auto& xi : x) {
                xi = normal();
                r2 += xi * xi;
            }
        } while (r2 == 0.0);
        const double inv = 1.0 / std::sqrt(r2);
        for (auto& xi : x) xi *= inv;
        return x;
    }

  private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace cylas
