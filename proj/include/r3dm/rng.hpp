#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace r3dm {

// Deterministic random stream. mt19937_64 is fully specified by the standard
// and the Box-Muller transform below avoids the implementation-defined
// std::normal_distribution, so identical seeds give identical streams on any
// platform.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // standard normal
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 == 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // complex Gaussian with E|z|^2 = 1 (each component has variance 1/2)
    std::complex<double> complex_gaussian() {
        const double s = 1.0 / std::sqrt(2.0);
        return {s * gaussian(), s * gaussian()};
    }

    std::uint64_t next_u64() { return gen_(); }

  private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace r3dm
