#include "pathsim/rng.hpp"

#include <cmath>
#include <limits>

namespace pathsim {

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

Rng Rng::stream(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    Rng r;
    r.engine_.seed(seq);
    return r;
}

double Rng::uniform() {
    // 53 random bits, shifted by half an ulp so neither endpoint occurs.
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // Marsaglia polar method.
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
}

double Rng::exponential(double rate) {
    if (rate <= 0.0) return std::numeric_limits<double>::infinity();
    return -std::log(uniform()) / rate;
}

std::vector<double> Rng::poisson_process(double rate, double t0, double t1) {
    std::vector<double> times;
    if (!(rate > 0.0)) return times;
    double t = t0 + exponential(rate);
    while (t <= t1) {
        times.push_back(t);
        t += exponential(rate);
    }
    return times;
}

} // namespace pathsim
