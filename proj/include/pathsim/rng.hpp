#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace pathsim {

/// Random source used throughout. All variates are produced from the raw
/// 64-bit engine by hand-written transforms so that a seed reproduces the
/// same stream regardless of the standard library in use.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0);

    /// Stream `index` of master seed `seed`: the engine is seeded through
    /// std::seed_seq with the four 32-bit halves (seed lo, seed hi, index lo,
    /// index hi). Distinct indices give independent-looking streams.
    static Rng stream(std::uint64_t seed, std::uint64_t index);

    std::uint64_t bits() { return engine_(); }

    /// Uniform on the open interval (0, 1).
    double uniform();
    double uniform(double a, double b) { return a + (b - a) * uniform(); }
    double normal();
    double normal(double mean, double sd) { return mean + sd * normal(); }
    double exponential(double rate);
    bool bernoulli(double p) { return uniform() < p; }

    /// Event times of a homogeneous Poisson process of the given rate on
    /// (t0, t1], in increasing order.
    std::vector<double> poisson_process(double rate, double t0, double t1);

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace pathsim
