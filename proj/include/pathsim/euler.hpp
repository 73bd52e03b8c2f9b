#pragma once

#include <cstddef>

#include "pathsim/model.hpp"
#include "pathsim/rng.hpp"

namespace pathsim {

/// Fine-mesh Euler reference for the model: V += alpha(V) dt + N(0, dt),
/// then a jump with probability 1 - exp(-lambda(V) dt). Approximate by
/// construction; used only as a comparison distribution.
struct EulerOracleConfig {
    double mesh = 1e-4;
    std::size_t replications = 1;
    /// ConfigError unless mesh > 0.
    void validate() const;
};

struct EulerSample {
    double terminal;
    std::size_t jumps;
};

EulerSample euler_path(const Model& m, double mesh, Rng& rng);

} // namespace pathsim
