#include "pathsim/euler.hpp"

#include <cmath>

#include "pathsim/errors.hpp"

namespace pathsim {

void EulerOracleConfig::validate() const {
    if (!(mesh > 0.0)) throw ConfigError("oracle mesh must be positive");
    if (replications < 1) throw ConfigError("oracle needs at least one replication");
}

EulerSample euler_path(const Model& m, double mesh, Rng& rng) {
    if (!(mesh > 0.0)) throw ConfigError("oracle mesh must be positive");
    const DiffusionModel& d = m.diffusion;
    const double T = d.horizon;
    const auto steps = static_cast<std::size_t>(std::ceil(T / mesh - 1e-9));
    const double dt = T / static_cast<double>(steps);
    const double sd = std::sqrt(dt);
    double v = d.start;
    std::size_t jumps = 0;
    for (std::size_t i = 0; i < steps; ++i) {
        v += d.drift(v) * dt + sd * rng.normal();
        if (m.jumps) {
            const double p = -std::expm1(-m.jumps->intensity(v) * dt);
            if (rng.uniform() < p) {
                v += m.jumps->jump_size(v, rng);
                ++jumps;
            }
        }
    }
    return {v, jumps};
}

} // namespace pathsim
