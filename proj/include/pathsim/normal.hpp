#pragma once

#include "pathsim/rng.hpp"

namespace pathsim {

double norm_cdf(double z);
/// Upper tail 1 - Phi(z).
double norm_sf(double z);
/// log(1 - Phi(z)), accurate far into the upper tail.
double log_norm_sf(double z);
/// log(Phi(b) - Phi(a)) for standardised a < b.
double log_norm_mass(double a, double b);

/// Draw from N(mean, sd^2) restricted to [lo, hi]. Inverse CDF in the body;
/// beyond 8 standard deviations an exact exponential or uniform rejection
/// step is used instead.
double sample_truncated_normal(double mean, double sd, double lo, double hi, Rng& rng);

} // namespace pathsim
