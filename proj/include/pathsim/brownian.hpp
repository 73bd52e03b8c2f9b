#pragma once

#include <functional>
#include <vector>

#include "pathsim/rng.hpp"
#include "pathsim/series.hpp"

namespace pathsim {

enum class ExtremeKind { Minimum, Maximum };

struct ExtremeRecord {
    double tau;
    double value;
    ExtremeKind kind;
};

/// Brownian bridge value at time q in (s, t).
double bridge_point(const Bridge& b, double q, Rng& rng);

/// Minimum of the bridge and its location, conditioned on the minimum lying
/// in [a1, a2] with a1 < a2 <= min(x, y). a1 may be -infinity.
ExtremeRecord sample_min(const Bridge& b, double a1, double a2, Rng& rng);
/// Maximum conditioned to lie in [a1, a2] with max(x, y) <= a1 < a2
/// (a2 may be +infinity); obtained by reflection of sample_min.
ExtremeRecord sample_max(const Bridge& b, double a1, double a2, Rng& rng);

/// Value at q of the bridge conditioned on the extreme `e` (a Bessel bridge
/// on each side of e.tau). q == e.tau returns the extreme value.
double bessel_bridge_point(const Bridge& b, const ExtremeRecord& e, double q, Rng& rng);
/// Joint draw at several times (any order) given the extreme.
std::vector<double> bessel_bridge_points(const Bridge& b, const ExtremeRecord& e,
                                         const std::vector<double>& times, Rng& rng);

/// Inverse Gaussian IG(mu, lambda) via the transformation with multiple roots.
double sample_inverse_gaussian(double mu, double lambda, Rng& rng);

/// Gaussian proposal for a tilted endpoint density h: log h(y) - log q(y)
/// <= log_bound for all y, both densities unnormalised
/// (q(y) = exp(-(y - mean)^2 / (2 variance))).
struct GaussianProposal {
    double mean;
    double variance;
    double log_bound;
};

/// Rejection draw from the unnormalised log density `log_h`. Raises
/// ContractViolation if a proposal exceeds the declared bound.
double sample_tilted(const std::function<double(double)>& log_h, const GaussianProposal& prop,
                     Rng& rng, std::size_t max_attempts = 1000000);

} // namespace pathsim

namespace pathsim {

/// Probability that a bridge whose minimum `e` is known, observed at the
/// knots, stays at or below u: a product of delta series over the pieces
/// delimited by s, e.tau, the knots and t.
AlternatingSeries bessel_containment_series(const Bridge& b, const ExtremeRecord& e,
                                            const std::vector<Knot>& knots, double u);

} // namespace pathsim
