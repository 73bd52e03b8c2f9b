#include "pathsim/normal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/erf.hpp>

#include "pathsim/errors.hpp"

namespace pathsim {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;
constexpr double kTail = 8.0;

// Standard normal restricted to [a, b] with a >= kTail.
double upper_tail_sample(double a, double b, Rng& rng) {
    if (a * (b - a) < 1.0) {
        // Narrow window: uniform proposal, ratio bounded below by about e^-1.5.
        for (;;) {
            const double x = rng.uniform(a, b);
            if (rng.uniform() <= std::exp(-0.5 * (x - a) * (x + a))) return x;
        }
    }
    const double lambda = 0.5 * (a + std::sqrt(a * a + 4.0));
    for (;;) {
        const double x = a + rng.exponential(lambda);
        if (x > b) continue;
        if (rng.uniform() <= std::exp(-0.5 * (x - lambda) * (x - lambda))) return x;
    }
}

double standard_truncated(double a, double b, Rng& rng) {
    if (a >= kTail) return upper_tail_sample(a, b, rng);
    if (b <= -kTail) return -upper_tail_sample(-b, -a, rng);
    double x;
    if (a >= 0.0) {
        const double qa = norm_sf(a), qb = norm_sf(b);
        const double u = qb + (qa - qb) * rng.uniform();
        x = kSqrt2 * boost::math::erfc_inv(2.0 * u);
    } else if (b <= 0.0) {
        const double qa = norm_sf(-b), qb = norm_sf(-a);
        const double u = qb + (qa - qb) * rng.uniform();
        x = -kSqrt2 * boost::math::erfc_inv(2.0 * u);
    } else {
        const double pa = norm_cdf(a), pb = norm_cdf(b);
        const double u = pa + (pb - pa) * rng.uniform();
        x = -kSqrt2 * boost::math::erfc_inv(2.0 * u);
    }
    return std::clamp(x, a, b);
}

} // namespace

double norm_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

double norm_sf(double z) { return 0.5 * std::erfc(z / kSqrt2); }

double log_norm_sf(double z) {
    if (z < 30.0) {
        if (z < -1.0) return std::log1p(-norm_sf(-z));
        return std::log(norm_sf(z));
    }
    const double r = 1.0 / (z * z);
    const double series = 1.0 - r * (1.0 - 3.0 * r * (1.0 - 5.0 * r * (1.0 - 7.0 * r)));
    return -0.5 * z * z - std::log(z) - kLogSqrt2Pi + std::log(series);
}

double log_norm_mass(double a, double b) {
    if (!(a < b)) return -std::numeric_limits<double>::infinity();
    if (a >= 0.0) {
        const double la = log_norm_sf(a), lb = log_norm_sf(b);
        return la + std::log1p(-std::exp(lb - la));
    }
    if (b <= 0.0) return log_norm_mass(-b, -a);
    return std::log(0.5 * (std::erf(b / kSqrt2) - std::erf(a / kSqrt2)));
}

double sample_truncated_normal(double mean, double sd, double lo, double hi, Rng& rng) {
    if (!(lo <= hi) || !(sd > 0.0)) throw ContractViolation("truncated normal: empty support");
    if (lo == hi) return lo;
    const double a = (lo - mean) / sd, b = (hi - mean) / sd;
    return std::clamp(mean + sd * standard_truncated(a, b, rng), lo, hi);
}

} // namespace pathsim
