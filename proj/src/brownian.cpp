#include "pathsim/brownian.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "pathsim/errors.hpp"

namespace pathsim {

double bridge_point(const Bridge& b, double q, Rng& rng) {
    if (!(q >= b.s && q <= b.t)) throw ContractViolation("bridge_point: time outside bridge");
    if (q == b.s) return b.x;
    if (q == b.t) return b.y;
    const double len = b.t - b.s;
    const double mean = b.x + (q - b.s) * (b.y - b.x) / len;
    const double var = (b.t - q) * (q - b.s) / len;
    return mean + std::sqrt(var) * rng.normal();
}

double sample_inverse_gaussian(double mu, double lambda, Rng& rng) {
    if (!(mu > 0.0) || !(lambda > 0.0)) throw ContractViolation("inverse Gaussian: bad parameters");
    const double nu = rng.normal();
    const double r = mu * nu * nu / (2.0 * lambda);
    // mu * (1 + r - sqrt(r^2 + 2r)), rearranged to avoid cancellation.
    const double x = mu / (1.0 + r + std::sqrt(r * (r + 2.0)));
    if (rng.uniform() <= mu / (mu + x)) return x;
    return mu * mu / x;
}

ExtremeRecord sample_min(const Bridge& b, double a1, double a2, Rng& rng) {
    const double T = b.t - b.s;
    const double lo = std::min(b.x, b.y);
    if (!(T > 0.0)) throw ContractViolation("sample_min: non-positive length");
    if (!(a1 < a2) || !(a2 <= lo)) throw ContractViolation("sample_min: need a1 < a2 <= min(x, y)");
    // log P(min <= a) = -2 (x - a)(y - a) / T, increasing in a below min(x, y).
    auto log_cdf = [&](double a) { return -2.0 * (b.x - a) * (b.y - a) / T; };
    const double l2 = log_cdf(a2);
    const double l1 = std::isfinite(a1) ? log_cdf(a1) : -std::numeric_limits<double>::infinity();
    if (!(l1 < l2) && std::isfinite(a1))
        throw ContractViolation("sample_min: minimum law not increasing on [a1, a2]");
    const double v = rng.uniform();
    const double log_u = l2 + std::log(v + (1.0 - v) * std::exp(l1 - l2));
    const double dy = b.y - b.x;
    double m = b.x - 0.5 * (std::sqrt(dy * dy - 2.0 * T * log_u) - dy);
    m = std::clamp(m, std::isfinite(a1) ? a1 : m, a2);

    const double dx_m = b.x - m, dy_m = b.y - m;
    double tau;
    if (dx_m <= 0.0) {
        tau = b.s;
    } else if (dy_m <= 0.0) {
        tau = b.t;
    } else {
        double V;
        if (rng.uniform() < dx_m / (dx_m + dy_m))
            V = sample_inverse_gaussian(dy_m / dx_m, dy_m * dy_m / T, rng);
        else
            V = 1.0 / sample_inverse_gaussian(dx_m / dy_m, dx_m * dx_m / T, rng);
        tau = b.s + T / (1.0 + V);
    }
    return {tau, m, ExtremeKind::Minimum};
}

ExtremeRecord sample_max(const Bridge& b, double a1, double a2, Rng& rng) {
    ExtremeRecord r = sample_min({b.s, b.t, -b.x, -b.y}, -a2, -a1, rng);
    return {r.tau, -r.value, ExtremeKind::Maximum};
}

namespace {

// Bessel-3 bridge from the extreme at tau (distance 0) to distance c at time
// r, observed at the given times (all on the same side of tau).
void bessel_side(double tau, double r, double c, const std::vector<std::size_t>& idx,
                 const std::vector<double>& times, std::vector<double>& out, Rng& rng) {
    if (idx.empty()) return;
    const double L = std::abs(r - tau);
    std::vector<std::size_t> order = idx;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(times[a] - tau) < std::abs(times[b] - tau);
    });
    const std::array<double, 3> end{c / std::sqrt(L), 0.0, 0.0};
    std::array<double, 3> z{0.0, 0.0, 0.0};
    double up = 0.0;
    for (std::size_t i : order) {
        const double u = std::abs(times[i] - tau) / L;
        const double frac = (u - up) / (1.0 - up);
        const double sd = std::sqrt(std::max(0.0, (u - up) * (1.0 - u) / (1.0 - up)));
        double norm2 = 0.0;
        for (int d = 0; d < 3; ++d) {
            z[d] = z[d] + frac * (end[d] - z[d]) + sd * rng.normal();
            norm2 += z[d] * z[d];
        }
        out[i] = std::sqrt(L) * std::sqrt(norm2);
        up = u;
    }
}

} // namespace

std::vector<double> bessel_bridge_points(const Bridge& b, const ExtremeRecord& e,
                                         const std::vector<double>& times, Rng& rng) {
    const double sign = e.kind == ExtremeKind::Minimum ? 1.0 : -1.0;
    // Work with the distance above the minimum of the (possibly reflected) path.
    const double m = sign * e.value;
    const double x = sign * b.x, y = sign * b.y;
    std::vector<double> dist(times.size(), 0.0);
    std::vector<std::size_t> left, right;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double q = times[i];
        if (!(q >= b.s && q <= b.t)) throw ContractViolation("bessel bridge: time outside bridge");
        if (q == e.tau) continue;
        (q < e.tau ? left : right).push_back(i);
    }
    bessel_side(e.tau, b.s, x - m, left, times, dist, rng);
    bessel_side(e.tau, b.t, y - m, right, times, dist, rng);
    std::vector<double> out(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) out[i] = sign * (m + dist[i]);
    return out;
}

double bessel_bridge_point(const Bridge& b, const ExtremeRecord& e, double q, Rng& rng) {
    return bessel_bridge_points(b, e, {q}, rng).front();
}

double sample_tilted(const std::function<double(double)>& log_h, const GaussianProposal& prop,
                     Rng& rng, std::size_t max_attempts) {
    if (!(prop.variance > 0.0)) throw ContractViolation("tilted sampler: non-positive variance");
    const double sd = std::sqrt(prop.variance);
    for (std::size_t n = 0; n < max_attempts; ++n) {
        const double y = prop.mean + sd * rng.normal();
        const double log_q = -0.5 * (y - prop.mean) * (y - prop.mean) / prop.variance;
        const double log_ratio = log_h(y) - log_q - prop.log_bound;
        if (log_ratio > 1e-9)
            throw ContractViolation("tilted sampler: density ratio exceeds its declared bound");
        if (std::log(rng.uniform()) <= log_ratio) return y;
    }
    throw AttemptLimitError("tilted sampler: attempt cap reached");
}

} // namespace pathsim

namespace pathsim {

AlternatingSeries bessel_containment_series(const Bridge& b, const ExtremeRecord& e,
                                            const std::vector<Knot>& knots, double u) {
    if (e.kind != ExtremeKind::Minimum) throw ContractViolation("containment series expects a minimum");
    std::vector<Knot> pts{{b.s, b.x}};
    for (const Knot& k : knots) pts.push_back(k);
    pts.push_back({e.tau, e.value});
    pts.push_back({b.t, b.y});
    std::stable_sort(pts.begin(), pts.end(), [](const Knot& a, const Knot& c) { return a.t < c.t; });
    std::vector<AlternatingSeries> parts;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        if (!(pts[i + 1].t > pts[i].t)) continue;
        parts.push_back(delta_series({pts[i].t, pts[i + 1].t, pts[i].w, pts[i + 1].w}, e.value, u));
    }
    return product_series(std::move(parts));
}

} // namespace pathsim
