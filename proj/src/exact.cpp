#include "pathsim/exact.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "pathsim/errors.hpp"
#include "pathsim/intersection.hpp"
#include "pathsim/layered_bridge.hpp"

namespace pathsim {

std::string to_string(Provenance p) {
    switch (p) {
    case Provenance::BEA: return "BEA";
    case Provenance::UEA: return "UEA";
    case Provenance::AUEA: return "AUEA";
    }
    return "?";
}

Provenance provenance_from_string(const std::string& s) {
    if (s == "BEA") return Provenance::BEA;
    if (s == "UEA") return Provenance::UEA;
    if (s == "AUEA") return Provenance::AUEA;
    throw ConfigError("unknown skeleton provenance '" + s + "'");
}

std::size_t gap_index(const Skeleton& sk, double time) {
    if (sk.points.size() < 2 || !(time >= sk.start_time() && time <= sk.end_time()))
        throw ContractViolation("time outside skeleton range");
    auto it = std::upper_bound(sk.points.begin(), sk.points.end(), time,
                               [](double v, const Knot& k) { return v < k.t; });
    std::size_t i = static_cast<std::size_t>(it - sk.points.begin());
    if (i == sk.points.size()) i = sk.points.size() - 1;
    return i - 1;
}

double restore(Skeleton& sk, double time, Rng& rng) {
    const std::size_t g = gap_index(sk, time);
    if (sk.points[g].t == time) return sk.points[g].w;
    if (sk.points[g + 1].t == time) return sk.points[g + 1].w;
    const Knot a = sk.points[g], b = sk.points[g + 1];
    double w;
    if (sk.layered()) {
        const Bisection bis = layered_bridge_il(sk.layers[g], time, rng);
        w = bis.w;
        sk.layers[g] = bis.left;
        sk.layers.insert(sk.layers.begin() + static_cast<std::ptrdiff_t>(g) + 1, bis.right);
    } else {
        w = bridge_point({a.t, b.t, a.w, b.w}, time, rng);
    }
    sk.points.insert(sk.points.begin() + static_cast<std::ptrdiff_t>(g) + 1, Knot{time, w});
    return w;
}

std::vector<double> restore(Skeleton& sk, const std::vector<double>& times, Rng& rng) {
    std::vector<double> out;
    out.reserve(times.size());
    for (double t : times) out.push_back(restore(sk, t, rng));
    return out;
}

namespace {

void check_interval(double t0, double t1) {
    if (!(t1 > t0)) throw ConfigError("simulation interval must have positive length");
}

void check_phi(const DiffusionModel& m, double phi, const PhiBounds& pb) {
    if (phi > pb.upper + 1e-9 * (1.0 + std::abs(pb.upper)) || phi < pb.lower - 1e-9 * (1.0 + std::abs(pb.lower)))
        throw ContractViolation("model '" + m.name + "': phi outside its declared bounds");
}

// Acceptance of one point of the dominating Poisson process.
bool phi_point_accepts(const DiffusionModel& m, double value, const PhiBounds& pb, Rng& rng) {
    const double phi = m.phi(value);
    check_phi(m, phi, pb);
    return rng.uniform() * (pb.upper - pb.lower) <= pb.upper - phi;
}

void bump_attempts(std::size_t n, const ExactOptions& opt) {
    if (n > opt.attempt_cap) throw AttemptLimitError("exact algorithm: attempt cap reached");
}

} // namespace

bool floor_correction_accepts(const DiffusionModel& m, double layer_lower, double len, Rng& rng,
                              const ExactOptions& opt) {
    if (opt.layer_relative_bound) return true;
    if (!m.phi_floor)
        throw ConfigError("model '" + m.name + "' declares no phi_floor; layered algorithms need one");
    const double excess = layer_lower - *m.phi_floor;
    if (excess < -1e-12) throw ContractViolation("model '" + m.name + "': layer phi bound below phi_floor");
    return rng.uniform() <= std::exp(-std::max(excess, 0.0) * len);
}

Skeleton run_bea(const DiffusionModel& m, double t0, double x0, double t1, Rng& rng, const ExactOptions& opt) {
    check_interval(t0, t1);
    if (!m.global_phi_bounds) throw ConfigError("BEA needs a model with globally bounded phi");
    const PhiBounds pb = *m.global_phi_bounds;
    Skeleton sk;
    sk.provenance = Provenance::BEA;
    for (std::size_t n = 1;; ++n) {
        bump_attempts(n, opt);
        sk.stats.proposals = n;
        const double y = sample_biased_endpoint(m, x0, t1 - t0, rng);
        const auto times = rng.poisson_process(pb.upper - pb.lower, t0, t1);
        sk.points = {{t0, x0}};
        bool ok = true;
        double prev_t = t0, prev_w = x0;
        for (double q : times) {
            const double w = bridge_point({prev_t, t1, prev_w, y}, q, rng);
            ++sk.stats.evaluated;
            sk.points.push_back({q, w});
            prev_t = q;
            prev_w = w;
            if (!phi_point_accepts(m, w, pb, rng)) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        sk.points.push_back({t1, y});
        sk.stats.kappa = times.size();
        return sk;
    }
}

namespace {

Skeleton uea_intersection(const DiffusionModel& m, double t0, double x0, double t1, Rng& rng,
                          const ExactOptions& opt) {
    Skeleton sk;
    sk.provenance = Provenance::UEA;
    for (std::size_t n = 1;; ++n) {
        bump_attempts(n, opt);
        sk.stats.proposals = n;
        const double y = sample_biased_endpoint(m, x0, t1 - t0, rng);
        const IntersectionLayer il = initial_layer({t0, t1, x0, y}, opt.layers, rng);
        const PhiBounds pb = m.phi_bounds({il.lower(), il.upper()});
        if (!floor_correction_accepts(m, pb.lower, t1 - t0, rng, opt)) continue;
        const auto times = rng.poisson_process(pb.upper - pb.lower, t0, t1);
        sk.points = {{t0, x0}, {t1, y}};
        sk.layers = {il};
        bool ok = true;
        for (double q : times) {
            const double w = restore(sk, q, rng);
            ++sk.stats.evaluated;
            if (!phi_point_accepts(m, w, pb, rng)) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        sk.stats.kappa = times.size();
        return sk;
    }
}

Skeleton uea_bessel(const DiffusionModel& m, double t0, double x0, double t1, Rng& rng, const ExactOptions& opt) {
    Skeleton sk;
    sk.provenance = Provenance::UEA;
    for (std::size_t n = 1;; ++n) {
        bump_attempts(n, opt);
        sk.stats.proposals = n;
        const double y = sample_biased_endpoint(m, x0, t1 - t0, rng);
        const Bridge b{t0, t1, x0, y};
        const std::size_t iota = simulate_layer(b, opt.layers, rng);
        const double a = opt.layers.offset(iota, t1 - t0);
        const PhiBounds pb = m.phi_bounds({std::min(x0, y) - a, std::max(x0, y) + a});
        if (!floor_correction_accepts(m, pb.lower, t1 - t0, rng, opt)) continue;
        const auto times = rng.poisson_process(pb.upper - pb.lower, t0, t1);
        const LayeredBridgeDraw draw = simulate_layered_bridge(b, iota, opt.layers, times, rng);
        bool ok = true;
        for (const Knot& k : draw.points) {
            ++sk.stats.evaluated;
            if (!phi_point_accepts(m, k.w, pb, rng)) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        sk.points = {{t0, x0}};
        sk.points.insert(sk.points.end(), draw.points.begin(), draw.points.end());
        sk.points.push_back({t1, y});
        sk.layers = augment_to_intersection(draw, rng);
        sk.stats.kappa = times.size();
        return sk;
    }
}

} // namespace

Skeleton run_uea(const DiffusionModel& m, double t0, double x0, double t1, Rng& rng, const ExactOptions& opt) {
    check_interval(t0, t1);
    if (opt.backend == UeaBackend::Bessel) return uea_bessel(m, t0, x0, t1, rng, opt);
    return uea_intersection(m, t0, x0, t1, rng, opt);
}

Skeleton run_auea(const DiffusionModel& m, double t0, double x0, double t1, Rng& rng, const ExactOptions& opt) {
    check_interval(t0, t1);
    Skeleton sk;
    sk.provenance = Provenance::AUEA;
    // A pending sub-interval [s, t] of the gap starting at time `gap_start`,
    // whose layer is the one stored for that gap.
    struct Item {
        double s, t;
        double gap_start;
    };
    for (std::size_t n = 1;; ++n) {
        bump_attempts(n, opt);
        sk.stats.proposals = n;
        const double y = sample_biased_endpoint(m, x0, t1 - t0, rng);
        sk.points = {{t0, x0}, {t1, y}};
        sk.layers = {initial_layer({t0, t1, x0, y}, opt.layers, rng)};
        if (!floor_correction_accepts(m, m.phi_bounds({sk.layers[0].lower(), sk.layers[0].upper()}).lower,
                                      t1 - t0, rng, opt))
            continue;
        std::deque<Item> queue{{t0, t1, t0}};
        std::size_t kappa = 0;
        bool ok = true;
        while (ok && !queue.empty()) {
            const Item it = queue.front();
            queue.pop_front();
            const std::size_t g = gap_index(sk, it.gap_start);
            const IntersectionLayer layer = sk.layers[g];
            const PhiBounds pb = m.phi_bounds({layer.lower(), layer.upper()});
            const double delta = pb.upper - pb.lower;
            const double half = 0.5 * (it.t - it.s);
            const double mid = 0.5 * (it.s + it.t);
            const double tau = rng.exponential(2.0 * delta);
            if (tau > half) continue;
            const double xi = rng.uniform() < 0.5 ? mid - tau : mid + tau;
            const Bisection bis = layered_bridge_il(layer, xi, rng);
            ++kappa;
            ++sk.stats.evaluated;
            if (!phi_point_accepts(m, bis.w, pb, rng)) {
                ok = false;
                break;
            }
            const double l_left = m.phi_bounds({bis.left.lower(), bis.left.upper()}).lower;
            const double l_right = m.phi_bounds({bis.right.lower(), bis.right.upper()}).lower;
            const double excess = l_left + l_right - 2.0 * pb.lower;
            if (excess < -1e-12) throw ContractViolation("phi lower bound decreased on a sub-layer");
            if (!(rng.uniform() <= std::exp(-excess * (half - tau)))) {
                ok = false;
                break;
            }
            sk.layers[g] = bis.left;
            sk.layers.insert(sk.layers.begin() + static_cast<std::ptrdiff_t>(g) + 1, bis.right);
            sk.points.insert(sk.points.begin() + static_cast<std::ptrdiff_t>(g) + 1, Knot{xi, bis.w});
            queue.push_back({it.s, mid - tau, layer.s});
            queue.push_back({mid + tau, it.t, xi});
        }
        if (!ok) continue;
        sk.stats.kappa = kappa;
        return sk;
    }
}

Skeleton run_bea(const DiffusionModel& m, Rng& rng, const ExactOptions& opt) {
    return run_bea(m, 0.0, m.start, m.horizon, rng, opt);
}
Skeleton run_uea(const DiffusionModel& m, Rng& rng, const ExactOptions& opt) {
    return run_uea(m, 0.0, m.start, m.horizon, rng, opt);
}
Skeleton run_auea(const DiffusionModel& m, Rng& rng, const ExactOptions& opt) {
    return run_auea(m, 0.0, m.start, m.horizon, rng, opt);
}

} // namespace pathsim
