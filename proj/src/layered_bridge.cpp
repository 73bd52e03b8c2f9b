#include "pathsim/layered_bridge.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pathsim/brownian.hpp"
#include "pathsim/errors.hpp"
#include "pathsim/intersection.hpp"

namespace pathsim {

std::size_t simulate_layer(const Bridge& b, const LayerSequence& seq, Rng& rng) {
    if (!(b.t > b.s)) throw ContractViolation("simulate_layer: non-positive length");
    const double u = rng.uniform();
    const double len = b.t - b.s;
    const double lo = std::min(b.x, b.y), hi = std::max(b.x, b.y);
    for (std::size_t iota = 1; iota < 100000; ++iota) {
        const double a = seq.offset(iota, len);
        if (series_decide(gamma_series(b, lo - a, hi + a), u).event) return iota;
    }
    throw PrecisionError("simulate_layer: no layer found");
}

namespace {

constexpr std::size_t kAttemptCap = 10000000;

struct Anchored {
    std::vector<double> values;
    BandPair bands;
    bool inner;  // opposite extreme within layer iota - 1
};

// Minimum-anchored proposal on a path in which the minimum band is
// [lo - a, lo - a_prev] and the maximum band is [hi, hi + a].
bool min_anchored(const Bridge& b, double a, double a_prev, const std::vector<double>& times, Rng& rng,
                  Anchored& out) {
    const double lo = std::min(b.x, b.y), hi = std::max(b.x, b.y);
    const double l_dn = lo - a, l_up = lo - a_prev;
    const double u_inner = hi + a_prev, u_outer = hi + a;
    const ExtremeRecord e = sample_min(b, l_dn, l_up, rng);
    std::vector<double> values = bessel_bridge_points(b, e, times, rng);
    std::vector<Knot> knots;
    for (std::size_t i = 0; i < times.size(); ++i) knots.push_back({times[i], values[i]});
    const double u = rng.uniform();
    if (series_decide(bessel_containment_series(b, e, knots, u_inner), u).event) {
        out = {std::move(values), {l_dn, l_up, hi, u_inner}, true};
        return true;
    }
    if (series_decide(bessel_containment_series(b, e, knots, u_outer), u).event && rng.uniform() < 0.5) {
        out = {std::move(values), {l_dn, l_up, u_inner, u_outer}, false};
        return true;
    }
    return false;
}

} // namespace

LayeredBridgeDraw simulate_layered_bridge(const Bridge& b, std::size_t iota, const LayerSequence& seq,
                                          std::vector<double> times, Rng& rng) {
    if (iota == 0) throw ContractViolation("layer index starts at 1");
    std::sort(times.begin(), times.end());
    for (double q : times)
        if (!(q > b.s && q < b.t)) throw ContractViolation("layered bridge: times must be interior");
    const double len = b.t - b.s;
    const double a = seq.offset(iota, len), a_prev = seq.offset(iota - 1, len);
    LayeredBridgeDraw draw;
    draw.iota = iota;
    for (std::size_t n = 1; n <= kAttemptCap; ++n) {
        Anchored res;
        const bool use_min = rng.uniform() <= 0.5;
        bool ok;
        if (use_min) {
            ok = min_anchored(b, a, a_prev, times, rng, res);
        } else {
            ok = min_anchored({b.s, b.t, -b.x, -b.y}, a, a_prev, times, rng, res);
            if (ok) {
                for (double& v : res.values) v = -v;
                const BandPair r = res.bands;
                res.bands = {-r.max_hi, -r.max_lo, -r.min_hi, -r.min_lo};
            }
        }
        if (!ok) continue;
        draw.attempts = n;
        for (std::size_t i = 0; i < times.size(); ++i) draw.points.push_back({times[i], res.values[i]});
        LayerOrigin origin = LayerOrigin::D1;
        if (res.inner) origin = use_min ? LayerOrigin::D2 : LayerOrigin::D3;
        draw.layer = {b.s, b.t, b.x, b.y, res.bands.min_lo, res.bands.min_hi, res.bands.max_lo, res.bands.max_hi,
                      origin};
        return draw;
    }
    throw AttemptLimitError("layered bridge: attempt cap reached");
}

std::vector<IntersectionLayer> augment_to_intersection(const LayeredBridgeDraw& draw, Rng& rng) {
    return dissect_sequential(draw.layer, draw.points, rng);
}

} // namespace pathsim
