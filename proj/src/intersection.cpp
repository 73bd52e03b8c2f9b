#include "pathsim/intersection.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>

#include "pathsim/brownian.hpp"
#include "pathsim/errors.hpp"
#include "pathsim/layered_bridge.hpp"
#include "pathsim/normal.hpp"

namespace pathsim {

void check_layer(const IntersectionLayer& il) {
    const double lo = std::min(il.x, il.y), hi = std::max(il.x, il.y);
    if (!(il.t > il.s) || !(il.min_lo <= il.min_hi) || !(il.min_hi <= lo) || !(hi <= il.max_lo) ||
        !(il.max_lo <= il.max_hi))
        throw ContractViolation("intersection layer bands are inconsistent");
}

IntersectionLayer layer_from_index(const Bridge& b, std::size_t iota, const LayerSequence& seq,
                                   LayerOrigin origin) {
    if (iota == 0) throw ContractViolation("layer index starts at 1");
    const double len = b.t - b.s;
    const double a = seq.offset(iota, len), a_prev = seq.offset(iota - 1, len);
    const double lo = std::min(b.x, b.y), hi = std::max(b.x, b.y);
    IntersectionLayer il{b.s, b.t, b.x, b.y, lo - a, lo - a_prev, hi + a_prev, hi + a, origin};
    switch (origin) {
    case LayerOrigin::D1:
        break;
    case LayerOrigin::D2:
        il.max_lo = hi;
        il.max_hi = hi + a_prev;
        break;
    case LayerOrigin::D3:
        il.min_lo = lo - a_prev;
        il.min_hi = lo;
        break;
    case LayerOrigin::None:
        throw ContractViolation("layer_from_index needs a D1/D2/D3 origin");
    }
    return il;
}

IntersectionLayer initial_layer(const Bridge& b, const LayerSequence& seq, Rng& rng) {
    const std::size_t iota = simulate_layer(b, seq, rng);
    if (iota == 1) return layer_from_index(b, 1, seq, LayerOrigin::D1);
    const auto d1 = layer_from_index(b, iota, seq, LayerOrigin::D1);
    const auto d2 = layer_from_index(b, iota, seq, LayerOrigin::D2);
    const auto d3 = layer_from_index(b, iota, seq, LayerOrigin::D3);
    auto p_d1 = compose_series({beta_series(b, d1.bands()), beta_series(b, d2.bands()), beta_series(b, d3.bands())},
                               {1, -1, -1},
                               [](std::span<const double> v) {
                                   const double den = v[0] + v[1] + v[2];
                                   return den > 0.0 ? v[0] / den : 0.0;
                               },
                               "p(D1)");
    if (series_event(p_d1, rng)) return d1;
    return rng.uniform() < 0.5 ? d2 : d3;
}

// ---------------------------------------------------------------------------
// Envelope for the midpoint density.

namespace {

// sign * exp(loga + slope * z) with z = w - centre.
struct ETerm {
    double loga;
    double slope;
    double sign;
};
using ExpSum = std::vector<ETerm>;

ExpSum operator+(ExpSum a, const ExpSum& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}
ExpSum operator-(ExpSum a, const ExpSum& b) {
    for (ETerm t : b) {
        t.sign = -t.sign;
        a.push_back(t);
    }
    return a;
}
ExpSum operator*(const ExpSum& a, const ExpSum& b) {
    ExpSum out;
    out.reserve(a.size() * b.size());
    for (const ETerm& p : a)
        for (const ETerm& r : b) out.push_back({p.loga + r.loga, p.slope + r.slope, p.sign * r.sign});
    return out;
}
const ExpSum kOne{{0.0, 0.0, 1.0}};

// First-order exit terms of the two pieces [s, q] (x -> w) and [q, t] (w -> y)
// as exponentials in z = w - c.
struct PieceTerms {
    double x, y, c, T1, T2;

    ExpSum sigma_left(double l, double u) const {
        return {{-2.0 * (u - x) * (u - c) / T1, 2.0 * (u - x) / T1, 1.0},
                {-2.0 * (x - l) * (c - l) / T1, -2.0 * (x - l) / T1, 1.0}};
    }
    ExpSum phi_left(double l, double u) const {
        const double D = u - l;
        return {{-2.0 * D * (D + x - c) / T1, 2.0 * D / T1, 1.0},
                {-2.0 * D * (D + c - x) / T1, -2.0 * D / T1, 1.0}};
    }
    ExpSum sigma_right(double l, double u) const {
        return {{-2.0 * (u - c) * (u - y) / T2, 2.0 * (u - y) / T2, 1.0},
                {-2.0 * (c - l) * (y - l) / T2, -2.0 * (y - l) / T2, 1.0}};
    }
    ExpSum phi_right(double l, double u) const {
        const double D = u - l;
        return {{-2.0 * D * (D + c - y) / T2, -2.0 * D / T2, 1.0},
                {-2.0 * D * (D + y - c) / T2, 2.0 * D / T2, 1.0}};
    }
    // Upper bound on the probability that both pieces stay in [l, u].
    ExpSum upper(double l, double u) const {
        return (kOne - sigma_left(l, u) + phi_left(l, u)) * (kOne - sigma_right(l, u) + phi_right(l, u));
    }
    // Lower bound on the same probability (union bound on the exits).
    ExpSum lower(double l, double u) const { return kOne - sigma_left(l, u) - sigma_right(l, u); }
};

void add_segment(MidpointEnvelope& env, double lo, double hi, const ExpSum& sum) {
    if (!(hi > lo)) return;
    std::map<double, std::vector<ETerm>> groups;
    for (const ETerm& t : sum) groups[t.slope].push_back(t);
    const double sd = std::sqrt(env.variance);
    for (const auto& [slope, terms] : groups) {
        double top = -std::numeric_limits<double>::infinity();
        for (const ETerm& t : terms) top = std::max(top, t.loga);
        if (!std::isfinite(top)) continue;
        double acc = 0.0;
        for (const ETerm& t : terms) acc += t.sign * std::exp(t.loga - top);
        if (!(acc > 0.0)) continue;
        const double log_coef = top + std::log(acc);
        const double mean = env.centre + slope * env.variance;
        const double log_mass = log_coef + 0.5 * slope * slope * env.variance +
                                log_norm_mass((lo - mean) / sd, (hi - mean) / sd);
        if (!std::isfinite(log_mass)) continue;
        env.terms.push_back({lo, hi, log_coef, slope, log_mass});
    }
}

} // namespace

double MidpointEnvelope::value(double w) const {
    const EnvelopeTerm* seg = nullptr;
    for (const auto& t : terms)
        if (w >= t.lo && w <= t.hi) {
            seg = &t;
            break;
        }
    if (!seg) return 0.0;
    double v = 0.0;
    for (const auto& t : terms)
        if (t.lo == seg->lo && t.hi == seg->hi) v += std::exp(t.log_coef + t.slope * (w - centre));
    return v;
}

bool MidpointEnvelope::degenerate() const { return terms.empty() || !std::isfinite(log_total); }

MidpointEnvelope midpoint_envelope(const IntersectionLayer& il, double q) {
    check_layer(il);
    if (!(q > il.s && q < il.t)) throw ContractViolation("midpoint time outside layer interval");
    MidpointEnvelope env;
    const double len = il.t - il.s;
    env.centre = il.x + (q - il.s) * (il.y - il.x) / len;
    env.variance = (il.t - q) * (q - il.s) / len;
    const PieceTerms p{il.x, il.y, env.centre, q - il.s, il.t - q};
    const double ld = il.min_lo, lu = il.min_hi, ud = il.max_lo, uu = il.max_hi;
    const ExpSum outer = p.upper(ld, uu);
    add_segment(env, ld, lu, outer - p.lower(ld, ud));
    add_segment(env, lu, ud, outer - p.lower(lu, uu) - p.lower(ld, ud) + p.upper(lu, ud));
    add_segment(env, ud, uu, outer - p.lower(lu, uu));
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& t : env.terms) top = std::max(top, t.log_mass);
    double acc = 0.0;
    for (const auto& t : env.terms) acc += std::exp(t.log_mass - top);
    env.log_total = env.terms.empty() ? -std::numeric_limits<double>::infinity() : top + std::log(acc);
    return env;
}

namespace {

constexpr std::size_t kEnvelopeRejectionsBeforeSwitch = 2000;
constexpr std::size_t kHybridAttemptCap = 10000000;

IntersectionLayer reflect(const IntersectionLayer& il) {
    return {il.s, il.t, -il.x, -il.y, -il.max_hi, -il.max_lo, -il.min_hi, -il.min_lo, il.origin};
}

// One proposal anchored on the minimum band; returns true and sets w on accept.
bool hybrid_min_attempt(const IntersectionLayer& il, double q, Rng& rng, double& w) {
    const Bridge b = il.bridge();
    const ExtremeRecord e = sample_min(b, il.min_lo, il.min_hi, rng);
    const double wq = bessel_bridge_point(b, e, q, rng);
    const std::vector<Knot> knots{{q, wq}};
    auto p = compose_series({bessel_containment_series(b, e, knots, il.max_hi),
                             bessel_containment_series(b, e, knots, il.max_lo)},
                            {1, -1}, [](std::span<const double> v) { return v[0] - v[1]; },
                            "max-band|min");
    if (!series_event(p, rng)) return false;
    w = wq;
    return true;
}

} // namespace

double hybrid_midpoint(const IntersectionLayer& il, double q, Rng& rng) {
    check_layer(il);
    if (!(q > il.s && q < il.t)) throw ContractViolation("midpoint time outside layer interval");
    for (std::size_t n = 0; n < kHybridAttemptCap; ++n) {
        bool use_min;
        switch (il.origin) {
        case LayerOrigin::D2: use_min = true; break;
        case LayerOrigin::D3: use_min = false; break;
        default: use_min = rng.uniform() < 0.5;
        }
        if (il.min_lo == il.min_hi) use_min = false;
        if (il.max_lo == il.max_hi) use_min = true;
        double w;
        if (use_min) {
            if (hybrid_min_attempt(il, q, rng, w)) return w;
        } else {
            if (hybrid_min_attempt(reflect(il), q, rng, w)) return -w;
        }
    }
    throw AttemptLimitError("hybrid midpoint sampler: attempt cap reached");
}

double sample_midpoint(const IntersectionLayer& il, double q, Rng& rng) {
    const MidpointEnvelope env = midpoint_envelope(il, q);
    if (env.degenerate()) return hybrid_midpoint(il, q, rng);
    std::vector<double> cum;
    double acc = 0.0;
    for (const auto& t : env.terms) {
        acc += std::exp(t.log_mass - env.log_total);
        cum.push_back(acc);
    }
    const double sd = std::sqrt(env.variance);
    const Bridge b = il.bridge();
    for (std::size_t n = 0; n < kEnvelopeRejectionsBeforeSwitch; ++n) {
        const double pick = rng.uniform() * acc;
        const std::size_t i = std::min<std::size_t>(
            std::upper_bound(cum.begin(), cum.end(), pick) - cum.begin(), cum.size() - 1);
        const EnvelopeTerm& t = env.terms[i];
        const double w = sample_truncated_normal(env.centre + t.slope * env.variance, sd, t.lo, t.hi, rng);
        const double e = env.value(w);
        const double u = rng.uniform() * e;
        if (!(u < 1.0)) continue;
        if (!(w > il.min_lo && w < il.max_hi)) continue;
        const auto rho = rho_series(b, {{q, w}}, il.min_lo, il.min_hi, il.max_lo, il.max_hi);
        if (rho.is_constant()) {
            if (u <= rho.constant_value()) return w;
            continue;
        }
        SeriesCursor c(rho);
        for (;;) {
            const Bracket& br = c.current();
            if (br.lower > e * (1.0 + 1e-6) + 1e-12)
                throw ContractViolation("midpoint envelope falls below the target density");
            if (u <= br.lower) return w;
            if (u >= br.upper) break;
            if (br.upper - br.lower < 1e-12 || c.stalled() > 64)
                throw PrecisionError("midpoint acceptance unresolved");
            c.advance();
        }
    }
    return hybrid_midpoint(il, q, rng);
}

// ---------------------------------------------------------------------------
// Dissection and refinement.

namespace {

struct Piece {
    Bridge b;
    double lo, hi;
};

std::vector<Piece> pieces_of(const IntersectionLayer& il, const std::vector<Knot>& knots) {
    std::vector<Piece> out;
    double s = il.s, x = il.x;
    for (const Knot& k : knots) {
        if (!(k.t > s && k.t < il.t)) throw ContractViolation("dissection knots must be increasing and interior");
        if (!(k.w > il.min_lo && k.w < il.max_hi)) throw ContractViolation("dissection knot outside the layer");
        out.push_back({{s, k.t, x, k.w}, std::min(x, k.w), std::max(x, k.w)});
        s = k.t;
        x = k.w;
    }
    out.push_back({{s, il.t, x, il.y}, std::min(x, il.y), std::max(x, il.y)});
    return out;
}

BandPair child_bands(const IntersectionLayer& il, double min_star, double max_star, bool min_here,
                     bool max_here, double lo, double hi) {
    return {min_here ? il.min_lo : min_star, min_here ? min_star : lo, max_here ? max_star : hi,
            max_here ? il.max_hi : max_star};
}

} // namespace

std::vector<DissectionCase> dissection_cases(const IntersectionLayer& il, const std::vector<Knot>& knots) {
    check_layer(il);
    const auto pieces = pieces_of(il, knots);
    double min_star = il.min_hi, max_star = il.max_lo;
    for (const Knot& k : knots) {
        min_star = std::min(min_star, k.w);
        max_star = std::max(max_star, k.w);
    }
    const std::size_t P = pieces.size();
    if (P > 20) throw ContractViolation("dissection enumeration limited to 19 knots");
    const std::size_t masks = (std::size_t{1} << P) - 1;
    std::vector<DissectionCase> out;
    out.reserve(masks * masks);
    for (std::size_t A = 1; A <= masks; ++A)
        for (std::size_t B = 1; B <= masks; ++B) {
            DissectionCase dc;
            std::vector<AlternatingSeries> parts;
            for (std::size_t i = 0; i < P; ++i) {
                dc.bands.push_back(child_bands(il, min_star, max_star, (A >> i) & 1, (B >> i) & 1,
                                               pieces[i].lo, pieces[i].hi));
                parts.push_back(beta_series(pieces[i].b, dc.bands.back()));
            }
            dc.weight = product_series(std::move(parts));
            out.push_back(std::move(dc));
        }
    return out;
}

Dissection dissect(const IntersectionLayer& il, const std::vector<Knot>& knots, Rng& rng) {
    auto cases = dissection_cases(il, knots);
    std::vector<AlternatingSeries> weights;
    for (const auto& c : cases) weights.push_back(c.weight);
    const std::size_t k = sample_discrete(weights, rng);
    const auto pieces = pieces_of(il, knots);
    Dissection d{{}, k, cases.size()};
    for (std::size_t i = 0; i < pieces.size(); ++i) {
        const BandPair& bp = cases[k].bands[i];
        d.children.push_back({pieces[i].b.s, pieces[i].b.t, pieces[i].b.x, pieces[i].b.y, bp.min_lo, bp.min_hi,
                              bp.max_lo, bp.max_hi, LayerOrigin::None});
    }
    return d;
}

std::vector<IntersectionLayer> dissect_sequential(const IntersectionLayer& il, const std::vector<Knot>& knots,
                                                  Rng& rng) {
    check_layer(il);
    std::vector<IntersectionLayer> out;
    IntersectionLayer block = il;
    block.origin = LayerOrigin::None;
    std::vector<Knot> rest = knots;
    while (!rest.empty()) {
        pieces_of(block, rest);  // validation only
        const Knot k = rest.front();
        rest.erase(rest.begin());
        double min_star = std::min(block.min_hi, k.w), max_star = std::max(block.max_lo, k.w);
        double lo_r = std::min(k.w, block.y), hi_r = std::max(k.w, block.y);
        for (const Knot& r : rest) {
            min_star = std::min(min_star, r.w);
            max_star = std::max(max_star, r.w);
            lo_r = std::min(lo_r, r.w);
            hi_r = std::max(hi_r, r.w);
        }
        const Bridge left{block.s, k.t, block.x, k.w};
        const Bridge right{k.t, block.t, k.w, block.y};
        const double lo_l = std::min(block.x, k.w), hi_l = std::max(block.x, k.w);
        std::vector<std::pair<BandPair, BandPair>> bands;
        std::vector<AlternatingSeries> weights;
        for (std::size_t A = 1; A <= 3; ++A)
            for (std::size_t B = 1; B <= 3; ++B) {
                const BandPair bl = child_bands(block, min_star, max_star, A & 1, B & 1, lo_l, hi_l);
                const BandPair br = child_bands(block, min_star, max_star, A & 2, B & 2, lo_r, hi_r);
                bands.push_back({bl, br});
                weights.push_back(product_series(
                    {beta_series(left, bl), rho_series(right, rest, br.min_lo, br.min_hi, br.max_lo, br.max_hi)}));
            }
        const std::size_t pick = sample_discrete(weights, rng);
        const auto& [bl, br] = bands[pick];
        out.push_back({left.s, left.t, left.x, left.y, bl.min_lo, bl.min_hi, bl.max_lo, bl.max_hi, LayerOrigin::None});
        block = {right.s, right.t, right.x, right.y, br.min_lo, br.min_hi, br.max_lo, br.max_hi, LayerOrigin::None};
    }
    out.push_back(block);
    return out;
}

IntersectionLayer refine(const IntersectionLayer& il, double min_split, double max_split, Rng& rng) {
    check_layer(il);
    if (!(min_split >= il.min_lo && min_split <= il.min_hi) || !(max_split >= il.max_lo && max_split <= il.max_hi))
        throw ContractViolation("refinement split outside its band");
    const Bridge b = il.bridge();
    const std::array<BandPair, 4> cand{BandPair{il.min_lo, min_split, max_split, il.max_hi},
                                       BandPair{min_split, il.min_hi, max_split, il.max_hi},
                                       BandPair{il.min_lo, min_split, il.max_lo, max_split},
                                       BandPair{min_split, il.min_hi, il.max_lo, max_split}};
    std::vector<AlternatingSeries> weights;
    bool any = false;
    for (const auto& c : cand) {
        weights.push_back(beta_series(b, c));
        any = any || !(weights.back().is_constant() && weights.back().constant_value() == 0.0);
    }
    if (!any) return il;
    const BandPair& pick = cand[sample_discrete(weights, rng)];
    IntersectionLayer out = il;
    out.min_lo = pick.min_lo;
    out.min_hi = pick.min_hi;
    out.max_lo = pick.max_lo;
    out.max_hi = pick.max_hi;
    out.origin = LayerOrigin::None;
    return out;
}

Bisection layered_bridge_il(const IntersectionLayer& il, double q, Rng& rng) {
    const double w = sample_midpoint(il, q, rng);
    Dissection d = dissect(il, {{q, w}}, rng);
    return {w, d.children[0], d.children[1]};
}

} // namespace pathsim
