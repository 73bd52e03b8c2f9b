#include "pathsim/epsilon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "pathsim/errors.hpp"
#include "pathsim/intersection.hpp"
#include "pathsim/io.hpp"

namespace pathsim {

double BoundingProcess::lower_at(double u) const {
    double v = -std::numeric_limits<double>::infinity();
    for (const Cell& c : cells)
        if (c.s() <= u && u <= c.t()) v = std::max(v, c.lower());
    return v;
}

double BoundingProcess::upper_at(double u) const {
    double v = std::numeric_limits<double>::infinity();
    for (const Cell& c : cells)
        if (c.s() <= u && u <= c.t()) v = std::min(v, c.upper());
    return v;
}

double BoundingProcess::sup_gap() const {
    double g = 0.0;
    for (const Cell& c : cells) g = std::max(g, c.gap());
    return g;
}

double BoundingProcess::l1_gap() const {
    double g = 0.0;
    for (const Cell& c : cells) g += c.gap() * (c.t() - c.s());
    return g;
}

RefinePolicy RefinePolicy::with_rounds(std::size_t n) {
    RefinePolicy p;
    p.mode = Mode::Rounds;
    p.rounds = n;
    p.validate();
    return p;
}

RefinePolicy RefinePolicy::with_tolerance(double eps) {
    RefinePolicy p;
    p.mode = Mode::Tolerance;
    p.epsilon = eps;
    p.validate();
    return p;
}

void RefinePolicy::validate() const {
    if (mode == Mode::Rounds && rounds < 1) throw ConfigError("refinement needs at least one round");
    if (mode == Mode::Tolerance && !(epsilon > 0.0)) throw ConfigError("tolerance must be positive");
    if (!(trigger_scale > 0.0)) throw ConfigError("refinement trigger scale must be positive");
}

namespace {

IntersectionLayer refine_to(IntersectionLayer il, double width, Rng& rng) {
    for (int guard = 0; guard < 200; ++guard) {
        const bool lo_wide = il.min_hi - il.min_lo > width;
        const bool hi_wide = il.max_hi - il.max_lo > width;
        if (!lo_wide && !hi_wide) return il;
        const double ms = lo_wide ? 0.5 * (il.min_lo + il.min_hi) : il.min_hi;
        const double Ms = hi_wide ? 0.5 * (il.max_lo + il.max_hi) : il.max_lo;
        IntersectionLayer next = refine(il, ms, Ms, rng);
        if (next.min_lo == il.min_lo && next.min_hi == il.min_hi && next.max_lo == il.max_lo &&
            next.max_hi == il.max_hi)
            return il;
        il = next;
    }
    return il;
}

std::vector<Cell> split(const Cell& c, std::size_t round, double trigger_scale, Rng& rng) {
    const IntersectionLayer& il = c.layer;
    const double len = il.t - il.s;
    const Bisection b = layered_bridge_il(il, 0.5 * (il.s + il.t), rng);
    const double width = std::sqrt(trigger_scale * len);
    return {{refine_to(b.left, width, rng), round}, {refine_to(b.right, width, rng), round}};
}

void append_layers(BoundingProcess& bp, const Skeleton& sk) {
    if (!sk.layered()) throw ConfigError("bounding processes need a layered skeleton (UEA or AUEA)");
    for (const IntersectionLayer& il : sk.layers)
        if (il.t > il.s) bp.cells.push_back({il, 0});
}

} // namespace

BoundingProcess bounding_from_skeleton(const Skeleton& sk) {
    BoundingProcess bp;
    append_layers(bp, sk);
    return bp;
}

BoundingProcess bounding_from_skeleton(const JumpSkeleton& sk) {
    BoundingProcess bp;
    for (const Skeleton& seg : sk.segments) append_layers(bp, seg);
    for (const JumpEvent& j : sk.jumps) bp.jump_times.push_back(j.time);
    return bp;
}

void bisect_round(BoundingProcess& bp, Rng& rng, double trigger_scale) {
    const std::size_t r = bp.round + 1;
    std::vector<Cell> next;
    next.reserve(2 * bp.cells.size());
    for (const Cell& c : bp.cells)
        for (Cell& child : split(c, r, trigger_scale, rng)) next.push_back(std::move(child));
    bp.cells = std::move(next);
    bp.round = r;
}

std::size_t bisect_widest(BoundingProcess& bp, Rng& rng, double trigger_scale) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < bp.cells.size(); ++i)
        if (bp.cells[i].gap() > bp.cells[best].gap()) best = i;
    const Cell c = bp.cells[best];
    std::vector<Cell> kids = split(c, c.round + 1, trigger_scale, rng);
    bp.cells[best] = kids[0];
    bp.cells.insert(bp.cells.begin() + static_cast<std::ptrdiff_t>(best) + 1, kids[1]);
    bp.round = std::max(bp.round, c.round + 1);
    return best;
}

void apply_policy(BoundingProcess& bp, const RefinePolicy& policy, Rng& rng) {
    policy.validate();
    if (policy.mode == RefinePolicy::Mode::Rounds) {
        for (std::size_t i = 0; i < policy.rounds; ++i) bisect_round(bp, rng, policy.trigger_scale);
        return;
    }
    while (bp.sup_gap() > policy.epsilon) bisect_widest(bp, rng, policy.trigger_scale);
}

BoundingProcess eps_strong_bm(double horizon, double start, const RefinePolicy& policy, Rng& rng,
                              const LayerSequence& seq) {
    if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
    const double y = start + std::sqrt(horizon) * rng.normal();
    BoundingProcess bp;
    bp.cells.push_back({initial_layer({0.0, horizon, start, y}, seq, rng), 0});
    apply_policy(bp, policy, rng);
    return bp;
}

BoundingProcess eps_strong_jump_diffusion(const Model& m, const RefinePolicy& policy, Rng& rng,
                                          const ExactOptions& opt) {
    policy.validate();
    BoundingProcess bp;
    if (!m.jumps)
        bp = bounding_from_skeleton(run_auea(m.diffusion, rng, opt));
    else if (m.jumps->globally_bounded())
        bp = bounding_from_skeleton(run_bjea(m, InnerAlgo::AUEA, rng, opt));
    else
        bp = bounding_from_skeleton(run_aujea(m, rng, opt));
    apply_policy(bp, policy, rng);
    return bp;
}

double restore(BoundingProcess& bp, double time, Rng& rng) {
    // Right-continuous at jump times: prefer the cell starting at `time`.
    std::size_t idx = bp.cells.size();
    for (std::size_t i = 0; i < bp.cells.size(); ++i) {
        const Cell& c = bp.cells[i];
        if (c.s() == time) return c.layer.x;
        if (c.s() < time && time < c.t()) idx = i;
        if (c.t() == time && idx == bp.cells.size()) idx = i;
    }
    if (idx == bp.cells.size()) throw ContractViolation("time outside the bounding process");
    const Cell c = bp.cells[idx];
    if (c.t() == time) return c.layer.y;
    const Bisection b = layered_bridge_il(c.layer, time, rng);
    bp.cells[idx] = {b.left, c.round};
    bp.cells.insert(bp.cells.begin() + static_cast<std::ptrdiff_t>(idx) + 1, Cell{b.right, c.round});
    return b.w;
}

Functionals certified_functionals(const BoundingProcess& bp) {
    Functionals f{{1e300, 1e300}, {-1e300, -1e300}, {0.0, 0.0}};
    for (const Cell& c : bp.cells) {
        const IntersectionLayer& il = c.layer;
        f.minimum.lo = std::min(f.minimum.lo, il.min_lo);
        f.minimum.hi = std::min(f.minimum.hi, il.min_hi);
        f.maximum.lo = std::max(f.maximum.lo, il.max_lo);
        f.maximum.hi = std::max(f.maximum.hi, il.max_hi);
        f.integral.lo += il.min_lo * (il.t - il.s);
        f.integral.hi += il.max_hi * (il.t - il.s);
    }
    return f;
}

void write_staircase_csv(std::ostream& os, const BoundingProcess& bp) {
    os << "s,t,lower,upper,round\n";
    for (const Cell& c : bp.cells)
        os << format_double(c.s()) << ',' << format_double(c.t()) << ',' << format_double(c.lower()) << ','
           << format_double(c.upper()) << ',' << c.round << '\n';
}

} // namespace pathsim
