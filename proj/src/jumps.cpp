#include "pathsim/jumps.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "pathsim/errors.hpp"
#include "pathsim/intersection.hpp"

namespace pathsim {

namespace {

const JumpSpec& jumps_of(const Model& m) {
    if (!m.jumps) throw ConfigError("model '" + m.diffusion.name + "' has no jump component");
    return *m.jumps;
}

Skeleton run_inner(InnerAlgo a, const DiffusionModel& d, double t0, double x0, double t1, Rng& rng,
                   const ExactOptions& opt) {
    switch (a) {
    case InnerAlgo::BEA: return run_bea(d, t0, x0, t1, rng, opt);
    case InnerAlgo::UEA: return run_uea(d, t0, x0, t1, rng, opt);
    case InnerAlgo::AUEA: return run_auea(d, t0, x0, t1, rng, opt);
    }
    throw ConfigError("unknown inner algorithm");
}

// Thinning acceptance with probability (lambda(x) - floor) / bound.
bool thin(const JumpSpec& j, double x, double floor, double bound, Rng& rng) {
    const double excess = j.intensity(x) - floor;
    if (excess > bound * (1.0 + 1e-9) + 1e-12)
        throw ContractViolation("jump intensity exceeds its dominating bound");
    if (excess < -1e-12) throw ContractViolation("jump intensity below its declared floor");
    return rng.uniform() * bound <= excess;
}

double bound_over_layers(const JumpSpec& j, const Skeleton& sk, double from) {
    double lo = 1e300, hi = -1e300;
    for (std::size_t g = 0; g < sk.layers.size(); ++g) {
        if (sk.points[g + 1].t <= from) continue;
        lo = std::min(lo, sk.layers[g].lower());
        hi = std::max(hi, sk.layers[g].upper());
    }
    if (sk.layers.empty()) {
        for (const Knot& k : sk.points) lo = std::min(lo, k.w), hi = std::max(hi, k.w);
    }
    return j.bound_over({lo, hi});
}

// Drop everything after `time`, which must be a skeleton point.
void truncate_at(Skeleton& sk, double time) {
    const std::size_t g = gap_index(sk, time);
    const std::size_t keep = sk.points[g].t == time ? g + 1 : g + 2;
    sk.points.resize(keep);
    if (sk.layered()) sk.layers.resize(keep - 1);
}

struct Round {
    Skeleton segment;
    std::optional<double> jump_time;  // segment value there is the pre-jump state
    double pre = 0.0;
    std::size_t proposals = 0;
};

Round ujea_round(const Model& m, double t0, double x0, double t1, double floor, Rng& rng, const ExactOptions& opt) {
    const DiffusionModel& d = m.diffusion;
    const JumpSpec& j = jumps_of(m);
    Round r;
    for (std::size_t n = 1;; ++n) {
        if (n > opt.attempt_cap) throw AttemptLimitError("UJEA: attempt cap reached");
        const double y = sample_biased_endpoint(d, x0, t1 - t0, rng);
        const IntersectionLayer il = initial_layer({t0, t1, x0, y}, opt.layers, rng);
        const PhiBounds pb = d.phi_bounds({il.lower(), il.upper()});
        if (!floor_correction_accepts(d, pb.lower, t1 - t0, rng, opt)) continue;
        const double lambda = j.bound_over({il.lower(), il.upper()}) - floor;
        if (lambda < -1e-12) throw ContractViolation("jump bound below the floor");
        const auto jump_times = rng.poisson_process(lambda, t0, t1);
        const auto phi_times = rng.poisson_process(pb.upper - pb.lower, t0, t1);
        Skeleton sk;
        sk.provenance = Provenance::UEA;
        sk.stats.proposals = n;
        sk.points = {{t0, x0}, {t1, y}};
        sk.layers = {il};
        std::vector<std::pair<double, bool>> all;  // (time, is phi point)
        for (double t : jump_times) all.push_back({t, false});
        for (double t : phi_times) all.push_back({t, true});
        std::sort(all.begin(), all.end());
        bool ok = true;
        for (const auto& [t, is_phi] : all) {
            const double w = restore(sk, t, rng);
            if (!is_phi) continue;
            ++sk.stats.evaluated;
            const double phi = d.phi(w);
            if (phi > pb.upper + 1e-9 || phi < pb.lower - 1e-9)
                throw ContractViolation("phi outside its declared bounds");
            if (!(rng.uniform() * (pb.upper - pb.lower) <= pb.upper - phi)) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        sk.stats.kappa = phi_times.size();
        r.proposals += jump_times.size();
        for (double t : jump_times) {
            const double w = restore(sk, t, rng);
            if (thin(j, w, floor, lambda, rng)) {
                r.jump_time = t;
                r.pre = w;
                break;
            }
        }
        r.segment = std::move(sk);
        return r;
    }
}

Round aujea_round(const Model& m, double t0, double x0, double t1, double floor, Rng& rng, const ExactOptions& opt) {
    const JumpSpec& j = jumps_of(m);
    Round r;
    r.segment = run_auea(m.diffusion, t0, x0, t1, rng, opt);
    Skeleton& sk = r.segment;
    double psi = t0;
    double lambda = bound_over_layers(j, sk, psi) - floor;
    for (;;) {
        if (lambda < -1e-12) throw ContractViolation("jump bound below the floor");
        psi += rng.exponential(lambda);
        if (psi > t1) return r;
        ++r.proposals;
        const double w = restore(sk, psi, rng);
        if (thin(j, w, floor, lambda, rng)) {
            truncate_at(sk, psi);
            r.jump_time = psi;
            r.pre = w;
            return r;
        }
        lambda = bound_over_layers(j, sk, psi) - floor;
    }
}

// Rounds of UJEA or AUJEA from (t0, x0) until t1, appending to `out`.
double run_rounds(const Model& m, JumpAlgo algo, double t0, double x0, double t1, double floor, Rng& rng,
                  const ExactOptions& opt, JumpSkeleton& out) {
    const JumpSpec& j = jumps_of(m);
    double psi = t0, x = x0;
    for (;;) {
        Round r = algo == JumpAlgo::UJEA ? ujea_round(m, psi, x, t1, floor, rng, opt)
                                         : aujea_round(m, psi, x, t1, floor, rng, opt);
        out.proposals += r.proposals;
        out.segments.push_back(std::move(r.segment));
        if (!r.jump_time) return out.segments.back().terminal();
        const double post = r.pre + j.jump_size(r.pre, rng);
        out.jumps.push_back({*r.jump_time, r.pre, post});
        psi = *r.jump_time;
        x = post;
    }
}

} // namespace

JumpSkeleton run_bjea(const Model& m, InnerAlgo inner, Rng& rng, const ExactOptions& opt) {
    const JumpSpec& j = jumps_of(m);
    if (!j.globally_bounded()) throw ConfigError("BJEA needs a globally bounded jump intensity");
    const double rate = j.bound_over({0.0, 0.0});
    const double T = m.diffusion.horizon;
    JumpSkeleton out;
    out.provenance = "BJEA/" + std::string(inner == InnerAlgo::BEA ? "BEA" : inner == InnerAlgo::UEA ? "UEA" : "AUEA");
    out.horizon = T;
    double psi = 0.0, x = m.diffusion.start;
    for (;;) {
        const double next = psi + rng.exponential(rate);
        const double end = std::min(next, T);
        Skeleton seg = run_inner(inner, m.diffusion, psi, x, end, rng, opt);
        const double pre = seg.terminal();
        out.segments.push_back(std::move(seg));
        if (next >= T) {
            out.terminal = pre;
            return out;
        }
        ++out.proposals;
        x = pre;
        if (thin(j, pre, 0.0, rate, rng)) {
            x = pre + j.jump_size(pre, rng);
            out.jumps.push_back({next, pre, x});
        }
        psi = next;
    }
}

JumpSkeleton run_ujea(const Model& m, Rng& rng, const ExactOptions& opt) {
    JumpSkeleton out;
    out.provenance = "UJEA";
    out.horizon = m.diffusion.horizon;
    out.terminal = run_rounds(m, JumpAlgo::UJEA, 0.0, m.diffusion.start, m.diffusion.horizon, 0.0, rng, opt, out);
    return out;
}

JumpSkeleton run_aujea(const Model& m, Rng& rng, const ExactOptions& opt) {
    JumpSkeleton out;
    out.provenance = "AUJEA";
    out.horizon = m.diffusion.horizon;
    out.terminal = run_rounds(m, JumpAlgo::AUJEA, 0.0, m.diffusion.start, m.diffusion.horizon, 0.0, rng, opt, out);
    return out;
}

JumpSkeleton superposition_wrapper(const Model& m, JumpAlgo inner, Rng& rng, const ExactOptions& opt) {
    const JumpSpec& j = jumps_of(m);
    if (inner == JumpAlgo::BJEA) throw ConfigError("superposition wraps UJEA or AUJEA");
    if (!j.floor || !(*j.floor > 0.0)) throw ConfigError("superposition needs a positive intensity floor");
    const double floor = *j.floor;
    const double T = m.diffusion.horizon;
    JumpSkeleton out;
    out.provenance = std::string("superposition/") + (inner == JumpAlgo::UJEA ? "UJEA" : "AUJEA");
    out.horizon = T;
    double psi = 0.0, x = m.diffusion.start;
    for (;;) {
        const double next = psi + rng.exponential(floor);
        const double end = std::min(next, T);
        const double pre = run_rounds(m, inner, psi, x, end, floor, rng, opt, out);
        if (next >= T) {
            out.terminal = pre;
            return out;
        }
        ++out.proposals;
        x = pre + j.jump_size(pre, rng);
        out.jumps.push_back({next, pre, x});
        psi = next;
    }
}

double restore(JumpSkeleton& sk, double time, Rng& rng) {
    if (sk.provenance == "UJEA" || sk.provenance == "superposition/UJEA")
        throw ConfigError("restoration is not offered for UJEA skeletons");
    if (!(time >= 0.0 && time <= sk.horizon)) throw ContractViolation("time outside horizon");
    // Right-continuous: at a jump time use the segment that starts there.
    for (auto it = sk.segments.rbegin(); it != sk.segments.rend(); ++it)
        if (it->start_time() <= time && time <= it->end_time()) {
            if (time == it->end_time() && it != sk.segments.rbegin()) continue;
            return restore(*it, time, rng);
        }
    throw ContractViolation("no segment covers the requested time");
}

} // namespace pathsim
