#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "pathsim/exact.hpp"
#include "pathsim/jumps.hpp"
#include "pathsim/layer.hpp"
#include "pathsim/model.hpp"
#include "pathsim/rng.hpp"

namespace pathsim {

/// A cell of the bounding process: the path on [layer.s, layer.t] lies in
/// [layer.min_lo, layer.max_hi]. `round` is the bisection depth that created it.
struct Cell {
    IntersectionLayer layer;
    std::size_t round = 0;

    double s() const { return layer.s; }
    double t() const { return layer.t; }
    double lower() const { return layer.min_lo; }
    double upper() const { return layer.max_hi; }
    double gap() const { return layer.max_hi - layer.min_lo; }
};

/// Staircase bounds X_down <= X <= X_up on the horizon. Cells are ordered
/// and abut; at a jump time two cells meet and the bounds of both apply on
/// their own side.
struct BoundingProcess {
    std::vector<Cell> cells;
    std::vector<double> jump_times;
    std::size_t round = 0;

    double start_time() const { return cells.front().s(); }
    double end_time() const { return cells.back().t(); }
    /// Bounds at u; at a cell boundary the tighter pair of the two cells.
    double lower_at(double u) const;
    double upper_at(double u) const;
    double sup_gap() const;
    double l1_gap() const;
};

struct RefinePolicy {
    enum class Mode { Rounds, Tolerance };
    Mode mode = Mode::Rounds;
    std::size_t rounds = 1;
    double epsilon = 0.0;
    /// A child's band is refined while its width exceeds
    /// sqrt(trigger_scale * parent length).
    double trigger_scale = 0.25;

    static RefinePolicy with_rounds(std::size_t n);
    static RefinePolicy with_tolerance(double eps);
    /// ConfigError unless rounds >= 1 (round mode) or epsilon > 0.
    void validate() const;
};

/// Cells from the layered gaps of a skeleton (ConfigError if not layered).
BoundingProcess bounding_from_skeleton(const Skeleton& sk);
BoundingProcess bounding_from_skeleton(const JumpSkeleton& sk);

/// One round: bisect every cell at its midpoint, then refine the children.
void bisect_round(BoundingProcess& bp, Rng& rng, double trigger_scale = 0.25);
/// Bisect the widest cell (earliest on ties). Returns its index.
std::size_t bisect_widest(BoundingProcess& bp, Rng& rng, double trigger_scale = 0.25);
/// Apply the policy to an existing bounding process.
void apply_policy(BoundingProcess& bp, const RefinePolicy& policy, Rng& rng);

BoundingProcess eps_strong_bm(double horizon, double start, const RefinePolicy& policy, Rng& rng,
                              const LayerSequence& seq = {});
/// Layered skeleton from AUJEA (layer-bounded intensity), BJEA with AUEA
/// (global bound) or AUEA (no jumps), refined per policy.
BoundingProcess eps_strong_jump_diffusion(const Model& m, const RefinePolicy& policy, Rng& rng,
                                          const ExactOptions& opt = {});

/// Value at `time` drawn conditionally on the cells; splits that cell.
double restore(BoundingProcess& bp, double time, Rng& rng);

struct Range {
    double lo, hi;
};
struct Functionals {
    Range minimum, maximum, integral;
};
Functionals certified_functionals(const BoundingProcess& bp);

/// CSV with header s,t,lower,upper,round.
void write_staircase_csv(std::ostream& os, const BoundingProcess& bp);

} // namespace pathsim
