#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pathsim/layer.hpp"
#include "pathsim/model.hpp"
#include "pathsim/rng.hpp"

namespace pathsim {

enum class Provenance { BEA, UEA, AUEA };
std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

struct SkeletonStats {
    std::size_t proposals = 0;  // candidate paths drawn, including the accepted one
    std::size_t kappa = 0;      // acceptance points in the accepted skeleton
    std::size_t evaluated = 0;  // acceptance points evaluated over all proposals
};

/// Finite description of an accepted path on [points.front().t,
/// points.back().t]: exact values at the points and, for the layered
/// algorithms, one intersection layer per gap between consecutive points.
struct Skeleton {
    std::vector<Knot> points;
    std::vector<IntersectionLayer> layers;
    Provenance provenance = Provenance::BEA;
    SkeletonStats stats;

    double start_time() const { return points.front().t; }
    double end_time() const { return points.back().t; }
    double terminal() const { return points.back().w; }
    bool layered() const { return !layers.empty(); }
};

enum class UeaBackend { Intersection, Bessel };

struct ExactOptions {
    LayerSequence layers;
    UeaBackend backend = UeaBackend::Intersection;
    std::size_t attempt_cap = 1000000;
    /// Use M = exp(-L_X T) with the layer's own lower bound L_X, as printed
    /// for the unbounded algorithms. The accepted law is then tilted by
    /// exp(L_X T) and is exact only when L_X does not depend on the layer.
    /// By default an extra event of probability exp(-(L_X - phi_floor) T)
    /// is drawn, which needs the model's phi_floor.
    bool layer_relative_bound = false;
};

/// Extra acceptance step for a layer with phi lower bound `layer_lower` over
/// a length `len`; always true under layer_relative_bound.
bool floor_correction_accepts(const DiffusionModel& m, double layer_lower, double len, Rng& rng,
                              const ExactOptions& opt);

/// Globally bounded phi only; ConfigError otherwise.
Skeleton run_bea(const DiffusionModel& m, double t0, double x0, double t1, Rng& rng, const ExactOptions& opt = {});
Skeleton run_uea(const DiffusionModel& m, double t0, double x0, double t1, Rng& rng, const ExactOptions& opt = {});
Skeleton run_auea(const DiffusionModel& m, double t0, double x0, double t1, Rng& rng, const ExactOptions& opt = {});

/// Convenience forms over [0, horizon] from the model's start value.
Skeleton run_bea(const DiffusionModel& m, Rng& rng, const ExactOptions& opt = {});
Skeleton run_uea(const DiffusionModel& m, Rng& rng, const ExactOptions& opt = {});
Skeleton run_auea(const DiffusionModel& m, Rng& rng, const ExactOptions& opt = {});

/// Value of the accepted path at `time`, drawn conditionally on the
/// skeleton and added to it (layers are split accordingly). Requests for
/// existing points return the stored value.
double restore(Skeleton& sk, double time, Rng& rng);
std::vector<double> restore(Skeleton& sk, const std::vector<double>& times, Rng& rng);

/// Index of the gap containing `time` (points[i].t <= time <= points[i+1].t).
std::size_t gap_index(const Skeleton& sk, double time);

} // namespace pathsim
