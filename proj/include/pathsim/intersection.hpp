#pragma once

#include <cstddef>
#include <vector>

#include "pathsim/layer.hpp"
#include "pathsim/rng.hpp"
#include "pathsim/series.hpp"

namespace pathsim {

/// Bands of the initial intersection layer for layer index iota and origin.
IntersectionLayer layer_from_index(const Bridge& b, std::size_t iota, const LayerSequence& seq,
                                   LayerOrigin origin);

/// Layer index, then the D1/D2/D3 split of that layer event.
IntersectionLayer initial_layer(const Bridge& b, const LayerSequence& seq, Rng& rng);

/// One term of the positive envelope used by sample_midpoint:
/// exp(log_coef + slope * (w - centre)) on [lo, hi].
struct EnvelopeTerm {
    double lo, hi;
    double log_coef;
    double slope;
    double log_mass;  // log of its integral against the bridge density
};

/// Dominating function for the midpoint density given an intersection layer.
struct MidpointEnvelope {
    double centre;    // bridge mean at q
    double variance;  // bridge variance at q
    std::vector<EnvelopeTerm> terms;
    double log_total = 0.0;

    /// Envelope value at w (a multiple of the probability rho(w)).
    double value(double w) const;
    bool degenerate() const;
};

MidpointEnvelope midpoint_envelope(const IntersectionLayer& il, double q);

/// Value at q drawn from the bridge conditioned on the intersection layer,
/// by mixture-of-truncated-normals rejection; switches to hybrid_midpoint if
/// the envelope is degenerate or repeatedly rejects.
double sample_midpoint(const IntersectionLayer& il, double q, Rng& rng);

/// Same law as sample_midpoint, via a proposal anchored on one extreme
/// followed by an acceptance on the other extreme's band.
double hybrid_midpoint(const IntersectionLayer& il, double q, Rng& rng);

/// One candidate dissection: band pair per sub-interval and its weight.
struct DissectionCase {
    std::vector<BandPair> bands;
    AlternatingSeries weight;
};

/// All (2^{n+1} - 1)^2 candidates for knots (q_i, w_i) inside the layer,
/// ordered by minimum-attaining subset then maximum-attaining subset
/// (subsets as bit masks over sub-intervals, increasing).
std::vector<DissectionCase> dissection_cases(const IntersectionLayer& il,
                                             const std::vector<Knot>& knots);

struct Dissection {
    std::vector<IntersectionLayer> children;
    std::size_t case_index;
    std::size_t case_count;
};

/// Split the layer at the knots by enumerating every candidate.
Dissection dissect(const IntersectionLayer& il, const std::vector<Knot>& knots, Rng& rng);

/// Same law as dissect, peeling one knot at a time; cost grows
/// quadratically rather than exponentially in the number of knots.
std::vector<IntersectionLayer> dissect_sequential(const IntersectionLayer& il,
                                                  const std::vector<Knot>& knots, Rng& rng);

/// Four-way refinement of the bands at min_split in [min_lo, min_hi] and
/// max_split in [max_lo, max_hi]. Degenerate splits leave that band intact.
IntersectionLayer refine(const IntersectionLayer& il, double min_split, double max_split, Rng& rng);

struct Bisection {
    double w;
    IntersectionLayer left, right;
};

/// Draw the value at q and split the layer there.
Bisection layered_bridge_il(const IntersectionLayer& il, double q, Rng& rng);

} // namespace pathsim
