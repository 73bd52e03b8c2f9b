#pragma once

#include <cstddef>
#include <vector>

#include "pathsim/layer.hpp"
#include "pathsim/rng.hpp"
#include "pathsim/series.hpp"

namespace pathsim {

/// Smallest iota such that the bridge stays within
/// [min(x, y) - a_iota, max(x, y) + a_iota], drawn with a single uniform.
std::size_t simulate_layer(const Bridge& b, const LayerSequence& seq, Rng& rng);

/// Path values at the requested times given the layer index, together with
/// the intersection layer implied by which branch accepted. The auxiliary
/// extreme used for the proposal is not reported.
struct LayeredBridgeDraw {
    std::vector<Knot> points;  // sorted by time
    IntersectionLayer layer;
    std::size_t iota = 0;
    std::size_t attempts = 0;
};

LayeredBridgeDraw simulate_layered_bridge(const Bridge& b, std::size_t iota, const LayerSequence& seq,
                                          std::vector<double> times, Rng& rng);

/// Intersection layers for each sub-interval between consecutive points.
std::vector<IntersectionLayer> augment_to_intersection(const LayeredBridgeDraw& draw, Rng& rng);

} // namespace pathsim
