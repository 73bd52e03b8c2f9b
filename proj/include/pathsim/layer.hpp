#pragma once

#include <cmath>
#include <cstddef>

#include "pathsim/series.hpp"

namespace pathsim {

/// Layer offsets a_iota = iota * theta * sqrt(t - s).
struct LayerSequence {
    double theta = 0.5;
    double offset(std::size_t iota, double length) const {
        return static_cast<double>(iota) * theta * std::sqrt(length);
    }
};

/// Which of the three disjoint pieces of a layer event an initial
/// intersection layer was drawn from: D1 has both extremes in the outermost
/// band, D2 only the minimum, D3 only the maximum.
enum class LayerOrigin { None, D1, D2, D3 };

/// Bridge from x at s to y at t whose minimum lies in [min_lo, min_hi] and
/// maximum in [max_lo, max_hi]. Invariant:
/// min_lo <= min_hi <= min(x, y) and max(x, y) <= max_lo <= max_hi.
struct IntersectionLayer {
    double s, t, x, y;
    double min_lo, min_hi, max_lo, max_hi;
    LayerOrigin origin = LayerOrigin::None;

    Bridge bridge() const { return {s, t, x, y}; }
    BandPair bands() const { return {min_lo, min_hi, max_lo, max_hi}; }
    /// Certified envelope of the whole path on [s, t].
    double lower() const { return min_lo; }
    double upper() const { return max_hi; }
};

/// Throws ContractViolation if the invariant above fails.
void check_layer(const IntersectionLayer& il);

} // namespace pathsim
