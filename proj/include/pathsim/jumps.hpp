#pragma once

#include <string>
#include <vector>

#include "pathsim/exact.hpp"
#include "pathsim/model.hpp"

namespace pathsim {

enum class InnerAlgo { BEA, UEA, AUEA };
enum class JumpAlgo { BJEA, UJEA, AUJEA };

struct JumpEvent {
    double time;
    double pre;
    double post;
};

/// Piecewise skeleton of a jump diffusion. Consecutive segments share
/// boundary times; a boundary listed in `jumps` carries a jump from the
/// segment's terminal value (pre) to the next segment's initial value (post).
/// For UJEA each segment is the whole accepted proposal of its round, so it
/// may extend past the jump that ended the round.
struct JumpSkeleton {
    std::vector<Skeleton> segments;
    std::vector<JumpEvent> jumps;
    std::string provenance;
    double horizon = 0.0;
    double terminal = 0.0;
    std::size_t proposals = 0;  // dominating jump proposals considered

    std::size_t jump_count() const { return jumps.size(); }
};

/// Dominating Poisson process with a global intensity bound; the inner
/// algorithm runs between consecutive proposals.
JumpSkeleton run_bjea(const Model& m, InnerAlgo inner, Rng& rng, const ExactOptions& opt = {});
/// Jump proposals bounded through the layer of each diffusion proposal.
JumpSkeleton run_ujea(const Model& m, Rng& rng, const ExactOptions& opt = {});
/// Adaptive jump proposals whose bound tightens as the skeleton is refined.
JumpSkeleton run_aujea(const Model& m, Rng& rng, const ExactOptions& opt = {});
/// Splits lambda into its floor (jumps at the floor's Poisson times) and the
/// excess handled by UJEA or AUJEA between floor events.
JumpSkeleton superposition_wrapper(const Model& m, JumpAlgo inner, Rng& rng, const ExactOptions& opt = {});

/// Path value at `time` (right-continuous at jumps). Not available for UJEA.
double restore(JumpSkeleton& sk, double time, Rng& rng);

} // namespace pathsim
