#pragma once

#include <string>

#include "pathsim/exact.hpp"
#include "pathsim/jumps.hpp"

namespace pathsim {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

/// Versioned JSON records. Output is a pure function of the value, so equal
/// skeletons serialise to identical bytes.
std::string skeleton_to_json(const Skeleton& sk);
Skeleton skeleton_from_json(const std::string& text);
std::string jump_skeleton_to_json(const JumpSkeleton& sk);
JumpSkeleton jump_skeleton_from_json(const std::string& text);

} // namespace pathsim
