#pragma once

namespace regmech {

/// Absolute tolerance for every equality test against qhat, q_e, 0 and 1.
inline constexpr double kTol = 1e-9;

/// Tolerance for comparing regulator surplus values (dominance, monotonicity).
inline constexpr double kSurplusTol = 1e-12;

/// Bisection settings shared by every root finder.
inline constexpr double kBisectTol = 1e-9;
inline constexpr int kBisectMaxIter = 200;

} // namespace regmech
