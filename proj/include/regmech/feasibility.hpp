#pragma once

#include <cstddef>
#include <vector>

namespace regmech {

/// Result of a phase-one simplex run.
struct LpFeasibility {
    bool feasible = false;
    std::vector<double> x;    ///< a feasible point when one exists
    double residual = 0.0;    ///< optimal sum of artificial variables
    std::size_t pivots = 0;
};

/**
 * Finds x >= 0 with A_eq x = b_eq and A_ge x >= 0.
 *
 * Dense tableau, phase one only, Bland's rule. Infeasibility is declared when
 * the optimal artificial sum exceeds `tol`.
 */
LpFeasibility find_feasible_point(const std::vector<std::vector<double>>& a_eq, const std::vector<double>& b_eq,
                                  const std::vector<std::vector<double>>& a_ge, double tol = 1e-9);

} // namespace regmech
