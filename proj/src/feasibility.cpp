#include "regmech/feasibility.hpp"

#include "regmech/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace regmech {

LpFeasibility find_feasible_point(const std::vector<std::vector<double>>& a_eq, const std::vector<double>& b_eq,
                                  const std::vector<std::vector<double>>& a_ge, double tol)
{
    constexpr double kPivotEps = 1e-9;
    constexpr double kCostEps = 1e-12;
    constexpr std::size_t kMaxPivots = 200000;

    if (a_eq.size() != b_eq.size()) throw ContractError("lp: equality rows and right-hand side differ in length");
    std::size_t n = a_eq.empty() ? (a_ge.empty() ? 0 : a_ge.front().size()) : a_eq.front().size();
    for (const auto& row : a_eq)
        if (row.size() != n) throw ContractError("lp: ragged constraint matrix");
    for (const auto& row : a_ge)
        if (row.size() != n) throw ContractError("lp: ragged constraint matrix");

    const std::size_t m_eq = a_eq.size();
    const std::size_t m_ge = a_ge.size();
    const std::size_t rows = m_eq + m_ge;
    // Columns: x (n) | surplus (m_ge) | artificial (rows) | rhs
    const std::size_t art0 = n + m_ge;
    const std::size_t cols = art0 + rows + 1;
    const std::size_t rhs = cols - 1;

    std::vector<std::vector<double>> t(rows, std::vector<double>(cols, 0.0));
    std::vector<std::size_t> basis(rows);
    for (std::size_t r = 0; r < m_eq; ++r) {
        double sign = b_eq[r] < 0.0 ? -1.0 : 1.0;
        for (std::size_t j = 0; j < n; ++j) t[r][j] = sign * a_eq[r][j];
        t[r][rhs] = sign * b_eq[r];
    }
    for (std::size_t k = 0; k < m_ge; ++k) {
        std::size_t r = m_eq + k;
        for (std::size_t j = 0; j < n; ++j) t[r][j] = a_ge[k][j];
        t[r][n + k] = -1.0;
    }
    for (std::size_t r = 0; r < rows; ++r) {
        t[r][art0 + r] = 1.0;
        basis[r] = art0 + r;
    }

    // Reduced costs of the phase-one objective (minimize the artificial sum).
    std::vector<double> cost(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < cols; ++j)
            if (j < art0 || j == rhs) cost[j] -= t[r][j];

    LpFeasibility res;
    while (res.pivots < kMaxPivots) {
        std::size_t enter = cols;
        for (std::size_t j = 0; j < rhs; ++j) {
            if (cost[j] < -kCostEps) {
                enter = j;
                break;
            }
        }
        if (enter == cols) break;
        std::size_t leave = rows;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < rows; ++r) {
            if (t[r][enter] > kPivotEps) {
                double ratio = std::max(0.0, t[r][rhs]) / t[r][enter];
                if (leave == rows || ratio < best - kPivotEps ||
                    (std::abs(ratio - best) <= kPivotEps && basis[r] < basis[leave])) {
                    best = ratio;
                    leave = r;
                }
            }
        }
        if (leave == rows) break; // unbounded direction cannot occur in phase one
        double piv = t[leave][enter];
        for (double& v : t[leave]) v /= piv;
        for (std::size_t r = 0; r < rows; ++r) {
            if (r == leave) continue;
            double f = t[r][enter];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < cols; ++j) t[r][j] -= f * t[leave][j];
            // Roundoff can push a degenerate basic value slightly negative.
            if (t[r][rhs] < 0.0 && t[r][rhs] > -1e-13) t[r][rhs] = 0.0;
        }
        double f = cost[enter];
        for (std::size_t j = 0; j < cols; ++j) cost[j] -= f * t[leave][j];
        basis[leave] = enter;
        ++res.pivots;
    }

    res.residual = 0.0;
    res.x.assign(n, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        if (basis[r] >= art0) res.residual += t[r][rhs];
        if (basis[r] < n) res.x[basis[r]] = t[r][rhs];
    }
    res.feasible = res.residual <= tol;
    return res;
}

} // namespace regmech
