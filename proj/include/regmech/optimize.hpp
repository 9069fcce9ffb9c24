#pragma once

#include "regmech/mechanism.hpp"
#include "regmech/prior.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace regmech {

struct OptimalResult {
    Mechanism mechanism;
    double expected_rs = 0.0;
    std::vector<double> psi; ///< virtual cost per knot (empty for the DP oracle)
    bool ironed = false;
};

/// Virtual cost theta + (1 - alpha) G / g; theta where g = G = 0.
std::vector<double> virtual_cost(const MarketEnv& env, const Prior& prior);

/// Pointwise virtual-surplus maximizer with ironing, floor and shutdown threshold.
OptimalResult bm_optimal(EnvPtr env, const Prior& prior);

/// Decreasing isotonic projection, weighted least squares (pool adjacent violators).
std::vector<double> isotonic_decreasing(const std::vector<double>& y, const std::vector<double>& w);

/// Separable deterministic problem on raw arrays; allows a single type.
struct DpProblem {
    std::vector<double> theta;
    std::vector<double> mass;  ///< prior mass of the interval ending at each knot (0 for knot 0)
    std::vector<double> width; ///< width of the interval ending at each knot (0 for knot 0)
    std::vector<double> levels; ///< ascending quantity levels; levels[0] = 0
    double alpha = 0.0;
    std::function<double(double theta, double q)> ts;
};

struct DpSolution {
    std::vector<std::size_t> level_index;
    std::vector<double> q;
    double value = 0.0;
    double ts_sum = 0.0;
};

/// Exact maximizer over decreasing level sequences, ties broken by total surplus.
DpSolution dp_solve(const DpProblem& problem);

/// {0} and K-1 points spanning [qhat, q_e(theta_low)], optionally with q_e at every knot.
std::vector<double> quantity_levels(const MarketEnv& env, std::size_t k, bool with_efficient_levels);

OptimalResult dp_oracle(EnvPtr env, const Prior& prior, std::size_t k, bool with_efficient_levels = true);

/// Documented discretization bound qbar * h_max.
double grid_error_bound(const MarketEnv& env);

struct MaxminResult {
    std::size_t star = 0;
    OptimalResult optimal;
    std::vector<double> expected_rs_by_prior;
    std::size_t worst = 0;
    bool worst_at_star = false;
};

/// Optimal mechanism for the FOSD-maximal prior; throws "no dominating prior" otherwise.
MaxminResult maxmin(EnvPtr env, const std::vector<Prior>& priors);

struct MonotoneReport {
    bool rs_monotone = true;
    std::optional<std::pair<std::size_t, std::size_t>> violation;
    std::vector<bool> pair_ok; ///< one entry per supplied (G, G') pair
    bool ok() const;
};

/// RS decreasing in theta, and the expected-RS consequence on (G, G') pairs with G' FOSD-above G.
MonotoneReport monotone_rs_check(const Mechanism& m, const std::vector<std::pair<Prior, Prior>>& pairs = {});

struct RationalizingResult {
    bool feasible = false;
    std::optional<std::vector<double>> density; ///< step density of `prior`
    std::optional<Prior> prior;                 ///< interval masses found by the LP
    double residual = 0.0;
    std::size_t enumerated = 0;
};

/// All decreasing sequences of length n over level indices 0..k-1.
std::vector<std::vector<std::size_t>> decreasing_sequences(std::size_t n, std::size_t k);

/// Prior (as grid density) under which m maximizes expected RS among all enumerated deterministic mechanisms.
RationalizingResult find_rationalizing_prior(const Mechanism& m, std::size_t k);

/// True iff m is a best response under `prior` within the enumerated set.
bool check_rationalizes(const Mechanism& m, const Prior& prior, std::size_t k, double tol = 1e-12);

} // namespace regmech
