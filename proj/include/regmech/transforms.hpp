#pragma once

#include "regmech/mechanism.hpp"
#include "regmech/prior.hpp"

#include <utility>
#include <vector>

namespace regmech {

/// Floor-randomized mechanism with the same product qr; u_bar = 0.
Mechanism floor_transform(const Mechanism& m);

/// Floor transformation of the gamma-mixture of the products.
Mechanism floor_transform_mixture(const std::vector<Mechanism>& ms, const std::vector<double>& weights);

/// Clips q to q_e and pins q(theta_low) = q_e(theta_low) with an override.
Mechanism dd_repair(const Mechanism& m);

/// Drops overrides whose product sits below the left limit.
Mechanism lc_repair(const Mechanism& m);

/// Pointwise minimum of q and of r.
Mechanism meet(const Mechanism& a, const Mechanism& b);

/// (r_hat, r_tilde) = (max(2r-1, 0), min(2r, 1)); q is zeroed where the split r is zero.
std::pair<Mechanism, Mechanism> extreme_split(const Mechanism& m);

/// Best threshold operation rule for the fixed quantity schedule of m.
Mechanism deterministic_extract(const Mechanism& m, const Prior& prior);

struct PerturbationParams {
    double theta_l;
    double theta_h;
    double epsilon;
};

/// Upper bound on epsilon: (1 - alpha) / (2 g(P^-1(theta*))).
double perturbation_epsilon_bound(const MarketEnv& env, double theta_l, double theta_h);

/// Discretization slack for the perturbation gap: (1 - alpha) eps (theta_h - theta_l) h_max.
double perturbation_grid_error(const MarketEnv& env, const PerturbationParams& p);

/// Closed-form lower bound of the gap at type theta.
double perturbation_gap_bound(const MarketEnv& env, const PerturbationParams& p, double theta);

/// Efficient mechanism with q reduced by eps (theta_h - theta) on [theta_l, theta_h].
Mechanism efficient_perturbation(EnvPtr env, const PerturbationParams& p);

/**
 * Same reduction applied to a mechanism that is efficient (q = q_e, r = 1) on
 * the knots of [theta_l, theta_h]; u_bar is reset to zero.
 */
Mechanism perturb_efficient_segment(const Mechanism& m, const PerturbationParams& p);

/// Knot indices covered by [theta_l, theta_h].
std::pair<std::size_t, std::size_t> perturbation_knots(const TypeGrid& grid, const PerturbationParams& p);

} // namespace regmech
