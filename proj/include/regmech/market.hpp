#pragma once

#include "regmech/demand.hpp"

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace regmech {

/// Strictly increasing discretization of the type interval. Endpoints are exact.
class TypeGrid {
public:
    explicit TypeGrid(std::vector<double> knots);

    static TypeGrid uniform(double lo, double hi, std::size_t n);

    std::size_t size() const { return knots_.size(); }
    double operator[](std::size_t i) const { return knots_[i]; }
    double front() const { return knots_.front(); }
    double back() const { return knots_.back(); }
    const std::vector<double>& knots() const { return knots_; }

    /// Width of the interval (theta_{i-1}, theta_i]; zero for i = 0.
    double width(std::size_t i) const { return i == 0 ? 0.0 : knots_[i] - knots_[i - 1]; }
    double max_step() const;

    /// Trapezoid quadrature weights on the knots.
    std::vector<double> trapezoid_weights() const;

    bool same_as(const TypeGrid& other) const { return knots_ == other.knots_; }

private:
    std::vector<double> knots_;
};

/// Raw market primitives, before any assumption is checked.
struct MarketParams {
    Demand demand = Demand::linear(1.0, 1.0);
    double c = 0.02;
    double theta_low = 0.3;
    double theta_high = 0.5;
    double alpha = 0.5;
    std::size_t grid_n = 2001;

    /// Throws ContractError naming every out-of-range field.
    void check() const;
};

/// The canonical test market: P(q) = 1 - q, c = 0.02, types [0.3, 0.5].
MarketParams linear_one(double alpha = 0.5, std::size_t grid_n = 2001);

struct Violation {
    std::string check;
    std::string detail;
    double value = 0.0;
};

struct ValidationReport {
    std::vector<Violation> violations;
    double top_type_surplus = 0.0;          ///< TS(theta_high, P^-1(theta_high))
    std::optional<double> qfloor;     ///< set when the floor bracket holds

    bool ok() const { return violations.empty(); }
    std::string summary() const;
};

/// Checks monotone demand (sampled), top-type operation, the floor bracket and the floor facts at every knot.
ValidationReport validate_assumptions(const MarketParams& params);

/// Root of q -> V(q) - q P(q) - c by bisection; throws AssumptionError when unbracketed.
double quantity_floor(const Demand& demand, double c);

/// Bisection for an increasing function with f(lo) <= 0 <= f(hi).
double bisect_increasing(const std::function<double(double)>& f, double lo, double hi,
                         double tol = 1e-9, int max_iter = 200);

/**
 * Validated market environment. Construction runs validate_assumptions and
 * caches the quantity floor; the object is immutable afterwards and is shared
 * by every mechanism built on it.
 */
class MarketEnv {
public:
    static std::shared_ptr<const MarketEnv> create(MarketParams params);
    static std::shared_ptr<const MarketEnv> create(MarketParams params, std::shared_ptr<const TypeGrid> grid);

    const MarketParams& params() const { return params_; }
    const Demand& demand() const { return params_.demand; }
    const TypeGrid& grid() const { return *grid_; }
    std::shared_ptr<const TypeGrid> grid_ptr() const { return grid_; }

    double theta_low() const { return params_.theta_low; }
    double theta_high() const { return params_.theta_high; }
    double c() const { return params_.c; }
    double alpha() const { return params_.alpha; }
    double qbar() const { return params_.demand.qbar(); }
    double qfloor() const { return qfloor_; }

    /// Same primitives and grid with a different welfare weight.
    std::shared_ptr<const MarketEnv> with_alpha(double alpha) const;

    /// Same grid and costs with a different demand curve.
    std::shared_ptr<const MarketEnv> with_demand(Demand demand) const;

private:
    MarketEnv(MarketParams params, std::shared_ptr<const TypeGrid> grid, double qfloor)
        : params_(std::move(params)), grid_(std::move(grid)), qfloor_(qfloor)
    {
    }

    MarketParams params_;
    std::shared_ptr<const TypeGrid> grid_;
    double qfloor_;
};

using EnvPtr = std::shared_ptr<const MarketEnv>;

double value(const MarketEnv& env, double q);
double price(const MarketEnv& env, double q);
double inverse_price(const MarketEnv& env, double p);

/// TS(theta, q) = V(q) - c - theta q for q > 0, else 0.
double total_surplus(const MarketEnv& env, double theta, double q);

/// q_e(theta) = P^-1(theta); DomainError outside the type interval.
double efficient_quantity(const MarketEnv& env, double theta);

/// Concave closure of (V(q) - c) 1{q > 0}: linear with slope P(qhat) below qhat.
double concave_closure_value(const MarketEnv& env, double q);

/// Rotates a linear or logit demand around (P^-1(theta_low), theta_low).
Demand rotate(const MarketEnv& env, double new_slope_param);

} // namespace regmech
