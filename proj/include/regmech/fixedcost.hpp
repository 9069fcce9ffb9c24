#pragma once

#include "regmech/demand.hpp"
#include "regmech/market.hpp"
#include "regmech/mechanism.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace regmech {

struct FixedCostParams {
    Demand demand = Demand::linear(1.0, 1.0);
    double c = 0.4;           ///< known marginal cost
    double theta_low = 0.05;  ///< private fixed cost bounds
    double theta_high = 0.15;
    double alpha = 0.5;
    std::size_t grid_n = 2001;

    void check() const;
};

/// Validated fixed-cost environment; q_e = P^-1(c) is cached.
class FixedCostEnv {
public:
    static std::shared_ptr<const FixedCostEnv> create(FixedCostParams params);

    const FixedCostParams& params() const { return params_; }
    const Demand& demand() const { return params_.demand; }
    const TypeGrid& grid() const { return *grid_; }
    double c() const { return params_.c; }
    double alpha() const { return params_.alpha; }
    double theta_low() const { return params_.theta_low; }
    double theta_high() const { return params_.theta_high; }
    double qe() const { return qe_; }

    std::shared_ptr<const FixedCostEnv> with_alpha(double alpha) const;

private:
    FixedCostEnv(FixedCostParams p, std::shared_ptr<const TypeGrid> g, double qe)
        : params_(std::move(p)), grid_(std::move(g)), qe_(qe)
    {
    }

    FixedCostParams params_;
    std::shared_ptr<const TypeGrid> grid_;
    double qe_;
};

using FcEnvPtr = std::shared_ptr<const FixedCostEnv>;

/// P^-1(c); ContractError when c >= P(0).
double fc_efficient_quantity(const Demand& demand, double c);

/// V(q) - theta - c q for q > 0, else 0.
double fc_total_surplus(const FixedCostEnv& env, double theta, double q);

/// Step mechanism in the fixed-cost model; same conventions as Mechanism.
class FcMechanism {
public:
    FcMechanism(FcEnvPtr env, std::vector<double> q, std::vector<double> r, std::vector<Override> overrides = {},
                double u_bar = 0.0, std::optional<std::vector<double>> explicit_rents = std::nullopt);

    /// q = q_e, r = 1 on every knot.
    static FcMechanism full_operation(FcEnvPtr env);

    const FixedCostEnv& env() const { return *env_; }
    const FcEnvPtr& env_ptr() const { return env_; }
    std::size_t size() const { return q_.size(); }
    const std::vector<double>& q_values() const { return q_; }
    const std::vector<double>& r_values() const { return r_; }
    const std::vector<Override>& overrides() const { return overrides_; }
    std::optional<Override> override_at(std::size_t i) const;
    double q_at(std::size_t i) const;
    double r_at(std::size_t i) const;
    double u_bar() const { return u_bar_; }
    bool has_explicit_rents() const { return explicit_rents_.has_value(); }

    /// u(theta_i) = u_bar + integral of r above theta_i, unless explicit rents were supplied.
    std::vector<double> rents() const;
    std::vector<double> envelope_rents() const;

    FcMechanism rebind(FcEnvPtr env) const;

private:
    FcEnvPtr env_;
    std::vector<double> q_, r_;
    std::vector<Override> overrides_;
    double u_bar_;
    std::optional<std::vector<double>> explicit_rents_;
};

IcReport fc_check_ic(const FcMechanism& m);
bool fc_is_ic(const FcMechanism& m);
bool fc_check_ir(const FcMechanism& m);

std::vector<double> fc_rs_profile(const FcMechanism& m);
std::vector<double> fc_rs_profile(const FcMechanism& m, double alpha);

/// Relation of a to b (same grid), by the dominance definition.
struct FcComparison {
    bool dominates = false;
    bool weakly_above = false;
    std::vector<std::size_t> strict_knots;
    double min_gap = 0.0;
};
FcComparison fc_compare(const FcMechanism& a, const FcMechanism& b);

struct FcWitnessStep {
    std::string name;
    bool applied = false;
    bool weakly_above = true; ///< step output vs its input
    bool strict_somewhere = false;
};

struct FcClassification {
    bool undominated = false;
    bool r_left_continuous = false;
    bool r_top_type_operates = false; ///< r(theta_low) = 1
    bool no_rent_at_top = false;      ///< u(theta_high) = 0
    bool efficient_quantity = false;
    std::optional<FcMechanism> witness;
    bool witness_verified = false;
    std::vector<FcWitnessStep> steps;
};

FcClassification fc_classify(const FcMechanism& m);

} // namespace regmech
