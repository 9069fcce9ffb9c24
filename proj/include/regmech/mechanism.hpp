#pragma once

#include "regmech/market.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace regmech {

/// Replaces the mechanism's value exactly at knot `knot`.
struct Override {
    std::size_t knot;
    double q;
    double r;

    bool operator==(const Override&) const = default;
};

/**
 * Step-function mechanism (r, q, u) on a type grid.
 *
 * Interval value i applies on (theta_{i-1}, theta_i]; value 0 is the single
 * point theta_0. Overrides change the value at one knot only. Rents follow
 * the envelope formula from u_bar unless explicit rents were supplied (used
 * to build deliberately non-IC inputs).
 */
class Mechanism {
public:
    Mechanism(EnvPtr env, std::vector<double> q, std::vector<double> r, std::vector<Override> overrides = {},
              double u_bar = 0.0, std::optional<std::vector<double>> explicit_rents = std::nullopt);

    /// r = 1 where q > 0, r = 0 where q = 0.
    static Mechanism deterministic(EnvPtr env, std::vector<double> q, double u_bar = 0.0);
    /// Samples continuous rules at every knot (right endpoints of the intervals).
    static Mechanism from_rule(EnvPtr env, const std::function<double(double)>& q_rule,
                               const std::function<double(double)>& r_rule, double u_bar = 0.0);
    static Mechanism zero(EnvPtr env);
    /// q = q_e, r = 1, u_bar = 0.
    static Mechanism efficient(EnvPtr env);

    const EnvPtr& env_ptr() const { return env_; }
    const MarketEnv& env() const { return *env_; }
    const TypeGrid& grid() const { return env_->grid(); }
    std::size_t size() const { return q_.size(); }

    const std::vector<double>& q_values() const { return q_; }
    const std::vector<double>& r_values() const { return r_; }
    const std::vector<Override>& overrides() const { return overrides_; }
    std::optional<Override> override_at(std::size_t i) const;

    double q_interval(std::size_t i) const { return q_[i]; }
    double r_interval(std::size_t i) const { return r_[i]; }
    double x_interval(std::size_t i) const { return q_[i] * r_[i]; }

    /// Values exactly at knot i (override-aware).
    double q_at(std::size_t i) const;
    double r_at(std::size_t i) const;
    double x_at(std::size_t i) const { return q_at(i) * r_at(i); }

    double u_bar() const { return u_bar_; }
    bool has_explicit_rents() const { return explicit_rents_.has_value(); }

    /// Explicit rents if supplied, else the envelope rents.
    std::vector<double> rents() const;

    /// The same values on another environment with an identical grid.
    Mechanism rebind(EnvPtr env) const;
    Mechanism with_u_bar(double u_bar) const;

    bool is_deterministic() const;

private:
    EnvPtr env_;
    std::vector<double> q_;
    std::vector<double> r_;
    std::vector<Override> overrides_; // sorted by knot, unique
    double u_bar_;
    std::optional<std::vector<double>> explicit_rents_;
};

/// u(theta_i) = u_bar + integral of the interval products above theta_i.
std::vector<double> envelope_rent(const Mechanism& m);

/// Subsidy at each knot; empty where r = 0.
std::vector<std::optional<double>> subsidy(const Mechanism& m);

struct IcReport {
    bool monotone = true;
    bool envelope = true;
    bool brute_force = true;
    bool oracle_agrees = true;
    std::optional<std::size_t> monotone_violation; ///< knot where x first increases
    double envelope_gap = 0.0;
    std::vector<std::pair<std::size_t, std::size_t>> violating_pairs; ///< (true type, report) over oracle types

    bool ok() const { return monotone && envelope; }
};

/// Characterization check plus the pairwise deviation oracle.
IcReport check_ic(const Mechanism& m);
/// Characterization only; O(N).
bool is_ic(const Mechanism& m);
bool check_ir(const Mechanism& m);

struct SurplusProfile {
    std::vector<double> u;
    std::vector<std::optional<double>> s;
    std::vector<double> cs;
    std::vector<double> ts;
    std::vector<double> rs;
};

double consumer_surplus(const Mechanism& m, std::size_t knot);
double regulator_surplus(const Mechanism& m, std::size_t knot);
double regulator_surplus(const Mechanism& m, std::size_t knot, double alpha);
/// RS at every knot, override-aware.
std::vector<double> rs_profile(const Mechanism& m);
std::vector<double> rs_profile(const Mechanism& m, double alpha);
SurplusProfile surplus_profile(const Mechanism& m);

enum class OperationClass { Full, Randomized, Shutdown };

struct KnotRange {
    std::size_t first = 0;
    std::size_t last = 0;
    bool empty = true;
};

struct Partition {
    KnotRange theta1;
    KnotRange theta01;
    KnotRange theta0;
};

struct PartitionResult {
    std::optional<Partition> partition;
    std::optional<std::size_t> failed_knot;
    std::string clause;

    bool ok() const { return partition.has_value(); }
};

PartitionResult partition_floor_randomized(const Mechanism& m);
bool is_floor_randomized(const Mechanism& m);

struct PredicateReport {
    bool ok = true;
    std::vector<std::size_t> knots; ///< violating knots
};

PredicateReport check_dd(const Mechanism& m);
PredicateReport check_strict_dd(const Mechanism& m);
PredicateReport check_left_continuity(const Mechanism& m);

} // namespace regmech
