#pragma once

#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace regmech {

/// P(q) = a - b q on [0, a/b].
struct LinearDemand {
    double a;
    double b;
};

/// P(q) = V - beta ln(q / (1 - q)) on (0, qbar]; the logit discrete-choice curve.
struct LogitDemand {
    double quality;
    double beta;
};

/// Piecewise-linear inverse demand through (quantity, price) breakpoints.
/// The first breakpoint must sit at q = 0; quantities strictly increase.
struct TabulatedDemand {
    std::vector<std::pair<double, double>> points;
};

enum class Curvature { Linear, Concave, Convex, Mixed };

/**
 * Inverse demand curve P together with its value function V(q) = int_0^q P.
 *
 * Evaluation is closed form for the linear and logit families; the tabulated
 * family interpolates linearly and integrates by the exact trapezoid rule on
 * its own breakpoints. All evaluators throw DomainError outside [0, qbar].
 */
class Demand {
public:
    using Family = std::variant<LinearDemand, LogitDemand, TabulatedDemand>;

    explicit Demand(Family family);

    static Demand linear(double a, double b) { return Demand(LinearDemand{a, b}); }
    static Demand logit(double quality, double beta) { return Demand(LogitDemand{quality, beta}); }
    static Demand tabulated(std::vector<std::pair<double, double>> points)
    {
        return Demand(TabulatedDemand{std::move(points)});
    }

    const Family& family() const { return family_; }
    std::string family_name() const;

    /// Quantity at which the price reaches zero.
    double qbar() const { return qbar_; }

    /// P(0); +infinity for the logit family.
    double choke_price() const;

    double price(double q) const;
    double inverse_price(double p) const;
    double value(double q) const;

    /// Unregulated consumer surplus V(q) - q P(q); zero at q = 0.
    double unregulated_surplus(double q) const;

    /// Magnitude of the demand slope |P'(q)|; linear and logit only.
    double slope_magnitude(double q) const;

    /// Sign of P'' on [q0, q1]; linear and logit only.
    Curvature curvature_on(double q0, double q1) const;

    bool is_smooth() const { return !std::holds_alternative<TabulatedDemand>(family_); }

private:
    void check_quantity(double q) const;

    Family family_;
    double qbar_ = 0.0;
    std::vector<double> cumulative_value_; // tabulated only: V at each breakpoint
};

} // namespace regmech
