#include "regmech/demand.hpp"

#include "regmech/errors.hpp"
#include "regmech/tolerance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace regmech {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string describe(double v)
{
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

// Index of the tabulated segment [q_k, q_{k+1}] containing q.
std::size_t segment_of(const TabulatedDemand& t, double q)
{
    const auto& pts = t.points;
    auto it = std::upper_bound(pts.begin(), pts.end(), q,
                               [](double v, const auto& p) { return v < p.first; });
    std::size_t k = static_cast<std::size_t>(std::distance(pts.begin(), it));
    if (k == 0) return 0;
    return std::min(k - 1, pts.size() - 2);
}

double tab_price(const TabulatedDemand& t, double q)
{
    std::size_t k = segment_of(t, q);
    const auto [q0, p0] = t.points[k];
    const auto [q1, p1] = t.points[k + 1];
    double w = (q - q0) / (q1 - q0);
    return p0 + w * (p1 - p0);
}

} // namespace

Demand::Demand(Family family) : family_(std::move(family))
{
    std::visit(overloaded{
                   [&](const LinearDemand& d) {
                       if (!(d.b > 0.0)) throw ContractError("linear demand: slope b must be > 0");
                       if (!(d.a > 0.0)) throw ContractError("linear demand: intercept a must be > 0");
                       qbar_ = d.a / d.b;
                   },
                   [&](const LogitDemand& d) {
                       if (!(d.beta > 0.0)) throw ContractError("logit demand: scale beta must be > 0");
                       qbar_ = 1.0 / (1.0 + std::exp(-d.quality / d.beta));
                   },
                   [&](const TabulatedDemand& d) {
                       const auto& pts = d.points;
                       if (pts.size() < 2)
                           throw ContractError("tabulated demand: need at least two breakpoints");
                       if (pts.front().first != 0.0)
                           throw ContractError("tabulated demand: first breakpoint must be at q = 0");
                       for (std::size_t k = 1; k < pts.size(); ++k) {
                           if (!(pts[k].first > pts[k - 1].first))
                               throw ContractError("tabulated demand: quantities must strictly increase");
                       }
                       for (const auto& p : pts) {
                           if (p.second < 0.0)
                               throw ContractError("tabulated demand: prices must be >= 0");
                       }
                       qbar_ = pts.back().first;
                       cumulative_value_.assign(pts.size(), 0.0);
                       for (std::size_t k = 1; k < pts.size(); ++k) {
                           double h = pts[k].first - pts[k - 1].first;
                           cumulative_value_[k] =
                               cumulative_value_[k - 1] + 0.5 * h * (pts[k].second + pts[k - 1].second);
                       }
                   },
               },
               family_);
}

std::string Demand::family_name() const
{
    return std::visit(overloaded{
                          [](const LinearDemand&) { return std::string("linear"); },
                          [](const LogitDemand&) { return std::string("logit"); },
                          [](const TabulatedDemand&) { return std::string("tabulated"); },
                      },
                      family_);
}

double Demand::choke_price() const
{
    return std::visit(overloaded{
                          [](const LinearDemand& d) { return d.a; },
                          [](const LogitDemand&) { return std::numeric_limits<double>::infinity(); },
                          [](const TabulatedDemand& d) { return d.points.front().second; },
                      },
                      family_);
}

void Demand::check_quantity(double q) const
{
    if (!(q >= 0.0 && q <= qbar_))
        throw DomainError("quantity " + describe(q) + " outside [0, " + describe(qbar_) + "]");
}

double Demand::price(double q) const
{
    check_quantity(q);
    return std::visit(overloaded{
                          [&](const LinearDemand& d) { return d.a - d.b * q; },
                          [&](const LogitDemand& d) {
                              if (q == 0.0) return std::numeric_limits<double>::infinity();
                              return d.quality - d.beta * std::log(q / (1.0 - q));
                          },
                          [&](const TabulatedDemand& d) { return tab_price(d, q); },
                      },
                      family_);
}

double Demand::inverse_price(double p) const
{
    if (!(p >= 0.0 && p <= choke_price()))
        throw DomainError("price " + describe(p) + " outside [0, " + describe(choke_price()) + "]");
    return std::visit(overloaded{
                          [&](const LinearDemand& d) { return std::min((d.a - p) / d.b, qbar_); },
                          [&](const LogitDemand& d) {
                              return std::min(1.0 / (1.0 + std::exp((p - d.quality) / d.beta)), qbar_);
                          },
                          [&](const TabulatedDemand& d) {
                              // P is decreasing: find q with P(q) = p by bisection.
                              double lo = 0.0;
                              double hi = qbar_;
                              for (int it = 0; it < kBisectMaxIter && hi - lo > 1e-15 * (1.0 + hi); ++it) {
                                  double mid = 0.5 * (lo + hi);
                                  if (tab_price(d, mid) > p)
                                      lo = mid;
                                  else
                                      hi = mid;
                              }
                              return 0.5 * (lo + hi);
                          },
                      },
                      family_);
}

double Demand::value(double q) const
{
    check_quantity(q);
    return std::visit(overloaded{
                          [&](const LinearDemand& d) { return d.a * q - 0.5 * d.b * q * q; },
                          [&](const LogitDemand& d) {
                              auto xlogx = [](double x) { return x > 0.0 ? x * std::log(x) : 0.0; };
                              return d.quality * q - d.beta * (xlogx(q) + xlogx(1.0 - q));
                          },
                          [&](const TabulatedDemand& d) {
                              std::size_t k = segment_of(d, q);
                              double q0 = d.points[k].first;
                              double p0 = d.points[k].second;
                              return cumulative_value_[k] + 0.5 * (q - q0) * (p0 + tab_price(d, q));
                          },
                      },
                      family_);
}

double Demand::unregulated_surplus(double q) const
{
    if (q == 0.0) {
        check_quantity(q);
        return 0.0;
    }
    if (const auto* d = std::get_if<LogitDemand>(&family_)) {
        check_quantity(q);
        return -d->beta * std::log1p(-q);
    }
    return value(q) - q * price(q);
}

double Demand::slope_magnitude(double q) const
{
    check_quantity(q);
    return std::visit(overloaded{
                          [&](const LinearDemand& d) { return d.b; },
                          [&](const LogitDemand& d) { return d.beta / (q * (1.0 - q)); },
                          [&](const TabulatedDemand&) -> double {
                              throw ContractError("slope of tabulated demand is not defined");
                          },
                      },
                      family_);
}

Curvature Demand::curvature_on(double q0, double q1) const
{
    check_quantity(q0);
    check_quantity(q1);
    if (q0 > q1) std::swap(q0, q1);
    return std::visit(overloaded{
                          [&](const LinearDemand&) { return Curvature::Linear; },
                          [&](const LogitDemand&) {
                              // P''(q) = beta (1/q^2 - 1/(1-q)^2): convex below 1/2, concave above.
                              if (q1 <= 0.5) return Curvature::Convex;
                              if (q0 >= 0.5) return Curvature::Concave;
                              return Curvature::Mixed;
                          },
                          [&](const TabulatedDemand&) -> Curvature {
                              throw ContractError("curvature of tabulated demand is not defined");
                          },
                      },
                      family_);
}

} // namespace regmech
