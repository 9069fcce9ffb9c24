#include "regmech/market.hpp"

#include "regmech/errors.hpp"
#include "regmech/tolerance.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <variant>

namespace regmech {

namespace {

std::string num(double v)
{
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

} // namespace

TypeGrid::TypeGrid(std::vector<double> knots) : knots_(std::move(knots))
{
    if (knots_.size() < 2) throw ContractError("type grid needs at least two knots");
    for (std::size_t i = 1; i < knots_.size(); ++i) {
        if (!(knots_[i] > knots_[i - 1])) throw ContractError("type grid knots must strictly increase");
    }
}

TypeGrid TypeGrid::uniform(double lo, double hi, std::size_t n)
{
    if (n < 2) throw ContractError("type grid needs N >= 2");
    std::vector<double> k(n);
    double span = hi - lo;
    for (std::size_t i = 0; i < n; ++i) k[i] = lo + span * static_cast<double>(i) / static_cast<double>(n - 1);
    k.front() = lo;
    k.back() = hi;
    return TypeGrid(std::move(k));
}

double TypeGrid::max_step() const
{
    double m = 0.0;
    for (std::size_t i = 1; i < knots_.size(); ++i) m = std::max(m, knots_[i] - knots_[i - 1]);
    return m;
}

std::vector<double> TypeGrid::trapezoid_weights() const
{
    std::vector<double> w(knots_.size(), 0.0);
    for (std::size_t i = 1; i < knots_.size(); ++i) {
        double h = knots_[i] - knots_[i - 1];
        w[i - 1] += 0.5 * h;
        w[i] += 0.5 * h;
    }
    return w;
}

void MarketParams::check() const
{
    std::vector<std::string> errs;
    if (!(theta_low > 0.0)) errs.push_back("theta_low must be > 0");
    if (!(theta_high > theta_low)) errs.push_back("theta_high must exceed theta_low");
    if (!(c > 0.0)) errs.push_back("c must be > 0");
    if (!(alpha >= 0.0 && alpha < 1.0)) errs.push_back("alpha must lie in [0,1)");
    if (grid_n < 2) errs.push_back("grid N must be >= 2");
    if (!errs.empty()) {
        std::string msg = "invalid market parameters:";
        for (const auto& e : errs) msg += " " + e + ";";
        throw ContractError(msg);
    }
}

MarketParams linear_one(double alpha, std::size_t grid_n)
{
    MarketParams p;
    p.demand = Demand::linear(1.0, 1.0);
    p.c = 0.02;
    p.theta_low = 0.3;
    p.theta_high = 0.5;
    p.alpha = alpha;
    p.grid_n = grid_n;
    return p;
}

std::string ValidationReport::summary() const
{
    if (ok()) return "all assumptions hold";
    std::string s;
    for (const auto& v : violations) {
        if (!s.empty()) s += "; ";
        s += v.check + ": " + v.detail;
    }
    return s;
}

double bisect_increasing(const std::function<double(double)>& f, double lo, double hi, double tol, int max_iter)
{
    if (f(lo) > 0.0 || f(hi) < 0.0) throw AssumptionError("bisection: root not bracketed");
    for (int it = 0; it < max_iter && hi - lo > tol; ++it) {
        double mid = 0.5 * (lo + hi);
        if (f(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double quantity_floor(const Demand& demand, double c)
{
    double qbar = demand.qbar();
    double top = demand.unregulated_surplus(qbar);
    if (!(c < top)) {
        throw AssumptionError("quantity floor: c = " + num(c) + " >= V(qbar) - qbar P(qbar) = " + num(top));
    }
    auto f = [&](double q) { return demand.unregulated_surplus(q) - c; };
    // Iterate well past the 1e-9 contract so the cached floor is accurate to rounding.
    return bisect_increasing(f, 0.0, qbar, 1e-15, kBisectMaxIter);
}

ValidationReport validate_assumptions(const MarketParams& params)
{
    params.check();
    ValidationReport rep;
    const Demand& d = params.demand;
    const double qbar = d.qbar();
    const TypeGrid grid = TypeGrid::uniform(params.theta_low, params.theta_high, params.grid_n);

    // Demand: strict monotonicity sampled on 1e4 points plus the efficient quantities at knots.
    std::vector<double> qs;
    constexpr int kSamples = 10000;
    qs.reserve(kSamples + 1 + grid.size());
    for (int k = 0; k <= kSamples; ++k) qs.push_back(qbar * k / kSamples);
    for (double th : grid.knots()) {
        if (th >= 0.0 && th <= d.choke_price()) qs.push_back(d.inverse_price(th));
    }
    if (const auto* t = std::get_if<TabulatedDemand>(&d.family())) {
        for (const auto& p : t->points) qs.push_back(p.first);
    }
    std::sort(qs.begin(), qs.end());
    const double sep = 1e-12 * std::max(1.0, qbar);
    qs.erase(std::unique(qs.begin(), qs.end(), [sep](double a, double b) { return b - a < sep; }), qs.end());
    for (std::size_t k = 1; k < qs.size(); ++k) {
        double p0 = d.price(qs[k - 1]);
        double p1 = d.price(qs[k]);
        if (!(p1 < p0)) {
            rep.violations.push_back({"demand.monotone",
                                      "P not strictly decreasing between q=" + num(qs[k - 1]) + " and q=" + num(qs[k]),
                                      qs[k]});
            break;
        }
    }
    double p_at_qbar = d.price(qbar);
    if (std::abs(p_at_qbar) > kTol) {
        rep.violations.push_back({"demand.zero_at_qbar", "P(qbar) = " + num(p_at_qbar) + " != 0", p_at_qbar});
    }

    // Least efficient type operates in the complete-information benchmark.
    if (params.theta_high >= d.choke_price()) {
        rep.violations.push_back({"top_type_operates", "theta_high >= P(0): efficient quantity is zero", params.theta_high});
        return rep;
    }
    double qe_high = d.inverse_price(params.theta_high);
    rep.top_type_surplus = d.value(qe_high) - params.c - params.theta_high * qe_high;
    if (!(rep.top_type_surplus > 0.0)) {
        rep.violations.push_back({"top_type_operates", "TS(theta_high, q_e(theta_high)) = " + num(rep.top_type_surplus) + " <= 0",
                                  rep.top_type_surplus});
    }

    double top = d.unregulated_surplus(qbar);
    if (!(params.c < top)) {
        rep.violations.push_back({"floor.bracket", "c >= V(qbar) - qbar P(qbar) = " + num(top), params.c});
        return rep;
    }
    double qf = quantity_floor(d, params.c);
    rep.qfloor = qf;

    // Floor below the efficient quantity and positive surplus at the floor, at every knot.
    for (double th : grid.knots()) {
        double qe = d.inverse_price(th);
        if (!(qe > qf)) {
            rep.violations.push_back({"obs1.floor_below_efficient",
                                      "q_e(" + num(th) + ") = " + num(qe) + " <= qhat = " + num(qf), th});
            break;
        }
        double ts = d.value(qf) - params.c - th * qf;
        if (!(ts > 0.0)) {
            rep.violations.push_back({"obs1.floor_surplus", "TS(" + num(th) + ", qhat) = " + num(ts) + " <= 0", th});
            break;
        }
    }
    return rep;
}

std::shared_ptr<const MarketEnv> MarketEnv::create(MarketParams params)
{
    params.check();
    auto grid = std::make_shared<const TypeGrid>(TypeGrid::uniform(params.theta_low, params.theta_high, params.grid_n));
    return create(std::move(params), std::move(grid));
}

std::shared_ptr<const MarketEnv> MarketEnv::create(MarketParams params, std::shared_ptr<const TypeGrid> grid)
{
    params.check();
    if (!grid) throw ContractError("market env: null grid");
    if (grid->front() != params.theta_low || grid->back() != params.theta_high)
        throw ContractError("market env: grid endpoints must equal theta_low and theta_high");
    params.grid_n = grid->size();
    ValidationReport rep = validate_assumptions(params);
    if (!rep.ok()) throw AssumptionError("market assumptions violated: " + rep.summary());
    double qf = *rep.qfloor;
    return std::shared_ptr<const MarketEnv>(new MarketEnv(std::move(params), std::move(grid), qf));
}

std::shared_ptr<const MarketEnv> MarketEnv::with_alpha(double alpha) const
{
    MarketParams p = params_;
    p.alpha = alpha;
    p.check();
    return std::shared_ptr<const MarketEnv>(new MarketEnv(std::move(p), grid_, qfloor_));
}

std::shared_ptr<const MarketEnv> MarketEnv::with_demand(Demand demand) const
{
    MarketParams p = params_;
    p.demand = std::move(demand);
    return create(std::move(p), grid_);
}

double value(const MarketEnv& env, double q) { return env.demand().value(q); }
double price(const MarketEnv& env, double q) { return env.demand().price(q); }
double inverse_price(const MarketEnv& env, double p) { return env.demand().inverse_price(p); }

double total_surplus(const MarketEnv& env, double theta, double q)
{
    if (q == 0.0) return 0.0;
    return env.demand().value(q) - env.c() - theta * q;
}

double efficient_quantity(const MarketEnv& env, double theta)
{
    if (!(theta >= env.theta_low() && theta <= env.theta_high()))
        throw DomainError("type " + num(theta) + " outside [" + num(env.theta_low()) + ", " +
                          num(env.theta_high()) + "]");
    return env.demand().inverse_price(theta);
}

double concave_closure_value(const MarketEnv& env, double q)
{
    const Demand& d = env.demand();
    if (!(q >= 0.0 && q <= d.qbar())) throw DomainError("quantity " + num(q) + " outside [0, qbar]");
    double qf = env.qfloor();
    if (q < qf) return q * d.price(qf);
    return d.value(q) - env.c();
}

Demand rotate(const MarketEnv& env, double new_slope_param)
{
    const Demand& d = env.demand();
    const double tl = env.theta_low();
    Demand rotated = d;
    if (const auto* lin = std::get_if<LinearDemand>(&d.family())) {
        if (!(new_slope_param > 0.0 && new_slope_param < lin->b))
            throw ContractError("rotate: new slope must satisfy 0 < b_n < b");
        double a_n = tl + new_slope_param * (lin->a - tl) / lin->b;
        rotated = Demand::linear(a_n, new_slope_param);
    } else if (const auto* lg = std::get_if<LogitDemand>(&d.family())) {
        if (!(new_slope_param > 0.0 && new_slope_param < lg->beta))
            throw ContractError("rotate: new scale must satisfy 0 < beta_n < beta");
        double v_n = tl + new_slope_param * (lg->quality - tl) / lg->beta;
        rotated = Demand::logit(v_n, new_slope_param);
    } else {
        throw ContractError("rotate: only linear and logit demand can be rotated");
    }

    // Pivot and decreasing-difference postconditions.
    double pivot_q = d.inverse_price(tl);
    if (pivot_q > rotated.qbar() || std::abs(rotated.price(pivot_q) - tl) > kTol)
        throw ContractError("rotate: pivot postcondition failed");
    double qmax = std::min(d.qbar(), rotated.qbar());
    constexpr int kSamples = 2000;
    double prev = 0.0;
    for (int k = 1; k <= kSamples; ++k) {
        double q = qmax * k / kSamples;
        double diff = d.price(q) - rotated.price(q);
        if (k > 1 && !(diff < prev)) throw ContractError("rotate: P - P_n is not strictly decreasing");
        prev = diff;
    }
    return rotated;
}

} // namespace regmech
