#include "regmech/transforms.hpp"

#include "regmech/errors.hpp"
#include "regmech/tolerance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace regmech {

namespace {

// Floor formulas for a single product value. r is nudged by at most one ulp so
// that qhat * r reproduces x exactly when that is representable.
std::pair<double, double> floor_point(double x, double qf)
{
    if (x <= 0.0) return {0.0, 0.0};
    if (x >= qf) return {x, 1.0};
    double r = x / qf;
    if (qf * r != x) {
        for (double cand : {std::nextafter(r, 0.0), std::nextafter(r, 1.0)}) {
            if (qf * cand == x) {
                r = cand;
                break;
            }
        }
    }
    return {qf, std::min(r, 1.0)};
}

Mechanism floor_from_products(const EnvPtr& env, const std::vector<double>& x,
                              const std::map<std::size_t, double>& override_x)
{
    const double qf = env->qfloor();
    std::vector<double> q(x.size()), r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) std::tie(q[i], r[i]) = floor_point(x[i], qf);
    std::vector<Override> ov;
    for (const auto& [k, xo] : override_x) {
        auto [qo, ro] = floor_point(xo, qf);
        if (qo != q[k] || ro != r[k]) ov.push_back({k, qo, ro});
    }
    return Mechanism(env, std::move(q), std::move(r), std::move(ov), 0.0);
}

void require_ic_ir(const Mechanism& m, const char* op)
{
    if (!is_ic(m)) throw ContractError(std::string(op) + ": input mechanism is not IC");
    if (!check_ir(m)) throw ContractError(std::string(op) + ": input mechanism is not IR");
}

void require_fr(const Mechanism& m, const char* op)
{
    auto p = partition_floor_randomized(m);
    if (!p.ok())
        throw ContractError(std::string(op) + ": input is not floor randomized (" + p.clause + " at knot " +
                            std::to_string(*p.failed_knot) + ")");
}

// Rebuilds the override list keeping only entries that differ from the interval values.
std::vector<Override> trimmed(const std::vector<double>& q, const std::vector<double>& r,
                              const std::vector<Override>& ov)
{
    std::vector<Override> out;
    for (const auto& o : ov) {
        if (o.q != q[o.knot] || o.r != r[o.knot]) out.push_back(o);
    }
    return out;
}

} // namespace

Mechanism floor_transform(const Mechanism& m)
{
    require_ic_ir(m, "floor_transform");
    std::vector<double> x(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) x[i] = m.x_interval(i);
    std::map<std::size_t, double> ox;
    for (const auto& o : m.overrides()) ox[o.knot] = o.q * o.r;
    return floor_from_products(m.env_ptr(), x, ox);
}

Mechanism floor_transform_mixture(const std::vector<Mechanism>& ms, const std::vector<double>& weights)
{
    if (ms.empty()) throw ContractError("floor_transform_mixture: no mechanisms");
    if (ms.size() != weights.size()) throw ContractError("floor_transform_mixture: one weight per mechanism required");
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw ContractError("floor_transform_mixture: weights must be >= 0");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw ContractError("floor_transform_mixture: weights must sum to 1");
    const TypeGrid& grid = ms.front().grid();
    for (const auto& m : ms) {
        if (!m.grid().same_as(grid)) throw ContractError("floor_transform_mixture: grids differ");
        require_ic_ir(m, "floor_transform_mixture");
    }

    std::size_t n = grid.size();
    std::vector<double> x(n, 0.0);
    std::map<std::size_t, double> ox;
    for (const auto& m : ms) {
        for (const auto& o : m.overrides()) ox[o.knot] = 0.0;
    }
    for (std::size_t k = 0; k < ms.size(); ++k) {
        for (std::size_t i = 0; i < n; ++i) x[i] += weights[k] * ms[k].x_interval(i);
        for (auto& [i, v] : ox) v += weights[k] * ms[k].x_at(i);
    }
    return floor_from_products(ms.front().env_ptr(), x, ox);
}

Mechanism dd_repair(const Mechanism& m)
{
    require_fr(m, "dd_repair");
    const MarketEnv& env = m.env();
    const auto& g = m.grid();
    std::vector<double> q = m.q_values();
    std::vector<double> r = m.r_values();
    std::vector<Override> ov;
    for (std::size_t i = 1; i < m.size(); ++i) q[i] = std::min(q[i], efficient_quantity(env, g[i]));
    for (const auto& o : m.overrides()) {
        if (o.knot == 0) continue;
        ov.push_back({o.knot, std::min(o.q, efficient_quantity(env, g[o.knot])), o.r});
    }
    double qe0 = efficient_quantity(env, g[0]);
    if (std::abs(m.q_at(0) - qe0) <= kTol && m.r_at(0) == 1.0) {
        if (auto o = m.override_at(0)) ov.push_back(*o);
    } else {
        ov.push_back({0, qe0, 1.0});
    }
    return Mechanism(m.env_ptr(), q, r, trimmed(q, r, ov), 0.0);
}

Mechanism lc_repair(const Mechanism& m)
{
    require_fr(m, "lc_repair");
    if (!check_dd(m).ok) throw ContractError("lc_repair: input violates DD");
    std::vector<Override> ov;
    for (const auto& o : m.overrides()) {
        if (o.knot != 0 && o.q * o.r < m.x_interval(o.knot) - kSurplusTol) continue;
        ov.push_back(o);
    }
    return Mechanism(m.env_ptr(), m.q_values(), m.r_values(), std::move(ov), 0.0);
}

Mechanism meet(const Mechanism& a, const Mechanism& b)
{
    if (!a.grid().same_as(b.grid())) throw ContractError("meet: grids differ");
    for (const Mechanism* m : {&a, &b}) {
        require_fr(*m, "meet");
        if (!check_dd(*m).ok) throw ContractError("meet: input violates DD");
        if (!check_left_continuity(*m).ok) throw ContractError("meet: input is not left continuous");
    }
    std::size_t n = a.size();
    std::vector<double> q(n), r(n);
    for (std::size_t i = 0; i < n; ++i) {
        q[i] = std::min(a.q_interval(i), b.q_interval(i));
        r[i] = std::min(a.r_interval(i), b.r_interval(i));
    }
    std::vector<Override> ov;
    for (const Mechanism* m : {&a, &b}) {
        for (const auto& o : m->overrides()) {
            if (std::any_of(ov.begin(), ov.end(), [&](const Override& e) { return e.knot == o.knot; })) continue;
            ov.push_back({o.knot, std::min(a.q_at(o.knot), b.q_at(o.knot)), std::min(a.r_at(o.knot), b.r_at(o.knot))});
        }
    }
    Mechanism out(a.env_ptr(), q, r, trimmed(q, r, ov), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(out.x_at(i) - std::min(a.x_at(i), b.x_at(i))) > kSurplusTol)
            throw ContractError("meet: product is not the pointwise minimum at knot " + std::to_string(i));
    }
    return out;
}

std::pair<Mechanism, Mechanism> extreme_split(const Mechanism& m)
{
    require_fr(m, "extreme_split");
    auto split = [&](auto rule) {
        std::vector<double> q = m.q_values();
        std::vector<double> r = m.r_values();
        for (std::size_t i = 0; i < q.size(); ++i) {
            r[i] = rule(r[i]);
            if (r[i] == 0.0) q[i] = 0.0;
        }
        std::vector<Override> ov;
        for (auto o : m.overrides()) {
            o.r = rule(o.r);
            if (o.r == 0.0) o.q = 0.0;
            ov.push_back(o);
        }
        return Mechanism(m.env_ptr(), q, r, trimmed(q, r, ov), 0.0);
    };
    return {split([](double r) { return std::max(2.0 * r - 1.0, 0.0); }),
            split([](double r) { return std::min(2.0 * r, 1.0); })};
}

Mechanism deterministic_extract(const Mechanism& m, const Prior& prior)
{
    require_fr(m, "deterministic_extract");
    if (m.is_deterministic()) return m;
    const std::size_t n = m.size();
    auto threshold = [&](std::ptrdiff_t k) {
        std::vector<double> q(n), r(n);
        for (std::size_t i = 0; i < n; ++i) {
            bool on = static_cast<std::ptrdiff_t>(i) <= k && m.q_interval(i) > 0.0;
            q[i] = on ? m.q_interval(i) : 0.0;
            r[i] = on ? 1.0 : 0.0;
        }
        std::vector<Override> ov;
        for (const auto& o : m.overrides()) {
            bool on = static_cast<std::ptrdiff_t>(o.knot) <= k && o.q > 0.0;
            ov.push_back({o.knot, on ? o.q : 0.0, on ? 1.0 : 0.0});
        }
        return Mechanism(m.env_ptr(), q, r, trimmed(q, r, ov), 0.0);
    };
    Mechanism best = threshold(-1);
    double best_val = expected_rs(best, prior);
    for (std::size_t k = 0; k < n; ++k) {
        Mechanism cand = threshold(static_cast<std::ptrdiff_t>(k));
        double v = expected_rs(cand, prior);
        if (v > best_val) {
            best_val = v;
            best = std::move(cand);
        }
    }
    return best;
}

double perturbation_epsilon_bound(const MarketEnv& env, double theta_l, double theta_h)
{
    const Demand& d = env.demand();
    if (!d.is_smooth()) throw ContractError("perturbation: demand must be linear or logit");
    if (!(theta_l < theta_h)) throw ContractError("perturbation: theta_l must be below theta_h");
    double q_lo = efficient_quantity(env, theta_h);
    double q_hi = efficient_quantity(env, theta_l);
    double theta_star = theta_l;
    switch (d.curvature_on(q_lo, q_hi)) {
    case Curvature::Linear:
    case Curvature::Concave: theta_star = theta_l; break;
    case Curvature::Convex: theta_star = theta_h; break;
    case Curvature::Mixed: throw ContractError("perturbation: curvature of P changes sign on the interval");
    }
    double g = d.slope_magnitude(efficient_quantity(env, theta_star));
    return (1.0 - env.alpha()) / (2.0 * g);
}

double perturbation_grid_error(const MarketEnv& env, const PerturbationParams& p)
{
    return (1.0 - env.alpha()) * p.epsilon * (p.theta_h - p.theta_l) * env.grid().max_step();
}

double perturbation_gap_bound(const MarketEnv& env, const PerturbationParams& p, double theta)
{
    if (theta < p.theta_l || theta >= p.theta_h) return 0.0;
    double bound = perturbation_epsilon_bound(env, p.theta_l, p.theta_h);
    double g = (1.0 - env.alpha()) / (2.0 * bound);
    double d = p.theta_h - theta;
    return 0.5 * p.epsilon * d * d * (1.0 - env.alpha() - 2.0 * p.epsilon * g);
}

std::pair<std::size_t, std::size_t> perturbation_knots(const TypeGrid& grid, const PerturbationParams& p)
{
    constexpr double kSnap = 1e-12;
    const auto& k = grid.knots();
    auto lo = std::lower_bound(k.begin(), k.end(), p.theta_l - kSnap);
    auto hi = std::upper_bound(k.begin(), k.end(), p.theta_h + kSnap);
    if (lo == k.end() || hi == k.begin()) throw ContractError("perturbation: interval misses the grid");
    std::size_t l = static_cast<std::size_t>(lo - k.begin());
    std::size_t h = static_cast<std::size_t>(hi - k.begin()) - 1;
    if (l >= h) throw ContractError("perturbation: interval must span at least two knots");
    return {l, h};
}

Mechanism perturb_efficient_segment(const Mechanism& m, const PerturbationParams& p)
{
    const MarketEnv& env = m.env();
    if (!(p.theta_l > env.theta_low() && p.theta_h <= env.theta_high()))
        throw ContractError("perturbation: need theta_low < theta_l < theta_h <= theta_high");
    if (!(p.epsilon > 0.0)) throw ContractError("perturbation: epsilon must be > 0");
    double bound = perturbation_epsilon_bound(env, p.theta_l, p.theta_h);
    if (!(p.epsilon < bound))
        throw ContractError("perturbation: epsilon " + std::to_string(p.epsilon) + " violates the bound " +
                            std::to_string(bound));
    auto [l, h] = perturbation_knots(m.grid(), p);
    const auto& g = m.grid();
    std::vector<double> q = m.q_values();
    std::vector<double> r = m.r_values();
    std::vector<Override> ov;
    for (const auto& o : m.overrides()) {
        if (o.knot < l || o.knot > h) ov.push_back(o);
    }
    for (std::size_t i = l; i <= h; ++i) {
        double qe = efficient_quantity(env, g[i]);
        if (std::abs(m.q_interval(i) - qe) > kTol || std::abs(m.q_at(i) - qe) > kTol || m.r_interval(i) != 1.0 ||
            m.r_at(i) != 1.0)
            throw ContractError("perturbation: mechanism is not efficient at knot " + std::to_string(i));
        q[i] = qe - p.epsilon * std::max(0.0, p.theta_h - g[i]);
        if (!(q[i] > 0.0)) throw ContractError("perturbation: reduced quantity is not positive");
    }
    return Mechanism(m.env_ptr(), q, r, std::move(ov), 0.0);
}

Mechanism efficient_perturbation(EnvPtr env, const PerturbationParams& p)
{
    return perturb_efficient_segment(Mechanism::efficient(std::move(env)), p);
}

} // namespace regmech
