#include "regmech/mechanism.hpp"

#include "regmech/errors.hpp"
#include "regmech/tolerance.hpp"

#include <algorithm>
#include <cmath>

namespace regmech {

namespace {

constexpr std::size_t kMaxReportedPairs = 32;

std::vector<double> efficient_at_knots(const MarketEnv& env)
{
    const auto& g = env.grid();
    std::vector<double> qe(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) qe[i] = efficient_quantity(env, g[i]);
    return qe;
}

void check_point(const MarketEnv& env, double q, double r, const std::string& where)
{
    if (!(r >= 0.0 && r <= 1.0)) throw ContractError("mechanism: r outside [0,1] at " + where);
    if (!(q >= 0.0 && q <= env.qbar())) throw ContractError("mechanism: q outside [0,qbar] at " + where);
    if ((q == 0.0) != (r == 0.0)) throw ContractError("mechanism: q = 0 must coincide with r = 0 at " + where);
}

} // namespace

Mechanism::Mechanism(EnvPtr env, std::vector<double> q, std::vector<double> r, std::vector<Override> overrides,
                     double u_bar, std::optional<std::vector<double>> explicit_rents)
    : env_(std::move(env)), q_(std::move(q)), r_(std::move(r)), overrides_(std::move(overrides)), u_bar_(u_bar),
      explicit_rents_(std::move(explicit_rents))
{
    if (!env_) throw ContractError("mechanism: null environment");
    const std::size_t n = env_->grid().size();
    if (q_.size() != n || r_.size() != n) throw ContractError("mechanism: value tables must have one entry per knot");
    if (!std::isfinite(u_bar_)) throw ContractError("mechanism: u_bar must be finite");
    for (std::size_t i = 0; i < n; ++i) check_point(*env_, q_[i], r_[i], "knot " + std::to_string(i));

    std::sort(overrides_.begin(), overrides_.end(), [](const Override& a, const Override& b) { return a.knot < b.knot; });
    for (std::size_t k = 0; k < overrides_.size(); ++k) {
        const Override& o = overrides_[k];
        const std::string where = "override at knot " + std::to_string(o.knot);
        if (o.knot >= n) throw ContractError("mechanism: " + where + " is past the grid");
        if (k > 0 && overrides_[k - 1].knot == o.knot) throw ContractError("mechanism: duplicate " + where);
        check_point(*env_, o.q, o.r, where);
        double x = o.q * o.r;
        if (o.knot >= 1 && x > x_interval(o.knot) + kSurplusTol)
            throw ContractError("mechanism: " + where + " exceeds the left limit of qr");
        if (o.knot + 1 < n && x < x_interval(o.knot + 1) - kSurplusTol)
            throw ContractError("mechanism: " + where + " lies below the right limit of qr");
    }
    if (explicit_rents_ && explicit_rents_->size() != n)
        throw ContractError("mechanism: explicit rents must have one entry per knot");
}

Mechanism Mechanism::deterministic(EnvPtr env, std::vector<double> q, double u_bar)
{
    std::vector<double> r(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) r[i] = q[i] > 0.0 ? 1.0 : 0.0;
    return Mechanism(std::move(env), std::move(q), std::move(r), {}, u_bar);
}

Mechanism Mechanism::from_rule(EnvPtr env, const std::function<double(double)>& q_rule,
                               const std::function<double(double)>& r_rule, double u_bar)
{
    const auto& g = env->grid();
    std::vector<double> q(g.size()), r(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        q[i] = q_rule(g[i]);
        r[i] = r_rule(g[i]);
    }
    return Mechanism(std::move(env), std::move(q), std::move(r), {}, u_bar);
}

Mechanism Mechanism::zero(EnvPtr env)
{
    std::size_t n = env->grid().size();
    return Mechanism(std::move(env), std::vector<double>(n, 0.0), std::vector<double>(n, 0.0));
}

Mechanism Mechanism::efficient(EnvPtr env)
{
    std::vector<double> qe = efficient_at_knots(*env);
    return deterministic(std::move(env), std::move(qe));
}

std::optional<Override> Mechanism::override_at(std::size_t i) const
{
    auto it = std::lower_bound(overrides_.begin(), overrides_.end(), i,
                               [](const Override& o, std::size_t k) { return o.knot < k; });
    if (it != overrides_.end() && it->knot == i) return *it;
    return std::nullopt;
}

double Mechanism::q_at(std::size_t i) const
{
    if (auto o = override_at(i)) return o->q;
    return q_[i];
}

double Mechanism::r_at(std::size_t i) const
{
    if (auto o = override_at(i)) return o->r;
    return r_[i];
}

std::vector<double> Mechanism::rents() const
{
    if (explicit_rents_) return *explicit_rents_;
    return envelope_rent(*this);
}

Mechanism Mechanism::rebind(EnvPtr env) const
{
    if (!env || !env->grid().same_as(grid())) throw ContractError("rebind: grids differ");
    return Mechanism(std::move(env), q_, r_, overrides_, u_bar_, explicit_rents_);
}

Mechanism Mechanism::with_u_bar(double u_bar) const
{
    return Mechanism(env_, q_, r_, overrides_, u_bar);
}

bool Mechanism::is_deterministic() const
{
    for (std::size_t i = 0; i < size(); ++i) {
        double r = r_at(i);
        if (r != 0.0 && r != 1.0) return false;
        if (r_[i] != 0.0 && r_[i] != 1.0) return false;
    }
    return true;
}

std::vector<double> envelope_rent(const Mechanism& m)
{
    const auto& g = m.grid();
    std::size_t n = g.size();
    std::vector<double> u(n);
    u[n - 1] = m.u_bar();
    for (std::size_t i = n - 1; i >= 1; --i) u[i - 1] = u[i] + m.x_interval(i) * g.width(i);
    return u;
}

std::vector<std::optional<double>> subsidy(const Mechanism& m)
{
    const MarketEnv& env = m.env();
    const auto& g = m.grid();
    std::vector<double> u = m.rents();
    std::vector<std::optional<double>> s(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        double r = m.r_at(i);
        if (r <= 0.0) continue;
        double q = m.q_at(i);
        double profit = q * price(env, q) - env.c() - g[i] * q;
        s[i] = u[i] / r - profit;
    }
    return s;
}

IcReport check_ic(const Mechanism& m)
{
    IcReport rep;
    const auto& g = m.grid();
    const std::size_t n = m.size();

    // (a) products decrease along point 0, interval 1, knot 1, interval 2, ...
    double prev = m.x_at(0);
    for (std::size_t i = 1; i < n && rep.monotone; ++i) {
        for (double x : {m.x_interval(i), m.x_at(i)}) {
            if (x > prev + kSurplusTol) {
                rep.monotone = false;
                rep.monotone_violation = i;
                break;
            }
            prev = x;
        }
    }

    // (b) rents match the envelope formula.
    std::vector<double> u = m.rents();
    std::vector<double> env_u = envelope_rent(m);
    for (std::size_t i = 0; i < n; ++i) rep.envelope_gap = std::max(rep.envelope_gap, std::abs(u[i] - env_u[i]));
    rep.envelope = rep.envelope_gap <= kTol;

    // Deviation oracle over knot types and right-limit types (theta_{i-1}+, which
    // receives the interval value and, by continuity of rents, the rent u_{i-1}).
    struct Type {
        double theta, x, u;
    };
    std::vector<Type> types;
    types.reserve(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        types.push_back({g[i], m.x_at(i), u[i]});
        if (i >= 1) types.push_back({g[i - 1], m.x_interval(i), u[i - 1]});
    }
    for (std::size_t a = 0; a < types.size(); ++a) {
        for (std::size_t b = 0; b < types.size(); ++b) {
            // Type a reports b: payoff u_b + (theta_b - theta_a) x_b.
            double dev = types[b].u + (types[b].theta - types[a].theta) * types[b].x;
            if (types[a].u < dev - kSurplusTol) {
                rep.brute_force = false;
                if (rep.violating_pairs.size() < kMaxReportedPairs) rep.violating_pairs.emplace_back(a, b);
            }
        }
    }
    rep.oracle_agrees = (rep.monotone && rep.envelope) == rep.brute_force;
    return rep;
}

bool is_ic(const Mechanism& m)
{
    double prev = m.x_at(0);
    for (std::size_t i = 1; i < m.size(); ++i) {
        for (double x : {m.x_interval(i), m.x_at(i)}) {
            if (x > prev + kSurplusTol) return false;
            prev = x;
        }
    }
    if (!m.has_explicit_rents()) return true;
    std::vector<double> u = m.rents();
    std::vector<double> env_u = envelope_rent(m);
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (std::abs(u[i] - env_u[i]) > kTol) return false;
    }
    return true;
}

bool check_ir(const Mechanism& m) { return m.u_bar() >= 0.0; }

double consumer_surplus(const Mechanism& m, std::size_t knot)
{
    double u = m.rents()[knot];
    return m.r_at(knot) * total_surplus(m.env(), m.grid()[knot], m.q_at(knot)) - u;
}

double regulator_surplus(const Mechanism& m, std::size_t knot) { return regulator_surplus(m, knot, m.env().alpha()); }

double regulator_surplus(const Mechanism& m, std::size_t knot, double alpha)
{
    return rs_profile(m, alpha)[knot];
}

std::vector<double> rs_profile(const Mechanism& m) { return rs_profile(m, m.env().alpha()); }

std::vector<double> rs_profile(const Mechanism& m, double alpha)
{
    std::vector<double> u = m.rents();
    std::vector<double> rs(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        double ts = total_surplus(m.env(), m.grid()[i], m.q_at(i));
        rs[i] = m.r_at(i) * ts - (1.0 - alpha) * u[i];
    }
    return rs;
}

SurplusProfile surplus_profile(const Mechanism& m)
{
    SurplusProfile p;
    p.u = m.rents();
    p.s = subsidy(m);
    const double alpha = m.env().alpha();
    const std::size_t n = m.size();
    p.cs.resize(n);
    p.ts.resize(n);
    p.rs.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        p.ts[i] = total_surplus(m.env(), m.grid()[i], m.q_at(i));
        double ev = m.r_at(i) * p.ts[i];
        p.cs[i] = ev - p.u[i];
        p.rs[i] = ev - (1.0 - alpha) * p.u[i];
    }
    return p;
}

namespace {

std::optional<OperationClass> operation_class(double q, double r, double qf, std::string& why)
{
    if (q == 0.0 && r == 0.0) return OperationClass::Shutdown;
    if (std::abs(r - 1.0) <= kTol) {
        if (q >= qf - kTol) return OperationClass::Full;
        why = "full operation below the quantity floor";
        return std::nullopt;
    }
    if (r > kTol && r < 1.0 - kTol) {
        if (std::abs(q - qf) <= kTol) return OperationClass::Randomized;
        why = "randomized operation away from the quantity floor";
        return std::nullopt;
    }
    why = "operation probability neither 0, 1 nor interior";
    return std::nullopt;
}

void extend(KnotRange& range, std::size_t i)
{
    if (range.empty) {
        range.first = i;
        range.empty = false;
    }
    range.last = i;
}

} // namespace

PartitionResult partition_floor_randomized(const Mechanism& m)
{
    PartitionResult res;
    auto fail = [&](std::size_t knot, std::string clause) {
        res.failed_knot = knot;
        res.clause = std::move(clause);
        return res;
    };
    if (!check_ir(m)) return fail(m.size() - 1, "not IR");
    if (m.u_bar() != 0.0) return fail(m.size() - 1, "rent of the highest type is not zero");
    if (!is_ic(m)) return fail(0, "not IC");

    const double qf = m.env().qfloor();
    Partition part;
    OperationClass last = OperationClass::Full;
    std::string why;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (i >= 1) {
            auto c = operation_class(m.q_interval(i), m.r_interval(i), qf, why);
            if (!c) return fail(i, why + " (interval)");
            if (*c < last) return fail(i, "operation classes out of order (interval)");
            last = *c;
        }
        auto c = operation_class(m.q_at(i), m.r_at(i), qf, why);
        if (!c) return fail(i, why);
        if (*c < last) return fail(i, "operation classes out of order");
        last = *c;
        switch (*c) {
        case OperationClass::Full: extend(part.theta1, i); break;
        case OperationClass::Randomized: extend(part.theta01, i); break;
        case OperationClass::Shutdown: extend(part.theta0, i); break;
        }
    }
    res.partition = part;
    return res;
}

bool is_floor_randomized(const Mechanism& m) { return partition_floor_randomized(m).ok(); }

PredicateReport check_dd(const Mechanism& m)
{
    PredicateReport rep;
    std::vector<double> qe = efficient_at_knots(m.env());
    if (std::abs(m.q_at(0) - qe[0]) > kTol) rep.knots.push_back(0);
    for (std::size_t i = 1; i < m.size(); ++i) {
        if (m.q_interval(i) > qe[i] + kTol || m.q_at(i) > qe[i] + kTol) rep.knots.push_back(i);
    }
    rep.ok = rep.knots.empty();
    return rep;
}

PredicateReport check_strict_dd(const Mechanism& m)
{
    PredicateReport rep;
    std::vector<double> qe = efficient_at_knots(m.env());
    if (std::abs(m.q_at(0) - qe[0]) > kTol) rep.knots.push_back(0);
    for (std::size_t i = 1; i < m.size(); ++i) {
        if (!(m.q_interval(i) < qe[i] - kTol) || !(m.q_at(i) < qe[i] - kTol)) rep.knots.push_back(i);
    }
    rep.ok = rep.knots.empty();
    return rep;
}

PredicateReport check_left_continuity(const Mechanism& m)
{
    PredicateReport rep;
    for (const Override& o : m.overrides()) {
        if (o.knot == 0) continue;
        if (std::abs(o.q * o.r - m.x_interval(o.knot)) > kSurplusTol) rep.knots.push_back(o.knot);
    }
    rep.ok = rep.knots.empty();
    return rep;
}

} // namespace regmech
