#include "regmech/fixedcost.hpp"

#include "regmech/errors.hpp"
#include "regmech/tolerance.hpp"

#include <algorithm>
#include <cmath>

namespace regmech {

void FixedCostParams::check() const
{
    std::vector<std::string> errs;
    if (!(theta_low > 0.0)) errs.push_back("theta_low must be > 0");
    if (!(theta_high > theta_low)) errs.push_back("theta_high must exceed theta_low");
    if (!(c > 0.0)) errs.push_back("c must be > 0");
    if (!(alpha >= 0.0 && alpha < 1.0)) errs.push_back("alpha must lie in [0,1)");
    if (grid_n < 2) errs.push_back("grid N must be >= 2");
    if (!errs.empty()) {
        std::string msg = "invalid fixed-cost parameters:";
        for (const auto& e : errs) msg += " " + e + ";";
        throw ContractError(msg);
    }
}

double fc_efficient_quantity(const Demand& demand, double c)
{
    if (!(c < demand.choke_price())) throw ContractError("fixed cost: c >= P(0), no positive quantity is efficient");
    return demand.inverse_price(c);
}

std::shared_ptr<const FixedCostEnv> FixedCostEnv::create(FixedCostParams p)
{
    p.check();
    double qe = fc_efficient_quantity(p.demand, p.c);
    double top = p.demand.value(qe) - p.theta_high - p.c * qe;
    if (!(top > 0.0))
        throw AssumptionError("fixed cost: V(q_e) - theta_high - c q_e = " + std::to_string(top) + " <= 0");
    auto grid = std::make_shared<const TypeGrid>(TypeGrid::uniform(p.theta_low, p.theta_high, p.grid_n));
    return std::shared_ptr<const FixedCostEnv>(new FixedCostEnv(std::move(p), std::move(grid), qe));
}

std::shared_ptr<const FixedCostEnv> FixedCostEnv::with_alpha(double alpha) const
{
    FixedCostParams p = params_;
    p.alpha = alpha;
    p.check();
    return std::shared_ptr<const FixedCostEnv>(new FixedCostEnv(std::move(p), grid_, qe_));
}

double fc_total_surplus(const FixedCostEnv& env, double theta, double q)
{
    if (q == 0.0) return 0.0;
    return env.demand().value(q) - theta - env.c() * q;
}

FcMechanism::FcMechanism(FcEnvPtr env, std::vector<double> q, std::vector<double> r, std::vector<Override> overrides,
                         double u_bar, std::optional<std::vector<double>> explicit_rents)
    : env_(std::move(env)), q_(std::move(q)), r_(std::move(r)), overrides_(std::move(overrides)), u_bar_(u_bar),
      explicit_rents_(std::move(explicit_rents))
{
    if (!env_) throw ContractError("fixed-cost mechanism: null environment");
    const std::size_t n = env_->grid().size();
    if (q_.size() != n || r_.size() != n) throw ContractError("fixed-cost mechanism: one value per knot required");
    auto check = [&](double q, double r, const std::string& where) {
        if (!(r >= 0.0 && r <= 1.0)) throw ContractError("fixed-cost mechanism: r outside [0,1] at " + where);
        if (!(q >= 0.0 && q <= env_->demand().qbar()))
            throw ContractError("fixed-cost mechanism: q outside [0,qbar] at " + where);
        if ((q == 0.0) != (r == 0.0))
            throw ContractError("fixed-cost mechanism: q = 0 must coincide with r = 0 at " + where);
    };
    for (std::size_t i = 0; i < n; ++i) check(q_[i], r_[i], "knot " + std::to_string(i));
    std::sort(overrides_.begin(), overrides_.end(), [](const Override& a, const Override& b) { return a.knot < b.knot; });
    for (std::size_t k = 0; k < overrides_.size(); ++k) {
        const Override& o = overrides_[k];
        if (o.knot >= n) throw ContractError("fixed-cost mechanism: override past the grid");
        if (k > 0 && overrides_[k - 1].knot == o.knot) throw ContractError("fixed-cost mechanism: duplicate override");
        check(o.q, o.r, "override " + std::to_string(o.knot));
        if (o.knot >= 1 && o.r > r_[o.knot] + kSurplusTol)
            throw ContractError("fixed-cost mechanism: override exceeds the left limit of r");
        if (o.knot + 1 < n && o.r < r_[o.knot + 1] - kSurplusTol)
            throw ContractError("fixed-cost mechanism: override lies below the right limit of r");
    }
    if (explicit_rents_ && explicit_rents_->size() != n)
        throw ContractError("fixed-cost mechanism: explicit rents must have one entry per knot");
}

FcMechanism FcMechanism::full_operation(FcEnvPtr env)
{
    std::size_t n = env->grid().size();
    double qe = env->qe();
    return FcMechanism(std::move(env), std::vector<double>(n, qe), std::vector<double>(n, 1.0));
}

std::optional<Override> FcMechanism::override_at(std::size_t i) const
{
    for (const auto& o : overrides_)
        if (o.knot == i) return o;
    return std::nullopt;
}

double FcMechanism::q_at(std::size_t i) const
{
    auto o = override_at(i);
    return o ? o->q : q_[i];
}

double FcMechanism::r_at(std::size_t i) const
{
    auto o = override_at(i);
    return o ? o->r : r_[i];
}

std::vector<double> FcMechanism::envelope_rents() const
{
    const auto& g = env_->grid();
    std::size_t n = g.size();
    std::vector<double> u(n);
    u[n - 1] = u_bar_;
    for (std::size_t i = n - 1; i >= 1; --i) u[i - 1] = u[i] + r_[i] * g.width(i);
    return u;
}

std::vector<double> FcMechanism::rents() const
{
    if (explicit_rents_) return *explicit_rents_;
    return envelope_rents();
}

FcMechanism FcMechanism::rebind(FcEnvPtr env) const
{
    if (!env || !env->grid().same_as(env_->grid())) throw ContractError("rebind: grids differ");
    return FcMechanism(std::move(env), q_, r_, overrides_, u_bar_, explicit_rents_);
}

IcReport fc_check_ic(const FcMechanism& m)
{
    IcReport rep;
    const auto& g = m.env().grid();
    const std::size_t n = m.size();
    double prev = m.r_at(0);
    for (std::size_t i = 1; i < n && rep.monotone; ++i) {
        for (double r : {m.r_values()[i], m.r_at(i)}) {
            if (r > prev + kSurplusTol) {
                rep.monotone = false;
                rep.monotone_violation = i;
                break;
            }
            prev = r;
        }
    }
    std::vector<double> u = m.rents();
    std::vector<double> eu = m.envelope_rents();
    for (std::size_t i = 0; i < n; ++i) rep.envelope_gap = std::max(rep.envelope_gap, std::abs(u[i] - eu[i]));
    rep.envelope = rep.envelope_gap <= kTol;

    // Type theta reporting theta' earns u(theta') + (theta' - theta) r(theta').
    struct Type {
        double theta, r, u;
    };
    std::vector<Type> types;
    for (std::size_t i = 0; i < n; ++i) {
        types.push_back({g[i], m.r_at(i), u[i]});
        if (i >= 1) types.push_back({g[i - 1], m.r_values()[i], u[i - 1]});
    }
    for (std::size_t a = 0; a < types.size(); ++a) {
        for (std::size_t b = 0; b < types.size(); ++b) {
            double dev = types[b].u + (types[b].theta - types[a].theta) * types[b].r;
            if (types[a].u < dev - kSurplusTol) {
                rep.brute_force = false;
                if (rep.violating_pairs.size() < 32) rep.violating_pairs.emplace_back(a, b);
            }
        }
    }
    rep.oracle_agrees = (rep.monotone && rep.envelope) == rep.brute_force;
    return rep;
}

bool fc_is_ic(const FcMechanism& m)
{
    double prev = m.r_at(0);
    for (std::size_t i = 1; i < m.size(); ++i) {
        for (double r : {m.r_values()[i], m.r_at(i)}) {
            if (r > prev + kSurplusTol) return false;
            prev = r;
        }
    }
    if (!m.has_explicit_rents()) return true;
    std::vector<double> u = m.rents();
    std::vector<double> eu = m.envelope_rents();
    for (std::size_t i = 0; i < u.size(); ++i)
        if (std::abs(u[i] - eu[i]) > kTol) return false;
    return true;
}

bool fc_check_ir(const FcMechanism& m) { return m.rents().back() >= 0.0; }

std::vector<double> fc_rs_profile(const FcMechanism& m) { return fc_rs_profile(m, m.env().alpha()); }

std::vector<double> fc_rs_profile(const FcMechanism& m, double alpha)
{
    std::vector<double> u = m.rents();
    std::vector<double> rs(m.size());
    const auto& g = m.env().grid();
    for (std::size_t i = 0; i < m.size(); ++i)
        rs[i] = m.r_at(i) * fc_total_surplus(m.env(), g[i], m.q_at(i)) - (1.0 - alpha) * u[i];
    return rs;
}

FcComparison fc_compare(const FcMechanism& a, const FcMechanism& b)
{
    if (!a.env().grid().same_as(b.env().grid())) throw ContractError("fc_compare: grids differ");
    std::vector<double> ra = fc_rs_profile(a);
    std::vector<double> rb = fc_rs_profile(b, a.env().alpha());
    FcComparison c;
    c.weakly_above = true;
    c.min_gap = ra[0] - rb[0];
    for (std::size_t i = 0; i < ra.size(); ++i) {
        double d = ra[i] - rb[i];
        c.min_gap = std::min(c.min_gap, d);
        if (d < -kSurplusTol) c.weakly_above = false;
        if (d > kSurplusTol) c.strict_knots.push_back(i);
    }
    c.dominates = c.weakly_above && !c.strict_knots.empty();
    return c;
}

FcClassification fc_classify(const FcMechanism& m)
{
    if (!fc_is_ic(m)) throw ContractError("fc_classify: mechanism is not IC");
    if (!fc_check_ir(m)) throw ContractError("fc_classify: mechanism is not IR");
    const FixedCostEnv& env = m.env();
    const double qe = env.qe();
    const std::size_t n = m.size();

    FcClassification c;
    c.r_left_continuous = true;
    for (const auto& o : m.overrides()) {
        if (o.knot >= 1 && std::abs(o.r - m.r_values()[o.knot]) > kSurplusTol) c.r_left_continuous = false;
    }
    c.r_top_type_operates = std::abs(m.r_at(0) - 1.0) <= kTol;
    c.no_rent_at_top = m.u_bar() == 0.0 && !m.has_explicit_rents();
    c.efficient_quantity = true;
    for (std::size_t i = 0; i < n; ++i) {
        if (m.r_values()[i] > 0.0 && std::abs(m.q_values()[i] - qe) > kTol) c.efficient_quantity = false;
        if (m.r_at(i) > 0.0 && std::abs(m.q_at(i) - qe) > kTol) c.efficient_quantity = false;
    }
    c.undominated = c.r_left_continuous && c.r_top_type_operates && c.no_rent_at_top && c.efficient_quantity;
    if (c.undominated) return c;

    auto record = [&](const std::string& name, bool applied, const FcMechanism& before, const FcMechanism& after) {
        FcWitnessStep s{name, applied, true, false};
        if (applied) {
            FcComparison cmp = fc_compare(after, before);
            s.weakly_above = cmp.weakly_above;
            s.strict_somewhere = !cmp.strict_knots.empty();
        }
        c.steps.push_back(s);
    };

    // (i) efficient quantity wherever the firm operates.
    FcMechanism w = m;
    {
        std::vector<double> q = w.q_values();
        for (std::size_t i = 0; i < n; ++i)
            if (w.r_values()[i] > 0.0) q[i] = qe;
        std::vector<Override> ov;
        for (auto o : w.overrides()) {
            if (o.r > 0.0) o.q = qe;
            ov.push_back(o);
        }
        FcMechanism next(w.env_ptr(), q, w.r_values(), ov, w.u_bar(), std::nullopt);
        record("efficient_quantity", !c.efficient_quantity, w, next);
        w = next;
    }
    // (ii) left limits replace overrides that drop r.
    {
        std::vector<Override> ov;
        for (const auto& o : w.overrides()) {
            if (o.knot >= 1 && o.r < w.r_values()[o.knot] - kSurplusTol) continue;
            ov.push_back(o);
        }
        FcMechanism next(w.env_ptr(), w.q_values(), w.r_values(), ov, w.u_bar());
        record("left_continuity", !c.r_left_continuous, w, next);
        w = next;
    }
    // (iii) lowest type operates for sure and the highest type earns no rent.
    {
        std::vector<Override> ov;
        for (const auto& o : w.overrides())
            if (o.knot != 0) ov.push_back(o);
        if (w.q_values()[0] != qe || w.r_values()[0] != 1.0) ov.push_back({0, qe, 1.0});
        FcMechanism next(w.env_ptr(), w.q_values(), w.r_values(), ov, 0.0);
        record("top_type_and_rent", !c.r_top_type_operates || !c.no_rent_at_top, w, next);
        w = next;
    }
    c.witness_verified = fc_compare(w, m).dominates;
    c.witness = std::move(w);
    return c;
}

} // namespace regmech
