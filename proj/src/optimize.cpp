#include "regmech/optimize.hpp"

#include "regmech/errors.hpp"
#include "regmech/feasibility.hpp"
#include "regmech/tolerance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

namespace regmech {

std::vector<double> virtual_cost(const MarketEnv& env, const Prior& prior)
{
    if (!env.grid().same_as(prior.grid())) throw ContractError("virtual cost: prior and market grids differ");
    const auto& g = env.grid();
    std::vector<double> psi(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        double dens = prior.density()[i];
        double cdf = prior.cdf()[i];
        if (dens > 0.0)
            psi[i] = g[i] + (1.0 - env.alpha()) * cdf / dens;
        else if (cdf == 0.0)
            psi[i] = g[i];
        else
            throw ContractError("bm_optimal: prior density is zero at knot " + std::to_string(i) +
                                " where the CDF is positive");
    }
    return psi;
}

std::vector<double> isotonic_decreasing(const std::vector<double>& y, const std::vector<double>& w)
{
    if (y.size() != w.size()) throw ContractError("isotonic: value and weight lengths differ");
    struct Block {
        double mean, weight;
        std::size_t len;
    };
    std::vector<Block> st;
    for (std::size_t i = 0; i < y.size(); ++i) {
        st.push_back({y[i], w[i], 1});
        while (st.size() > 1 && st[st.size() - 2].mean < st.back().mean) {
            Block b = st.back();
            st.pop_back();
            Block& a = st.back();
            double tw = a.weight + b.weight;
            a.mean = tw > 0.0 ? (a.mean * a.weight + b.mean * b.weight) / tw
                              : (a.mean * static_cast<double>(a.len) + b.mean * static_cast<double>(b.len)) /
                                    static_cast<double>(a.len + b.len);
            a.weight = tw;
            a.len += b.len;
        }
    }
    std::vector<double> out;
    out.reserve(y.size());
    for (const auto& b : st) out.insert(out.end(), b.len, b.mean);
    return out;
}

OptimalResult bm_optimal(EnvPtr env, const Prior& prior)
{
    const MarketEnv& e = *env;
    const auto& g = e.grid();
    const std::size_t n = g.size();
    const Demand& d = e.demand();
    std::vector<double> psi = virtual_cost(e, prior);
    const std::vector<double>& mass = prior.mass();

    std::vector<double> qstar(n);
    for (std::size_t i = 0; i < n; ++i) qstar[i] = psi[i] >= d.choke_price() ? 0.0 : d.inverse_price(psi[i]);

    bool ironed = false;
    for (std::size_t i = 1; i < n && !ironed; ++i) ironed = qstar[i] > qstar[i - 1];
    if (ironed) {
        qstar = isotonic_decreasing(qstar, mass);
        for (std::size_t i = 0; i < n; ++i) qstar[i] = std::min(qstar[i], efficient_quantity(e, g[i]));
    }

    // Operate on a prefix of the grid; the threshold maximizes the cumulative virtual surplus.
    std::vector<double> qop(n);
    double run = 0.0, best = 0.0;
    std::ptrdiff_t cut = -1;
    for (std::size_t i = 0; i < n; ++i) {
        qop[i] = std::max(qstar[i], e.qfloor());
        double phi = d.value(qop[i]) - e.c() - psi[i] * qop[i];
        run += mass[i] * phi;
        if (run >= best) {
            best = run;
            cut = static_cast<std::ptrdiff_t>(i);
        }
    }
    std::vector<double> q(n, 0.0);
    for (std::size_t i = 0; static_cast<std::ptrdiff_t>(i) <= cut; ++i) q[i] = qop[i];
    Mechanism m = Mechanism::deterministic(env, std::move(q));
    double ers = expected_rs(m, prior);
    return OptimalResult{std::move(m), ers, std::move(psi), ironed};
}

namespace {

struct Score {
    double value;
    double ts;
};

bool better(const Score& a, const Score& b)
{
    constexpr double kTie = 1e-14;
    if (a.value > b.value + kTie) return true;
    if (a.value < b.value - kTie) return false;
    return a.ts > b.ts;
}

} // namespace

DpSolution dp_solve(const DpProblem& p)
{
    const std::size_t n = p.theta.size();
    const std::size_t k = p.levels.size();
    if (n == 0 || k == 0) throw ContractError("dp: empty problem");
    if (p.mass.size() != n || p.width.size() != n) throw ContractError("dp: array lengths differ");
    if (p.levels.front() != 0.0) throw ContractError("dp: first level must be zero");
    for (std::size_t j = 1; j < k; ++j)
        if (!(p.levels[j] > p.levels[j - 1])) throw ContractError("dp: levels must strictly increase");

    std::vector<Score> cur(k), prev(k);
    std::vector<std::uint32_t> arg(n * k, 0);
    double below = 0.0; // mass strictly below the current knot
    for (std::size_t i = 0; i < n; ++i) {
        // Best predecessor at level >= j, scanned from the top.
        std::vector<Score> pm(k);
        std::vector<std::uint32_t> pa(k);
        if (i > 0) {
            pm[k - 1] = prev[k - 1];
            pa[k - 1] = static_cast<std::uint32_t>(k - 1);
            for (std::size_t j = k - 1; j-- > 0;) {
                if (better(prev[j], pm[j + 1])) {
                    pm[j] = prev[j];
                    pa[j] = static_cast<std::uint32_t>(j);
                } else {
                    pm[j] = pm[j + 1];
                    pa[j] = pa[j + 1];
                }
            }
        }
        for (std::size_t j = 0; j < k; ++j) {
            double q = p.levels[j];
            double ts = q > 0.0 ? p.ts(p.theta[i], q) : 0.0;
            double v = p.mass[i] * ts - (1.0 - p.alpha) * p.width[i] * below * q;
            if (i == 0) {
                cur[j] = {v, ts};
            } else {
                cur[j] = {pm[j].value + v, pm[j].ts + ts};
                arg[i * k + j] = pa[j];
            }
        }
        below += p.mass[i];
        std::swap(cur, prev);
    }
    std::size_t bj = 0;
    for (std::size_t j = 1; j < k; ++j)
        if (better(prev[j], prev[bj])) bj = j;

    DpSolution sol;
    sol.value = prev[bj].value;
    sol.ts_sum = prev[bj].ts;
    sol.level_index.assign(n, 0);
    sol.q.assign(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        sol.level_index[i] = bj;
        sol.q[i] = p.levels[bj];
        if (i > 0) bj = arg[i * k + bj];
    }
    return sol;
}

std::vector<double> quantity_levels(const MarketEnv& env, std::size_t k, bool with_efficient_levels)
{
    if (k < 2) throw ContractError("dp: need at least two quantity levels");
    const double lo = env.qfloor();
    const double hi = efficient_quantity(env, env.theta_low());
    std::vector<double> lv{0.0};
    std::size_t m = k - 1;
    for (std::size_t j = 0; j < m; ++j)
        lv.push_back(m == 1 ? lo : lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(m - 1));
    if (m > 1) lv.back() = hi;
    if (with_efficient_levels) {
        for (double t : env.grid().knots()) lv.push_back(efficient_quantity(env, t));
    }
    std::sort(lv.begin(), lv.end());
    lv.erase(std::unique(lv.begin(), lv.end()), lv.end());
    return lv;
}

OptimalResult dp_oracle(EnvPtr env, const Prior& prior, std::size_t k, bool with_efficient_levels)
{
    const MarketEnv& e = *env;
    if (!e.grid().same_as(prior.grid())) throw ContractError("dp_oracle: prior and market grids differ");
    const auto& g = e.grid();
    DpProblem p;
    p.theta = g.knots();
    p.mass = prior.mass();
    p.width.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) p.width[i] = g.width(i);
    p.levels = quantity_levels(e, k, with_efficient_levels);
    p.alpha = e.alpha();
    p.ts = [&e](double theta, double q) { return total_surplus(e, theta, q); };
    DpSolution sol = dp_solve(p);
    Mechanism m = Mechanism::deterministic(env, sol.q);
    double ers = expected_rs(m, prior);
    return OptimalResult{std::move(m), ers, {}, false};
}

double grid_error_bound(const MarketEnv& env) { return env.qbar() * env.grid().max_step(); }

MaxminResult maxmin(EnvPtr env, const std::vector<Prior>& priors)
{
    if (priors.empty()) throw ContractError("maxmin: empty prior set");
    std::optional<std::size_t> star;
    for (std::size_t a = 0; a < priors.size() && !star; ++a) {
        bool all = true;
        for (std::size_t b = 0; b < priors.size() && all; ++b) all = fosd(priors[a], priors[b]);
        if (all) star = a;
    }
    if (!star) throw ContractError("no dominating prior");
    OptimalResult opt = bm_optimal(env, priors[*star]);
    std::vector<double> ers;
    std::size_t worst = 0;
    for (std::size_t a = 0; a < priors.size(); ++a) {
        ers.push_back(expected_rs(opt.mechanism, priors[a]));
        if (ers[a] < ers[worst]) worst = a;
    }
    bool at_star = ers[*star] <= ers[worst] + 1e-9;
    return MaxminResult{*star, std::move(opt), std::move(ers), worst, at_star};
}

bool MonotoneReport::ok() const
{
    return rs_monotone && std::all_of(pair_ok.begin(), pair_ok.end(), [](bool b) { return b; });
}

MonotoneReport monotone_rs_check(const Mechanism& m, const std::vector<std::pair<Prior, Prior>>& pairs)
{
    if (!is_floor_randomized(m)) throw ContractError("monotone_rs_check: mechanism is not floor randomized");
    if (!check_dd(m).ok) throw ContractError("monotone_rs_check: mechanism violates DD");
    MonotoneReport rep;
    std::vector<double> rs = rs_profile(m);
    std::size_t argmin = 0;
    for (std::size_t j = 1; j < rs.size(); ++j) {
        if (rs[j] > rs[argmin] + kSurplusTol && !rep.violation) {
            rep.rs_monotone = false;
            rep.violation = std::make_pair(argmin, j);
        }
        if (rs[j] < rs[argmin]) argmin = j;
    }
    for (const auto& [lower, upper] : pairs) {
        if (!fosd(upper, lower)) {
            rep.pair_ok.push_back(true); // hypothesis fails; nothing to check
            continue;
        }
        rep.pair_ok.push_back(expected_rs(m, lower) >= expected_rs(m, upper) - kSurplusTol);
    }
    return rep;
}

std::vector<std::vector<std::size_t>> decreasing_sequences(std::size_t n, std::size_t k)
{
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> cur(n);
    auto rec = [&](auto&& self, std::size_t i, std::size_t cap) -> void {
        if (i == n) {
            out.push_back(cur);
            return;
        }
        for (std::size_t j = 0; j <= cap; ++j) {
            cur[i] = j;
            self(self, i + 1, j);
        }
    };
    if (n > 0 && k > 0) rec(rec, 0, k - 1);
    return out;
}

namespace {

constexpr std::size_t kMaxRationalizeN = 8;
constexpr std::size_t kMaxRationalizeK = 5;

std::vector<std::vector<double>> enumerated_profiles(const Mechanism& m, std::size_t k)
{
    const EnvPtr& env = m.env_ptr();
    std::vector<double> levels = quantity_levels(*env, k, false);
    std::vector<std::vector<double>> profiles;
    for (const auto& seq : decreasing_sequences(m.size(), levels.size())) {
        std::vector<double> q(seq.size());
        for (std::size_t i = 0; i < seq.size(); ++i) q[i] = levels[seq[i]];
        profiles.push_back(rs_profile_intervals(Mechanism::deterministic(env, std::move(q)), env->alpha()));
    }
    return profiles;
}

void check_small(const Mechanism& m, std::size_t k)
{
    if (m.size() > kMaxRationalizeN || k > kMaxRationalizeK)
        throw ContractError("find_rationalizing_prior: instance too large (need N <= 8, K <= 5)");
    if (!is_ic(m) || !check_ir(m)) throw ContractError("find_rationalizing_prior: mechanism must be IC and IR");
}

} // namespace

RationalizingResult find_rationalizing_prior(const Mechanism& m, std::size_t k)
{
    check_small(m, k);
    const std::size_t n = m.size();
    if (n < 2) throw ContractError("find_rationalizing_prior: need at least two knots");
    std::vector<double> own = rs_profile_intervals(m, m.env().alpha());
    std::vector<std::vector<double>> profiles = enumerated_profiles(m, k);

    // Variables y_i: mass of interval i (i >= 1); sum y = 1 and sum_i y_i (RS_M - RS_M')_i >= 0 for every M'.
    const std::size_t v = n - 1;
    std::vector<std::vector<double>> a_eq{std::vector<double>(v, 1.0)};
    std::vector<double> b_eq{1.0};
    std::vector<std::vector<double>> a_ge;
    for (const auto& rs : profiles) {
        std::vector<double> row(v);
        for (std::size_t i = 1; i < n; ++i) row[i - 1] = own[i] - rs[i];
        a_ge.push_back(std::move(row));
    }
    LpFeasibility lp = find_feasible_point(a_eq, b_eq, a_ge, 1e-9);
    RationalizingResult res;
    res.enumerated = profiles.size();
    res.residual = lp.residual;
    res.feasible = lp.feasible;
    if (lp.feasible) {
        std::vector<double> mass(n, 0.0);
        for (std::size_t i = 1; i < n; ++i) mass[i] = std::max(0.0, lp.x[i - 1]);
        Prior p = Prior::from_interval_masses(m.env().grid_ptr(), std::move(mass), "rationalizing");
        res.density = p.density();
        res.prior = std::move(p);
    }
    return res;
}

bool check_rationalizes(const Mechanism& m, const Prior& prior, std::size_t k, double tol)
{
    check_small(m, k);
    if (!prior.grid().same_as(m.grid())) throw ContractError("check_rationalizes: prior and mechanism grids differ");
    auto expect = [&](const std::vector<double>& rs) {
        double s = 0.0;
        for (std::size_t i = 1; i < rs.size(); ++i) s += prior.mass()[i] * rs[i];
        return s;
    };
    double own = expect(rs_profile_intervals(m, m.env().alpha()));
    for (const auto& rs : enumerated_profiles(m, k)) {
        if (expect(rs) > own + tol) return false;
    }
    return true;
}

} // namespace regmech
