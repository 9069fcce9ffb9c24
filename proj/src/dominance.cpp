#include "regmech/dominance.hpp"

#include "regmech/errors.hpp"
#include "regmech/tolerance.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace regmech {

std::string to_string(Relation r)
{
    switch (r) {
    case Relation::Dominates: return "DOMINATES";
    case Relation::DominatedBy: return "DOMINATED_BY";
    case Relation::Equal: return "EQUAL";
    case Relation::Incomparable: return "INCOMPARABLE";
    }
    return "?";
}

std::string to_string(Status s)
{
    switch (s) {
    case Status::Dominated: return "DOMINATED";
    case Status::Undominated: return "UNDOMINATED";
    case Status::Unknown: return "UNKNOWN";
    }
    return "?";
}

DominanceVerdict compare(const Mechanism& a, const Mechanism& b) { return compare(a, b, a.env().alpha()); }

DominanceVerdict compare(const Mechanism& a, const Mechanism& b, double alpha, double slack)
{
    if (!(slack >= 0.0)) throw ContractError("compare: slack must be >= 0");
    if (!a.grid().same_as(b.grid())) throw ContractError("compare: mechanisms live on different grids");
    for (const Mechanism* m : {&a, &b}) {
        if (!is_ic(*m)) throw ContractError("compare: mechanism is not IC");
        if (!check_ir(*m)) throw ContractError("compare: mechanism is not IR");
    }
    std::vector<double> ra = rs_profile(a, alpha);
    std::vector<double> rb = rs_profile(b, alpha);
    DominanceVerdict v;
    v.slack = slack;
    v.min_gap = std::numeric_limits<double>::infinity();
    v.max_gap = -std::numeric_limits<double>::infinity();
    bool up = false, down = false;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        double d = ra[i] - rb[i];
        v.min_gap = std::min(v.min_gap, d);
        v.max_gap = std::max(v.max_gap, d);
        if (d > kSurplusTol) {
            up = true;
            v.strict_knots.push_back(i);
        } else if (d < -kSurplusTol - slack) {
            down = true;
            v.strict_knots.push_back(i);
        }
    }
    if (up && down)
        v.relation = Relation::Incomparable;
    else if (up)
        v.relation = Relation::Dominates;
    else if (down)
        v.relation = Relation::DominatedBy;
    else
        v.relation = Relation::Equal;
    return v;
}

Diagnostics diagnose(const Mechanism& m)
{
    Diagnostics d;
    auto p = partition_floor_randomized(m);
    d.floor_randomized = p.ok();
    if (!p.ok()) d.fr_clause = p.clause + " at knot " + std::to_string(*p.failed_knot);
    d.dd = check_dd(m).ok;
    d.strict_dd = check_strict_dd(m).ok;
    d.left_continuous = check_left_continuity(m).ok;
    return d;
}

namespace {

struct Candidate {
    std::size_t l, h;
    double eps;
};

bool efficient_on(const Mechanism& m, const std::vector<double>& qe, std::size_t i)
{
    return std::abs(m.q_interval(i) - qe[i]) <= kTol && std::abs(m.q_at(i) - qe[i]) <= kTol &&
           m.r_interval(i) == 1.0 && m.r_at(i) == 1.0;
}

} // namespace

WitnessSearchResult perturbation_witness_search(const Mechanism& m, unsigned jobs)
{
    WitnessSearchResult res;
    const MarketEnv& env = m.env();
    if (!env.demand().is_smooth()) return res;
    const auto& g = m.grid();
    const std::size_t n = g.size();
    if (n < 7) return res;

    std::vector<double> qe(n);
    for (std::size_t i = 0; i < n; ++i) qe[i] = efficient_quantity(env, g[i]);
    // run[i]: last index of the efficient run starting at i (or i - 1 if i is not efficient).
    std::vector<std::size_t> run_end(n + 1, 0);
    for (std::size_t i = n; i-- > 0;) {
        if (!efficient_on(m, qe, i))
            run_end[i] = i == 0 ? 0 : i - 1;
        else
            run_end[i] = (i + 1 < n && efficient_on(m, qe, i + 1)) ? run_end[i + 1] : i;
    }

    const std::size_t stride = std::max<std::size_t>(1, (n - 1 + 23) / 24);
    const std::size_t min_span = std::max<std::size_t>(5, stride);
    std::vector<Candidate> cands;
    for (std::size_t l = stride; l + min_span < n; l += stride) {
        if (!efficient_on(m, qe, l)) continue;
        std::vector<std::size_t> hs;
        for (std::size_t h = l + min_span; h < n; h += stride) hs.push_back(h);
        if (hs.empty() || hs.back() != n - 1) hs.push_back(n - 1);
        for (std::size_t h : hs) {
            if (run_end[l] < h) break;
            double bound = 0.0;
            try {
                bound = perturbation_epsilon_bound(env, g[l], g[h]);
            } catch (const ContractError&) {
                continue;
            }
            for (int k = 1; k <= 8; ++k) cands.push_back({l, h, std::ldexp(bound, -k)});
        }
    }
    res.candidates = cands.size();
    if (cands.empty()) return res;

    std::atomic<std::size_t> best{cands.size()};
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::size_t k = next.fetch_add(1);
            if (k >= cands.size() || k >= best.load()) return;
            const Candidate& c = cands[k];
            try {
                PerturbationParams p{g[c.l], g[c.h], c.eps};
                Mechanism w = perturb_efficient_segment(m, p);
                if (compare(w, m, env.alpha(), perturbation_grid_error(env, p)).relation == Relation::Dominates) {
                    std::size_t cur = best.load();
                    while (k < cur && !best.compare_exchange_weak(cur, k)) {
                    }
                }
            } catch (const Error&) {
            }
        }
    };
    unsigned threads = std::max(1u, jobs);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (best.load() < cands.size()) {
        const Candidate& c = cands[best.load()];
        PerturbationParams p{g[c.l], g[c.h], c.eps};
        res.params = p;
        res.slack = perturbation_grid_error(env, p);
        res.witness = perturb_efficient_segment(m, p);
    }
    return res;
}

Classification classify(const Mechanism& m, const ClassifyOptions& opts)
{
    if (!is_ic(m)) throw ContractError("classify: mechanism is not IC");
    if (!check_ir(m)) throw ContractError("classify: mechanism is not IR");
    Classification c;
    c.diagnostics = diagnose(m);
    const Diagnostics& d = c.diagnostics;

    if (!d.floor_randomized || !d.dd || !d.left_continuous) {
        Mechanism w = m;
        std::string source;
        if (!d.floor_randomized) {
            w = floor_transform(w);
            source = "floor_transform";
        }
        if (!check_dd(w).ok) {
            w = dd_repair(w);
            source += source.empty() ? "dd_repair" : " > dd_repair";
        }
        if (!check_left_continuity(w).ok) {
            w = lc_repair(w);
            source += source.empty() ? "lc_repair" : " > lc_repair";
        }
        if (compare(w, m).relation == Relation::Dominates) {
            c.status = Status::Dominated;
            c.witness = std::move(w);
            c.witness_source = source;
        }
        return c;
    }
    if (d.strict_dd) {
        c.status = Status::Undominated;
        return c;
    }
    if (opts.witness_search) {
        WitnessSearchResult r = perturbation_witness_search(m, opts.jobs);
        if (r.witness) {
            c.status = Status::Dominated;
            c.witness = std::move(r.witness);
            c.perturbation = r.params;
            c.slack = r.slack;
            c.witness_source = "efficient_perturbation";
        }
    }
    return c;
}

NestingReport alpha_nesting_check(const Mechanism& m, double alpha_high, double alpha_low,
                                  const std::optional<Mechanism>& witness,
                                  const std::optional<PerturbationParams>& perturbation)
{
    if (!witness) throw ContractError("alpha_nesting_check: a witness dominating the mechanism is required");
    if (!(0.0 < alpha_low && alpha_low < alpha_high && alpha_high < 1.0))
        throw ContractError("alpha_nesting_check: need 0 < alpha_low < alpha_high < 1");
    Diagnostics d = diagnose(m);
    if (!d.floor_randomized || !d.dd || !d.left_continuous)
        throw ContractError("alpha_nesting_check: mechanism must be floor randomized, DD and left continuous");

    auto slack = [&](double a) {
        return perturbation ? perturbation_grid_error(*m.env().with_alpha(a), *perturbation) : 0.0;
    };
    NestingReport rep;
    rep.witness_high = compare(*witness, m, alpha_high, slack(alpha_high));

    bool below = true;
    for (std::size_t i = 0; i < m.size() && below; ++i) {
        if (witness->x_at(i) > m.x_at(i) || witness->x_interval(i) > m.x_interval(i)) below = false;
    }
    Mechanism mw = below ? *witness : meet(*witness, m);
    rep.meet_was_identity = below;

    rep.product_below_input = true;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (mw.x_at(i) > m.x_at(i) + kSurplusTol || mw.x_interval(i) > m.x_interval(i) + kSurplusTol)
            rep.product_below_input = false;
    }
    rep.meet_high = compare(mw, m, alpha_high, slack(alpha_high));
    rep.meet_low = compare(mw, m, alpha_low, slack(alpha_low));
    rep.meet_witness = std::move(mw);
    return rep;
}

} // namespace regmech
