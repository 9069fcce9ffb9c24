#include "regmech/runner.hpp"

#include "regmech/dominance.hpp"
#include "regmech/errors.hpp"
#include "regmech/fixedcost.hpp"
#include "regmech/io.hpp"
#include "regmech/optimize.hpp"
#include "regmech/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace regmech {

using nlohmann::json;

const std::vector<std::string>& subcommands()
{
    static const std::vector<std::string> names{"floor",   "transform", "classify", "compare", "optimal",
                                                "oracle",  "maxmin",    "perturb",  "nesting", "rotate",
                                                "fixedcost-classify", "export-plot"};
    return names;
}

json rounded(const json& j)
{
    if (j.is_number_float()) return round12(j.get<double>());
    if (j.is_array() || j.is_object()) {
        json out = j;
        for (auto it = out.begin(); it != out.end(); ++it) *it = rounded(*it);
        return out;
    }
    return j;
}

namespace {

class Run {
public:
    Run(const Config& cfg, std::string sub) : cfg_(cfg), sub_(std::move(sub)), dir_(cfg.run.out)
    {
        std::filesystem::create_directories(dir_);
    }

    void table(const std::string& file, const CsvTable& t)
    {
        write_csv(dir_ / file, t);
        tables_.push_back({{"file", file}, {"rows", t.rows.size()}});
    }

    void mechanism(const std::string& name, const Mechanism& m)
    {
        table(name + ".csv", mechanism_table(m));
        if (!m.overrides().empty()) table(name + "_overrides.csv", overrides_table(m.overrides()));
    }

    void fc_mechanism(const std::string& name, const FcMechanism& m)
    {
        table(name + ".csv", fc_mechanism_table(m));
        if (!m.overrides().empty()) table(name + "_overrides.csv", overrides_table(m.overrides()));
    }

    json finish(json result)
    {
        char hash[17];
        std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(cfg_.hash));
        json report{{"meta",
                     {{"tool", "regmech"},
                      {"version", kToolVersion},
                      {"subcommand", sub_},
                      {"config_hash", hash},
                      {"seed", cfg_.run.seed},
                      {"jobs", cfg_.run.jobs}}},
                    {"result", std::move(result)},
                    {"tables", tables_}};
        report = rounded(report);
        std::ofstream out(dir_ / "report.json");
        out << report.dump(2) << '\n';
        return report;
    }

    EnvPtr env() const
    {
        if (!cfg_.market) throw ContractError(sub_ + ": config has no market block");
        return MarketEnv::create(*cfg_.market);
    }

    const std::string& need(const std::string& name, const char* what) const
    {
        if (name.empty()) throw ContractError(sub_ + ": run." + what + " is required");
        return name;
    }

    const Config& cfg_;
    std::string sub_;
    std::filesystem::path dir_;
    json tables_ = json::array();
};

json verdict_json(const DominanceVerdict& v)
{
    return {{"relation", to_string(v.relation)},
            {"strict_knots", v.strict_knots.size()},
            {"min_gap", v.min_gap},
            {"max_gap", v.max_gap},
            {"slack", v.slack},
            {"operation", "compare"}};
}

json range_json(const KnotRange& r)
{
    if (r.empty) return nullptr;
    return json::array({r.first, r.last});
}

CsvTable gap_table(const Mechanism& a, const Mechanism& b, const char* na, const char* nb, double alpha)
{
    std::vector<double> ra = rs_profile(a, alpha), rb = rs_profile(b, alpha);
    CsvTable t{{"theta", std::string("rs_") + na, std::string("rs_") + nb, "gap"}, {}};
    for (std::size_t i = 0; i < a.size(); ++i) t.rows.push_back({a.grid()[i], ra[i], rb[i], rb[i] - ra[i]});
    return t;
}

json diagnostics_json(const Diagnostics& d)
{
    return {{"floor_randomized", d.floor_randomized},
            {"dd", d.dd},
            {"strict_dd", d.strict_dd},
            {"left_continuous", d.left_continuous},
            {"fr_clause", d.fr_clause}};
}

json do_floor(Run& r)
{
    ValidationReport rep = validate_assumptions(*r.cfg_.market);
    if (!rep.ok()) throw AssumptionError("market assumptions violated: " + rep.summary());
    EnvPtr env = r.env();
    const auto& g = env->grid();
    CsvTable t{{"theta", "q_e", "ts_at_floor"}, {}};
    double min_gap = INFINITY, min_ts = INFINITY;
    for (std::size_t i = 0; i < g.size(); ++i) {
        double qe = efficient_quantity(*env, g[i]);
        double ts = total_surplus(*env, g[i], env->qfloor());
        min_gap = std::min(min_gap, qe - env->qfloor());
        min_ts = std::min(min_ts, ts);
        t.rows.push_back({g[i], qe, ts});
    }
    r.table("floor.csv", t);
    return {{"qfloor", env->qfloor()},
            {"qbar", env->qbar()},
            {"top_type_surplus", rep.top_type_surplus},
            {"min_efficient_minus_floor", min_gap},
            {"min_surplus_at_floor", min_ts},
            {"floor_facts_hold", min_gap > 0.0 && min_ts > 0.0},
            {"operation", "quantity_floor"}};
}

json do_transform(Run& r)
{
    EnvPtr env = r.env();
    Mechanism m = build_mechanism(r.cfg_, r.need(r.cfg_.run.mechanism, "mechanism"), env);
    Mechanism t = floor_transform(m);
    r.mechanism("transformed", t);
    r.table("dominance.csv", gap_table(m, t, "input", "transformed", env->alpha()));
    auto part = partition_floor_randomized(t);
    json res{{"verdict", verdict_json(compare(t, m))}, {"input_floor_randomized", is_floor_randomized(m)},
             {"operation", "floor_transform"}};
    if (part.partition) {
        res["partition"] = {{"theta1", range_json(part.partition->theta1)},
                            {"theta01", range_json(part.partition->theta01)},
                            {"theta0", range_json(part.partition->theta0)}};
    }
    return res;
}

json do_classify(Run& r)
{
    EnvPtr env = r.env();
    Mechanism m = build_mechanism(r.cfg_, r.need(r.cfg_.run.mechanism, "mechanism"), env);
    Classification c = classify(m, {r.cfg_.run.witness_search, r.cfg_.run.jobs});
    json res{{"status", to_string(c.status)}, {"diagnostics", diagnostics_json(c.diagnostics)},
             {"operation", "classify"}};
    if (c.witness) {
        r.mechanism("witness", *c.witness);
        r.table("dominance.csv", gap_table(m, *c.witness, "input", "witness", env->alpha()));
        res["witness_source"] = c.witness_source;
        res["witness_verdict"] = verdict_json(compare(*c.witness, m, env->alpha(), c.slack));
    }
    if (c.perturbation)
        res["perturbation"] = {{"theta_l", c.perturbation->theta_l},
                               {"theta_h", c.perturbation->theta_h},
                               {"epsilon", c.perturbation->epsilon}};
    return res;
}

json do_compare(Run& r)
{
    EnvPtr env = r.env();
    Mechanism a = build_mechanism(r.cfg_, r.need(r.cfg_.run.mechanism, "mechanism"), env);
    Mechanism b = build_mechanism(r.cfg_, r.need(r.cfg_.run.other, "other"), env);
    r.table("compare.csv", gap_table(b, a, "other", "mechanism", env->alpha()));
    return {{"mechanism", r.cfg_.run.mechanism}, {"other", r.cfg_.run.other}, {"verdict", verdict_json(compare(a, b))}};
}

json do_optimal(Run& r)
{
    EnvPtr env = r.env();
    Prior p = build_prior(r.cfg_, r.need(r.cfg_.run.prior, "prior"), env->grid_ptr());
    OptimalResult o = bm_optimal(env, p);
    r.mechanism("optimal", o.mechanism);
    CsvTable psi{{"theta", "psi"}, {}};
    for (std::size_t i = 0; i < o.psi.size(); ++i) psi.rows.push_back({env->grid()[i], o.psi[i]});
    r.table("virtual_cost.csv", psi);
    return {{"prior", r.cfg_.run.prior},
            {"expected_rs", o.expected_rs},
            {"ironed", o.ironed},
            {"dd", check_dd(o.mechanism).ok},
            {"deterministic", o.mechanism.is_deterministic()},
            {"operation", "bm_optimal"}};
}

json do_oracle(Run& r)
{
    EnvPtr env = r.env();
    Prior p = build_prior(r.cfg_, r.need(r.cfg_.run.prior, "prior"), env->grid_ptr());
    OptimalResult bm = bm_optimal(env, p);
    OptimalResult dp = dp_oracle(env, p, r.cfg_.run.q_levels);
    std::vector<double> lv = quantity_levels(*env, r.cfg_.run.q_levels, false);
    double dq = lv.size() > 2 ? lv[2] - lv[1] : 0.0;
    double bound = env->qbar() * dq + env->grid().max_step();
    CsvTable t{{"theta", "q_dp", "q_bm"}, {}};
    double max_dq = 0.0;
    for (std::size_t i = 0; i < env->grid().size(); ++i) {
        t.rows.push_back({env->grid()[i], dp.mechanism.q_interval(i), bm.mechanism.q_interval(i)});
        max_dq = std::max(max_dq, std::abs(dp.mechanism.q_interval(i) - bm.mechanism.q_interval(i)));
    }
    r.table("oracle.csv", t);
    double gap = std::abs(dp.expected_rs - bm.expected_rs);
    return {{"prior", r.cfg_.run.prior},
            {"q_levels", r.cfg_.run.q_levels},
            {"dp_expected_rs", dp.expected_rs},
            {"bm_expected_rs", bm.expected_rs},
            {"gap", gap},
            {"bound", bound},
            {"agree", gap <= bound},
            {"max_quantity_difference", max_dq},
            {"operation", "dp_oracle"}};
}

json do_maxmin(Run& r)
{
    EnvPtr env = r.env();
    if (r.cfg_.run.priors.empty()) throw ContractError("maxmin: run.priors is required");
    std::vector<Prior> ps;
    for (const auto& n : r.cfg_.run.priors) ps.push_back(build_prior(r.cfg_, n, env->grid_ptr()));
    MaxminResult mm = maxmin(env, ps);
    r.mechanism("maxmin", mm.optimal.mechanism);
    json ers = json::object();
    for (std::size_t i = 0; i < ps.size(); ++i) ers[r.cfg_.run.priors[i]] = mm.expected_rs_by_prior[i];
    return {{"star", r.cfg_.run.priors[mm.star]},
            {"expected_rs", ers},
            {"worst", r.cfg_.run.priors[mm.worst]},
            {"worst_at_star", mm.worst_at_star},
            {"operation", "maxmin"}};
}

json do_perturb(Run& r)
{
    EnvPtr env = r.env();
    const double lo = env->theta_low(), hi = env->theta_high();
    PerturbationParams p{r.cfg_.run.theta_l.value_or(lo + 0.25 * (hi - lo)),
                         r.cfg_.run.theta_h.value_or(lo + 0.75 * (hi - lo)), 0.0};
    double bound = perturbation_epsilon_bound(*env, p.theta_l, p.theta_h);
    p.epsilon = r.cfg_.run.epsilon.value_or(0.5 * bound);
    Mechanism me = Mechanism::efficient(env);
    Mechanism w = efficient_perturbation(env, p);
    r.mechanism("perturbed", w);
    std::vector<double> ra = rs_profile(me), rb = rs_profile(w);
    CsvTable t{{"theta", "q_efficient", "q_perturbed", "gap", "gap_bound"}, {}};
    for (std::size_t i = 0; i < me.size(); ++i) {
        double th = env->grid()[i];
        t.rows.push_back({th, me.q_interval(i), w.q_interval(i), rb[i] - ra[i], perturbation_gap_bound(*env, p, th)});
    }
    r.table("perturb.csv", t);
    auto [l, h] = perturbation_knots(env->grid(), p);
    return {{"theta_l", p.theta_l},
            {"theta_h", p.theta_h},
            {"epsilon", p.epsilon},
            {"epsilon_bound", bound},
            {"gap_at_theta_l", rb[l] - ra[l]},
            {"gap_bound_at_theta_l", perturbation_gap_bound(*env, p, env->grid()[l])},
            {"grid_error", perturbation_grid_error(*env, p)},
            {"gap_at_theta_h", rb[h] - ra[h]},
            {"verdict", verdict_json(compare(w, me, env->alpha(), perturbation_grid_error(*env, p)))},
            {"operation", "efficient_perturbation"}};
}

json do_nesting(Run& r)
{
    EnvPtr env = r.env();
    Mechanism m = build_mechanism(r.cfg_, r.need(r.cfg_.run.mechanism, "mechanism"), env);
    Classification c = classify(m, {true, r.cfg_.run.jobs});
    if (!c.witness) throw ContractError("nesting: no witness dominates the mechanism at alpha " + fmt12(env->alpha()));
    NestingReport rep = alpha_nesting_check(m, env->alpha(), r.cfg_.run.alpha_low, c.witness, c.perturbation);
    r.mechanism("nesting_witness", *rep.meet_witness);
    return {{"alpha_high", env->alpha()},
            {"alpha_low", r.cfg_.run.alpha_low},
            {"witness_source", c.witness_source},
            {"witness_at_high", verdict_json(rep.witness_high)},
            {"meet_at_high", verdict_json(rep.meet_high)},
            {"meet_at_low", verdict_json(rep.meet_low)},
            {"meet_was_identity", rep.meet_was_identity},
            {"product_below_input", rep.product_below_input},
            {"ok", rep.ok()},
            {"operation", "alpha_nesting_check"}};
}

json do_rotate(Run& r)
{
    EnvPtr env = r.env();
    Demand d = rotate(*env, r.cfg_.run.rotate_slope);
    EnvPtr rot = env->with_demand(d);
    json dj;
    if (const auto* lin = std::get_if<LinearDemand>(&d.family()))
        dj = {{"family", "linear"}, {"a", lin->a}, {"b", lin->b}};
    else if (const auto* lg = std::get_if<LogitDemand>(&d.family()))
        dj = {{"family", "logit"}, {"V", lg->quality}, {"beta", lg->beta}};
    return {{"qfloor", env->qfloor()},
            {"qfloor_rotated", rot->qfloor()},
            {"floor_rises", rot->qfloor() > env->qfloor()},
            {"rotated_demand", dj},
            {"operation", "rotate"}};
}

json do_fixedcost(Run& r)
{
    if (!r.cfg_.fixedcost) throw ContractError("fixedcost classify: config has no fixedcost block");
    FcEnvPtr env = FixedCostEnv::create(*r.cfg_.fixedcost);
    FcMechanism m = build_fc_mechanism(r.cfg_, r.need(r.cfg_.run.mechanism, "mechanism"), env);
    FcClassification c = fc_classify(m);
    json steps = json::array();
    for (const auto& s : c.steps)
        steps.push_back({{"name", s.name},
                         {"applied", s.applied},
                         {"weakly_above", s.weakly_above},
                         {"strict_somewhere", s.strict_somewhere}});
    if (c.witness) r.fc_mechanism("fc_witness", *c.witness);
    return {{"status", c.undominated ? "UNDOMINATED" : "DOMINATED"},
            {"efficient_quantity", env->qe()},
            {"conditions",
             {{"r_left_continuous", c.r_left_continuous},
              {"r_at_theta_low_is_one", c.r_top_type_operates},
              {"u_bar_zero", c.no_rent_at_top},
              {"q_efficient_when_operating", c.efficient_quantity}}},
            {"witness_verified", c.witness_verified},
            {"steps", steps},
            {"operation", "fc_classify"}};
}

json do_export_plot(Run& r)
{
    EnvPtr env = r.env();
    Mechanism m = build_mechanism(r.cfg_, r.need(r.cfg_.run.mechanism, "mechanism"), env);
    r.table("plot.csv", plot_table(m));
    return {{"mechanism", r.cfg_.run.mechanism}, {"operation", "surplus_profile"}};
}

} // namespace

json run(const std::string& subcommand, const Config& cfg)
{
    Run r(cfg, subcommand);
    json res;
    if (subcommand == "floor")
        res = do_floor(r);
    else if (subcommand == "transform")
        res = do_transform(r);
    else if (subcommand == "classify")
        res = do_classify(r);
    else if (subcommand == "compare")
        res = do_compare(r);
    else if (subcommand == "optimal")
        res = do_optimal(r);
    else if (subcommand == "oracle")
        res = do_oracle(r);
    else if (subcommand == "maxmin")
        res = do_maxmin(r);
    else if (subcommand == "perturb")
        res = do_perturb(r);
    else if (subcommand == "nesting")
        res = do_nesting(r);
    else if (subcommand == "rotate")
        res = do_rotate(r);
    else if (subcommand == "fixedcost-classify")
        res = do_fixedcost(r);
    else if (subcommand == "export-plot")
        res = do_export_plot(r);
    else
        throw ContractError("unknown subcommand '" + subcommand + "'");
    return r.finish(std::move(res));
}

} // namespace regmech
