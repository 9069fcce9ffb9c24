#include "regmech/config.hpp"

#include "regmech/errors.hpp"
#include "regmech/io.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace regmech {

using nlohmann::json;

std::uint64_t fnv1a(const std::string& bytes)
{
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

class Errors {
public:
    void add(std::string msg) { list_.push_back(std::move(msg)); }
    bool empty() const { return list_.empty(); }
    [[noreturn]] void raise() const
    {
        std::string msg = "invalid config:";
        for (const auto& e : list_) msg += "\n  - " + e;
        throw ContractError(msg);
    }

private:
    std::vector<std::string> list_;
};

double number(const json& j, const std::string& key, double fallback, const std::string& where, Errors& errs)
{
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) {
        errs.add(where + "." + key + " must be a number");
        return fallback;
    }
    return j[key].get<double>();
}

void unknown_keys(const json& j, const std::set<std::string>& allowed, const std::string& where, Errors& errs)
{
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key())) errs.add(where + ": unknown key '" + it.key() + "'");
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p)
{
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

Demand demand_or_default(const json& j, const std::string& where, Errors& errs)
{
    try {
        return parse_demand(j);
    } catch (const Error& e) {
        errs.add(where + ": " + e.what());
    } catch (const json::exception& e) {
        errs.add(where + ": " + e.what());
    }
    return Demand::linear(1.0, 1.0);
}

void check_files(const json& spec, const std::filesystem::path& base, const std::string& where, Errors& errs)
{
    for (const char* key : {"file", "overrides_file"}) {
        if (!spec.contains(key)) continue;
        if (!spec[key].is_string()) {
            errs.add(where + "." + key + " must be a path string");
        } else if (!std::filesystem::exists(resolve(base, spec[key].get<std::string>()))) {
            errs.add(where + "." + key + ": file not found: " + spec[key].get<std::string>());
        }
    }
}

void check_mechanism_spec(const json& spec, const std::filesystem::path& base, const std::string& where, Errors& errs)
{
    if (!spec.is_object()) {
        errs.add(where + " must be an object");
        return;
    }
    unknown_keys(spec, {"preset", "affine", "constant", "table", "file", "overrides", "overrides_file", "u_bar", "r"},
                 where, errs);
    int kinds = 0;
    for (const char* k : {"preset", "affine", "constant", "table", "file"}) kinds += spec.contains(k) ? 1 : 0;
    if (kinds != 1) errs.add(where + ": exactly one of preset, affine, constant, table, file is required");
    if (spec.contains("preset")) {
        std::string p = spec["preset"].is_string() ? spec["preset"].get<std::string>() : "";
        if (p != "efficient" && p != "zero" && p != "full_operation")
            errs.add(where + ".preset must be efficient, zero or full_operation");
    }
    if (spec.contains("u_bar") && !spec["u_bar"].is_number()) errs.add(where + ".u_bar must be a number");
    check_files(spec, base, where, errs);
}

void check_prior_spec(const json& spec, const std::filesystem::path& base, const std::string& where, Errors& errs)
{
    if (!spec.is_object() || !spec.contains("kind") || !spec["kind"].is_string()) {
        errs.add(where + ".kind is required");
        return;
    }
    std::string k = spec["kind"].get<std::string>();
    static const std::set<std::string> kinds{"uniform", "triangular", "narrow", "uniform_on", "csv"};
    if (!kinds.count(k)) errs.add(where + ".kind must be one of uniform, triangular, narrow, uniform_on, csv");
    if (k == "csv" && !spec.contains("file")) errs.add(where + ": csv prior needs a file");
    if (k == "narrow" && (!spec.contains("center") || !spec.contains("half_width")))
        errs.add(where + ": narrow prior needs center and half_width");
    if (k == "uniform_on" && (!spec.contains("lo") || !spec.contains("hi")))
        errs.add(where + ": uniform_on prior needs lo and hi");
    check_files(spec, base, where, errs);
}

template <class Params>
void collect_check(const Params& p, const std::string& where, Errors& errs)
{
    try {
        p.check();
    } catch (const ContractError& e) {
        errs.add(where + ": " + e.what());
    }
}

void validate_run(const Config& cfg, Errors& errs)
{
    const RunOptions& r = cfg.run;
    if (r.jobs == 0) errs.add("run.jobs must be >= 1");
    if (r.q_levels < 2) errs.add("run.q_levels must be >= 2");
    if (r.epsilon && !(*r.epsilon > 0.0)) errs.add("run.epsilon must be > 0");
    if (!(r.alpha_low > 0.0 && r.alpha_low < 1.0)) errs.add("run.alpha_low must lie in (0,1)");
    if (!(r.rotate_slope > 0.0)) errs.add("run.rotate_slope must be > 0");
    for (const std::string* name : {&r.mechanism, &r.other}) {
        if (!name->empty() && !cfg.mechanisms.count(*name) && !cfg.fc_mechanisms.count(*name))
            errs.add("run refers to unknown mechanism '" + *name + "'");
    }
    if (!r.prior.empty() && !cfg.priors.count(r.prior)) errs.add("run refers to unknown prior '" + r.prior + "'");
    for (const auto& p : r.priors)
        if (!cfg.priors.count(p)) errs.add("run.priors refers to unknown prior '" + p + "'");
}

} // namespace

Demand parse_demand(const json& j)
{
    if (!j.is_object() || !j.contains("family") || !j["family"].is_string())
        throw ContractError("demand.family is required (linear, logit or tabulated)");
    std::string fam = j["family"].get<std::string>();
    if (fam == "linear") {
        if (!j.contains("a") || !j.contains("b")) throw ContractError("linear demand needs a and b");
        return Demand::linear(j["a"].get<double>(), j["b"].get<double>());
    }
    if (fam == "logit") {
        const char* vkey = j.contains("V") ? "V" : "quality";
        if (!j.contains(vkey) || !j.contains("beta")) throw ContractError("logit demand needs V and beta");
        return Demand::logit(j[vkey].get<double>(), j["beta"].get<double>());
    }
    if (fam == "tabulated") {
        if (!j.contains("points") || !j["points"].is_array()) throw ContractError("tabulated demand needs points");
        std::vector<std::pair<double, double>> pts;
        for (const auto& p : j["points"]) {
            if (!p.is_array() || p.size() != 2) throw ContractError("tabulated points are [quantity, price] pairs");
            pts.emplace_back(p[0].get<double>(), p[1].get<double>());
        }
        return Demand::tabulated(std::move(pts));
    }
    throw ContractError("unknown demand family '" + fam + "'");
}

Config parse_config(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ContractError("config file not found: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path.parent_path());
}

Config parse_config_text(const std::string& text, const std::filesystem::path& base_dir)
{
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ContractError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ContractError("config root must be an object");

    Config cfg;
    cfg.base_dir = base_dir;
    cfg.hash = fnv1a(text);
    Errors errs;
    unknown_keys(root, {"market", "fixedcost", "mechanisms", "fc_mechanisms", "priors", "run"}, "config", errs);

    if (root.contains("market")) {
        const json& m = root["market"];
        unknown_keys(m, {"demand", "c", "theta_low", "theta_high", "alpha", "grid_n"}, "market", errs);
        MarketParams p;
        if (m.contains("demand")) p.demand = demand_or_default(m["demand"], "market.demand", errs);
        p.c = number(m, "c", p.c, "market", errs);
        p.theta_low = number(m, "theta_low", p.theta_low, "market", errs);
        p.theta_high = number(m, "theta_high", p.theta_high, "market", errs);
        p.alpha = number(m, "alpha", p.alpha, "market", errs);
        p.grid_n = static_cast<std::size_t>(number(m, "grid_n", static_cast<double>(p.grid_n), "market", errs));
        collect_check(p, "market", errs);
        cfg.market = p;
    }
    if (root.contains("fixedcost")) {
        const json& m = root["fixedcost"];
        unknown_keys(m, {"demand", "c", "theta_low", "theta_high", "alpha", "grid_n"}, "fixedcost", errs);
        FixedCostParams p;
        if (m.contains("demand")) p.demand = demand_or_default(m["demand"], "fixedcost.demand", errs);
        p.c = number(m, "c", p.c, "fixedcost", errs);
        p.theta_low = number(m, "theta_low", p.theta_low, "fixedcost", errs);
        p.theta_high = number(m, "theta_high", p.theta_high, "fixedcost", errs);
        p.alpha = number(m, "alpha", p.alpha, "fixedcost", errs);
        p.grid_n = static_cast<std::size_t>(number(m, "grid_n", static_cast<double>(p.grid_n), "fixedcost", errs));
        collect_check(p, "fixedcost", errs);
        cfg.fixedcost = p;
    }
    for (const char* block : {"mechanisms", "fc_mechanisms", "priors"}) {
        if (!root.contains(block)) continue;
        if (!root[block].is_object()) {
            errs.add(std::string(block) + " must be an object of named entries");
            continue;
        }
        for (auto it = root[block].begin(); it != root[block].end(); ++it) {
            std::string where = std::string(block) + "." + it.key();
            if (std::string(block) == "priors") {
                check_prior_spec(it.value(), base_dir, where, errs);
                cfg.priors[it.key()] = it.value();
            } else {
                check_mechanism_spec(it.value(), base_dir, where, errs);
                (std::string(block) == "mechanisms" ? cfg.mechanisms : cfg.fc_mechanisms)[it.key()] = it.value();
            }
        }
    }
    if (root.contains("run")) {
        const json& r = root["run"];
        unknown_keys(r,
                     {"out", "seed", "jobs", "mechanism", "other", "prior", "priors", "q_levels", "epsilon", "theta_l",
                      "theta_h", "alpha_low", "rotate_slope", "witness_search"},
                     "run", errs);
        RunOptions& o = cfg.run;
        try {
            if (r.contains("out")) o.out = resolve(base_dir, r["out"].get<std::string>());
            if (r.contains("seed")) o.seed = r["seed"].get<std::uint64_t>();
            if (r.contains("jobs")) o.jobs = r["jobs"].get<unsigned>();
            if (r.contains("mechanism")) o.mechanism = r["mechanism"].get<std::string>();
            if (r.contains("other")) o.other = r["other"].get<std::string>();
            if (r.contains("prior")) o.prior = r["prior"].get<std::string>();
            if (r.contains("priors")) o.priors = r["priors"].get<std::vector<std::string>>();
            if (r.contains("q_levels")) o.q_levels = r["q_levels"].get<std::size_t>();
            if (r.contains("witness_search")) o.witness_search = r["witness_search"].get<bool>();
        } catch (const json::exception& e) {
            errs.add(std::string("run: ") + e.what());
        }
        if (r.contains("epsilon")) o.epsilon = number(r, "epsilon", 0.0, "run", errs);
        if (r.contains("theta_l")) o.theta_l = number(r, "theta_l", 0.0, "run", errs);
        if (r.contains("theta_h")) o.theta_h = number(r, "theta_h", 0.0, "run", errs);
        o.alpha_low = number(r, "alpha_low", o.alpha_low, "run", errs);
        o.rotate_slope = number(r, "rotate_slope", o.rotate_slope, "run", errs);
    }
    validate_run(cfg, errs);
    if (!errs.empty()) errs.raise();
    return cfg;
}

void validate_config(const Config& cfg)
{
    Errors errs;
    if (cfg.market) collect_check(*cfg.market, "market", errs);
    if (cfg.fixedcost) collect_check(*cfg.fixedcost, "fixedcost", errs);
    validate_run(cfg, errs);
    if (!errs.empty()) errs.raise();
}

namespace {

std::vector<std::vector<double>> json_rows(const json& j, const std::string& what)
{
    std::vector<std::vector<double>> rows;
    if (!j.is_array()) throw ContractError(what + " must be an array of rows");
    for (const auto& row : j) rows.push_back(row.get<std::vector<double>>());
    return rows;
}

std::vector<std::vector<double>> csv_rows(const std::filesystem::path& p, const std::vector<std::string>& header)
{
    CsvTable t = read_csv(p);
    if (t.header != header) throw ContractError(p.string() + ": unexpected header");
    return t.rows;
}

template <class Grid>
void tabulate(const Config& cfg, const json& spec, const Grid& grid, double qbar,
              std::vector<std::vector<double>>& rows, std::vector<std::vector<double>>& ovr)
{
    if (spec.contains("table")) {
        rows = json_rows(spec["table"], "table");
    } else if (spec.contains("file")) {
        rows = csv_rows(resolve(cfg.base_dir, spec["file"].get<std::string>()), {"theta", "q", "r"});
    } else if (spec.contains("affine")) {
        double a = spec["affine"].at("intercept").get<double>();
        double b = spec["affine"].at("slope").get<double>();
        double r = spec.value("r", 1.0);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            double q = std::clamp(a + b * grid[i], 0.0, qbar);
            rows.push_back({grid[i], q, q > 0.0 ? r : 0.0});
        }
    } else if (spec.contains("constant")) {
        double q = spec["constant"].at("q").get<double>();
        double r = spec["constant"].value("r", q > 0.0 ? 1.0 : 0.0);
        for (std::size_t i = 0; i < grid.size(); ++i) rows.push_back({grid[i], q, r});
    }
    if (spec.contains("overrides")) ovr = json_rows(spec["overrides"], "overrides");
    if (spec.contains("overrides_file"))
        ovr = csv_rows(resolve(cfg.base_dir, spec["overrides_file"].get<std::string>()), {"knot_index", "q", "r"});
}

const json& lookup(const std::map<std::string, json>& m, const std::string& name, const char* what)
{
    auto it = m.find(name);
    if (it == m.end()) throw ContractError(std::string("unknown ") + what + " '" + name + "'");
    return it->second;
}

} // namespace

Mechanism build_mechanism(const Config& cfg, const std::string& name, EnvPtr env)
{
    const json& spec = lookup(cfg.mechanisms, name, "mechanism");
    try {
        double u_bar = spec.value("u_bar", 0.0);
        if (spec.contains("preset")) {
            std::string p = spec["preset"].get<std::string>();
            Mechanism base = p == "zero" ? Mechanism::zero(env) : Mechanism::efficient(env);
            std::vector<std::vector<double>> ovr;
            if (spec.contains("overrides")) ovr = json_rows(spec["overrides"], "overrides");
            return mechanism_from_rows(env, mechanism_rows(base), ovr, u_bar);
        }
        std::vector<std::vector<double>> rows, ovr;
        tabulate(cfg, spec, env->grid(), env->qbar(), rows, ovr);
        return mechanism_from_rows(env, rows, ovr, u_bar);
    } catch (const json::exception& e) {
        throw ContractError("mechanism '" + name + "': " + e.what());
    }
}

FcMechanism build_fc_mechanism(const Config& cfg, const std::string& name, FcEnvPtr env)
{
    const json& spec = lookup(cfg.fc_mechanisms, name, "fixed-cost mechanism");
    try {
        double u_bar = spec.value("u_bar", 0.0);
        std::vector<std::vector<double>> rows, ovr;
        if (spec.contains("preset")) {
            std::string p = spec["preset"].get<std::string>();
            FcMechanism base = FcMechanism::full_operation(env);
            if (p == "zero") {
                std::size_t n = env->grid().size();
                base = FcMechanism(env, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0));
            }
            rows = fc_mechanism_table(base).rows;
            if (spec.contains("overrides")) ovr = json_rows(spec["overrides"], "overrides");
        } else {
            tabulate(cfg, spec, env->grid(), env->demand().qbar(), rows, ovr);
        }
        return fc_mechanism_from_rows(env, rows, ovr, u_bar);
    } catch (const json::exception& e) {
        throw ContractError("fixed-cost mechanism '" + name + "': " + e.what());
    }
}

Prior build_prior(const Config& cfg, const std::string& name, std::shared_ptr<const TypeGrid> grid)
{
    const json& spec = lookup(cfg.priors, name, "prior");
    try {
        std::string k = spec["kind"].get<std::string>();
        if (k == "uniform") return Prior::uniform(grid);
        if (k == "triangular") return Prior::triangular_increasing(grid);
        if (k == "narrow")
            return Prior::narrow_triangular(grid, spec["center"].get<double>(), spec["half_width"].get<double>());
        if (k == "uniform_on") return Prior::uniform_on(grid, spec["lo"].get<double>(), spec["hi"].get<double>());
        return Prior::interpolated(grid, read_prior_points(resolve(cfg.base_dir, spec["file"].get<std::string>())),
                                   name);
    } catch (const json::exception& e) {
        throw ContractError("prior '" + name + "': " + e.what());
    }
}

} // namespace regmech
