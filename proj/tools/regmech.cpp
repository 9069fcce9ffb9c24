// Command-line front end: parses a JSON config, applies flag overrides and
// dispatches to the runner. Exit codes: 0 ok, 2 contract/config error,
// 3 assumption failure.
#include "regmech/config.hpp"
#include "regmech/errors.hpp"
#include "regmech/runner.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

struct Flags {
    std::string config;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> jobs;
    std::optional<double> alpha;
    std::optional<std::size_t> grid_n;
    std::optional<std::size_t> q_levels;
    std::optional<double> epsilon;
    std::optional<double> theta_l;
    std::optional<double> theta_h;
};

void apply(const Flags& f, regmech::Config& cfg)
{
    if (f.out) cfg.run.out = *f.out;
    if (f.seed) cfg.run.seed = *f.seed;
    if (f.jobs) cfg.run.jobs = *f.jobs;
    if (f.alpha) {
        if (cfg.market) cfg.market->alpha = *f.alpha;
        if (cfg.fixedcost) cfg.fixedcost->alpha = *f.alpha;
    }
    if (f.grid_n) {
        if (cfg.market) cfg.market->grid_n = *f.grid_n;
        if (cfg.fixedcost) cfg.fixedcost->grid_n = *f.grid_n;
    }
    if (f.q_levels) cfg.run.q_levels = *f.q_levels;
    if (f.epsilon) cfg.run.epsilon = f.epsilon;
    if (f.theta_l) cfg.run.theta_l = f.theta_l;
    if (f.theta_h) cfg.run.theta_h = f.theta_h;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Undominated regulatory mechanisms: floors, transforms, classification and optimal regulation"};
    app.require_subcommand(1);
    Flags f;

    auto add_common = [&f](CLI::App* sc) {
        sc->add_option("--config", f.config, "JSON config file")->required()->check(CLI::ExistingFile);
        sc->add_option("--out", f.out, "output directory");
        sc->add_option("--seed", f.seed, "random seed recorded in the report");
        sc->add_option("--jobs", f.jobs, "worker threads for witness search");
        sc->add_option("--alpha", f.alpha, "welfare weight on profit");
        sc->add_option("--grid-n", f.grid_n, "number of type knots");
        sc->add_option("--q-levels", f.q_levels, "quantity levels for the DP oracle");
        sc->add_option("--epsilon", f.epsilon, "perturbation slope");
        sc->add_option("--theta-l", f.theta_l, "perturbation interval start");
        sc->add_option("--theta-h", f.theta_h, "perturbation interval end");
    };

    std::string chosen;
    for (const auto& name : regmech::subcommands()) {
        if (name == "fixedcost-classify") continue;
        auto* sc = app.add_subcommand(name);
        add_common(sc);
        sc->callback([&chosen, name] { chosen = name; });
    }
    auto* fc = app.add_subcommand("fixedcost", "fixed-cost model");
    fc->require_subcommand(1);
    auto* fcc = fc->add_subcommand("classify", "classify a fixed-cost mechanism");
    add_common(fcc);
    fcc->callback([&chosen] { chosen = "fixedcost-classify"; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        regmech::Config cfg = regmech::parse_config(f.config);
        apply(f, cfg);
        regmech::validate_config(cfg);
        nlohmann::json report = regmech::run(chosen, cfg);
        std::cout << report["result"].dump(2) << '\n';
        return 0;
    } catch (const regmech::AssumptionError& e) {
        std::cerr << "assumption violated: " << e.what() << '\n';
        return 3;
    } catch (const regmech::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
