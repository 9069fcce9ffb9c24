#include "regmech/config.hpp"
#include "regmech/errors.hpp"
#include "regmech/runner.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

using namespace regmech;
namespace fs = std::filesystem;

namespace {

const fs::path kData = REGMECH_TEST_DATA;
const fs::path kGolden = REGMECH_GOLDEN;
const std::string kCli = REGMECH_CLI;

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name)
{
    fs::path p = fs::temp_directory_path() / ("regmech_cli_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    return p;
}

Config load(const std::string& file, const fs::path& out)
{
    Config cfg = parse_config(kData / file);
    cfg.run.out = out;
    return cfg;
}

int exit_code(const std::string& args)
{
    std::string cmd = "\"" + kCli + "\" " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string first_line(const fs::path& p)
{
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

const char* kLinearOne = R"({
  "market": {"demand": {"family": "linear", "a": 1, "b": 1}, "c": 0.02,
             "theta_low": 0.3, "theta_high": 0.5, "alpha": ALPHA, "grid_n": 201},
  "mechanisms": {"m": {"preset": "efficient"}},
  "run": {"mechanism": "m"}
})";

std::string with_alpha(const std::string& a)
{
    std::string s = kLinearOne;
    return s.replace(s.find("ALPHA"), 5, a);
}

} // namespace

TEST_CASE("config parsing")
{
    Config cfg = parse_config_text(with_alpha("0.5"), kData);
    REQUIRE(cfg.market);
    EnvPtr env = MarketEnv::create(*cfg.market);
    CHECK(env->qfloor() == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(cfg.hash == fnv1a(with_alpha("0.5")));

    try {
        parse_config_text(with_alpha("1.0"), kData);
        FAIL("alpha = 1 accepted");
    } catch (const ContractError& e) {
        CHECK(std::string(e.what()).find("alpha must lie in [0,1)") != std::string::npos);
    }
    std::string zero_c = with_alpha("0.5");
    zero_c.replace(zero_c.find("0.02"), 4, "0.0");
    CHECK_THROWS_AS(parse_config_text(zero_c, kData), ContractError);
    CHECK_THROWS_AS(parse_config_text("{\"market\": {\"bogus\": 1}}", kData), ContractError);
    CHECK_THROWS_AS(parse_config_text("not json", kData), ContractError);
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("tabulated mechanism file")
{
    Config cfg = load("small.json", scratch("small"));
    EnvPtr env = MarketEnv::create(*cfg.market);
    Mechanism m = build_mechanism(cfg, "tab", env);
    CHECK(m.size() == 5);
    CHECK(is_ic(m));
}

TEST_CASE("every subcommand runs")
{
    for (const auto& sub : subcommands()) {
        bool fc = sub == "fixedcost-classify";
        bool nest = sub == "nesting";
        Config cfg = load(fc ? "fixedcost.json" : nest ? "nesting.json" : "linear1.json", scratch(sub));
        nlohmann::json rep = run(sub, cfg);
        CHECK_MESSAGE(rep.contains("result"), sub);
        CHECK(rep["meta"]["subcommand"] == sub);
        CHECK(rep["meta"]["seed"] == cfg.run.seed);
        CHECK(fs::exists(cfg.run.out / "report.json"));
        for (const auto& t : rep["tables"]) CHECK(fs::exists(cfg.run.out / t["file"].get<std::string>()));
    }
}

TEST_CASE("subcommand results")
{
    Config cfg = load("linear1.json", scratch("results"));
    CHECK(run("floor", cfg)["result"]["qfloor"].get<double>() == doctest::Approx(0.2));
    CHECK(run("classify", cfg)["result"]["status"] == "UNDOMINATED");
    CHECK(run("oracle", cfg)["result"]["agree"] == true);
    CHECK(run("nesting", load("nesting.json", scratch("nest")))["result"]["ok"] == true);
    CHECK(run("fixedcost-classify", load("fixedcost.json", scratch("fc")))["result"]["status"] == "UNDOMINATED");

    Config low = load("linear1.json", scratch("low"));
    low.run.mechanism = "low_const";
    nlohmann::json c = run("classify", low)["result"];
    CHECK(c["status"] == "DOMINATED");
    CHECK(c["witness_verdict"]["relation"] == "DOMINATES");

    Config z = load("linear1.json", scratch("zero"));
    z.run.mechanism = "zero";
    run("export-plot", z);
    std::ifstream in(z.run.out / "plot.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "theta,q,r,u,s,ts,cs,rs");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        CHECK(line.substr(line.find(',')) == ",0,0,0,0,0,0,0");
    }
    CHECK(rows == 201);
}

TEST_CASE("table headers")
{
    Config cfg = load("linear1.json", scratch("headers"));
    run("transform", cfg);
    CHECK(first_line(cfg.run.out / "transformed.csv") == "theta,q,r");
    CHECK(first_line(cfg.run.out / "dominance.csv") == "theta,rs_input,rs_transformed,gap");
    run("floor", cfg);
    CHECK(first_line(cfg.run.out / "floor.csv") == "theta,q_e,ts_at_floor");
}

TEST_CASE("golden outputs")
{
    struct Case {
        std::string sub, config, file, golden;
    };
    for (const Case& c : {Case{"floor", "linear1.json", "floor.csv", "floor.csv"},
                          Case{"floor", "linear1.json", "report.json", "floor_report.json"},
                          Case{"classify", "linear1.json", "report.json", "classify_report.json"},
                          Case{"export-plot", "linear1.json", "plot.csv", "plot.csv"},
                          Case{"optimal", "linear1.json", "optimal.csv", "optimal.csv"},
                          Case{"fixedcost-classify", "fixedcost.json", "report.json", "fixedcost_report.json"}}) {
        Config cfg = load(c.config, scratch("golden_" + c.sub));
        run(c.sub, cfg);
        std::string got = slurp(cfg.run.out / c.file);
        CHECK_MESSAGE(got == slurp(kGolden / c.golden), c.golden);
    }
}

TEST_CASE("outputs are byte identical across runs")
{
    for (const char* sub : {"transform", "classify", "maxmin", "perturb", "oracle"}) {
        Config a = load("linear1.json", scratch(std::string("det_a_") + sub));
        Config b = load("linear1.json", scratch(std::string("det_b_") + sub));
        b.run.jobs = 4;
        a.run.jobs = 4;
        run(sub, a);
        run(sub, b);
        for (const auto& e : fs::directory_iterator(a.run.out)) {
            fs::path other = b.run.out / e.path().filename();
            REQUIRE(fs::exists(other));
            CHECK_MESSAGE(slurp(e.path()) == slurp(other), e.path().filename().string());
        }
    }
}

TEST_CASE("binary exit codes")
{
    fs::path out = scratch("bin");
    std::string cfg = "--config \"" + (kData / "linear1.json").string() + "\" --out \"" + out.string() + "\"";
    CHECK(exit_code("floor " + cfg) == 0);
    CHECK(fs::exists(out / "floor.csv"));
    CHECK(exit_code("floor " + cfg + " --alpha 1") == 2);
    CHECK(exit_code("floor") == 2);
    CHECK(exit_code("no-such-command " + cfg) == 2);

    // theta_high pushes q_e(theta_high) below the floor: assumption failure.
    fs::path bad = scratch("bad_cfg");
    fs::create_directories(bad);
    std::string text = with_alpha("0.5");
    text.replace(text.find("0.02"), 4, "0.2");
    std::ofstream(bad / "a2.json") << text;
    CHECK(exit_code("floor --config \"" + (bad / "a2.json").string() + "\" --out \"" + out.string() + "\"") == 3);

    CHECK(exit_code("fixedcost classify --config \"" + (kData / "fixedcost.json").string() + "\" --out \"" +
                    out.string() + "\"") == 0);
    fs::remove_all(fs::temp_directory_path() / ("regmech_cli_" + std::to_string(::getpid())));
}
