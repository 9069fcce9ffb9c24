#include "oracles.hpp"

#include "regmech/errors.hpp"
#include "regmech/market.hpp"

#include <doctest.h>

#include <cmath>

using namespace regmech;

TEST_CASE("linear value, price and inverse")
{
    Demand d = Demand::linear(1.0, 1.0);
    CHECK(d.value(0.0) == 0.0);
    CHECK(d.value(0.2) == doctest::Approx(0.18).epsilon(1e-12));
    CHECK(d.value(1.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(d.price(0.3) == doctest::Approx(0.7));
    CHECK(d.inverse_price(0.3) == doctest::Approx(0.7));
    CHECK_THROWS_AS(d.value(1.1), DomainError);
    CHECK_THROWS_AS(d.price(-0.1), DomainError);
    CHECK_THROWS_AS(d.inverse_price(1.5), DomainError);
}

TEST_CASE("inverse roundtrip on every family")
{
    std::vector<Demand> ds{Demand::linear(2.0, 0.7), Demand::logit(1.0, 0.25),
                           Demand::tabulated({{0.0, 1.0}, {0.3, 0.6}, {0.7, 0.2}, {1.0, 0.0}})};
    for (const Demand& d : ds) {
        for (int k = 1; k < 100; ++k) {
            double q = d.qbar() * k / 100.0;
            CHECK(std::abs(d.inverse_price(d.price(q)) - q) <= 1e-9);
        }
    }
}

TEST_CASE("logit closed forms agree with independent formulas")
{
    Demand d = Demand::logit(1.0, 0.25);
    for (double q : {0.01, 0.2, 0.5, 0.9}) {
        CHECK(d.price(q) == doctest::Approx(oracle::logit_price(q, 1.0, 0.25)).epsilon(1e-12));
        CHECK(d.value(q) == doctest::Approx(oracle::logit_value(q, 1.0, 0.25)).epsilon(1e-12));
        CHECK(d.unregulated_surplus(q) == doctest::Approx(-0.25 * std::log1p(-q)).epsilon(1e-12));
    }
    CHECK(std::abs(d.price(d.qbar())) <= 1e-9);
}

TEST_CASE("tabulated value is the exact trapezoid integral")
{
    Demand d = Demand::tabulated({{0.0, 1.0}, {0.5, 0.4}, {1.0, 0.0}});
    CHECK(d.value(0.5) == doctest::Approx(0.5 * (1.0 + 0.4) / 2));
    CHECK(d.value(1.0) == doctest::Approx(0.35 + 0.5 * 0.4 / 2));
    CHECK(d.price(0.25) == doctest::Approx(0.7));
    CHECK(d.value(0.25) == doctest::Approx(0.25 * (1.0 + 0.7) / 2));
}

TEST_CASE("quantity floor")
{
    SUBCASE("linear closed form")
    {
        CHECK(std::abs(quantity_floor(Demand::linear(1, 1), 0.02) - 0.2) <= 1e-9);
        CHECK(std::abs(quantity_floor(Demand::linear(2, 0.5), 0.1) - std::sqrt(2 * 0.1 / 0.5)) <= 1e-9);
    }
    SUBCASE("degenerate fixed cost")
    {
        CHECK(quantity_floor(Demand::linear(1, 1), 1e-12) < 1e-5);
    }
    SUBCASE("logit against a fine scan")
    {
        double scan = oracle::scan_root([](double q) { return -0.25 * std::log1p(-q) - 0.02; }, 0.0, 0.999, 1000000);
        CHECK(std::abs(quantity_floor(Demand::logit(1, 0.25), 0.02) - scan) <= 1e-6);
    }
    SUBCASE("tabulated against a fine scan")
    {
        Demand d = Demand::tabulated({{0.0, 1.0}, {0.3, 0.6}, {0.7, 0.2}, {1.0, 0.0}});
        double scan = oracle::scan_root([&](double q) { return d.value(q) - q * d.price(q) - 0.05; }, 0.0, 1.0, 1000000);
        CHECK(std::abs(quantity_floor(d, 0.05) - scan) <= 1e-6);
    }
    SUBCASE("unbracketed")
    {
        CHECK_THROWS_AS(quantity_floor(Demand::linear(1, 1), 0.6), AssumptionError);
    }
}

TEST_CASE("efficient quantity")
{
    EnvPtr env = oracle::linear_one();
    CHECK(efficient_quantity(*env, 0.3) == doctest::Approx(0.7));
    CHECK(efficient_quantity(*env, 0.5) == doctest::Approx(0.5));
    CHECK(efficient_quantity(*env, 0.5) > env->qfloor());
    CHECK_THROWS_AS(efficient_quantity(*env, 0.29), DomainError);
    CHECK_THROWS_AS(efficient_quantity(*env, 0.51), DomainError);
}

TEST_CASE("assumption validation")
{
    ValidationReport ok = validate_assumptions(linear_one());
    CHECK(ok.ok());
    CHECK(ok.top_type_surplus == doctest::Approx(0.105));
    REQUIRE(ok.qfloor);
    CHECK(*ok.qfloor == doctest::Approx(0.2));

    MarketParams p = linear_one();
    p.c = 0.2;
    ValidationReport a2 = validate_assumptions(p);
    CHECK_FALSE(a2.ok());
    bool named = false;
    for (const auto& v : a2.violations) named = named || v.check == "top_type_operates";
    CHECK(named);
    CHECK_THROWS_AS(MarketEnv::create(p), AssumptionError);

    MarketParams flat = linear_one();
    flat.demand = Demand::tabulated({{0.0, 1.0}, {0.3, 0.6}, {0.5, 0.6}, {1.0, 0.0}});
    ValidationReport a1 = validate_assumptions(flat);
    CHECK_FALSE(a1.ok());
    CHECK(a1.violations.front().check == "demand.monotone");
}

TEST_CASE("parameter range errors are listed together")
{
    MarketParams p = linear_one();
    p.alpha = 1.0;
    p.c = 0.0;
    try {
        p.check();
        FAIL("expected ContractError");
    } catch (const ContractError& e) {
        std::string msg = e.what();
        CHECK(msg.find("alpha must lie in [0,1)") != std::string::npos);
        CHECK(msg.find("c must be > 0") != std::string::npos);
    }
}

TEST_CASE("observation 1 holds at every knot of the canonical market")
{
    EnvPtr env = oracle::linear_one(0.5, 2001);
    for (double t : env->grid().knots()) {
        CHECK(efficient_quantity(*env, t) > env->qfloor());
        CHECK(total_surplus(*env, t, env->qfloor()) > 0.0);
    }
}

TEST_CASE("concave closure")
{
    EnvPtr env = oracle::linear_one();
    CHECK(concave_closure_value(*env, 0.1) == doctest::Approx(0.08));
    CHECK(concave_closure_value(*env, 0.2) == doctest::Approx(0.16));
    CHECK(0.2 * price(*env, 0.2) == doctest::Approx(value(*env, 0.2) - env->c()));
    CHECK(concave_closure_value(*env, 0.5) == doctest::Approx(0.355));
    CHECK_THROWS_AS(concave_closure_value(*env, 1.2), DomainError);

    std::vector<double> qs;
    for (int k = 0; k <= 200; ++k) qs.push_back(env->qbar() * k / 200.0);
    for (double a : qs) {
        double tilde = a > 0.0 ? value(*env, a) - env->c() : 0.0;
        CHECK(concave_closure_value(*env, a) >= tilde - 1e-12);
        for (double b : qs) {
            double mid = concave_closure_value(*env, 0.5 * (a + b));
            CHECK(mid >= 0.5 * (concave_closure_value(*env, a) + concave_closure_value(*env, b)) - 1e-12);
        }
    }
}

TEST_CASE("rotation")
{
    EnvPtr env = oracle::linear_one();
    Demand d = rotate(*env, 0.5);
    const auto& lin = std::get<LinearDemand>(d.family());
    CHECK(lin.a == doctest::Approx(0.65));
    CHECK(d.price(0.7) == doctest::Approx(0.3));
    EnvPtr rot = env->with_demand(d);
    CHECK(std::abs(rot->qfloor() - std::sqrt(0.08)) <= 1e-8);
    CHECK(rot->qfloor() > env->qfloor());
    CHECK_THROWS_AS(rotate(*env, 1.0), ContractError);
    CHECK_THROWS_AS(rotate(*env, 1.5), ContractError);

    MarketParams lp = linear_one();
    lp.demand = Demand::logit(1.0, 0.25);
    EnvPtr le = MarketEnv::create(lp);
    Demand ld = rotate(*le, 0.2);
    double pivot = le->demand().inverse_price(lp.theta_low);
    CHECK(ld.price(pivot) == doctest::Approx(lp.theta_low).epsilon(1e-9));
    CHECK(le->with_demand(ld)->qfloor() > le->qfloor());

    MarketParams tp = linear_one();
    tp.demand = Demand::tabulated({{0.0, 1.0}, {1.0, 0.0}});
    CHECK_THROWS_AS(rotate(*MarketEnv::create(tp), 0.5), ContractError);
}

TEST_CASE("type grid")
{
    TypeGrid g = TypeGrid::uniform(0.3, 0.5, 2001);
    CHECK(g.front() == 0.3);
    CHECK(g.back() == 0.5);
    CHECK(g.max_step() == doctest::Approx(1e-4));
    double s = 0.0;
    for (double w : g.trapezoid_weights()) s += w;
    CHECK(s == doctest::Approx(0.2));
    CHECK_THROWS_AS(TypeGrid::uniform(0.3, 0.5, 1), ContractError);
    CHECK_THROWS_AS(TypeGrid({0.3, 0.3, 0.5}), ContractError);
}
