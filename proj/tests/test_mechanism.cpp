#include "oracles.hpp"

#include "regmech/errors.hpp"
#include "regmech/mechanism.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace regmech;

namespace {

Mechanism constant(EnvPtr env, double q, double r, double u_bar = 0.0)
{
    std::size_t n = env->grid().size();
    return Mechanism(env, std::vector<double>(n, q), std::vector<double>(n, r), {}, u_bar);
}

} // namespace

TEST_CASE("constructor contracts")
{
    EnvPtr env = oracle::linear_one();
    std::size_t n = env->grid().size();
    CHECK_THROWS_AS(Mechanism(env, std::vector<double>(n, 0.2), std::vector<double>(n, 1.2)), ContractError);
    CHECK_THROWS_AS(Mechanism(env, std::vector<double>(n, 1.2), std::vector<double>(n, 1.0)), ContractError);
    CHECK_THROWS_AS(Mechanism(env, std::vector<double>(n, 0.0), std::vector<double>(n, 0.5)), ContractError);
    CHECK_THROWS_AS(Mechanism(env, std::vector<double>(n - 1, 0.2), std::vector<double>(n - 1, 1.0)), ContractError);
    // Override above the left limit breaks monotonicity of qr.
    CHECK_THROWS_AS(Mechanism(env, std::vector<double>(n, 0.2), std::vector<double>(n, 1.0), {{10, 0.3, 1.0}}),
                    ContractError);
    CHECK_THROWS_AS(Mechanism(env, std::vector<double>(n, 0.2), std::vector<double>(n, 1.0), {{10, 0.1, 1.0}}),
                    ContractError);
    CHECK_NOTHROW(Mechanism(env, std::vector<double>(n, 0.2), std::vector<double>(n, 1.0), {{n - 1, 0.1, 1.0}}));
    CHECK_NOTHROW(Mechanism(env, std::vector<double>(n, 0.2), std::vector<double>(n, 1.0), {{0, 0.7, 1.0}}));
}

TEST_CASE("envelope rent")
{
    EnvPtr env = oracle::linear_one();
    Mechanism m = constant(env, 0.1, 1.0);
    CHECK(envelope_rent(m).front() == doctest::Approx(0.02));
    CHECK(envelope_rent(m).back() == 0.0);
    CHECK(envelope_rent(constant(env, 0.1, 1.0, 0.03)).back() == 0.03);

    const auto& g = env->grid();
    Mechanism step = Mechanism::from_rule(
        env, [](double t) { return t <= 0.4 + 1e-12 ? 0.2 : 0.1; }, [](double) { return 1.0; });
    CHECK(envelope_rent(step).front() == doctest::Approx(0.03));
    std::vector<double> u = envelope_rent(step);
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(u[i] <= u[i - 1]);
    CHECK(u == oracle::rents(step));
}

TEST_CASE("subsidy")
{
    EnvPtr env = oracle::linear_one();
    Mechanism m = constant(env, 0.2, 1.0);
    auto s = subsidy(m);
    REQUIRE(s.back());
    CHECK(*s.back() == doctest::Approx(-0.04));

    Mechanism half = constant(env, 0.4, 0.5);
    auto sh = subsidy(half);
    std::vector<double> u = half.rents();
    for (std::size_t i = 0; i < half.size(); ++i) {
        double t = env->grid()[i];
        double profit = 0.4 * price(*env, 0.4) - env->c() - t * 0.4;
        REQUIRE(sh[i]);
        CHECK(0.5 * (profit + *sh[i]) == doctest::Approx(u[i]).epsilon(1e-12));
    }
    auto sz = subsidy(Mechanism::zero(env));
    for (const auto& v : sz) CHECK_FALSE(v.has_value());
}

TEST_CASE("zero subsidy when rent equals truthful profit")
{
    // A single operating type whose rent is exactly its profit at the posted quantity.
    MarketParams p = linear_one(0.5, 2);
    EnvPtr env = MarketEnv::create(p);
    double q = 0.5;
    double profit_top = q * price(*env, q) - env->c() - 0.5 * q;
    Mechanism m(env, {q, q}, {1.0, 1.0}, {}, profit_top);
    auto s = subsidy(m);
    REQUIRE(s.back());
    CHECK(std::abs(*s.back()) <= 1e-12);
}

TEST_CASE("incentive compatibility")
{
    EnvPtr env = oracle::linear_one();
    std::size_t n = env->grid().size();
    IcReport ok = check_ic(constant(env, 0.1, 1.0));
    CHECK(ok.ok());
    CHECK(ok.brute_force);
    CHECK(ok.oracle_agrees);

    std::vector<double> q(n, 0.2);
    for (std::size_t i = 80; i < 90; ++i) q[i] = 0.3;
    IcReport bad = check_ic(Mechanism::deterministic(env, q));
    CHECK_FALSE(bad.ok());
    CHECK_FALSE(bad.monotone);
    REQUIRE(bad.monotone_violation);
    CHECK(*bad.monotone_violation == 80);
    CHECK_FALSE(bad.violating_pairs.empty());
    CHECK_FALSE(bad.brute_force);
    CHECK(bad.oracle_agrees);

    std::vector<double> wrong(n, 0.01);
    IcReport env_bad = check_ic(Mechanism(env, std::vector<double>(n, 0.1), std::vector<double>(n, 1.0), {}, 0.0, wrong));
    CHECK_FALSE(env_bad.envelope);
    CHECK(env_bad.envelope_gap > 1e-9);
}

TEST_CASE("characterization matches brute force on random grid mechanisms")
{
    EnvPtr env = oracle::linear_one(0.5, 51);
    std::mt19937_64 rng(11);
    for (int k = 0; k < 200; ++k) {
        oracle::RandomOptions opt;
        opt.monotone = k % 2 == 0;
        Mechanism m = oracle::random_mechanism(env, rng, opt);
        IcReport rep = check_ic(m);
        CHECK(rep.oracle_agrees);
        CHECK(rep.ok() == oracle::brute_force_ic(m));
        if (opt.monotone) CHECK(rep.ok());
    }
}

TEST_CASE("individual rationality")
{
    EnvPtr env = oracle::linear_one();
    CHECK(check_ir(constant(env, 0.2, 1.0, 0.0)));
    CHECK_FALSE(check_ir(constant(env, 0.2, 1.0, -0.01)));
    CHECK(check_ir(constant(env, 0.2, 1.0, 0.05)));
}

TEST_CASE("regulator surplus")
{
    EnvPtr env = oracle::linear_one(0.0);
    std::size_t n = env->grid().size();
    std::size_t k = oracle::knot_of(env->grid(), 0.4);
    Mechanism m(env, std::vector<double>(n, 0.2), std::vector<double>(n, 1.0), {}, 0.0, std::vector<double>(n, 0.01));
    CHECK(regulator_surplus(m, k) == doctest::Approx(0.07));
    CHECK(total_surplus(*env, 0.4, 0.2) == doctest::Approx(0.08));
    CHECK(total_surplus(*env, 0.4, 0.0) == 0.0);

    Mechanism off(env, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), {}, 0.03);
    CHECK(regulator_surplus(off, k, 0.5) == doctest::Approx(-0.5 * 0.03));
    Mechanism full = constant(env, 0.2, 1.0, 0.02);
    CHECK(regulator_surplus(full, k, 1.0) == doctest::Approx(total_surplus(*env, 0.4, 0.2)));
}

TEST_CASE("surplus identities on random mechanisms")
{
    EnvPtr env = oracle::linear_one(0.3, 51);
    std::mt19937_64 rng(5);
    for (int k = 0; k < 50; ++k) {
        Mechanism m = oracle::random_mechanism(env, rng);
        SurplusProfile sp = surplus_profile(m);
        for (std::size_t i = 0; i < m.size(); ++i) {
            CHECK(sp.rs[i] == doctest::Approx(sp.cs[i] + 0.3 * sp.u[i]).epsilon(1e-12));
            CHECK(sp.rs[i] == doctest::Approx(m.r_at(i) * sp.ts[i] - 0.7 * sp.u[i]).epsilon(1e-12));
            if (m.r_at(i) > 0.0) {
                REQUIRE(sp.s[i]);
                double q = m.q_at(i);
                double profit = q * price(*env, q) - env->c() - env->grid()[i] * q;
                CHECK(m.r_at(i) * (*sp.s[i] + profit) == doctest::Approx(sp.u[i]).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("floor randomized partition")
{
    EnvPtr env = oracle::linear_one();
    std::size_t n = env->grid().size();
    std::vector<double> q(n), r(n);
    for (std::size_t i = 0; i < n; ++i) {
        r[i] = i <= 50 ? 1.0 : i <= 150 ? 0.5 : 0.0;
        q[i] = r[i] > 0.0 ? 0.2 : 0.0;
    }
    PartitionResult p = partition_floor_randomized(Mechanism(env, q, r));
    REQUIRE(p.ok());
    CHECK(p.partition->theta1.first == 0);
    CHECK(p.partition->theta1.last == 50);
    CHECK(p.partition->theta01.first == 51);
    CHECK(p.partition->theta01.last == 150);
    CHECK(p.partition->theta0.first == 151);
    CHECK(p.partition->theta0.last == 200);

    PartitionResult low = partition_floor_randomized(constant(env, 0.1, 1.0));
    CHECK_FALSE(low.ok());
    REQUIRE(low.failed_knot);
    CHECK(*low.failed_knot == 0);
    CHECK_FALSE(low.clause.empty());

    PartitionResult eff = partition_floor_randomized(Mechanism::efficient(env));
    REQUIRE(eff.ok());
    CHECK(eff.partition->theta1.first == 0);
    CHECK(eff.partition->theta1.last == n - 1);
    CHECK(eff.partition->theta01.empty);
    CHECK(eff.partition->theta0.empty);

    CHECK_FALSE(is_floor_randomized(constant(env, 0.3, 1.0, 0.01)));
    // Randomization with q above the floor is not allowed.
    CHECK_FALSE(is_floor_randomized(constant(env, 0.3, 0.5)));
    CHECK(is_floor_randomized(Mechanism::zero(env)));
}

TEST_CASE("partition covers every knot exactly once")
{
    EnvPtr env = oracle::linear_one(0.5, 51);
    std::mt19937_64 rng(3);
    int hits = 0;
    for (int k = 0; k < 300; ++k) {
        Mechanism m = oracle::random_mechanism(env, rng);
        PartitionResult p = partition_floor_randomized(m);
        if (!p.ok()) continue;
        ++hits;
        std::vector<int> cover(m.size(), 0);
        for (const KnotRange* r : {&p.partition->theta1, &p.partition->theta01, &p.partition->theta0})
            if (!r->empty)
                for (std::size_t i = r->first; i <= r->last; ++i) ++cover[i];
        for (int c : cover) CHECK(c == 1);
    }
    CHECK(hits > 0);
}

TEST_CASE("downward distortion")
{
    EnvPtr env = oracle::linear_one();
    Mechanism dd = Mechanism::from_rule(
        env, [](double t) { return 1.3 - 2 * t; }, [](double) { return 1.0; });
    CHECK(check_dd(dd).ok);
    CHECK(check_strict_dd(dd).ok);

    PredicateReport fl = check_dd(constant(env, 0.2, 1.0));
    CHECK_FALSE(fl.ok);
    REQUIRE_FALSE(fl.knots.empty());
    CHECK(fl.knots.front() == 0);

    Mechanism eff = Mechanism::efficient(env);
    CHECK(check_dd(eff).ok);
    PredicateReport st = check_strict_dd(eff);
    CHECK_FALSE(st.ok);
    CHECK(st.knots.size() == env->grid().size() - 1);
}

TEST_CASE("left continuity")
{
    EnvPtr env = oracle::linear_one();
    std::size_t n = env->grid().size();
    std::size_t k = oracle::knot_of(env->grid(), 0.4);
    std::vector<double> q(n, 0.2), r(n, 1.0);
    for (std::size_t i = k + 1; i < n; ++i) r[i] = 0.5;
    CHECK(check_left_continuity(Mechanism(env, q, r)).ok);

    PredicateReport jump = check_left_continuity(Mechanism(env, q, r, {{k, 0.2, 0.5}}));
    CHECK_FALSE(jump.ok);
    REQUIRE(jump.knots.size() == 1);
    CHECK(jump.knots.front() == k);

    CHECK(check_left_continuity(Mechanism(env, q, r, {{k, 0.2, 1.0}})).ok);
    // The lowest type has no left limit.
    CHECK(check_left_continuity(Mechanism(env, q, r, {{0, 0.7, 1.0}})).ok);
}

TEST_CASE("override-aware accessors")
{
    EnvPtr env = oracle::linear_one();
    std::size_t n = env->grid().size();
    Mechanism m(env, std::vector<double>(n, 0.2), std::vector<double>(n, 1.0), {{0, 0.7, 1.0}});
    CHECK(m.q_at(0) == 0.7);
    CHECK(m.q_interval(0) == 0.2);
    CHECK(m.q_at(1) == 0.2);
    REQUIRE(m.override_at(0));
    CHECK_FALSE(m.override_at(1));
    CHECK(m.rents() == Mechanism(env, std::vector<double>(n, 0.2), std::vector<double>(n, 1.0)).rents());
    CHECK(regulator_surplus(m, 0) > regulator_surplus(constant(env, 0.2, 1.0), 0));
}
