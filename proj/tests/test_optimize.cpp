#include "oracles.hpp"

#include "regmech/errors.hpp"
#include "regmech/feasibility.hpp"
#include "regmech/optimize.hpp"
#include "regmech/prior.hpp"
#include "regmech/transforms.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace regmech;

namespace {

Mechanism downward(EnvPtr env)
{
    return Mechanism::from_rule(
        env, [](double t) { return 1.3 - 2 * t; }, [](double) { return 1.0; });
}

/// Composite Simpson rule.
double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000)
{
    double h = (b - a) / n, s = f(a) + f(b);
    for (int k = 1; k < n; ++k) s += f(a + k * h) * (k % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

} // namespace

TEST_CASE("prior construction")
{
    EnvPtr env = oracle::linear_one(0.5, 201);
    Prior u = Prior::uniform(env->grid_ptr());
    CHECK(u.density().front() == doctest::Approx(5.0));
    CHECK(u.cdf().front() == 0.0);
    CHECK(u.cdf().back() == 1.0);
    double s = 0.0;
    for (double m : u.mass()) s += m;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(u.mass()[0] == 0.0);

    Prior t = Prior::triangular_increasing(env->grid_ptr());
    CHECK(t.density().back() == doctest::Approx(10.0));
    const auto& g = env->grid();
    for (std::size_t i = 0; i < g.size(); ++i) {
        double x = g[i] - 0.3;
        CHECK(t.cdf()[i] == doctest::Approx(25 * x * x).epsilon(1e-9));
    }
    std::vector<double> w = g.trapezoid_weights();
    for (std::size_t i = 1; i < g.size(); ++i)
        CHECK(t.cdf()[i] - t.cdf()[i - 1] == doctest::Approx(0.5 * g.width(i) * (t.density()[i] + t.density()[i - 1])));

    CHECK_THROWS_AS(Prior(env->grid_ptr(), std::vector<double>(g.size(), 0.0)), ContractError);
    CHECK_THROWS_AS(Prior(env->grid_ptr(), std::vector<double>(3, 1.0)), ContractError);
    CHECK_THROWS_AS(Prior(env->grid_ptr(), std::vector<double>(g.size(), -1.0)), ContractError);
}

TEST_CASE("fosd")
{
    EnvPtr env = oracle::linear_one(0.5, 201);
    Prior u = Prior::uniform(env->grid_ptr());
    Prior t = Prior::triangular_increasing(env->grid_ptr());
    CHECK(fosd(t, u));
    CHECK(fosd(u, u));
    CHECK_FALSE(fosd(u, t));
    EnvPtr other = oracle::linear_one(0.5, 101);
    CHECK_THROWS_AS(fosd(u, Prior::uniform(other->grid_ptr())), ContractError);
}

TEST_CASE("fosd is reflexive and transitive on sampled triples")
{
    EnvPtr env = oracle::linear_one(0.5, 41);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<Prior> ps;
    for (int k = 0; k < 25; ++k) {
        double p = 3.0 * unif(rng);
        std::vector<double> d(41);
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = 0.05 + std::pow(static_cast<double>(i) / 40.0, p);
        ps.emplace_back(env->grid_ptr(), d);
    }
    for (const auto& a : ps) {
        CHECK(fosd(a, a));
        for (const auto& b : ps)
            for (const auto& c : ps)
                if (fosd(a, b) && fosd(b, c)) CHECK(fosd(a, c));
    }
}

TEST_CASE("expected regulator surplus")
{
    EnvPtr env = oracle::linear_one(0.0, 2001);
    Prior u = Prior::uniform(env->grid_ptr());
    auto integrand = [](double t) {
        double q = 1.3 - 2 * t;
        double rent = 0.4 - 1.3 * t + t * t;
        return 5.0 * (q - q * q / 2 - 0.02 - t * q - rent);
    };
    double exact = simpson(integrand, 0.3, 0.5);
    CHECK(std::abs(expected_rs(downward(env), u) - exact) <= 1e-4);
    CHECK(expected_rs(Mechanism::zero(env), u) == 0.0);

    Mechanism m = downward(env);
    CHECK(expected_rs(m, u) == doctest::Approx(oracle::expected_rs(m, u.cdf(), 0.0)).epsilon(1e-12));

    std::size_t k = oracle::knot_of(env->grid(), 0.4);
    double at = rs_profile(m)[k];
    double prev = 1.0;
    for (double w : {0.02, 0.01, 0.005, 0.001}) {
        double err = std::abs(expected_rs(m, Prior::narrow_triangular(env->grid_ptr(), 0.4, w)) - at);
        CHECK(err < prev);
        prev = err;
    }
    CHECK(prev < 1e-4);
}

TEST_CASE("virtual cost and optimal mechanism in closed form")
{
    EnvPtr env = oracle::linear_one(0.0, 2001);
    Prior u = Prior::uniform(env->grid_ptr());
    OptimalResult o = bm_optimal(env, u);
    const auto& g = env->grid();
    for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(o.psi[i] == doctest::Approx(2 * g[i] - 0.3).epsilon(1e-9));
        CHECK(std::abs(o.mechanism.q_at(i) - (1.3 - 2 * g[i])) <= 1e-6);
        CHECK(o.mechanism.r_at(i) == 1.0);
    }
    CHECK_FALSE(o.ironed);
    CHECK(o.mechanism.is_deterministic());
    CHECK(check_dd(o.mechanism).ok);
    CHECK(is_ic(o.mechanism));
    CHECK(check_ir(o.mechanism));

    OptimalResult h = bm_optimal(env->with_alpha(0.5), u);
    CHECK(h.psi.back() == doctest::Approx(0.6));
    CHECK(h.mechanism.q_at(g.size() - 1) == doctest::Approx(0.4).epsilon(1e-9));
    CHECK(h.psi[1000] == doctest::Approx(1.5 * g[1000] - 0.15).epsilon(1e-9));

    OptimalResult near = bm_optimal(env->with_alpha(0.999), u);
    for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(std::abs(near.mechanism.q_at(i) - (1.0 - g[i])) <= 1e-3);
}

TEST_CASE("ironing and shutdown")
{
    EnvPtr env = oracle::linear_one(0.0, 201);
    // Bimodal density makes G/g non-monotone.
    std::vector<double> d(201);
    for (std::size_t i = 0; i < d.size(); ++i) {
        double t = env->grid()[i];
        d[i] = 0.05 + std::exp(-std::pow((t - 0.33) / 0.01, 2)) + std::exp(-std::pow((t - 0.45) / 0.01, 2));
    }
    Prior p(env->grid_ptr(), d);
    OptimalResult o = bm_optimal(env, p);
    CHECK(o.ironed);
    CHECK(is_ic(o.mechanism));
    CHECK(check_dd(o.mechanism).ok);
    OptimalResult dp = dp_oracle(env, p, 141);
    CHECK(o.expected_rs >= dp.expected_rs - (env->qbar() * 0.5 / 139 + env->grid().max_step()));

    // A large fixed cost with mass near the top pushes the top types out.
    MarketParams mp = linear_one(0.0, 201);
    mp.c = 0.09;
    EnvPtr costly = MarketEnv::create(mp);
    OptimalResult s = bm_optimal(costly, Prior::uniform(costly->grid_ptr()));
    CHECK(s.mechanism.q_at(200) == 0.0);
    for (std::size_t i = 0; i < 201; ++i)
        if (s.mechanism.q_at(i) > 0.0) CHECK(s.mechanism.q_at(i) >= costly->qfloor() - 1e-9);
    CHECK(check_dd(s.mechanism).ok);
}

TEST_CASE("dp oracle")
{
    EnvPtr env = oracle::linear_one(0.0, 201);
    Prior u = Prior::uniform(env->grid_ptr());
    OptimalResult dp = dp_oracle(env, u, 141);
    std::vector<double> lv = quantity_levels(*env, 141, false);
    double dq = lv[2] - lv[1];
    const auto& g = env->grid();
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(dp.mechanism.q_at(i) - (1.3 - 2 * g[i])) <= dq + 1e-12);
    CHECK(std::abs(dp.expected_rs - bm_optimal(env, u).expected_rs) <= 2e-3);

    DpProblem single;
    single.theta = {0.3};
    single.mass = {1.0};
    single.width = {0.0};
    single.levels = {0.0, 0.2, 0.45, 0.7};
    single.alpha = 0.5;
    single.ts = [&](double t, double q) { return total_surplus(*env, t, q); };
    CHECK(dp_solve(single).q.front() == doctest::Approx(0.7));

    DpProblem bad = single;
    bad.levels = {0.1, 0.2};
    CHECK_THROWS_AS(dp_solve(bad), ContractError);
}

TEST_CASE("dp oracle equals exhaustive enumeration on a tiny grid")
{
    for (double alpha : {0.0, 0.5, 0.9}) {
        EnvPtr env = oracle::linear_one(alpha, 6);
        for (int which = 0; which < 2; ++which) {
            Prior p = which ? Prior::triangular_increasing(env->grid_ptr()) : Prior::uniform(env->grid_ptr());
            OptimalResult dp = dp_oracle(env, p, 4, false);
            std::vector<double> lv = quantity_levels(*env, 4, false);
            REQUIRE(lv.size() == 4);
            double best = -1e9;
            for (const auto& seq : decreasing_sequences(6, 4)) {
                std::vector<double> q(6);
                for (std::size_t i = 0; i < 6; ++i) q[i] = lv[seq[i]];
                best = std::max(best, oracle::expected_rs(Mechanism::deterministic(env, q), p.cdf(), alpha));
            }
            CHECK(dp.expected_rs == doctest::Approx(best).epsilon(1e-12));
        }
    }
    CHECK(decreasing_sequences(6, 4).size() == 84);
}

TEST_CASE("dp oracle agrees with the closed form and stays deterministic")
{
    for (double alpha : {0.0, 0.25, 0.5, 0.9}) {
        EnvPtr env = oracle::linear_one(alpha, 201);
        std::vector<double> lv = quantity_levels(*env, 141, false);
        double bound = env->qbar() * (lv[2] - lv[1]) + env->grid().max_step();
        for (int which = 0; which < 2; ++which) {
            Prior p = which ? Prior::triangular_increasing(env->grid_ptr()) : Prior::uniform(env->grid_ptr());
            OptimalResult bm = bm_optimal(env, p);
            OptimalResult dp = dp_oracle(env, p, 141);
            CHECK(std::abs(bm.expected_rs - dp.expected_rs) <= bound);
            CHECK(bm.expected_rs >= dp.expected_rs - bound);
            CHECK(dp.mechanism.is_deterministic());
            CHECK(check_dd(dp.mechanism).ok);
            for (std::size_t i = 0; i < dp.mechanism.size(); ++i)
                if (dp.mechanism.q_at(i) > 0.0) CHECK(dp.mechanism.q_at(i) >= env->qfloor() - 1e-9);
            CHECK(monotone_rs_check(bm.mechanism).ok());
        }
    }
}

TEST_CASE("maxmin")
{
    EnvPtr env = oracle::linear_one(0.5, 201);
    Prior u = Prior::uniform(env->grid_ptr());
    Prior t = Prior::triangular_increasing(env->grid_ptr());
    MaxminResult mm = maxmin(env, {u, t});
    CHECK(mm.star == 1);
    CHECK(mm.worst == 1);
    CHECK(mm.worst_at_star);
    CHECK(mm.optimal.mechanism.q_values() == bm_optimal(env, t).mechanism.q_values());

    MaxminResult one = maxmin(env, {u});
    CHECK(one.optimal.mechanism.q_values() == bm_optimal(env, u).mechanism.q_values());

    Prior left = Prior::uniform_on(env->grid_ptr(), 0.3, 0.45);
    Prior right = Prior::uniform_on(env->grid_ptr(), 0.35, 0.5);
    CHECK(maxmin(env, {left, right}).star == 1);

    Prior narrow = Prior::narrow_triangular(env->grid_ptr(), 0.4, 0.02);
    try {
        maxmin(env, {u, narrow});
        FAIL("expected ContractError");
    } catch (const ContractError& e) {
        CHECK(std::string(e.what()) == "no dominating prior");
    }
}

TEST_CASE("monotone regulator surplus")
{
    EnvPtr env = oracle::linear_one(0.5, 201);
    Prior u = Prior::uniform(env->grid_ptr());
    Prior t = Prior::triangular_increasing(env->grid_ptr());
    Mechanism bm = bm_optimal(env, u).mechanism;
    MonotoneReport rep = monotone_rs_check(bm, {{u, t}});
    CHECK(rep.ok());
    CHECK(expected_rs(bm, u) >= expected_rs(bm, t));
    CHECK_THROWS_AS(monotone_rs_check(Mechanism::zero(env)), ContractError);
    std::size_t n = env->grid().size();
    CHECK_THROWS_AS(monotone_rs_check(Mechanism(env, std::vector<double>(n, 0.1), std::vector<double>(n, 1.0))),
                    ContractError);
}

TEST_CASE("deterministic extraction never lowers expected surplus")
{
    EnvPtr env = oracle::linear_one(0.5, 41);
    Prior u = Prior::uniform(env->grid_ptr());
    std::mt19937_64 rng(44);
    for (int k = 0; k < 50; ++k) {
        Mechanism m = floor_transform(oracle::random_mechanism(env, rng));
        REQUIRE(is_floor_randomized(m));
        CHECK(expected_rs(deterministic_extract(m, u), u) >= expected_rs(m, u) - 1e-12);
    }
}

TEST_CASE("rationalizing priors on a tiny grid")
{
    EnvPtr env = oracle::linear_one(0.5, 6);
    Prior u = Prior::uniform(env->grid_ptr());
    Mechanism opt = dp_oracle(env, u, 4, false).mechanism;
    RationalizingResult r = find_rationalizing_prior(opt, 4);
    CHECK(r.feasible);
    CHECK(r.enumerated == 84);
    REQUIRE(r.prior);
    CHECK(check_rationalizes(opt, *r.prior, 4));
    CHECK(check_rationalizes(opt, u, 4));

    RationalizingResult dd = find_rationalizing_prior(downward(env), 4);
    CHECK(dd.feasible);
    REQUIRE(dd.prior);
    CHECK(check_rationalizes(downward(env), *dd.prior, 4, 1e-9));

    // q = 0.7 everywhere loses to lowering the top quantity: rent falls and top surplus rises.
    Mechanism high = Mechanism::deterministic(env, std::vector<double>(6, 0.7));
    std::vector<double> q2(6, 0.7);
    q2[5] = 0.45;
    Mechanism better = Mechanism::deterministic(env, q2);
    std::vector<double> a = rs_profile_intervals(better, 0.5), b = rs_profile_intervals(high, 0.5);
    for (std::size_t i = 1; i < 6; ++i) REQUIRE(a[i] > b[i]);
    RationalizingResult none = find_rationalizing_prior(high, 4);
    CHECK_FALSE(none.feasible);
    CHECK_FALSE(none.prior);

    EnvPtr big = oracle::linear_one(0.5, 9);
    CHECK_THROWS_AS(find_rationalizing_prior(Mechanism::efficient(big), 4), ContractError);
    CHECK_THROWS_AS(find_rationalizing_prior(opt, 6), ContractError);
}

TEST_CASE("phase one simplex")
{
    // x1 + x2 = 1, x1 - x2 >= 0.5 -> feasible.
    LpFeasibility ok = find_feasible_point({{1.0, 1.0}}, {1.0}, {{1.0, -1.0}}, 1e-9);
    CHECK(ok.feasible);
    CHECK(ok.x[0] + ok.x[1] == doctest::Approx(1.0));
    CHECK(ok.x[0] - ok.x[1] >= -1e-9);
    // x1 + x2 = 1, -x1 - x2 >= 0 -> infeasible for x >= 0.
    CHECK_FALSE(find_feasible_point({{1.0, 1.0}}, {1.0}, {{-1.0, -1.0}}, 1e-9).feasible);
}
