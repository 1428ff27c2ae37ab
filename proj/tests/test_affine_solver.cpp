#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "levyhedge/affine_solver.hpp"
#include "levyhedge/errors.hpp"
#include "oracles.hpp"

using namespace levyhedge;
using doctest::Approx;

namespace {

MarketModel demo_market(double phi = 0.05) {
    const LevyMeasure nu{{-0.10, 3.0}, {-0.05, 2.0}, {0.05, 2.0}, {0.10, 2.0}};
    return MarketModel(nu, nu.marks(), phi, 2.0, 1.0);
}

SpreadDynamics demo_spread() {
    return {0.02, 1.0, 0.2, MarkFunction{0.02, 0.0, 0.0, -0.01}, 0.0};
}

// pi*(s) by bisection on an independent slope, for u = <Gamma(s), gamma_vec>
double oracle_pi(const MarketModel& m, const std::vector<double>& u) {
    std::vector<double> psi(m.psi().begin(), m.psi().end()), mass;
    for (const auto& a : m.measure().atoms()) mass.push_back(a.mass);
    auto slope = [&](double p) { return oracle::lambda_slope(psi, mass, u, m.phi(), m.alpha(), p); };
    return oracle::bisect(slope, -100.0, 100.0, 1e-16);
}

}  // namespace

TEST_CASE("time grid") {
    const TimeGrid g(0.3, 7);
    CHECK(g.size() == 7);
    CHECK(g[0] == 0.0);
    CHECK(g[6] == 0.3);
    CHECK(g.step() == Approx(0.05).epsilon(1e-15));
    const std::vector<double> v{0, 1, 2, 3, 4, 5, 6};
    CHECK(g.interpolate(v, 0.075) == Approx(1.5).epsilon(1e-14));
    CHECK(g.interpolate(v, -1.0) == 0.0);
    CHECK(g.interpolate(v, 1.0) == 6.0);
    CHECK_THROWS_AS(TimeGrid(0.0, 5), InvalidArgument);
    CHECK_THROWS_AS(TimeGrid(1.0, 1), InvalidArgument);
}

TEST_CASE("tail integrals are exact for quadratics and fourth order for smooth integrands") {
    for (std::size_t n : {2, 3, 4, 5, 10, 11}) {
        const TimeGrid g(2.0, n);
        std::vector<double> f;
        for (double t : g.times()) f.push_back(3.0 * t * t - t + 0.5);
        const auto tail = cumulative_simpson_from_end(f, g.step());
        for (std::size_t k = 0; k < n; ++k) {
            const double t = g[k];
            const double exact = (8.0 - 2.0 + 1.0) - (t * t * t - 0.5 * t * t + 0.5 * t);
            if (n > 2) CHECK(tail[k] == Approx(exact).epsilon(1e-13).scale(1.0));
        }
        CHECK(tail[n - 1] == 0.0);
    }
    double prev = 0.0;
    for (std::size_t n : {41, 81, 161, 321}) {
        const TimeGrid g(1.0, n);
        std::vector<double> f;
        for (double t : g.times()) f.push_back(std::exp(2.0 * t) * std::cos(3.0 * t));
        const auto tail = cumulative_simpson_from_end(f, g.step());
        double err = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double t = g[k];
            const double exact = oracle::adaptive_simpson(
                [](double s) { return std::exp(2.0 * s) * std::cos(3.0 * s); }, t, 1.0, 1e-15);
            err = std::max(err, std::abs(tail[k] - exact));
        }
        if (prev > 0.0) CHECK(prev / err > 12.0);
        prev = err;
    }
}

TEST_CASE("claim from a log payoff") {
    const auto c1 = claim_from_log(1.0, 0.0);
    CHECK(c1.a[0] == 1.0);
    CHECK(c1.a[1] == -1.0);
    CHECK(c1.v == 0.0);
    const auto c2 = claim_from_log(0.0, 5.0);
    CHECK(c2.a[0] == 0.0);
    CHECK(c2.a[1] == 0.0);
    CHECK(c2.v == 5.0);
    const auto c3 = claim_from_log(-2.0, 1.0);
    CHECK(c3.a[0] == -2.0);
    CHECK(c3.a[1] == 2.0);
    CHECK(c3.v == 1.0);
}

TEST_CASE("Gamma closed form") {
    const auto m = demo_market();
    SpreadDynamics flat = demo_spread();
    flat.mean_reversion = 0.0;
    const auto f0 = AffineForward::from_market(m, flat, {0.0, 0.0});
    const TimeGrid grid(1.0, 11);
    for (const auto& g : solve_gamma(f0, claim_from_log(1.0, 0.0), grid)) {
        CHECK(g[0] == 1.0);
        CHECK(g[1] == -1.0);
    }
    const auto f1 = AffineForward::from_market(m, demo_spread(), {0.0, 0.0});
    const Vec2 g0 = gamma_closed_form(f1, {1.0, -1.0}, 1.0, 0.0);
    CHECK(g0[0] == 1.0);
    CHECK(g0[1] == Approx(-0.36787944117144233).epsilon(1e-15));
    const Vec2 gT = gamma_closed_form(f1, {1.0, -1.0}, 1.0, 1.0);
    CHECK(gT[0] == 1.0);
    CHECK(gT[1] == -1.0);
}

TEST_CASE("Gamma agrees with RK4 integration of the backward linear system") {
    const auto m = demo_market();
    for (double B : {0.0, 0.7, 2.5, -0.3}) {
        for (double p : {0.0, 0.4}) {
            SpreadDynamics sp = demo_spread();
            sp.mean_reversion = B;
            sp.coupling = p;
            const auto fwd = AffineForward::from_market(m, sp, {0.0, 0.0});
            const Vec2 a{0.7, -1.3};
            const double T = 1.5;
            // -dGamma/dt = B^T Gamma with B = [[0,0],[p,-B]]; integrate in tau = T - t
            auto rhs = [&](double, const oracle::State& g) {
                return oracle::State{p * g[1], -B * g[1]};
            };
            for (double t : {0.0, 0.4, 1.1}) {
                const auto ref = oracle::rk4(rhs, {a[0], a[1]}, 0.0, T - t, 2000);
                const Vec2 g = gamma_closed_form(fwd, a, T, t);
                CHECK(std::abs(g[0] - ref[0]) <= 1e-10);
                CHECK(std::abs(g[1] - ref[1]) <= 1e-10);
            }
        }
    }
}

TEST_CASE("forward consistency with the market") {
    const auto m = demo_market();
    const auto fwd = AffineForward::from_market(m, demo_spread(), {0.0, 0.0});
    CHECK_NOTHROW(fwd.require_consistent(m));
    const AffineForward off(fwd.beta() + 0.1, fwd.gamma(), demo_spread(), {0.0, 0.0});
    CHECK_THROWS_AS(off.require_consistent(m), InvalidArgument);
    CHECK_THROWS_AS(AffineForward(0.0, fwd.gamma(), {0, 0, -0.1, {}, 0}, {0, 0}), InvalidArgument);
}

TEST_CASE("strategy path") {
    const auto grid = TimeGrid(1.0, 101);
    {
        const auto m = demo_market(0.0);
        const auto fwd = AffineForward::from_market(m, demo_spread(), {0.0, 0.0});
        for (double pi : strategy_path(m, fwd, claim_from_log(0.0, 3.0), ConstraintSet::all_reals(), grid))
            CHECK(pi == 0.0);
    }
    const auto m = demo_market();
    SpreadDynamics no_jumps = demo_spread();
    no_jumps.gamma_xi = MarkFunction::constant(4, 0.0);
    const auto fwd0 = AffineForward::from_market(m, no_jumps, {0.0, 0.0});
    const auto path0 = strategy_path(m, fwd0, claim_from_log(1.0, 0.0), ConstraintSet::all_reals(), grid);
    for (double pi : path0) CHECK(pi == Approx(path0.front()).epsilon(1e-12));

    const auto fwd = AffineForward::from_market(m, demo_spread(), {0.0, 0.0});
    const auto claim = claim_from_log(1.0, 0.0);
    const auto path = strategy_path(m, fwd, claim, ConstraintSet::all_reals(), grid);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const auto u = jump_control(fwd, gamma_closed_form(fwd, claim.a, 1.0, grid[k]));
        const auto b = minimizer_bounds(m, u);
        CHECK(b.lower <= path[k]);
        CHECK(path[k] <= b.upper);
        CHECK(path[k] == Approx(oracle_pi(m, {u.begin(), u.end()})).epsilon(1e-10));
    }

    const auto bad = MarketModel(LevyMeasure{{0.1, 2.0}}, MarkFunction{0.1}, 0.3, 1.0, 1.0);
    const auto fb = AffineForward::from_market(bad, {0, 1, 0.2, MarkFunction{0.0}, 0}, {0, 0});
    CHECK_THROWS_AS(strategy_path(bad, fb, claim, ConstraintSet::all_reals(), grid), NotWellPosed);
}

TEST_CASE("omega against an adaptive quadrature oracle") {
    const auto m = demo_market();
    const auto fwd = AffineForward::from_market(m, demo_spread(), {0.0, 0.0});
    const auto claim = claim_from_log(1.0, 0.25);
    const TimeGrid grid(1.0, 2001);
    const auto sol = solve_affine(m, fwd, claim, ConstraintSet::all_reals(), grid);
    CHECK(sol.omega_nodes().back() == 0.25);

    std::vector<double> psi(m.psi().begin(), m.psi().end()), mass;
    for (const auto& a : m.measure().atoms()) mass.push_back(a.mass);
    const double B = 1.0, sigma = 0.2;
    auto rhs = [&](double s) {
        const double g1 = 1.0, g2 = -std::exp(-B * (1.0 - s));
        std::vector<double> u;
        for (std::size_t i = 0; i < psi.size(); ++i)
            u.push_back(g1 * std::log1p(psi[i]) + g2 * fwd.gamma_xi()[i]);
        const double pi = oracle_pi(m, u);
        const double z = g2 * sigma;
        return g1 * fwd.beta() + g2 * 0.02 + oracle::lambda(psi, mass, u, m.phi(), m.alpha(), pi) +
               0.5 * m.alpha() * z * z;
    };
    for (std::size_t k : {0, 1, 500, 1999}) {
        const double ref = 0.25 + oracle::adaptive_simpson(rhs, grid[k], 1.0, 1e-12);
        CHECK(std::abs(sol.omega_nodes()[k] - ref) <= 1e-8);
    }
}

TEST_CASE("zero claim without drift has a vanishing solution") {
    const auto m = demo_market(0.0);
    const auto fwd = AffineForward::from_market(m, demo_spread(), {0.0, 0.0});
    const auto sol = solve_affine(m, fwd, claim_from_log(0.0, 0.0), ConstraintSet::all_reals(),
                                  TimeGrid(1.0, 201));
    for (double w : sol.omega_nodes()) CHECK(w == 0.0);
    for (double p : sol.pi_star_nodes()) CHECK(p == 0.0);
}

TEST_CASE("evaluate the affine solution") {
    const auto m = demo_market();
    const auto fwd = AffineForward::from_market(m, demo_spread(), {0.0, 0.0});
    const auto claim = claim_from_log(1.0, 0.0);
    const auto sol = solve_affine(m, fwd, claim, ConstraintSet::all_reals(), TimeGrid(1.0, 401));
    CHECK(evaluate_solution(sol, fwd, 1.0, {2.0, 1.0}).y == 1.0);
    CHECK(sol.evaluate(0.0, {0.0, 0.0}).z == Approx(-0.2 * std::exp(-1.0)).epsilon(1e-15));
    CHECK(sol.evaluate(0.0, {0.0, 0.0}).z == Approx(-0.073575888234288).epsilon(1e-12));
    CHECK_THROWS_AS(evaluate_solution(sol, fwd, 1.5, {0, 0}), InvalidArgument);
    CHECK_THROWS_AS(evaluate_solution(sol, fwd, -0.1, {0, 0}), InvalidArgument);

    SpreadDynamics nj = demo_spread();
    nj.gamma_xi = MarkFunction::constant(4, 0.0);
    const auto f0 = AffineForward::from_market(m, nj, {0.0, 0.0});
    const auto s0 = solve_affine(m, f0, claim_from_log(2.0, 0.0), ConstraintSet::all_reals(),
                                 TimeGrid(1.0, 101));
    for (double t : {0.0, 0.3, 0.99}) {
        const auto v = s0.evaluate(t, {0.4, -0.2});
        for (std::size_t i = 0; i < 4; ++i) CHECK(v.u[i] == 2.0 * f0.gamma()[i]);
    }

    std::mt19937_64 gen(1);
    std::normal_distribution<double> d(0.0, 3.0);
    for (int rep = 0; rep < 100; ++rep) {
        const Vec2 r{d(gen), d(gen)};
        CHECK(sol.evaluate(1.0, r).y == r[0] - r[1]);
    }
}

TEST_CASE("strategy stays bounded") {
    const auto m = demo_market();
    const auto fwd = AffineForward::from_market(m, demo_spread(), {0.0, 0.0});
    const auto sol = solve_affine(m, fwd, claim_from_log(1.0, 0.0), ConstraintSet::all_reals(),
                                  TimeGrid(1.0, 201));
    double u_bound = 0.0, sup_pi = 0.0;
    for (std::size_t k = 0; k < sol.grid().size(); ++k) {
        const auto v = sol.evaluate(sol.grid()[k], {0.0, 0.0});
        u_bound = std::max(u_bound, sup_norm(m.measure(), v.u));
        sup_pi = std::max(sup_pi, std::abs(sol.pi_star_nodes()[k]));
    }
    const auto sb = selection_bound_constants(m, u_bound);
    double l2max = 0.0;
    for (std::size_t k = 0; k < sol.grid().size(); ++k)
        l2max = std::max(l2max, l2_norm_sq(m.measure(), sol.evaluate(sol.grid()[k], {0, 0}).u));
    CHECK(std::isfinite(sup_pi));
    CHECK(sup_pi * sup_pi <= sb.K + sb.K_prime * l2max);
}

TEST_CASE("interval constraints are respected along the path") {
    const auto m = demo_market();
    const auto fwd = AffineForward::from_market(m, demo_spread(), {0.0, 0.0});
    const auto c = ConstraintSet::interval(-0.5, 1.0);
    const auto sol = solve_affine(m, fwd, claim_from_log(1.0, 0.0), c, TimeGrid(1.0, 101));
    for (double p : sol.pi_star_nodes()) {
        CHECK(p <= 1.0);
        CHECK(p >= -0.5);
    }
    CHECK(sol.pi_star_nodes().front() == 1.0);
}
