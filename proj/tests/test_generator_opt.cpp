#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "levyhedge/errors.hpp"
#include "levyhedge/generator_opt.hpp"
#include "oracles.hpp"

using namespace levyhedge;
using doctest::Approx;

namespace {

// psi = (0.1, -0.1) with masses (2, 3); stored sorted as (-0.1, 0.1)
MarketModel mixed_model(double phi = 0.05, double alpha = 2.0) {
    const LevyMeasure nu{{0.1, 2.0}, {-0.1, 3.0}};
    return MarketModel(nu, nu.marks(), phi, alpha, 1.0);
}

MarketModel single_atom(double phi = 0.1) {
    const LevyMeasure nu{{0.1, 2.0}};
    return MarketModel(nu, nu.marks(), phi, 1.0, 1.0);
}

const double kSingleRoot = -std::log(1.0 - 0.1 / (0.1 * 2.0)) / (1.0 * 0.1);

}  // namespace

TEST_CASE("lambda values") {
    const auto m = mixed_model();
    const MarkFunction zero = MarkFunction::constant(2, 0.0);
    CHECK(lambda_value(m, zero, 0.0) == 0.0);
    const MarkFunction u{0.3, -0.2};
    CHECK(lambda_value(m, u, 0.0) == Approx(entropic_norm(m.measure(), 2.0, u)).epsilon(1e-15));
    const double oracle = oracle::lambda({-0.1, 0.1}, {3.0, 2.0}, {0.0, 0.0}, 0.05, 2.0, 1.0);
    CHECK(lambda_value(m, zero, 1.0) == Approx(oracle).epsilon(1e-12));
    CHECK(lambda_value(m, zero, 1.0) == Approx(0.000834890318236609551).epsilon(1e-12));
}

TEST_CASE("lambda first derivative") {
    const auto m = mixed_model();
    CHECK(lambda_d1(m, MarkFunction::constant(2, 0.0), 0.0) == Approx(-0.05).epsilon(1e-15));
    const auto s = single_atom();
    CHECK(std::abs(lambda_d1(s, MarkFunction{0.0}, kSingleRoot)) < 1e-15);
    CHECK(std::abs(lambda_d1(s, MarkFunction{0.0}, 6.93147)) < 1e-6);
}

TEST_CASE("lambda second derivative") {
    const LevyMeasure nu{{0.1, 2.0}, {-0.1, 3.0}};
    const MarketModel flat(nu, MarkFunction::constant(2, 0.0), 0.0, 1.0, 1.0);
    CHECK(lambda_d2(flat, MarkFunction{0.4, -0.3}, 2.0) == 0.0);
    CHECK(lambda_d2(single_atom(), MarkFunction{0.0}, 0.0) == Approx(0.02).epsilon(1e-15));
}

TEST_CASE("derivatives match finite differences on random inputs") {
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> pi_d(-5.0, 5.0);
    for (int rep = 0; rep < 1000; ++rep) {
        const auto rm = oracle::random_market(gen, rep % 2 == 0);
        const auto& m = rm.model;
        const auto u = oracle::random_u(gen, rm.psi.size(), 1.0);
        const double pi = pi_d(gen);
        auto lam = [&](double p) { return oracle::lambda(rm.psi, rm.mass, {u.begin(), u.end()}, m.phi(), m.alpha(), p); };

        const double h1 = 1e-6;
        const double fd1 = (lam(pi + h1) - lam(pi - h1)) / (2 * h1);
        const double d1 = lambda_d1(m, u, pi);
        double scale = std::abs(d1) + std::abs(m.phi());
        for (std::size_t i = 0; i < rm.psi.size(); ++i) scale += std::abs(rm.psi[i]) * rm.mass[i];
        CHECK(std::abs(d1 - fd1) <= 1e-6 * scale);

        const double h2 = 1e-3;
        const double fd2 = (lam(pi + h2) - 2 * lam(pi) + lam(pi - h2)) / (h2 * h2);
        const double d2 = lambda_d2(m, u, pi);
        CHECK(d2 >= -1e-12);
        CHECK(std::abs(d2 - fd2) <= 1e-4 * std::abs(d2));
    }
}

TEST_CASE("minimizer bounds") {
    const auto m = mixed_model();
    const auto b = minimizer_bounds(m, MarkFunction::constant(2, 0.0));
    CHECK(b.pos_level == Approx(0.05).epsilon(1e-15));
    CHECK(b.neg_level == Approx(0.05).epsilon(1e-15));
    CHECK(b.upper == Approx(2.0 * 0.05 / (2.0 * 3.0 * 0.0025)).epsilon(1e-12));
    CHECK(b.upper == Approx(6.6666666666666667).epsilon(1e-12));
    CHECK(b.lower == Approx(-10.0).epsilon(1e-12));

    const auto b0 = minimizer_bounds(mixed_model(0.0), MarkFunction::constant(2, 0.0));
    CHECK(b0.lower == 0.0);
    CHECK(b0.upper == 0.0);
    CHECK(minimize(mixed_model(0.0), MarkFunction::constant(2, 0.0),
                   ConstraintSet::all_reals())
              .pi_star == 0.0);

    CHECK_THROWS_AS(minimizer_bounds(single_atom(), MarkFunction{0.0}), BoundsUnavailable);
}

TEST_CASE("minimizer lies within the bounds on random mixed models") {
    std::mt19937_64 gen(23);
    for (int rep = 0; rep < 500; ++rep) {
        const auto rm = oracle::random_market(gen, true);
        const auto u = oracle::random_u(gen, rm.psi.size(), 2.0);
        const auto b = minimizer_bounds(rm.model, u);
        const double pi = minimize(rm.model, u, ConstraintSet::all_reals()).pi_star;
        CHECK(b.lower <= pi);
        CHECK(pi <= b.upper);
    }
}

TEST_CASE("single-atom minimizer matches the closed form and a grid search") {
    const auto s = single_atom();
    const auto r = minimize(s, MarkFunction{0.0}, ConstraintSet::all_reals());
    auto f = [](double p) { return oracle::lambda({0.1}, {2.0}, {0.0}, 0.1, 1.0, p); };
    auto df = [](double p) { return oracle::lambda_slope({0.1}, {2.0}, {0.0}, 0.1, 1.0, p); };
    const double grid = oracle::grid_then_bisect(f, df, 0.0, 20.0, 1e-4);
    CHECK(r.pi_star == Approx(kSingleRoot).epsilon(1e-12));
    CHECK(std::abs(r.pi_star - grid) < 1e-9);
    CHECK(std::abs(r.pi_star - 6.931471805599453) < 1e-9);
    CHECK(r.lambda_min == Approx(-0.30685281944005469).epsilon(1e-12));
    CHECK(generator_value(s, 0.0, MarkFunction{0.0}, ConstraintSet::all_reals()) ==
          Approx(r.lambda_min).epsilon(1e-15));
}

TEST_CASE("mixed-sign minimizer matches a bisection oracle") {
    const auto m = mixed_model();
    const auto r = minimize(m, MarkFunction::constant(2, 0.0), ConstraintSet::all_reals());
    auto slope = [](double p) {
        return 0.2 * (1 - std::exp(-0.2 * p)) - 0.3 * (1 - std::exp(0.2 * p)) - 0.05;
    };
    const double oracle = oracle::bisect(slope, 0.0, 2.0);
    CHECK(std::abs(r.pi_star - oracle) < 1e-10);
    CHECK(r.pi_star == Approx(0.494303726445425078).epsilon(1e-12));
}

TEST_CASE("zero claim and zero drift give a zero strategy") {
    const auto m = mixed_model(0.0);
    const auto r = minimize(m, MarkFunction::constant(2, 0.0), ConstraintSet::all_reals());
    CHECK(r.pi_star == 0.0);
    CHECK(r.lambda_min == 0.0);
    CHECK(generator_value(m, 0.0, MarkFunction::constant(2, 0.0), ConstraintSet::all_reals()) == 0.0);
    CHECK(generator_value(mixed_model(0.0, 2.0), 1.0, MarkFunction::constant(2, 0.0),
                          ConstraintSet::all_reals()) == Approx(1.0).epsilon(1e-15));
}

TEST_CASE("uniqueness: different starts give the same minimizer") {
    std::mt19937_64 gen(31);
    std::uniform_real_distribution<double> st(-50.0, 50.0);
    for (int rep = 0; rep < 300; ++rep) {
        const auto rm = oracle::random_market(gen, true);
        const auto u = oracle::random_u(gen, rm.psi.size(), 1.0);
        MinimizeOptions a, b;
        a.start = st(gen);
        b.start = st(gen);
        const double p1 = minimize(rm.model, u, ConstraintSet::all_reals(), a).pi_star;
        const double p2 = minimize(rm.model, u, ConstraintSet::all_reals(), b).pi_star;
        CHECK(std::abs(p1 - p2) <= 1e-10);
        CHECK(lambda_value(rm.model, u, p1) <= lambda_value(rm.model, u, 0.0) + 1e-15);
    }
}

TEST_CASE("single-signed well-posed models") {
    std::mt19937_64 gen(37);
    std::uniform_real_distribution<double> frac(-2.0, 0.95);
    for (int rep = 0; rep < 200; ++rep) {
        auto rm = oracle::random_market(gen, false, 3);
        // force all marks positive or negative
        const double sign = rep % 2 ? 1.0 : -1.0;
        std::vector<JumpAtom> atoms;
        for (const auto& a : rm.model.measure().atoms()) atoms.push_back({sign * std::abs(a.x), a.mass});
        const LevyMeasure nu(atoms);
        const double ipsi = integrate(nu, nu.marks());
        const MarketModel m(nu, nu.marks(), frac(gen) * ipsi, rm.model.alpha(), 1.0);
        REQUIRE(check_wellposed(m).passes);
        const auto u = oracle::random_u(gen, 3, 0.5);
        const auto r = minimize(m, u, ConstraintSet::all_reals());
        CHECK(std::abs(lambda_d1(m, u, r.pi_star)) <= 1e-9 * (1.0 + std::abs(m.phi())) +
                                                         1e-12 * lambda_d2(m, u, r.pi_star) *
                                                             std::max(1.0, std::abs(r.pi_star)));
        CHECK(r.lambda_min <= lambda_value(m, u, 0.0) + 1e-15);
    }
}

TEST_CASE("ill-posed single-signed model is rejected and lambda decreases without bound") {
    const auto bad = single_atom(0.3);
    CHECK_FALSE(check_wellposed(bad).passes);
    const MarkFunction u{0.0};
    CHECK_THROWS_AS(minimize(bad, u, ConstraintSet::all_reals()), NotWellPosed);
    CHECK_THROWS_AS(generator_value(bad, 0.0, u, ConstraintSet::all_reals()), NotWellPosed);
    const double l1 = lambda_value(bad, u, 10.0);
    const double l2 = lambda_value(bad, u, 100.0);
    const double l3 = lambda_value(bad, u, 1000.0);
    CHECK(l1 > l2);
    CHECK(l2 > l3);
    // slope tends to int psi dnu - phi = -0.1
    CHECK(lambda_d1(bad, u, 1000.0) == Approx(-0.1).epsilon(1e-12));
}

TEST_CASE("interval constraint clamps the unconstrained minimizer") {
    const auto m = mixed_model();
    const MarkFunction zero = MarkFunction::constant(2, 0.0);
    const auto c = ConstraintSet::interval(-1.0, 0.3);
    const auto r = minimize(m, zero, c);
    CHECK(r.pi_star == 0.3);
    auto f = [&](double p) { return oracle::lambda({-0.1, 0.1}, {3.0, 2.0}, {0, 0}, 0.05, 2.0, p); };
    double best = 1e300;
    for (double p = -1.0; p <= 0.3 + 1e-12; p += 1e-4) best = std::min(best, f(p));
    CHECK(r.lambda_min <= best + 1e-15);
    const auto inside = minimize(m, zero, ConstraintSet::interval(-1.0, 2.0));
    CHECK(inside.pi_star == Approx(0.494303726445425078).epsilon(1e-12));
}

TEST_CASE("degenerate market with zero drift") {
    const LevyMeasure nu{{0.1, 2.0}};
    const MarketModel flat(nu, MarkFunction{0.0}, 0.0, 1.0, 1.0);
    const auto r = minimize(flat, MarkFunction{0.3}, ConstraintSet::all_reals());
    CHECK(r.pi_star == 0.0);
    CHECK(r.lambda_min == Approx(entropic_norm(nu, 1.0, MarkFunction{0.3})).epsilon(1e-15));
    const MarketModel drift(nu, MarkFunction{0.0}, 0.2, 1.0, 1.0);
    CHECK_THROWS_AS(minimize(drift, MarkFunction{0.0}, ConstraintSet::all_reals()), NotWellPosed);
}

TEST_CASE("selection bound on the squared strategy") {
    std::mt19937_64 gen(41);
    for (int rep = 0; rep < 20; ++rep) {
        const auto rm = oracle::random_market(gen, true);
        const double bound = 1.0;
        const auto sb = selection_bound_constants(rm.model, bound);
        for (int k = 0; k < 100; ++k) {
            const auto u = oracle::random_u(gen, rm.psi.size(), bound);
            const double pi = minimize(rm.model, u, ConstraintSet::all_reals()).pi_star;
            CHECK(pi * pi <= sb.K + sb.K_prime * l2_norm_sq(rm.model.measure(), u));
        }
    }
}
