#pragma once

#include <optional>

#include "levyhedge/levy_measure.hpp"
#include "levyhedge/market_model.hpp"

namespace levyhedge {

// Jump part of the generator as a function of the strategy:
//   lambda(pi) = int g_alpha(u - pi psi) dnu - pi phi
double lambda_value(const MarketModel& m, const MarkFunction& u, double pi);
double lambda_d1(const MarketModel& m, const MarkFunction& u, double pi);
double lambda_d2(const MarketModel& m, const MarkFunction& u, double pi);

/// A priori bracket for the minimizer of lambda when jumps of both signs occur.
/// `pos_level` (C) and `neg_level` (c) are the thresholds in nu(psi > C) and
/// nu(psi < -c); they are chosen as half of the extreme positive/negative psi.
struct MinimizerBounds {
    double lower;
    double upper;
    double neg_level;
    double pos_level;
};

/// Throws BoundsUnavailable when psi is single-signed on the support.
MinimizerBounds minimizer_bounds(const MarketModel& m, const MarkFunction& u);

struct MinimizeOptions {
    std::optional<double> start;  // initial Newton iterate, clamped into the bracket
    double grad_tol = 1e-12;      // |lambda'| <= grad_tol * (1 + |phi|)
    double width_tol = 1e-14;     // relative bracket width
    int max_iter = 500;
};

struct MinimizeResult {
    double pi_star;
    double lambda_min;
    int iterations;
};

/// argmin over c_set of lambda. Safeguarded Newton on lambda' inside a sign-change
/// bracket, bisection when the Newton step leaves it. Interval constraints clamp
/// the unconstrained root.
MinimizeResult minimize(const MarketModel& m, const MarkFunction& u, const ConstraintSet& c_set,
                        const MinimizeOptions& opts = {});

/// f(z, u) = min_pi lambda(pi) + alpha z^2 / 2.
double generator_value(const MarketModel& m, double z, const MarkFunction& u,
                       const ConstraintSet& c_set);

/// Constants with |pi*|^2 <= K + K' |u|^2_{L2(nu)} for every u with |u| <= u_bound,
/// obtained from the minimizer bounds and the norm-equivalence constant.
struct SelectionBound {
    double K;
    double K_prime;
};

SelectionBound selection_bound_constants(const MarketModel& m, double u_bound);

}  // namespace levyhedge
