#include "levyhedge/generator_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "levyhedge/errors.hpp"

namespace levyhedge {

double lambda_value(const MarketModel& m, const MarkFunction& u, double pi) {
    const auto& nu = m.measure();
    nu.require_compatible(u);
    double s = 0.0;
    for (std::size_t i = 0; i < nu.size(); ++i)
        s += g_alpha(m.alpha(), u[i] - pi * m.psi()[i]) * nu[i].mass;
    return s - pi * m.phi();
}

double lambda_d1(const MarketModel& m, const MarkFunction& u, double pi) {
    const auto& nu = m.measure();
    nu.require_compatible(u);
    double s = 0.0;
    for (std::size_t i = 0; i < nu.size(); ++i) {
        if (nu[i].mass == 0.0) continue;
        const double psi = m.psi()[i];
        // psi (1 - e^{alpha (u - pi psi)}) = -psi expm1(alpha (u - pi psi))
        s -= psi * std::expm1(m.alpha() * (u[i] - pi * psi)) * nu[i].mass;
    }
    return s - m.phi();
}

double lambda_d2(const MarketModel& m, const MarkFunction& u, double pi) {
    const auto& nu = m.measure();
    nu.require_compatible(u);
    double s = 0.0;
    for (std::size_t i = 0; i < nu.size(); ++i) {
        if (nu[i].mass == 0.0) continue;
        const double psi = m.psi()[i];
        s += m.alpha() * psi * psi * std::exp(m.alpha() * (u[i] - pi * psi)) * nu[i].mass;
    }
    return s;
}

namespace {

struct TailMasses {
    double pos_level = 0.0;  // C
    double neg_level = 0.0;  // c
    double pos_mass = 0.0;   // nu(psi > C)
    double neg_mass = 0.0;   // nu(psi < -c)
};

TailMasses tail_masses(const MarketModel& m) {
    const auto& nu = m.measure();
    double max_pos = 0.0;
    double max_neg = 0.0;
    for (std::size_t i = 0; i < nu.size(); ++i) {
        if (nu[i].mass <= 0.0) continue;
        max_pos = std::max(max_pos, m.psi()[i]);
        max_neg = std::max(max_neg, -m.psi()[i]);
    }
    if (max_pos <= 0.0 || max_neg <= 0.0)
        throw BoundsUnavailable("minimizer bounds need jumps of both signs");
    TailMasses t;
    t.pos_level = 0.5 * max_pos;
    t.neg_level = 0.5 * max_neg;
    for (std::size_t i = 0; i < nu.size(); ++i) {
        if (m.psi()[i] > t.pos_level) t.pos_mass += nu[i].mass;
        if (m.psi()[i] < -t.neg_level) t.neg_mass += nu[i].mass;
    }
    return t;
}

// 3 b / C + 2 |phi| / (alpha nu C^2) and sqrt(2) / (sqrt(alpha nu) C)
struct BoundTerms {
    double fixed;
    double per_root_norm;
};

BoundTerms bound_terms(double level, double tail_mass, double alpha, double phi,
                       double u_sup) {
    return {3.0 * u_sup / level + 2.0 * std::abs(phi) / (alpha * tail_mass * level * level),
            std::sqrt(2.0) / (std::sqrt(alpha * tail_mass) * level)};
}

}  // namespace

MinimizerBounds minimizer_bounds(const MarketModel& m, const MarkFunction& u) {
    const TailMasses t = tail_masses(m);
    const double u_sup = sup_norm(m.measure(), u);
    const double root_norm = std::sqrt(entropic_norm(m.measure(), m.alpha(), u));
    const auto lo = bound_terms(t.pos_level, t.pos_mass, m.alpha(), m.phi(), u_sup);
    const auto hi = bound_terms(t.neg_level, t.neg_mass, m.alpha(), m.phi(), u_sup);
    return {-(lo.fixed + lo.per_root_norm * root_norm),
            hi.fixed + hi.per_root_norm * root_norm, t.neg_level, t.pos_level};
}

SelectionBound selection_bound_constants(const MarketModel& m, double u_bound) {
    const TailMasses t = tail_masses(m);
    const auto lo = bound_terms(t.pos_level, t.pos_mass, m.alpha(), m.phi(), u_bound);
    const auto hi = bound_terms(t.neg_level, t.neg_mass, m.alpha(), m.phi(), u_bound);
    const double fixed = std::max(lo.fixed, hi.fixed);
    const double slope = std::max(lo.per_root_norm, hi.per_root_norm);
    const double k_eq = equivalence_constant(m.measure(), m.alpha(), u_bound);
    // (P + Q sqrt(|u|_alpha))^2 <= 2 P^2 + 2 Q^2 K_eq |u|^2_{L2}
    return {2.0 * fixed * fixed, 2.0 * slope * slope * k_eq};
}

namespace {

// Grows [lo, hi] geometrically away from 0 until lambda' changes sign.
std::pair<double, double> expand_bracket(const MarketModel& m, const MarkFunction& u,
                                         double direction) {
    double inner = 0.0;
    double step = 1.0;
    for (int k = 0; k < 1100; ++k) {
        const double outer = direction * step;
        const double g = lambda_d1(m, u, outer);
        if (direction > 0 ? g >= 0.0 : g <= 0.0)
            return direction > 0 ? std::pair{inner, outer} : std::pair{outer, inner};
        inner = outer;
        step *= 2.0;
        if (!std::isfinite(step)) break;
    }
    throw NumericalFailure("minimize: could not bracket the root of lambda'");
}

}  // namespace

MinimizeResult minimize(const MarketModel& m, const MarkFunction& u, const ConstraintSet& c_set,
                        const MinimizeOptions& opts) {
    m.measure().require_compatible(u);
    const auto report = check_wellposed(m);
    if (!report.passes) throw NotWellPosed("not well-posed: " + report.reason);

    const SupportClass sc = classify_support(m);
    if (sc.degenerate()) {
        // lambda is constant when psi vanishes and phi = 0
        const double pi = c_set.clamp(0.0);
        return {pi, lambda_value(m, u, pi), 0};
    }

    const double tol = opts.grad_tol * (1.0 + std::abs(m.phi()));
    double lo;
    double hi;
    if (sc.mixed()) {
        const auto b = minimizer_bounds(m, u);
        lo = b.lower;
        hi = b.upper;
        // rounding guard: the bounds are exact in exact arithmetic
        for (double w = 1.0; lambda_d1(m, u, lo) > 0.0; w *= 2.0) lo -= w;
        for (double w = 1.0; lambda_d1(m, u, hi) < 0.0; w *= 2.0) hi += w;
    } else {
        const double g0 = lambda_d1(m, u, 0.0);
        if (std::abs(g0) <= tol) return {c_set.clamp(0.0), lambda_value(m, u, c_set.clamp(0.0)), 0};
        std::tie(lo, hi) = expand_bracket(m, u, g0 < 0.0 ? 1.0 : -1.0);
    }

    double x = std::clamp(opts.start.value_or(0.0), lo, hi);
    bool converged = false;
    int iter = 0;
    for (; iter < opts.max_iter; ++iter) {
        const double g = lambda_d1(m, u, x);
        if (std::abs(g) <= tol) {
            converged = true;
            break;
        }
        if (g < 0.0)
            lo = x;
        else
            hi = x;
        if (hi - lo <= opts.width_tol * std::max(1.0, std::abs(x))) {
            converged = true;
            break;
        }
        const double next = x - g / lambda_d2(m, u, x);
        x = (next > lo && next < hi) ? next : 0.5 * (lo + hi);
    }
    if (!converged) throw NumericalFailure("minimize: no convergence within iteration limit");

    const double pi = c_set.clamp(x);
    return {pi, lambda_value(m, u, pi), iter};
}

double generator_value(const MarketModel& m, double z, const MarkFunction& u,
                       const ConstraintSet& c_set) {
    return minimize(m, u, c_set).lambda_min + 0.5 * m.alpha() * z * z;
}

}  // namespace levyhedge
