#include "levyhedge/affine_solver.hpp"

#include <cmath>
#include <sstream>

#include "levyhedge/errors.hpp"

namespace levyhedge {

AffineForward::AffineForward(double beta, MarkFunction gamma, SpreadDynamics spread, Vec2 r0)
    : beta_(beta), gamma_(std::move(gamma)), spread_(std::move(spread)), r0_(r0) {
    gamma_xi_ = spread_.gamma_xi.size() == 0 ? MarkFunction::constant(gamma_.size(), 0.0)
                                             : spread_.gamma_xi;
    if (gamma_xi_.size() != gamma_.size())
        throw InvalidArgument("forward: gamma_xi must have one value per atom");
    spread_.gamma_xi = gamma_xi_;
    if (!(spread_.sigma >= 0.0) || !std::isfinite(spread_.sigma))
        throw InvalidArgument("forward: Sigma must be finite and nonnegative");
    for (double v : {beta_, spread_.b, spread_.mean_reversion, spread_.coupling, r0_[0], r0_[1]})
        if (!std::isfinite(v)) throw InvalidArgument("forward: coefficients must be finite");
    for (std::size_t i = 0; i < gamma_.size(); ++i)
        if (!std::isfinite(gamma_[i]) || !std::isfinite(gamma_xi_[i]))
            throw InvalidArgument("forward: jump coefficients must be finite");
}

AffineForward AffineForward::from_market(const MarketModel& m, SpreadDynamics spread, Vec2 r0) {
    auto lp = to_log_params(m);
    return AffineForward(lp.beta, std::move(lp.gamma), std::move(spread), r0);
}

Mat2 AffineForward::drift_matrix() const noexcept {
    return {Vec2{0.0, 0.0}, Vec2{spread_.coupling, -spread_.mean_reversion}};
}

void AffineForward::require_consistent(const MarketModel& m) const {
    const auto lp = to_log_params(m);
    m.measure().require_compatible(gamma_);
    auto close = [](double x, double y) { return std::abs(x - y) <= 1e-10 * (1.0 + std::abs(y)); };
    for (std::size_t i = 0; i < gamma_.size(); ++i) {
        if (!close(gamma_[i], lp.gamma[i]))
            throw InvalidArgument("forward: gamma is not log(1 + psi) of the market");
    }
    if (!close(beta_, lp.beta)) {
        std::ostringstream os;
        os.precision(17);
        os << "forward: beta = " << beta_ << " but the market implies " << lp.beta;
        throw InvalidArgument(os.str());
    }
}

AffineClaim claim_from_log(double coeff, double offset) { return {{coeff, -coeff}, offset}; }

Vec2 gamma_closed_form(const AffineForward& fwd, const Vec2& a, double horizon, double t) {
    // B^T = [[0, p], [0, q]] with q = -B:
    //   Gamma2 = a2 e^{q tau},  Gamma1 = a1 + p a2 (e^{q tau} - 1) / q,  tau = T - t
    const double tau = horizon - t;
    const double q = -fwd.spread().mean_reversion;
    const double p = fwd.spread().coupling;
    const double g2 = a[1] * std::exp(q * tau);
    const double growth = q == 0.0 ? tau : std::expm1(q * tau) / q;
    return {a[0] + p * a[1] * growth, g2};
}

std::vector<Vec2> solve_gamma(const AffineForward& fwd, const AffineClaim& claim,
                              const TimeGrid& grid) {
    std::vector<Vec2> out(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k)
        out[k] = gamma_closed_form(fwd, claim.a, grid.horizon(), grid[k]);
    return out;
}

MarkFunction jump_control(const AffineForward& fwd, const Vec2& gamma) {
    std::vector<double> u(fwd.gamma().size());
    for (std::size_t i = 0; i < u.size(); ++i)
        u[i] = gamma[0] * fwd.gamma()[i] + gamma[1] * fwd.gamma_xi()[i];
    return MarkFunction(std::move(u));
}

std::vector<double> strategy_path(const MarketModel& m, const AffineForward& fwd,
                                  const AffineClaim& claim, const ConstraintSet& c_set,
                                  const TimeGrid& grid) {
    fwd.require_consistent(m);
    const auto gammas = solve_gamma(fwd, claim, grid);
    std::vector<double> pi(grid.size());
    MinimizeOptions opts;
    for (std::size_t k = grid.size(); k-- > 0;) {
        pi[k] = minimize(m, jump_control(fwd, gammas[k]), c_set, opts).pi_star;
        opts.start = pi[k];
    }
    return pi;
}

std::vector<double> solve_omega(const MarketModel& m, const AffineForward& fwd,
                                const AffineClaim& claim, std::span<const double> pi_star,
                                const TimeGrid& grid) {
    if (pi_star.size() != grid.size())
        throw InvalidArgument("solve_omega: strategy path does not match the grid");
    const auto gammas = solve_gamma(fwd, claim, grid);
    const Vec2 drift = fwd.drift();
    const Vec2 diff = fwd.diffusion();
    std::vector<double> rhs(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const Vec2& g = gammas[k];
        const double z = dot(g, diff);
        rhs[k] = dot(g, drift) + lambda_value(m, jump_control(fwd, g), pi_star[k]) +
                 0.5 * m.alpha() * z * z;
    }
    auto omega = cumulative_simpson_from_end(rhs, grid.step());
    for (double& w : omega) w += claim.v;
    omega.back() = claim.v;
    return omega;
}

AffineBsdeSolution::AffineBsdeSolution(AffineForward fwd, AffineClaim claim, TimeGrid grid,
                                       std::vector<double> omega, std::vector<double> pi_star,
                                       ConstraintSet c_set)
    : fwd_(std::move(fwd)),
      claim_(claim),
      grid_(std::move(grid)),
      omega_(std::move(omega)),
      pi_star_(std::move(pi_star)),
      c_set_(c_set) {
    if (omega_.size() != grid_.size() || pi_star_.size() != grid_.size())
        throw InvalidArgument("affine solution: node arrays do not match the grid");
}

Vec2 AffineBsdeSolution::gamma(double t) const {
    return gamma_closed_form(fwd_, claim_.a, grid_.horizon(), t);
}

double AffineBsdeSolution::z(double t) const { return dot(gamma(t), fwd_.diffusion()); }

BsdeValue AffineBsdeSolution::evaluate(double t, const Vec2& state) const {
    return evaluate_solution(*this, fwd_, t, state);
}

AffineBsdeSolution solve_affine(const MarketModel& m, const AffineForward& fwd,
                                const AffineClaim& claim, const ConstraintSet& c_set,
                                const TimeGrid& grid) {
    auto pi = strategy_path(m, fwd, claim, c_set, grid);
    auto omega = solve_omega(m, fwd, claim, pi, grid);
    return AffineBsdeSolution(fwd, claim, grid, std::move(omega), std::move(pi), c_set);
}

BsdeValue evaluate_solution(const AffineBsdeSolution& sol, const AffineForward& fwd, double t,
                            const Vec2& state) {
    const double horizon = sol.grid().horizon();
    if (!(t >= 0.0 && t <= horizon)) {
        std::ostringstream os;
        os << "invalid time " << t << " outside [0, " << horizon << "]";
        throw InvalidArgument(os.str());
    }
    if (t == horizon) {
        return {sol.terminal_value(state), dot(sol.claim().a, fwd.diffusion()),
                jump_control(fwd, sol.claim().a)};
    }
    const Vec2 g = sol.gamma(t);
    return {dot(g, state) + sol.omega(t), dot(g, fwd.diffusion()), jump_control(fwd, g)};
}

}  // namespace levyhedge
