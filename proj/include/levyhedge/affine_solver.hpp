#pragma once

#include <array>
#include <vector>

#include "levyhedge/generator_opt.hpp"
#include "levyhedge/levy_measure.hpp"
#include "levyhedge/market_model.hpp"
#include "levyhedge/time_grid.hpp"

namespace levyhedge {

using Vec2 = std::array<double, 2>;
using Mat2 = std::array<Vec2, 2>;

inline double dot(const Vec2& a, const Vec2& b) { return a[0] * b[0] + a[1] * b[1]; }

/// Logspread dynamics dXi = (b + p N - B Xi) dt + Sigma dW + int gamma_xi dN~.
/// The coupling p is zero in the canonical model.
struct SpreadDynamics {
    double b = 0.0;
    double mean_reversion = 0.0;  // B
    double sigma = 0.0;           // Sigma
    MarkFunction gamma_xi;        // empty means no spread jumps
    double coupling = 0.0;        // p
};

/// Forward process R = (N, Xi) with dR = beta dt + B R dt + Sigma dW + int gamma dN~,
/// where N = log S is the log price and Xi the logspread to the illiquid asset.
class AffineForward {
public:
    AffineForward(double beta, MarkFunction gamma, SpreadDynamics spread, Vec2 r0);

    /// Builds the log-price leg from the market's (phi, psi) parameterization.
    static AffineForward from_market(const MarketModel& m, SpreadDynamics spread, Vec2 r0);

    Vec2 drift() const noexcept { return {beta_, spread_.b}; }
    /// [[0, 0], [p, -B]]
    Mat2 drift_matrix() const noexcept;
    Vec2 diffusion() const noexcept { return {0.0, spread_.sigma}; }
    const MarkFunction& gamma() const noexcept { return gamma_; }
    const MarkFunction& gamma_xi() const noexcept { return gamma_xi_; }
    Vec2 jump(std::size_t atom) const { return {gamma_[atom], gamma_xi_[atom]}; }
    const SpreadDynamics& spread() const noexcept { return spread_; }
    double beta() const noexcept { return beta_; }
    Vec2 initial_state() const noexcept { return r0_; }

    /// Throws unless gamma = log(1 + psi) and beta matches the market's drift.
    void require_consistent(const MarketModel& m) const;

private:
    double beta_;
    MarkFunction gamma_;
    MarkFunction gamma_xi_;
    SpreadDynamics spread_;
    Vec2 r0_;
};

/// Terminal payoff F(n, s) = <a, (n, s)> + v.
struct AffineClaim {
    Vec2 a;
    double v;
};

/// h(I) = coeff log I + offset on the illiquid asset I = exp(N - Xi).
AffineClaim claim_from_log(double coeff, double offset);

/// Gamma(t) solving -dGamma/dt = B^T Gamma, Gamma(T) = a, in closed form.
Vec2 gamma_closed_form(const AffineForward& fwd, const Vec2& a, double horizon, double t);

std::vector<Vec2> solve_gamma(const AffineForward& fwd, const AffineClaim& claim,
                              const TimeGrid& grid);

/// Jump control U_t(x) = <Gamma(t), (gamma(x), gamma_xi(x))>.
MarkFunction jump_control(const AffineForward& fwd, const Vec2& gamma);

/// Minimizer of the generator at every grid node for u_t = <Gamma(t), gamma_vec>.
std::vector<double> strategy_path(const MarketModel& m, const AffineForward& fwd,
                                  const AffineClaim& claim, const ConstraintSet& c_set,
                                  const TimeGrid& grid);

/// omega(t) = v + int_t^T rhs ds with rhs the driver of the affine ansatz.
std::vector<double> solve_omega(const MarketModel& m, const AffineForward& fwd,
                                const AffineClaim& claim, std::span<const double> pi_star,
                                const TimeGrid& grid);

struct BsdeValue {
    double y;
    double z;
    MarkFunction u;
};

class AffineBsdeSolution {
public:
    AffineBsdeSolution(AffineForward fwd, AffineClaim claim, TimeGrid grid,
                       std::vector<double> omega, std::vector<double> pi_star,
                       ConstraintSet c_set = ConstraintSet::all_reals());

    const TimeGrid& grid() const noexcept { return grid_; }
    const AffineClaim& claim() const noexcept { return claim_; }
    const AffineForward& forward() const noexcept { return fwd_; }
    const ConstraintSet& constraint() const noexcept { return c_set_; }
    std::span<const double> omega_nodes() const noexcept { return omega_; }
    std::span<const double> pi_star_nodes() const noexcept { return pi_star_; }

    Vec2 gamma(double t) const;
    double omega(double t) const { return grid_.interpolate(omega_, t); }
    double pi_star(double t) const { return grid_.interpolate(pi_star_, t); }
    double z(double t) const;

    /// Y = <Gamma, R> + omega, Z = <Gamma, Sigma>, U(x) = <Gamma, gamma_vec(x)>.
    BsdeValue evaluate(double t, const Vec2& state) const;
    double terminal_value(const Vec2& state) const { return dot(claim_.a, state) + claim_.v; }

private:
    AffineForward fwd_;
    AffineClaim claim_;
    TimeGrid grid_;
    std::vector<double> omega_;
    std::vector<double> pi_star_;
    ConstraintSet c_set_;
};

AffineBsdeSolution solve_affine(const MarketModel& m, const AffineForward& fwd,
                                const AffineClaim& claim, const ConstraintSet& c_set,
                                const TimeGrid& grid);

/// Y, Z, U at (t, state); Sigma and the jump coefficients are taken from fwd.
/// At t = T, Y is the claim payoff exactly.
BsdeValue evaluate_solution(const AffineBsdeSolution& sol, const AffineForward& fwd, double t,
                            const Vec2& state);

}  // namespace levyhedge
