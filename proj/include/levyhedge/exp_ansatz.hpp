#pragma once

#include <vector>

#include "levyhedge/affine_solver.hpp"
#include "levyhedge/time_grid.hpp"

namespace levyhedge {

/// f(t, y, z, u) = c_y(t) y + c_z(t) z + c_u(t) int u dnu + c(t)
struct LinearGenerator {
    TimeFunction c_y;
    TimeFunction c_z;
    TimeFunction c_u;
    TimeFunction c;

    double operator()(double t, double y, double z, double u_integral) const {
        return c_y(t) * y + c_z(t) * z + c_u(t) * u_integral + c(t);
    }
};

/// F(r) = exp(<a, r>) w + v
struct ExpClaim {
    Vec2 a;
    double w;
    double v;
};

class ExpBsdeSolution {
public:
    ExpBsdeSolution(AffineForward fwd, ExpClaim claim, TimeGrid grid, std::vector<double> omega,
                    std::vector<double> xi);

    const TimeGrid& grid() const noexcept { return grid_; }
    const ExpClaim& claim() const noexcept { return claim_; }
    std::span<const double> omega_nodes() const noexcept { return omega_; }
    std::span<const double> xi_nodes() const noexcept { return xi_; }

    Vec2 gamma(double t) const;
    double omega(double t) const { return grid_.interpolate(omega_, t); }
    double xi(double t) const { return grid_.interpolate(xi_, t); }
    double terminal_value(const Vec2& state) const;

    BsdeValue evaluate(double t, const Vec2& state) const;

private:
    AffineForward fwd_;
    ExpClaim claim_;
    TimeGrid grid_;
    std::vector<double> omega_;
    std::vector<double> xi_;
};

/// Exponent rate of omega: omega(t) = w exp(int_t^T kappa).
double omega_rate(const AffineForward& fwd, const LevyMeasure& nu, const LinearGenerator& gen,
                  const Vec2& gamma, double t);

ExpBsdeSolution solve_exp(const AffineForward& fwd, const LevyMeasure& nu,
                          const LinearGenerator& gen, const ExpClaim& claim, const TimeGrid& grid);

/// Y = e^{<Gamma,R>} omega + xi, Z = e^{<Gamma,R>} omega <Gamma,Sigma>,
/// U(x) = e^{<Gamma,R>} omega (e^{<Gamma,gamma_vec(x)>} - 1).
BsdeValue evaluate_exp_solution(const ExpBsdeSolution& sol, const AffineForward& fwd, double t,
                                const Vec2& state);

}  // namespace levyhedge
