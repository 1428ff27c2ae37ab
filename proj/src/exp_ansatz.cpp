#include "levyhedge/exp_ansatz.hpp"

#include <cmath>
#include <sstream>

#include "levyhedge/errors.hpp"

namespace levyhedge {

ExpBsdeSolution::ExpBsdeSolution(AffineForward fwd, ExpClaim claim, TimeGrid grid,
                                 std::vector<double> omega, std::vector<double> xi)
    : fwd_(std::move(fwd)),
      claim_(claim),
      grid_(std::move(grid)),
      omega_(std::move(omega)),
      xi_(std::move(xi)) {
    if (omega_.size() != grid_.size() || xi_.size() != grid_.size())
        throw InvalidArgument("exp solution: node arrays do not match the grid");
}

Vec2 ExpBsdeSolution::gamma(double t) const {
    return gamma_closed_form(fwd_, claim_.a, grid_.horizon(), t);
}

double ExpBsdeSolution::terminal_value(const Vec2& state) const {
    return std::exp(dot(claim_.a, state)) * claim_.w + claim_.v;
}

BsdeValue ExpBsdeSolution::evaluate(double t, const Vec2& state) const {
    return evaluate_exp_solution(*this, fwd_, t, state);
}

double omega_rate(const AffineForward& fwd, const LevyMeasure& nu, const LinearGenerator& gen,
                  const Vec2& g, double t) {
    const double z = dot(g, fwd.diffusion());
    double compensator = 0.0;  // int (e^{<G,gam>} - 1 - <G,gam>) dnu
    double jump_mean = 0.0;    // int (e^{<G,gam>} - 1) dnu
    for (std::size_t i = 0; i < nu.size(); ++i) {
        const double x = dot(g, fwd.jump(i));
        const double em1 = std::expm1(x);
        compensator += (em1 - x) * nu[i].mass;
        jump_mean += em1 * nu[i].mass;
    }
    return 0.5 * z * z + dot(g, fwd.drift()) + compensator + gen.c_y(t) + gen.c_z(t) * z +
           gen.c_u(t) * jump_mean;
}

ExpBsdeSolution solve_exp(const AffineForward& fwd, const LevyMeasure& nu,
                          const LinearGenerator& gen, const ExpClaim& claim,
                          const TimeGrid& grid) {
    nu.require_compatible(fwd.gamma());
    const auto gammas = solve_gamma(fwd, AffineClaim{claim.a, 0.0}, grid);
    const std::size_t n = grid.size();

    std::vector<double> kappa(n);
    std::vector<double> cy(n);
    for (std::size_t k = 0; k < n; ++k) {
        kappa[k] = omega_rate(fwd, nu, gen, gammas[k], grid[k]);
        cy[k] = gen.c_y(grid[k]);
    }
    const auto kappa_tail = cumulative_simpson_from_end(kappa, grid.step());
    const auto cy_tail = cumulative_simpson_from_end(cy, grid.step());

    // xi(t) = e^{Cy(t)} (v + int_t^T c(s) e^{-Cy(s)} ds), Cy(t) = int_t^T c_y
    std::vector<double> source(n);
    for (std::size_t k = 0; k < n; ++k) source[k] = gen.c(grid[k]) * std::exp(-cy_tail[k]);
    const auto source_tail = cumulative_simpson_from_end(source, grid.step());

    std::vector<double> omega(n);
    std::vector<double> xi(n);
    for (std::size_t k = 0; k < n; ++k) {
        omega[k] = claim.w * std::exp(kappa_tail[k]);
        xi[k] = std::exp(cy_tail[k]) * (claim.v + source_tail[k]);
    }
    omega.back() = claim.w;
    xi.back() = claim.v;
    return ExpBsdeSolution(fwd, claim, grid, std::move(omega), std::move(xi));
}

BsdeValue evaluate_exp_solution(const ExpBsdeSolution& sol, const AffineForward& fwd, double t,
                                const Vec2& state) {
    const double horizon = sol.grid().horizon();
    if (!(t >= 0.0 && t <= horizon)) {
        std::ostringstream os;
        os << "invalid time " << t << " outside [0, " << horizon << "]";
        throw InvalidArgument(os.str());
    }
    const Vec2 g = t == horizon ? sol.claim().a : sol.gamma(t);
    const double omega = t == horizon ? sol.claim().w : sol.omega(t);
    const double xi = t == horizon ? sol.claim().v : sol.xi(t);
    const double scale = std::exp(dot(g, state)) * omega;
    std::vector<double> u(fwd.gamma().size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = scale * std::expm1(dot(g, fwd.jump(i)));
    return {scale + xi, scale * dot(g, fwd.diffusion()), MarkFunction(std::move(u))};
}

}  // namespace levyhedge
