#include "levyhedge/mc_engine.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <thread>

#include "levyhedge/errors.hpp"

namespace levyhedge {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

PathRng::PathRng(std::uint64_t seed, std::uint64_t stream)
    : key_(mix64(seed + kGolden) ^ mix64(mix64(stream) + 0x632BE59BD9B4E019ULL)) {}

PathRng::result_type PathRng::operator()() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
}

double PathRng::uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double PathRng::uniform_open() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double PathRng::normal() noexcept {
    if (has_cached_) {
        has_cached_ = false;
        return cached_normal_;
    }
    // Box-Muller
    const double r = std::sqrt(-2.0 * std::log(uniform_open()));
    const double theta = 2.0 * std::numbers::pi * uniform();
    cached_normal_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
}

double PathRng::exponential(double rate) noexcept { return -std::log(uniform_open()) / rate; }

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = n * w / workers;
        const std::size_t end = n * (w + 1) / workers;
        pool.emplace_back([&, begin, end] {
            try {
                for (std::size_t i = begin; i < end; ++i) fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

namespace {

// Exact transition of dXi = (b - B Xi) dt + Sigma dW over dt, sampled jointly
// with the Brownian increment.
struct OuStep {
    double dt = 0.0;
    double decay = 1.0;      // e^{-B dt}
    double gain = 0.0;       // (1 - e^{-B dt}) / B
    double regress = 0.0;    // Cov(noise, dW) / dt
    double residual_sd = 0.0;

    OuStep() = default;
    OuStep(double mean_reversion, double sigma, double h) : dt(h) {
        if (h <= 0.0) return;
        const double bh = mean_reversion * h;
        decay = std::exp(-bh);
        gain = mean_reversion == 0.0 ? h : -std::expm1(-bh) / mean_reversion;
        const double var = mean_reversion == 0.0
                               ? sigma * sigma * h
                               : -sigma * sigma * std::expm1(-2.0 * bh) / (2.0 * mean_reversion);
        const double cov = sigma * gain;
        regress = cov / h;
        residual_sd = std::sqrt(std::max(0.0, var - cov * cov / h));
    }
};

class ForwardStepper {
public:
    ForwardStepper(const AffineForward& fwd, const LevyMeasure& nu) : fwd_(fwd) {
        if (fwd.spread().coupling != 0.0)
            throw InvalidArgument("simulation needs an uncoupled spread drift (p = 0)");
        nu.require_compatible(fwd.gamma());
        total_mass_ = nu.total_mass();
        cumulative_.reserve(nu.size());
        double acc = 0.0;
        double int_gamma = 0.0;
        double int_gamma_xi = 0.0;
        for (std::size_t i = 0; i < nu.size(); ++i) {
            acc += nu[i].mass;
            cumulative_.push_back(acc);
            int_gamma += fwd.gamma()[i] * nu[i].mass;
            int_gamma_xi += fwd.gamma_xi()[i] * nu[i].mass;
        }
        last_atom_ = nu.size();
        for (std::size_t i = nu.size(); i-- > 0;)
            if (nu[i].mass > 0.0) {
                last_atom_ = i;
                break;
            }
        n_drift_ = fwd.beta() - int_gamma;
        xi_level_ = fwd.spread().b - int_gamma_xi;
    }

    OuStep ou(double dt) const { return OuStep(fwd_.spread().mean_reversion, fwd_.spread().sigma, dt); }

    double total_mass() const noexcept { return total_mass_; }

    // Advances (N, Xi) by dt without jumps; returns the Brownian increment.
    double advance(const OuStep& s, PathRng& rng, double& n, double& xi) const {
        if (s.dt <= 0.0) return 0.0;
        const double dw = std::sqrt(s.dt) * rng.normal();
        const double noise = s.regress * dw + s.residual_sd * rng.normal();
        n += n_drift_ * s.dt;
        xi = xi * s.decay + xi_level_ * s.gain + noise;
        return dw;
    }

    std::size_t pick_atom(PathRng& rng) const {
        const double u = rng.uniform() * total_mass_;
        const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        const auto i = static_cast<std::size_t>(it - cumulative_.begin());
        return std::min(i, last_atom_);
    }

private:
    const AffineForward& fwd_;
    std::vector<double> cumulative_;
    double total_mass_ = 0.0;
    std::size_t last_atom_ = 0;
    double n_drift_ = 0.0;
    double xi_level_ = 0.0;
};

SimPath simulate_with(const ForwardStepper& stepper, const AffineForward& fwd,
                      const TimeGrid& grid, const OuStep& full, std::uint64_t seed,
                      std::size_t index) {
    const std::size_t steps = grid.size() - 1;
    SimPath path;
    path.n_vals.resize(grid.size());
    path.xi_vals.resize(grid.size());
    path.dw.resize(steps);

    PathRng rng(seed, index);
    const double rate = stepper.total_mass();
    double next_jump = rate > 0.0 ? rng.exponential(rate) : std::numeric_limits<double>::infinity();
    double n = fwd.initial_state()[0];
    double xi = fwd.initial_state()[1];
    path.n_vals[0] = n;
    path.xi_vals[0] = xi;

    for (std::size_t k = 0; k < steps; ++k) {
        const double t_end = grid[k + 1];
        double t = grid[k];
        double dw = 0.0;
        bool jumped = false;
        while (next_jump <= t_end) {
            dw += stepper.advance(stepper.ou(next_jump - t), rng, n, xi);
            const std::size_t atom = stepper.pick_atom(rng);
            const Vec2 jump = fwd.jump(atom);
            n += jump[0];
            xi += jump[1];
            path.jumps.push_back({next_jump, atom, k});
            t = next_jump;
            jumped = true;
            next_jump += rng.exponential(rate);
        }
        dw += stepper.advance(jumped ? stepper.ou(t_end - t) : full, rng, n, xi);
        path.dw[k] = dw;
        path.n_vals[k + 1] = n;
        path.xi_vals[k + 1] = xi;
    }
    return path;
}

double root_mean_square(std::span<const double> r) {
    if (r.empty()) return 0.0;
    std::vector<double> sq(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) sq[i] = r[i] * r[i];
    return std::sqrt(pairwise_sum(sq) / static_cast<double>(r.size()));
}

struct StepTerms {
    double z;
    double f;
    double u_integral;
};

// Y0 rebuilt backwards along one path:
//   F(R_T) + sum f h - sum Z dW - sum (sum_jumps U(x) - h int U dnu)
// with all integrands frozen at the left node of each step.
template <class TermsFn>
double reconstruct_initial_value(const SimPath& path, const TimeGrid& grid, double terminal,
                                 std::vector<double>& u, TermsFn&& terms) {
    const double h = grid.step();
    double acc = terminal;
    std::size_t j = 0;
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        const StepTerms st = terms(k, path.state(k), u);
        double jump_sum = 0.0;
        for (; j < path.jumps.size() && path.jumps[j].step == k; ++j)
            jump_sum += u[path.jumps[j].atom];
        acc += st.f * h - st.z * path.dw[k] - (jump_sum - st.u_integral * h);
    }
    return acc;
}

struct AffineStepTable {
    std::vector<double> z;
    std::vector<double> f;
    std::vector<double> u_integral;
    std::vector<std::vector<double>> u;
};

AffineStepTable affine_step_table(const AffineBsdeSolution& sol, const MarketModel& m,
                                  const TimeGrid& grid) {
    const auto& fwd = sol.forward();
    const std::size_t steps = grid.size() - 1;
    AffineStepTable tab;
    tab.z.resize(steps);
    tab.f.resize(steps);
    tab.u_integral.resize(steps);
    tab.u.resize(steps);
    for (std::size_t k = 0; k < steps; ++k) {
        const Vec2 g = sol.gamma(grid[k]);
        const MarkFunction u = jump_control(fwd, g);
        tab.z[k] = dot(g, fwd.diffusion());
        tab.f[k] = generator_value(m, tab.z[k], u, sol.constraint());
        tab.u_integral[k] = integrate(m.measure(), u);
        tab.u[k].assign(u.begin(), u.end());
    }
    return tab;
}

double affine_path_residual(const AffineBsdeSolution& sol, const AffineStepTable& tab,
                            const TimeGrid& grid, const SimPath& path, double y0) {
    std::vector<double> u;
    const double terminal = sol.terminal_value(path.state(grid.size() - 1));
    const double rebuilt = reconstruct_initial_value(
        path, grid, terminal, u, [&](std::size_t k, const Vec2&, std::vector<double>& buf) {
            buf = tab.u[k];
            return StepTerms{tab.z[k], tab.f[k], tab.u_integral[k]};
        });
    return rebuilt - y0;
}

double exp_path_residual(const ExpBsdeSolution& sol, const LinearGenerator& gen,
                         const AffineForward& fwd, const LevyMeasure& nu, const TimeGrid& grid,
                         const std::vector<Vec2>& gammas, const std::vector<double>& omegas,
                         const std::vector<double>& xis, const SimPath& path, double y0) {
    std::vector<double> u(nu.size());
    std::vector<std::vector<double>> jump_factor(grid.size() - 1);
    const double terminal = sol.terminal_value(path.state(grid.size() - 1));
    const double rebuilt = reconstruct_initial_value(
        path, grid, terminal, u, [&](std::size_t k, const Vec2& r, std::vector<double>& buf) {
            const Vec2& g = gammas[k];
            const double scale = std::exp(dot(g, r)) * omegas[k];
            const double y = scale + xis[k];
            const double z = scale * dot(g, fwd.diffusion());
            double u_int = 0.0;
            buf.resize(nu.size());
            for (std::size_t i = 0; i < nu.size(); ++i) {
                buf[i] = scale * std::expm1(dot(g, fwd.jump(i)));
                u_int += buf[i] * nu[i].mass;
            }
            const double t = grid[k];
            return StepTerms{z, gen(t, y, z, u_int), u_int};
        });
    return rebuilt - y0;
}

}  // namespace

SimPath simulate_path(const AffineForward& fwd, const LevyMeasure& nu, const TimeGrid& grid,
                      std::uint64_t seed, std::size_t index) {
    ForwardStepper stepper(fwd, nu);
    return simulate_with(stepper, fwd, grid, stepper.ou(grid.step()), seed, index);
}

SimBatch simulate_forward(const AffineForward& fwd, const LevyMeasure& nu, const PathConfig& cfg) {
    if (cfg.n_paths < 1 || cfg.n_steps < 1)
        throw InvalidArgument("path config: need n_paths >= 1 and n_steps >= 1");
    SimBatch batch{TimeGrid(cfg.horizon, cfg.n_steps + 1), {}};
    batch.paths.resize(cfg.n_paths);
    ForwardStepper stepper(fwd, nu);
    const OuStep full = stepper.ou(batch.grid.step());
    parallel_for(cfg.n_paths, cfg.threads, [&](std::size_t i) {
        batch.paths[i] = simulate_with(stepper, fwd, batch.grid, full, cfg.seed, i);
    });
    return batch;
}

SimBatch simulate_forward(const AffineForward& fwd, const MarketModel& m, const PathConfig& cfg) {
    return simulate_forward(fwd, m.measure(), cfg);
}

std::vector<double> wealth_path(const MarketModel& m, const Strategy& strategy,
                                const TimeGrid& grid, const SimPath& path, double x0) {
    const double drift = m.phi() - integrate(m.measure(), m.psi());
    const double h = grid.step();
    std::vector<double> x(grid.size());
    x[0] = x0;
    double acc = x0;
    std::size_t j = 0;
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        acc += strategy(grid[k]) * drift * h;
        for (; j < path.jumps.size() && path.jumps[j].step == k; ++j)
            acc += strategy(path.jumps[j].time) * m.psi()[path.jumps[j].atom];
        x[k + 1] = acc;
    }
    return x;
}

void simulate_wealth(const MarketModel& m, const Strategy& strategy, SimBatch& batch, double x0) {
    for (auto& p : batch.paths) p.x_vals = wealth_path(m, strategy, batch.grid, p, x0);
}

void attach_solution(const AffineBsdeSolution& sol, SimBatch& batch) {
    const auto& grid = batch.grid;
    for (auto& p : batch.paths) {
        p.y_vals.resize(grid.size());
        for (std::size_t k = 0; k < grid.size(); ++k)
            p.y_vals[k] = sol.evaluate(std::min(grid[k], sol.grid().horizon()), p.state(k)).y;
    }
}

double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 16) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

MeanEstimate estimate_mean(std::span<const double> samples) {
    MeanEstimate e;
    const std::size_t n = samples.size();
    if (n == 0) return e;
    e.mean = pairwise_sum(samples) / static_cast<double>(n);
    if (n < 2) return e;
    std::vector<double> dev(n);
    for (std::size_t i = 0; i < n; ++i) dev[i] = (samples[i] - e.mean) * (samples[i] - e.mean);
    const double var = pairwise_sum(dev) / static_cast<double>(n - 1);
    e.se = std::sqrt(var / static_cast<double>(n));
    return e;
}

bool Diagnostics::martingale_holds(double n_se) const {
    if (optimal.utility.empty()) return false;
    const double base = optimal.utility.front().mean;
    for (std::size_t k = 1; k < optimal.utility.size(); ++k) {
        const auto& e = optimal.utility[k];
        if (std::abs(e.mean - base) > n_se * e.se + 1e-12 * std::abs(base)) return false;
    }
    return true;
}

bool Diagnostics::supermartingale_holds(double n_se) const {
    for (const auto& s : perturbed) {
        const auto& g = s.gain_vs_optimal;
        if (g.mean > n_se * g.se + 1e-12 * std::abs(optimal.terminal.mean)) return false;
    }
    return true;
}

bool Diagnostics::residual_within_bound() const {
    return residual_rms <= 5.0 * std::sqrt(step) * (1.0 + std::abs(y0));
}

Diagnostics optimality_report(const MarketModel& m, const AffineBsdeSolution& sol,
                              std::span<const double> perturbations, const PathConfig& cfg,
                              const OptimalityOptions& opts) {
    if (cfg.n_paths < 1 || cfg.n_steps < 1)
        throw InvalidArgument("path config: need n_paths >= 1 and n_steps >= 1");
    if (std::abs(cfg.horizon - sol.grid().horizon()) > 1e-12 * sol.grid().horizon())
        throw InvalidArgument("optimality_report: path horizon differs from the solution's");
    const auto& fwd = sol.forward();
    const TimeGrid grid(cfg.horizon, cfg.n_steps + 1);
    const std::size_t nodes = grid.size();
    const double h = grid.step();
    const double alpha = m.alpha();
    const double drift = m.phi() - integrate(m.measure(), m.psi());

    std::vector<std::size_t> checkpoints;
    const std::size_t n_check = std::max<std::size_t>(opts.checkpoints, 1);
    for (std::size_t j = 0; j <= n_check; ++j) {
        const auto k = static_cast<std::size_t>(
            std::llround(static_cast<double>(j) * static_cast<double>(cfg.n_steps) /
                         static_cast<double>(n_check)));
        if (checkpoints.empty() || checkpoints.back() != k) checkpoints.push_back(k);
    }

    std::vector<double> pi_node(nodes);
    std::vector<Vec2> gamma_node(nodes);
    std::vector<double> omega_node(nodes);
    for (std::size_t k = 0; k < nodes; ++k) {
        pi_node[k] = sol.pi_star(grid[k]);
        gamma_node[k] = sol.gamma(grid[k]);
        omega_node[k] = sol.omega(grid[k]);
    }
    const AffineStepTable tab = affine_step_table(sol, m, grid);
    const double y0 = sol.evaluate(0.0, fwd.initial_state()).y;

    std::vector<double> offsets{0.0};
    offsets.insert(offsets.end(), perturbations.begin(), perturbations.end());
    const std::size_t n_strat = offsets.size();
    const std::size_t n_cp = checkpoints.size();

    // utility[(path * n_strat + s) * n_cp + c]
    std::vector<double> utility(cfg.n_paths * n_strat * n_cp);
    std::vector<double> residual(cfg.n_paths);

    ForwardStepper stepper(fwd, m.measure());
    const OuStep full = stepper.ou(h);
    parallel_for(cfg.n_paths, cfg.threads, [&](std::size_t i) {
        const SimPath path = simulate_with(stepper, fwd, grid, full, cfg.seed, i);
        residual[i] = affine_path_residual(sol, tab, grid, path, y0);
        for (std::size_t s = 0; s < n_strat; ++s) {
            const double delta = offsets[s];
            double x = opts.x0;
            std::size_t j = 0;
            std::size_t c = 0;
            double* out = &utility[(i * n_strat + s) * n_cp];
            for (std::size_t k = 0; k < nodes; ++k) {
                if (c < n_cp && checkpoints[c] == k) {
                    const Vec2 r = path.state(k);
                    const double y = k + 1 == nodes ? sol.terminal_value(r)
                                                    : dot(gamma_node[k], r) + omega_node[k];
                    out[c++] = -std::exp(-alpha * (x - y));
                }
                if (k + 1 == nodes) break;
                x += (pi_node[k] + delta) * drift * h;
                for (; j < path.jumps.size() && path.jumps[j].step == k; ++j)
                    x += (sol.pi_star(path.jumps[j].time) + delta) *
                         m.psi()[path.jumps[j].atom];
            }
        }
    });

    Diagnostics d;
    d.step = h;
    d.y0 = y0;
    d.residual_rms = root_mean_square(residual);
    for (std::size_t k : checkpoints) d.checkpoint_times.push_back(grid[k]);

    std::vector<double> column(cfg.n_paths);
    auto sample = [&](std::size_t s, std::size_t c) {
        for (std::size_t i = 0; i < cfg.n_paths; ++i)
            column[i] = utility[(i * n_strat + s) * n_cp + c];
        return estimate_mean(column);
    };
    for (std::size_t s = 0; s < n_strat; ++s) {
        StrategySeries series;
        series.offset = offsets[s];
        for (std::size_t c = 0; c < n_cp; ++c) series.utility.push_back(sample(s, c));
        series.terminal = series.utility.back();
        for (std::size_t i = 0; i < cfg.n_paths; ++i)
            column[i] = utility[(i * n_strat + s) * n_cp + n_cp - 1] -
                        utility[(i * n_strat) * n_cp + n_cp - 1];
        series.gain_vs_optimal = estimate_mean(column);
        if (s == 0)
            d.optimal = std::move(series);
        else
            d.perturbed.push_back(std::move(series));
    }
    return d;
}

double bsde_residual(const AffineBsdeSolution& sol, const MarketModel& m, const SimBatch& batch) {
    const AffineStepTable tab = affine_step_table(sol, m, batch.grid);
    const double y0 = sol.evaluate(0.0, sol.forward().initial_state()).y;
    std::vector<double> r(batch.paths.size());
    for (std::size_t i = 0; i < r.size(); ++i)
        r[i] = affine_path_residual(sol, tab, batch.grid, batch.paths[i], y0);
    return root_mean_square(r);
}

double bsde_residual(const AffineBsdeSolution& sol, const MarketModel& m, const PathConfig& cfg) {
    if (cfg.n_paths < 1 || cfg.n_steps < 1)
        throw InvalidArgument("path config: need n_paths >= 1 and n_steps >= 1");
    const auto& fwd = sol.forward();
    const TimeGrid grid(cfg.horizon, cfg.n_steps + 1);
    const AffineStepTable tab = affine_step_table(sol, m, grid);
    const double y0 = sol.evaluate(0.0, fwd.initial_state()).y;
    ForwardStepper stepper(fwd, m.measure());
    const OuStep full = stepper.ou(grid.step());
    std::vector<double> r(cfg.n_paths);
    parallel_for(cfg.n_paths, cfg.threads, [&](std::size_t i) {
        const SimPath path = simulate_with(stepper, fwd, grid, full, cfg.seed, i);
        r[i] = affine_path_residual(sol, tab, grid, path, y0);
    });
    return root_mean_square(r);
}

namespace {

struct ExpNodeTable {
    std::vector<Vec2> gamma;
    std::vector<double> omega;
    std::vector<double> xi;
};

ExpNodeTable exp_node_table(const ExpBsdeSolution& sol, const TimeGrid& grid) {
    ExpNodeTable t;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        t.gamma.push_back(sol.gamma(grid[k]));
        t.omega.push_back(sol.omega(grid[k]));
        t.xi.push_back(sol.xi(grid[k]));
    }
    return t;
}

}  // namespace

double exp_bsde_residual(const ExpBsdeSolution& sol, const LinearGenerator& gen,
                         const AffineForward& fwd, const LevyMeasure& nu, const SimBatch& batch) {
    const auto tab = exp_node_table(sol, batch.grid);
    const double y0 = evaluate_exp_solution(sol, fwd, 0.0, fwd.initial_state()).y;
    std::vector<double> r(batch.paths.size());
    for (std::size_t i = 0; i < r.size(); ++i)
        r[i] = exp_path_residual(sol, gen, fwd, nu, batch.grid, tab.gamma, tab.omega, tab.xi,
                                 batch.paths[i], y0);
    return root_mean_square(r);
}

double exp_bsde_residual(const ExpBsdeSolution& sol, const LinearGenerator& gen,
                         const AffineForward& fwd, const LevyMeasure& nu, const PathConfig& cfg) {
    if (cfg.n_paths < 1 || cfg.n_steps < 1)
        throw InvalidArgument("path config: need n_paths >= 1 and n_steps >= 1");
    const TimeGrid grid(cfg.horizon, cfg.n_steps + 1);
    const auto tab = exp_node_table(sol, grid);
    const double y0 = evaluate_exp_solution(sol, fwd, 0.0, fwd.initial_state()).y;
    ForwardStepper stepper(fwd, nu);
    const OuStep full = stepper.ou(grid.step());
    std::vector<double> r(cfg.n_paths);
    parallel_for(cfg.n_paths, cfg.threads, [&](std::size_t i) {
        const SimPath path = simulate_with(stepper, fwd, grid, full, cfg.seed, i);
        r[i] = exp_path_residual(sol, gen, fwd, nu, grid, tab.gamma, tab.omega, tab.xi, path, y0);
    });
    return root_mean_square(r);
}

}  // namespace levyhedge
