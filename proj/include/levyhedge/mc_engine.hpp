#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "levyhedge/affine_solver.hpp"
#include "levyhedge/exp_ansatz.hpp"
#include "levyhedge/market_model.hpp"
#include "levyhedge/time_grid.hpp"

namespace levyhedge {

/// Counter-based generator: draw k of stream (seed, index) is a pure function of
/// (seed, index, k), so a path does not depend on how many paths are simulated.
class PathRng {
public:
    using result_type = std::uint64_t;

    PathRng(std::uint64_t seed, std::uint64_t stream);

    result_type operator()() noexcept;
    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~result_type{0}; }

    double uniform() noexcept;       // [0, 1)
    double uniform_open() noexcept;  // (0, 1)
    double normal() noexcept;
    double exponential(double rate) noexcept;

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

struct PathConfig {
    std::size_t n_paths = 1000;
    std::size_t n_steps = 100;
    std::uint64_t seed = 0;
    double horizon = 1.0;
    unsigned threads = 1;  // does not change results
};

struct JumpEvent {
    double time;
    std::size_t atom;
    std::size_t step;  // jump lies in (t_step, t_step+1]
};

struct SimPath {
    std::vector<double> n_vals;   // log price N at nodes
    std::vector<double> xi_vals;  // logspread at nodes
    std::vector<double> dw;       // Brownian increment per step
    std::vector<JumpEvent> jumps;
    std::vector<double> x_vals;  // wealth, filled by simulate_wealth
    std::vector<double> y_vals;  // BSDE value, filled by attach_solution

    Vec2 state(std::size_t k) const { return {n_vals[k], xi_vals[k]}; }
};

struct SimBatch {
    TimeGrid grid;
    std::vector<SimPath> paths;
};

/// Path `index` of the forward process R = (N, Xi) on the uniform grid.
/// Jumps follow the compound Poisson law of nu and hit N and Xi at the same
/// times; Xi moves by its exact OU transition between event times.
SimPath simulate_path(const AffineForward& fwd, const LevyMeasure& nu, const TimeGrid& grid,
                      std::uint64_t seed, std::size_t index);

SimBatch simulate_forward(const AffineForward& fwd, const LevyMeasure& nu, const PathConfig& cfg);
SimBatch simulate_forward(const AffineForward& fwd, const MarketModel& m, const PathConfig& cfg);

using Strategy = std::function<double(double)>;

/// X = x0 + int pi (phi - int psi dnu) dt + sum over jumps of pi psi, with the time
/// integral on the left endpoint of each step.
std::vector<double> wealth_path(const MarketModel& m, const Strategy& strategy,
                                const TimeGrid& grid, const SimPath& path, double x0);

void simulate_wealth(const MarketModel& m, const Strategy& strategy, SimBatch& batch, double x0);

/// Fills y_vals with the closed-form BSDE value along each path.
void attach_solution(const AffineBsdeSolution& sol, SimBatch& batch);

struct MeanEstimate {
    double mean = 0.0;
    double se = 0.0;  // sample std / sqrt(n)
};

/// Mean and standard error; sums are pairwise so the result is independent of
/// how the samples were produced.
MeanEstimate estimate_mean(std::span<const double> samples);
double pairwise_sum(std::span<const double> values);

struct StrategySeries {
    double offset = 0.0;                // strategy is pi* + offset
    std::vector<MeanEstimate> utility;  // U(X_t - Y_t) at checkpoints
    MeanEstimate terminal;              // U(X_T - B)
    MeanEstimate gain_vs_optimal;       // paired terminal difference to pi*
};

struct Diagnostics {
    std::vector<double> checkpoint_times;
    StrategySeries optimal;
    std::vector<StrategySeries> perturbed;
    double residual_rms = 0.0;
    double y0 = 0.0;
    double step = 0.0;

    /// Mean utility under pi* stays within n_se standard errors of its t = 0 value.
    bool martingale_holds(double n_se = 3.0) const;
    /// No perturbation beats pi* at T by more than n_se paired standard errors.
    bool supermartingale_holds(double n_se = 3.0) const;
    /// residual_rms <= 5 sqrt(h) (1 + |Y0|)
    bool residual_within_bound() const;
};

struct OptimalityOptions {
    double x0 = 0.0;
    std::size_t checkpoints = 20;
};

Diagnostics optimality_report(const MarketModel& m, const AffineBsdeSolution& sol,
                              std::span<const double> perturbations, const PathConfig& cfg,
                              const OptimalityOptions& opts = {});

/// RMS over paths of the difference between Y0 reconstructed backwards from the
/// terminal value with Euler sums of the generator and both stochastic integrals,
/// and the closed-form Y0.
double bsde_residual(const AffineBsdeSolution& sol, const MarketModel& m, const SimBatch& batch);
double bsde_residual(const AffineBsdeSolution& sol, const MarketModel& m, const PathConfig& cfg);

double exp_bsde_residual(const ExpBsdeSolution& sol, const LinearGenerator& gen,
                         const AffineForward& fwd, const LevyMeasure& nu, const SimBatch& batch);
double exp_bsde_residual(const ExpBsdeSolution& sol, const LinearGenerator& gen,
                         const AffineForward& fwd, const LevyMeasure& nu, const PathConfig& cfg);

/// Runs fn(i) for i in [0, n) on `threads` workers with a static partition.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace levyhedge
