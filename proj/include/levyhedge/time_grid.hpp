#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace levyhedge {

/// Uniform grid 0 = t_0 < ... < t_{n-1} = T.
class TimeGrid {
public:
    TimeGrid(double horizon, std::size_t nodes);

    double horizon() const noexcept { return horizon_; }
    std::size_t size() const noexcept { return times_.size(); }
    double step() const noexcept { return step_; }
    double operator[](std::size_t k) const { return times_[k]; }
    std::span<const double> times() const noexcept { return times_; }

    /// Linear interpolation of node values at time t (clamped to [0, T]).
    double interpolate(std::span<const double> values, double t) const;

private:
    double horizon_;
    double step_;
    std::vector<double> times_;
};

/// Tail integrals I_k = int_{t_k}^{T} f dt from node values on a uniform grid,
/// composite Simpson on pairs of cells with a three-point rule for the odd cell.
std::vector<double> cumulative_simpson_from_end(std::span<const double> values, double step);

/// Continuous function of time; constant, tabulated (linear interpolation) or arbitrary.
class TimeFunction {
public:
    TimeFunction() : TimeFunction(0.0) {}
    TimeFunction(double value);  // NOLINT: constants convert implicitly
    static TimeFunction tabulated(std::vector<double> times, std::vector<double> values);
    static TimeFunction from(std::function<double(double)> f);

    double operator()(double t) const { return f_(t); }
    bool is_constant() const noexcept { return constant_; }

private:
    std::function<double(double)> f_;
    bool constant_ = false;
};

}  // namespace levyhedge
