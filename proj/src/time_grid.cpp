#include "levyhedge/time_grid.hpp"

#include <algorithm>
#include <cmath>

#include "levyhedge/errors.hpp"

namespace levyhedge {

TimeGrid::TimeGrid(double horizon, std::size_t nodes) : horizon_(horizon) {
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw InvalidArgument("time grid: horizon must be positive");
    if (nodes < 2) throw InvalidArgument("time grid: need at least 2 nodes");
    step_ = horizon / static_cast<double>(nodes - 1);
    times_.resize(nodes);
    for (std::size_t k = 0; k < nodes; ++k) times_[k] = step_ * static_cast<double>(k);
    times_.back() = horizon;
}

double TimeGrid::interpolate(std::span<const double> values, double t) const {
    if (values.size() != times_.size())
        throw InvalidArgument("time grid: value count does not match node count");
    if (t <= 0.0) return values.front();
    if (t >= horizon_) return values.back();
    const double pos = t / step_;
    const auto k = std::min(static_cast<std::size_t>(pos), times_.size() - 2);
    const double w = (t - times_[k]) / step_;
    return values[k] + w * (values[k + 1] - values[k]);
}

std::vector<double> cumulative_simpson_from_end(std::span<const double> f, double h) {
    const std::size_t n = f.size();
    if (n == 0) return {};
    std::vector<double> tail(n, 0.0);
    if (n == 1) return tail;
    if (n == 2) {
        tail[0] = 0.5 * h * (f[0] + f[1]);
        return tail;
    }
    // Pairs of cells anchored at the terminal node; the odd node inside each pair
    // takes the three-point rule over its right cell.
    std::size_t k = n - 1;
    while (k >= 2) {
        const std::size_t a = k - 2;
        tail[k - 1] = tail[k] + h / 12.0 * (-f[a] + 8.0 * f[a + 1] + 5.0 * f[k]);
        tail[a] = tail[k] + h / 3.0 * (f[a] + 4.0 * f[a + 1] + f[k]);
        k = a;
    }
    if (k == 1) {
        // leftover first cell [t_0, t_1]
        tail[0] = tail[1] + h / 12.0 * (5.0 * f[0] + 8.0 * f[1] - f[2]);
    }
    return tail;
}

TimeFunction::TimeFunction(double value) : f_([value](double) { return value; }), constant_(true) {
    if (!std::isfinite(value)) throw InvalidArgument("time function: value must be finite");
}

TimeFunction TimeFunction::tabulated(std::vector<double> times, std::vector<double> values) {
    if (times.size() != values.size() || times.empty())
        throw InvalidArgument("time function: tabulated times and values differ in length");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1]))
            throw InvalidArgument("time function: tabulated times must increase");
    for (double v : values)
        if (!std::isfinite(v)) throw InvalidArgument("time function: values must be finite");
    TimeFunction tf;
    tf.constant_ = values.size() == 1;
    tf.f_ = [ts = std::move(times), vs = std::move(values)](double t) {
        if (t <= ts.front()) return vs.front();
        if (t >= ts.back()) return vs.back();
        const auto it = std::upper_bound(ts.begin(), ts.end(), t);
        const auto k = static_cast<std::size_t>(it - ts.begin()) - 1;
        const double w = (t - ts[k]) / (ts[k + 1] - ts[k]);
        return vs[k] + w * (vs[k + 1] - vs[k]);
    };
    return tf;
}

TimeFunction TimeFunction::from(std::function<double(double)> f) {
    TimeFunction tf;
    tf.f_ = std::move(f);
    tf.constant_ = false;
    return tf;
}

}  // namespace levyhedge
