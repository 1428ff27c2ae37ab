#pragma once

#include <limits>
#include <string>

#include "levyhedge/levy_measure.hpp"

namespace levyhedge {

/// Pure-jump market dS = S_- (phi dt + int psi dN~) with exponential utility
/// of risk aversion alpha over horizon [0, T]. Coefficients are constant in time.
class MarketModel {
public:
    MarketModel(LevyMeasure measure, MarkFunction psi, double phi, double alpha,
                double horizon);

    const LevyMeasure& measure() const noexcept { return measure_; }
    const MarkFunction& psi() const noexcept { return psi_; }
    double phi() const noexcept { return phi_; }
    double alpha() const noexcept { return alpha_; }
    double horizon() const noexcept { return horizon_; }

private:
    LevyMeasure measure_;
    MarkFunction psi_;
    double phi_;
    double alpha_;
    double horizon_;
};

/// Classical-exponential parameterization N = log S: dN = beta dt + int gamma dN~.
struct LogPriceParams {
    double beta;
    MarkFunction gamma;
};

LogPriceParams to_log_params(const MarketModel& m);
MarketModel from_log_params(const LogPriceParams& lp, const LevyMeasure& measure, double alpha,
                            double horizon);

/// Closed strategy constraint containing 0: either all of R or [lower, upper].
class ConstraintSet {
public:
    enum class Kind { AllReals, Interval };

    static ConstraintSet all_reals() { return ConstraintSet(); }
    static ConstraintSet interval(double lower, double upper);

    Kind kind() const noexcept { return kind_; }
    double lower() const noexcept { return lower_; }
    double upper() const noexcept { return upper_; }
    bool contains(double pi) const noexcept { return pi >= lower_ && pi <= upper_; }
    double clamp(double pi) const noexcept;

private:
    ConstraintSet() = default;
    Kind kind_ = Kind::AllReals;
    double lower_ = -std::numeric_limits<double>::infinity();
    double upper_ = std::numeric_limits<double>::infinity();
};

struct SupportClass {
    bool has_positive = false;  // nu(psi > 0) > 0
    bool has_negative = false;  // nu(psi < 0) > 0

    bool mixed() const noexcept { return has_positive && has_negative; }
    bool degenerate() const noexcept { return !has_positive && !has_negative; }
};

SupportClass classify_support(const MarketModel& m);

struct WellPosednessReport {
    bool passes;
    std::string reason;
};

/// Drift versus jump-intensity conditions under which the generator's
/// minimization over the strategy admits a minimum.
WellPosednessReport check_wellposed(const MarketModel& m);

}  // namespace levyhedge
