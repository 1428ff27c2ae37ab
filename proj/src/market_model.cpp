#include "levyhedge/market_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "levyhedge/errors.hpp"

namespace levyhedge {

MarketModel::MarketModel(LevyMeasure measure, MarkFunction psi, double phi, double alpha,
                         double horizon)
    : measure_(std::move(measure)),
      psi_(std::move(psi)),
      phi_(phi),
      alpha_(alpha),
      horizon_(horizon) {
    measure_.require_compatible(psi_);
    if (!std::isfinite(phi_)) throw InvalidModel("market: phi must be finite");
    if (!(alpha_ > 0.0) || !std::isfinite(alpha_))
        throw InvalidModel("market: risk aversion alpha must be positive");
    if (!(horizon_ > 0.0) || !std::isfinite(horizon_))
        throw InvalidModel("market: horizon must be positive");
    for (std::size_t i = 0; i < psi_.size(); ++i) {
        if (!std::isfinite(psi_[i])) throw InvalidModel("market: psi must be finite");
        if (measure_[i].mass > 0.0 && psi_[i] <= -1.0) {
            std::ostringstream os;
            os << "market: psi(" << measure_[i].x << ") = " << psi_[i]
               << " <= -1 would make the price non-positive";
            throw InvalidModel(os.str());
        }
    }
}

LogPriceParams to_log_params(const MarketModel& m) {
    const auto& nu = m.measure();
    std::vector<double> gamma(nu.size());
    double correction = 0.0;
    for (std::size_t i = 0; i < nu.size(); ++i) {
        const double psi = m.psi()[i];
        if (psi <= -1.0) throw InvalidModel("to_log_params: psi <= -1");
        gamma[i] = std::log1p(psi);
        // e^gamma - 1 - gamma = psi - log(1 + psi)
        correction += (psi - gamma[i]) * nu[i].mass;
    }
    return {m.phi() - correction, MarkFunction(std::move(gamma))};
}

MarketModel from_log_params(const LogPriceParams& lp, const LevyMeasure& measure, double alpha,
                            double horizon) {
    measure.require_compatible(lp.gamma);
    std::vector<double> psi(measure.size());
    double correction = 0.0;
    for (std::size_t i = 0; i < measure.size(); ++i) {
        psi[i] = std::expm1(lp.gamma[i]);
        correction += (psi[i] - lp.gamma[i]) * measure[i].mass;
    }
    return MarketModel(measure, MarkFunction(std::move(psi)), lp.beta + correction, alpha,
                       horizon);
}

ConstraintSet ConstraintSet::interval(double lower, double upper) {
    if (std::isnan(lower) || std::isnan(upper) || lower > upper)
        throw InvalidArgument("constraint: need lower <= upper");
    if (lower > 0.0 || upper < 0.0) throw InvalidArgument("constraint set must contain 0");
    ConstraintSet c;
    c.lower_ = lower;
    c.upper_ = upper;
    c.kind_ = (std::isinf(lower) && std::isinf(upper)) ? Kind::AllReals : Kind::Interval;
    return c;
}

double ConstraintSet::clamp(double pi) const noexcept { return std::clamp(pi, lower_, upper_); }

SupportClass classify_support(const MarketModel& m) {
    SupportClass sc;
    for (std::size_t i = 0; i < m.measure().size(); ++i) {
        if (m.measure()[i].mass <= 0.0) continue;
        if (m.psi()[i] > 0.0) sc.has_positive = true;
        if (m.psi()[i] < 0.0) sc.has_negative = true;
    }
    return sc;
}

WellPosednessReport check_wellposed(const MarketModel& m) {
    const SupportClass sc = classify_support(m);
    const double jump_mean = integrate(m.measure(), m.psi());
    std::ostringstream os;
    os.precision(17);
    if (sc.mixed()) return {true, "jumps of both signs: minimum exists for every drift"};
    if (sc.degenerate()) {
        if (m.phi() == 0.0) return {true, "no jump risk and zero drift"};
        os << "no jump risk but phi = " << m.phi() << " != 0: objective is unbounded below";
        return {false, os.str()};
    }
    if (sc.has_positive) {
        if (m.phi() < jump_mean) {
            os << "only upward jumps and phi = " << m.phi() << " < int psi dnu = " << jump_mean;
            return {true, os.str()};
        }
        os << "only upward jumps but phi = " << m.phi() << " >= int psi dnu = " << jump_mean;
        return {false, os.str()};
    }
    if (m.phi() > jump_mean) {
        os << "only downward jumps and phi = " << m.phi() << " > int psi dnu = " << jump_mean;
        return {true, os.str()};
    }
    os << "only downward jumps but phi = " << m.phi() << " <= int psi dnu = " << jump_mean;
    return {false, os.str()};
}

}  // namespace levyhedge
