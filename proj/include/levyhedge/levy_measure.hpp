#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

namespace levyhedge {

struct JumpAtom {
    double x;     // jump mark, nonzero
    double mass;  // intensity, jumps per unit time
};

/// Values of a function of the jump mark, one entry per atom of a LevyMeasure.
class MarkFunction {
public:
    MarkFunction() = default;
    explicit MarkFunction(std::vector<double> values) : values_(std::move(values)) {}
    MarkFunction(std::initializer_list<double> values) : values_(values) {}

    static MarkFunction constant(std::size_t n, double value) {
        return MarkFunction(std::vector<double>(n, value));
    }

    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }
    std::span<const double> values() const noexcept { return values_; }

    auto begin() const noexcept { return values_.begin(); }
    auto end() const noexcept { return values_.end(); }

private:
    std::vector<double> values_;
};

/// Finite atomic Levy measure. Atoms are kept sorted by mark with no duplicates.
class LevyMeasure {
public:
    LevyMeasure() = default;
    explicit LevyMeasure(std::vector<JumpAtom> atoms);
    LevyMeasure(std::initializer_list<JumpAtom> atoms)
        : LevyMeasure(std::vector<JumpAtom>(atoms)) {}

    std::span<const JumpAtom> atoms() const noexcept { return atoms_; }
    std::size_t size() const noexcept { return atoms_.size(); }
    const JumpAtom& operator[](std::size_t i) const { return atoms_[i]; }
    double total_mass() const noexcept { return total_mass_; }

    /// The identity mark function x -> x.
    MarkFunction marks() const;

    /// Samples f at every atom mark.
    MarkFunction sample(const std::function<double(double)>& f) const;

    /// Throws InvalidArgument unless f has one value per atom.
    void require_compatible(const MarkFunction& f) const;

private:
    std::vector<JumpAtom> atoms_;
    double total_mass_ = 0.0;
};

double integrate(const LevyMeasure& m, const MarkFunction& f);

/// Entropic penalty (e^{alpha y} - alpha y - 1) / alpha; nonnegative and convex.
double g_alpha(double alpha, double y);

/// Integral of g_alpha(u) against the measure.
double entropic_norm(const LevyMeasure& m, double alpha, const MarkFunction& u);

double l2_norm_sq(const LevyMeasure& m, const MarkFunction& u);

/// Essential supremum of |u| over atoms carrying positive mass.
double sup_norm(const LevyMeasure& m, const MarkFunction& u);

/// Constant K >= 1 with |u|_alpha / K <= |u|^2_{L2} <= K |u|_alpha for all u
/// with |u| <= bound. Depends only on alpha and bound.
double equivalence_constant(const LevyMeasure& m, double alpha, double bound);

struct Interval {
    double lower;
    double upper;
};

/// Midpoint-rule discretization of a jump density on intervals that exclude 0.
/// The n_atoms cells are shared between the intervals in proportion to length
/// (at least one cell per interval).
LevyMeasure discretize_density(const std::function<double(double)>& density,
                               std::span<const Interval> support, std::size_t n_atoms);

}  // namespace levyhedge
