#include "levyhedge/levy_measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "levyhedge/errors.hpp"

namespace levyhedge {

LevyMeasure::LevyMeasure(std::vector<JumpAtom> atoms) : atoms_(std::move(atoms)) {
    for (const auto& a : atoms_) {
        if (!std::isfinite(a.x) || !std::isfinite(a.mass))
            throw InvalidArgument("levy measure: non-finite atom");
        if (a.x == 0.0) throw InvalidArgument("levy measure: atom at the origin");
        if (a.mass < 0.0) throw InvalidArgument("levy measure: negative atom mass");
    }
    std::sort(atoms_.begin(), atoms_.end(),
              [](const JumpAtom& l, const JumpAtom& r) { return l.x < r.x; });
    for (std::size_t i = 1; i < atoms_.size(); ++i) {
        if (atoms_[i].x == atoms_[i - 1].x)
            throw InvalidArgument("levy measure: duplicate atom at x=" +
                                  std::to_string(atoms_[i].x));
    }
    for (const auto& a : atoms_) total_mass_ += a.mass;
}

MarkFunction LevyMeasure::marks() const {
    std::vector<double> v;
    v.reserve(atoms_.size());
    for (const auto& a : atoms_) v.push_back(a.x);
    return MarkFunction(std::move(v));
}

MarkFunction LevyMeasure::sample(const std::function<double(double)>& f) const {
    std::vector<double> v;
    v.reserve(atoms_.size());
    for (const auto& a : atoms_) v.push_back(f(a.x));
    return MarkFunction(std::move(v));
}

void LevyMeasure::require_compatible(const MarkFunction& f) const {
    if (f.size() != atoms_.size())
        throw InvalidArgument("mark function has " + std::to_string(f.size()) +
                              " values but the measure has " + std::to_string(atoms_.size()) +
                              " atoms");
}

double integrate(const LevyMeasure& m, const MarkFunction& f) {
    m.require_compatible(f);
    double s = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) s += f[i] * m[i].mass;
    return s;
}

double g_alpha(double alpha, double y) {
    const double z = alpha * y;
    if (std::abs(z) < 1e-4) {
        // e^z - z - 1 = z^2/2 + z^3/6 + z^4/24 + z^5/120 + O(z^6)
        const double z2 = z * z;
        return z2 * (0.5 + z * (1.0 / 6.0 + z * (1.0 / 24.0 + z / 120.0))) / alpha;
    }
    const double em1 = std::expm1(z);
    if (std::isinf(em1)) return std::numeric_limits<double>::infinity();
    return (em1 - z) / alpha;
}

double entropic_norm(const LevyMeasure& m, double alpha, const MarkFunction& u) {
    m.require_compatible(u);
    double s = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) s += g_alpha(alpha, u[i]) * m[i].mass;
    return s;
}

double l2_norm_sq(const LevyMeasure& m, const MarkFunction& u) {
    m.require_compatible(u);
    double s = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) s += u[i] * u[i] * m[i].mass;
    return s;
}

double sup_norm(const LevyMeasure& m, const MarkFunction& u) {
    m.require_compatible(u);
    double s = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i)
        if (m[i].mass > 0.0) s = std::max(s, std::abs(u[i]));
    return s;
}

namespace {

// g_alpha(h) / h^2, continuous at 0 with value alpha/2.
double penalty_ratio(double alpha, double h) {
    if (h == 0.0) return 0.5 * alpha;
    return g_alpha(alpha, h) / (h * h);
}

struct RatioRange {
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    void add(double r) {
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
};

}  // namespace

double equivalence_constant(const LevyMeasure& /*m*/, double alpha, double bound) {
    if (!(bound > 0.0) || !std::isfinite(bound))
        throw InvalidArgument("equivalence_constant: bound must be positive");
    if (!(alpha > 0.0)) throw InvalidArgument("equivalence_constant: alpha must be positive");

    constexpr double kEps = 1e-3;
    constexpr double kPointsPerUnit = 1e4;
    const double eps = std::min(kEps, bound);

    // |h| <= eps: the ratio is monotone on each half-line, so the extremes sit at +-eps.
    RatioRange inner;
    inner.add(penalty_ratio(alpha, -eps));
    inner.add(penalty_ratio(alpha, eps));
    inner.add(penalty_ratio(alpha, 0.0));

    RatioRange outer = inner;
    if (bound > eps) {
        const auto n = static_cast<std::size_t>(std::ceil((bound - eps) * kPointsPerUnit));
        const std::size_t cells = std::clamp<std::size_t>(n, 1, 10'000'000);
        const double step = (bound - eps) / static_cast<double>(cells);
        for (std::size_t k = 0; k <= cells; ++k) {
            const double h = k == cells ? bound : eps + step * static_cast<double>(k);
            outer.add(penalty_ratio(alpha, h));
            outer.add(penalty_ratio(alpha, -h));
        }
    }
    const double lo = std::min(inner.lo, outer.lo);
    const double hi = std::max(inner.hi, outer.hi);
    return std::max({1.0, 1.0 / lo, hi});
}

LevyMeasure discretize_density(const std::function<double(double)>& density,
                               std::span<const Interval> support, std::size_t n_atoms) {
    if (support.empty()) throw InvalidArgument("discretize_density: empty support");
    if (n_atoms < support.size())
        throw InvalidArgument("discretize_density: need at least one atom per interval");

    double total_len = 0.0;
    for (const auto& iv : support) {
        if (!(iv.lower < iv.upper) || !std::isfinite(iv.lower) || !std::isfinite(iv.upper))
            throw InvalidArgument("discretize_density: invalid interval");
        if (iv.lower <= 0.0 && iv.upper >= 0.0)
            throw InvalidArgument("discretize_density: invalid support, interval contains 0");
        total_len += iv.upper - iv.lower;
    }

    // Largest-remainder allocation of cells, one guaranteed per interval.
    std::vector<std::size_t> cells(support.size(), 1);
    std::vector<double> remainder(support.size(), 0.0);
    const std::size_t spare = n_atoms - support.size();
    std::size_t used = 0;
    for (std::size_t i = 0; i < support.size(); ++i) {
        const double share =
            static_cast<double>(spare) * (support[i].upper - support[i].lower) / total_len;
        const auto whole = static_cast<std::size_t>(std::floor(share));
        cells[i] += whole;
        used += whole;
        remainder[i] = share - static_cast<double>(whole);
    }
    std::vector<std::size_t> order(support.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; used < spare; ++k, ++used) ++cells[order[k % order.size()]];

    std::vector<JumpAtom> atoms;
    atoms.reserve(n_atoms);
    for (std::size_t i = 0; i < support.size(); ++i) {
        const double width = (support[i].upper - support[i].lower) / static_cast<double>(cells[i]);
        for (std::size_t k = 0; k < cells[i]; ++k) {
            const double mid = support[i].lower + (static_cast<double>(k) + 0.5) * width;
            const double d = density(mid);
            if (!(d >= 0.0) || !std::isfinite(d))
                throw InvalidArgument("discretize_density: density must be finite and >= 0");
            atoms.push_back({mid, d * width});
        }
    }
    return LevyMeasure(std::move(atoms));
}

}  // namespace levyhedge
