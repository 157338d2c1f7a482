#pragma once

// Calabi homomorphism, the sphere Calabi quasimorphism on autonomous
// Hamiltonians, and the normalized differences r_{a,b}.
//
// Only autonomous evaluations of the sphere quasimorphism and r_{a,b} are
// implemented: on autonomous maps both reduce to median / percentile data of
// the generating function's measured Reeb tree.  Values carry a declared
// ambiguity; quadrature tolerance is propagated as
//   ambiguity = C * (1/n_s + 1/n_theta),  C = sample range of the field.

#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "reebqm/field.hpp"
#include "reebqm/reeb.hpp"

namespace reebqm {

enum class QmKind { cal_sigma, cal_sphere, r_ab, rho_rotation };

struct QmValue {
    double value = 0.0;
    double ambiguity = 0.0;
    QmKind kind = QmKind::cal_sigma;
};

/// a < b only when the ambiguity intervals are disjoint.
inline bool definitely_less(const QmValue& a, const QmValue& b) {
    return a.value + a.ambiguity < b.value - b.ambiguity;
}

/// Gluing parameters for r_{a,b}; h = (1+b-a)/2 is the percentile the
/// difference isolates.
struct QmParams {
    double a = 0.0;
    double b = 0.0;
    double h() const { return 0.5 * (1.0 + b - a); }
    SphereGluing gluing() const { return SphereGluing(a, b); }
};

namespace detail {

inline double quadrature_ambiguity(const ScalarField& f) {
    double range = f.max_sample() - f.min_sample();
    return range * (1.0 / f.grid.n_s + 1.0 / f.grid.n_theta);
}

}  // namespace detail

/// Time quadrature of the space integrals along a Hamiltonian path:
/// sum of integral(f_k) * dt.  Exact homomorphism data, ambiguity 0.
inline QmValue calabi_homomorphism(std::span<const ScalarField> path, double dt) {
    if (path.empty()) throw std::invalid_argument("calabi_homomorphism: empty path");
    if (!(dt > 0.0)) throw std::invalid_argument("calabi_homomorphism: dt must be positive");
    double sum = 0.0;
    for (const auto& f : path) {
        if (!(f.grid == path.front().grid))
            throw std::invalid_argument("calabi_homomorphism: fields on different grids");
        sum += integral(f) * dt;
    }
    return {sum, 0.0, QmKind::cal_sigma};
}

/// Sphere Calabi value of the autonomous map generated by `f` on a glued
/// sphere: total integral minus area times the value on the median set.
inline QmValue calabi_sphere_autonomous(const ScalarField& f) {
    if (!f.on_sphere())
        throw std::invalid_argument("calabi_sphere_autonomous: field must live on a sphere");
    auto tree = build_reeb_tree(f);
    auto median = find_median(tree);
    double value = integral(f) - f.gluing->total_area() * median.level;
    return {value, 0.0, QmKind::cal_sphere};
}

enum class RabRoute { median_formula, percentile_direct };

/// r_{a,b} of the autonomous map generated by `f`: the normalized difference
/// between the Calabi homomorphism and the pulled-back sphere Calabi value.
/// The percentile route evaluates f at its h-percentile instead; the two
/// agree whenever the percentile exists.
inline QmValue r_ab_autonomous(const ScalarField& f, const QmParams& p,
                               RabRoute route = RabRoute::median_formula) {
    if (f.on_sphere())
        throw std::invalid_argument("r_ab_autonomous: field must live on the annulus");
    double amb = detail::quadrature_ambiguity(f);
    if (route == RabRoute::median_formula) {
        auto sphere_field = pushforward(f, p.gluing());
        auto cal_sphere = calabi_sphere_autonomous(sphere_field);
        double value = (integral(f) - cal_sphere.value) / p.gluing().total_area();
        return {value, amb, QmKind::r_ab};
    }
    double h = p.h();
    if (h < 0.0 || h > 1.0)
        throw std::invalid_argument("r_ab_autonomous: gluing is not percentile-compatible");
    auto tree = build_reeb_tree(f);
    auto pt = find_percentile(tree, h);
    if (!pt)
        throw std::domain_error("r_ab_autonomous: h-percentile does not exist (gap)");
    return {pt->level, amb, QmKind::r_ab};
}

/// Field value at the h-percentile for each requested h, or nullopt inside
/// gaps.  One tree build serves the whole sweep.
inline std::vector<std::pair<double, std::optional<double>>>
percentile_value_curve(const ScalarField& f, std::span<const double> h_samples) {
    if (f.on_sphere())
        throw std::invalid_argument("percentile_value_curve: field must live on the annulus");
    auto tree = build_reeb_tree(f);
    std::vector<std::pair<double, std::optional<double>>> out;
    out.reserve(h_samples.size());
    for (double h : h_samples) {
        auto pt = find_percentile(tree, h);
        out.emplace_back(h, pt ? std::optional<double>(pt->level) : std::nullopt);
    }
    return out;
}

/// Additivity on commuting factors.  Callers must have verified commutation
/// (the flow module checks it numerically for the paper's maps).
inline QmValue combine_commuting(const QmValue& x, const QmValue& y) {
    if (x.kind != y.kind)
        throw std::invalid_argument("combine_commuting: mixed quasimorphism kinds");
    return {x.value + y.value, x.ambiguity + y.ambiguity, x.kind};
}

}  // namespace reebqm
