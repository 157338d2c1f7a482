#pragma once

// Sampled scalar fields on the unit-area annulus S^1 x [0,1] and on spheres
// obtained by gluing caps to its boundary circles.  All downstream machinery
// (Reeb trees, Calabi values, flows) consumes these fields.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace reebqm {

/// Regular theta x s lattice on the annulus, cell-centered samples.
/// Total area is exactly 1: the standard form dtheta ^ ds makes area
/// equal to cell counting.
struct AnnulusGrid {
    int n_theta = 0;
    int n_s = 0;

    AnnulusGrid() = default;
    AnnulusGrid(int nt, int ns) : n_theta(nt), n_s(ns) {
        if (nt < 2 || ns < 2)
            throw std::invalid_argument("AnnulusGrid: need at least 2 cells per axis");
    }

    double cell_area() const { return 1.0 / (double(n_theta) * double(n_s)); }
    int ncells() const { return n_theta * n_s; }
    int index(int i, int j) const { return j * n_theta + i; }

    double theta_center(int i) const { return (i + 0.5) / n_theta; }
    double s_center(int j) const { return (j + 0.5) / n_s; }

    bool operator==(const AnnulusGrid&) const = default;
};

/// Gluing data for the sphere S^2_{a,b}: a disk of area `a` on the bottom
/// circle, area `b` on the top.  Total sphere area is 1 + a + b.
struct SphereGluing {
    double a = 0.0;
    double b = 0.0;

    SphereGluing() = default;
    SphereGluing(double a_, double b_) : a(a_), b(b_) {
        if (a < 0 || b < 0)
            throw std::invalid_argument("SphereGluing: cap areas must be nonnegative");
    }

    double total_area() const { return 1.0 + a + b; }

    /// h = (1 + b - a)/2; the gluing is percentile-compatible iff h in [0,1].
    double percentile_h() const { return 0.5 * (1.0 + b - a); }
    bool percentile_compatible() const {
        double h = percentile_h();
        return h >= 0.0 && h <= 1.0;
    }
};

/// Scalar field sampled at cell centers (row-major, index = j*n_theta + i).
/// When `gluing` is set the field lives on the glued sphere and the caps
/// carry one constant sample each.
struct ScalarField {
    AnnulusGrid grid;
    std::optional<SphereGluing> gluing;
    std::vector<double> samples;
    double bottom_cap = 0.0;
    double top_cap = 0.0;
    std::vector<std::uint8_t> support;  // declared support flag per cell

    bool on_sphere() const { return gluing.has_value(); }
    double total_area() const { return on_sphere() ? gluing->total_area() : 1.0; }

    double at(int i, int j) const { return samples[grid.index(i, j)]; }

    double min_sample() const {
        double m = *std::min_element(samples.begin(), samples.end());
        if (on_sphere()) m = std::min({m, bottom_cap, top_cap});
        return m;
    }
    double max_sample() const {
        double m = *std::max_element(samples.begin(), samples.end());
        if (on_sphere()) m = std::max({m, bottom_cap, top_cap});
        return m;
    }
};

namespace detail {

inline double smoothstep(double t) {
    t = std::clamp(t, 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

// Monotone cubic with h(0)=0, h(1)=1, h'(0)=0, h'(1)=1; splices the bottom
// ramp C^1 onto the identity part of the linear profile.
inline double ramp_to_identity(double t) {
    t = std::clamp(t, 0.0, 1.0);
    return t * t * (2.0 - t);
}

inline double wrap_unit(double x) {
    double w = x - std::floor(x);
    return (w == 1.0) ? 0.0 : w;
}

// Distance on the theta circle (circumference 1).
inline double theta_dist(double x, double y) {
    double d = std::fabs(wrap_unit(x) - wrap_unit(y));
    return std::min(d, 1.0 - d);
}

}  // namespace detail

/// Declarative field description.  `materialize` turns a spec into samples;
/// identical spec + grid always yields bit-identical samples.
struct FieldSpec {
    enum class Kind { linear_s, plateau_bump, sum, custom_samples };

    Kind kind = Kind::linear_s;
    double scale = 1.0;

    // linear_s: F(theta,s) = s on [ramp_lo, ramp_hi], glued to 0 at both
    // boundary circles (constant-then-ramp above ramp_hi).
    double ramp_lo = 0.01;
    double ramp_hi = 0.99;

    // plateau_bump: equals `scale` on a rectangle of area `plateau_area`,
    // supported in a concentric rectangle of area `support_area`.
    double plateau_area = 0.8;
    double support_area = 0.9;
    double center_theta = 0.5;
    double center_s = 0.5;
    double width_theta = 0.0;  // 0 = choose automatically (square-ish)

    std::vector<FieldSpec> terms;     // sum
    std::vector<double> raw_samples;  // custom_samples

    static FieldSpec make_linear_s(double scale = 1.0) {
        FieldSpec f;
        f.kind = Kind::linear_s;
        f.scale = scale;
        return f;
    }

    static FieldSpec make_plateau_bump(double plateau_area, double support_area,
                                       double center_theta = 0.5, double center_s = 0.5,
                                       double scale = 1.0, double width_theta = 0.0) {
        FieldSpec f;
        f.kind = Kind::plateau_bump;
        f.plateau_area = plateau_area;
        f.support_area = support_area;
        f.center_theta = center_theta;
        f.center_s = center_s;
        f.scale = scale;
        f.width_theta = width_theta;
        return f;
    }

    static FieldSpec make_sum(std::vector<FieldSpec> terms) {
        FieldSpec f;
        f.kind = Kind::sum;
        f.terms = std::move(terms);
        return f;
    }

    static FieldSpec make_custom(std::vector<double> samples) {
        FieldSpec f;
        f.kind = Kind::custom_samples;
        f.raw_samples = std::move(samples);
        return f;
    }
};

namespace detail {

// The linear profile: identity on [lo, hi], C^1 ramp from 0 below lo,
// constant on [hi, hi + (1-hi)/2] and a smoothstep back to 0 at s = 1.
inline double linear_s_profile(double s, double lo, double hi) {
    if (s <= 0.0 || s >= 1.0) return 0.0;
    if (s < lo) return lo * ramp_to_identity(s / lo);
    if (s <= hi) return s;
    double flat_end = hi + 0.5 * (1.0 - hi);
    if (s <= flat_end) return hi;
    return hi * (1.0 - smoothstep((s - flat_end) / (1.0 - flat_end)));
}

// Superellipse plateau bump.  The paper constrains only the two enclosed
// areas; a round disk of area 0.9 cannot embed in the unit-area annulus, so
// the plateau and support are concentric p=8 superellipses (topological
// disks with smooth convex level sets) scaled to the exact areas.  Corners
// of a rectangle profile would put degenerate saddles into the Hamiltonian
// flow of the bump; the superellipse gauge avoids them.
struct PlateauBump {
    double ct, cs;        // center
    double sup_w, sup_h;  // support superellipse axis widths
    double r_pla;         // plateau gauge radius (support boundary is 1)

    // area of {|2x/W|^8 + |2y/H|^8 <= 1} = W*H*c8
    static double c8() {
        static const double c =
            std::tgamma(1.125) * std::tgamma(1.125) / std::tgamma(1.25);
        return c;
    }

    static PlateauBump from_spec(const FieldSpec& f, const AnnulusGrid& g) {
        const double p = f.plateau_area, q = f.support_area;
        if (!(p > 0.0) || !(q > 0.0))
            throw std::invalid_argument("plateau_bump: areas must be positive");
        if (p >= q)
            throw std::invalid_argument("plateau_bump: plateau area must be < support area");
        if (q >= 1.0)
            throw std::invalid_argument("plateau_bump: support area must be < 1");

        const double s_room = 2.0 * std::min(f.center_s - 0.01, 0.99 - f.center_s);
        const double t_room = 0.98;  // keep a gap at the theta seam: no wrap
        if (s_room <= 0.0)
            throw std::invalid_argument("plateau_bump: center too close to the boundary");

        PlateauBump b;
        b.ct = f.center_theta;
        b.cs = f.center_s;
        const double area_needed = q / c8();
        if (f.width_theta > 0.0) {
            b.sup_w = f.width_theta;
            b.sup_h = area_needed / b.sup_w;
        } else {
            double side = std::sqrt(area_needed);
            b.sup_w = std::min(side, t_room);
            b.sup_h = area_needed / b.sup_w;
            if (b.sup_h > s_room) {
                b.sup_h = s_room;
                b.sup_w = area_needed / b.sup_h;
            }
        }
        if (b.sup_w > t_room + 1e-12 || b.sup_h > s_room + 1e-12)
            throw std::invalid_argument("plateau_bump: support does not fit inside the annulus");

        b.r_pla = std::sqrt(p / q);
        // Inflate the plateau by half a cell so cell-center sampling never
        // under-fills the prescribed plateau area.
        double dr = std::max(1.0 / (g.n_theta * b.sup_w), 1.0 / (g.n_s * b.sup_h));
        b.r_pla += std::min(dr, 0.5 * (1.0 - b.r_pla));
        return b;
    }

    double eval(double theta, double s) const {
        double x = 2.0 * theta_dist(theta, ct) / sup_w;
        double y = 2.0 * std::fabs(s - cs) / sup_h;
        if (x >= 1.0 || y >= 1.0) return 0.0;
        double x2 = x * x, y2 = y * y;
        double u = x2 * x2 * x2 * x2 + y2 * y2 * y2 * y2;  // x^8 + y^8
        if (u >= 1.0) return 0.0;
        double rho = std::pow(u, 0.125);
        if (rho <= r_pla) return 1.0;
        return smoothstep((1.0 - rho) / (1.0 - r_pla));
    }
};

inline void accumulate_spec(const FieldSpec& f, const AnnulusGrid& g,
                            double outer_scale, std::vector<double>& acc) {
    const double scale = outer_scale * f.scale;
    switch (f.kind) {
        case FieldSpec::Kind::linear_s: {
            if (!(f.ramp_lo > 0.0) || !(f.ramp_hi < 1.0) || f.ramp_lo >= f.ramp_hi)
                throw std::invalid_argument("linear_s: need 0 < ramp_lo < ramp_hi < 1");
            for (int j = 0; j < g.n_s; ++j) {
                double v = scale * linear_s_profile(g.s_center(j), f.ramp_lo, f.ramp_hi);
                for (int i = 0; i < g.n_theta; ++i) acc[g.index(i, j)] += v;
            }
            break;
        }
        case FieldSpec::Kind::plateau_bump: {
            PlateauBump b = PlateauBump::from_spec(f, g);
            for (int j = 0; j < g.n_s; ++j) {
                double s = g.s_center(j);
                for (int i = 0; i < g.n_theta; ++i)
                    acc[g.index(i, j)] += scale * b.eval(g.theta_center(i), s);
            }
            break;
        }
        case FieldSpec::Kind::sum: {
            for (const auto& t : f.terms) accumulate_spec(t, g, scale, acc);
            break;
        }
        case FieldSpec::Kind::custom_samples: {
            if ((int)f.raw_samples.size() != g.ncells())
                throw std::invalid_argument("custom_samples: sample count does not match grid");
            for (int k = 0; k < g.ncells(); ++k) acc[k] += scale * f.raw_samples[k];
            break;
        }
    }
}

}  // namespace detail

/// Sample a field spec on a grid.  Built-in kinds are forced to vanish on
/// the two boundary cell rows so every materialized field is compactly
/// supported in the interior; custom samples are taken as given.
inline ScalarField materialize(const FieldSpec& spec, const AnnulusGrid& grid) {
    ScalarField f;
    f.grid = grid;
    f.samples.assign(grid.ncells(), 0.0);
    detail::accumulate_spec(spec, grid, 1.0, f.samples);

    if (spec.kind != FieldSpec::Kind::custom_samples) {
        for (int i = 0; i < grid.n_theta; ++i) {
            f.samples[grid.index(i, 0)] = 0.0;
            f.samples[grid.index(i, grid.n_s - 1)] = 0.0;
        }
    }
    f.support.resize(grid.ncells());
    for (int k = 0; k < grid.ncells(); ++k) f.support[k] = (f.samples[k] != 0.0);
    return f;
}

/// Cell-area-weighted sum, cap contributions included on spheres.
inline double integral(const ScalarField& f) {
    // Kahan summation in a fixed order keeps the result deterministic.
    double sum = 0.0, comp = 0.0;
    for (double v : f.samples) {
        double y = v - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    double out = sum * f.grid.cell_area();
    if (f.on_sphere())
        out += f.bottom_cap * f.gluing->a + f.top_cap * f.gluing->b;
    return out;
}

/// Push an annulus field onto the glued sphere S^2_{a,b}.  Caps carry the
/// value 0, so the integral is preserved exactly.
inline ScalarField pushforward(const ScalarField& f, const SphereGluing& g) {
    if (f.on_sphere())
        throw std::invalid_argument("pushforward: field already lives on a sphere");
    for (int i = 0; i < f.grid.n_theta; ++i) {
        if (std::fabs(f.at(i, 0)) > 1e-12 || std::fabs(f.at(i, f.grid.n_s - 1)) > 1e-12)
            throw std::invalid_argument("pushforward: field has nonzero boundary values");
    }
    ScalarField out = f;
    out.gluing = g;
    out.bottom_cap = 0.0;
    out.top_cap = 0.0;
    return out;
}

/// Area of the superlevel set {f >= c}, caps included on spheres.
inline double superlevel_area(const ScalarField& f, double c) {
    std::int64_t count = 0;
    for (double v : f.samples) count += (v >= c);
    double area = double(count) * f.grid.cell_area();
    if (f.on_sphere()) {
        if (f.bottom_cap >= c) area += f.gluing->a;
        if (f.top_cap >= c) area += f.gluing->b;
    }
    return area;
}

/// Bilinear interpolation of the samples at an arbitrary point.  Theta
/// wraps; s is clamped to the cell-center range.
inline double field_value(const ScalarField& f, double theta, double s) {
    const auto& g = f.grid;
    double x = detail::wrap_unit(theta) * g.n_theta - 0.5;
    double y = s * g.n_s - 0.5;
    y = std::clamp(y, 0.0, double(g.n_s - 1));
    int i0 = (int)std::floor(x);
    int j0 = (int)std::floor(y);
    j0 = std::clamp(j0, 0, g.n_s - 2);
    double fx = x - i0, fy = y - j0;
    auto wrap = [&](int i) { return ((i % g.n_theta) + g.n_theta) % g.n_theta; };
    int ia = wrap(i0), ib = wrap(i0 + 1);
    double v00 = f.at(ia, j0), v10 = f.at(ib, j0);
    double v01 = f.at(ia, j0 + 1), v11 = f.at(ib, j0 + 1);
    return (1 - fx) * (1 - fy) * v00 + fx * (1 - fy) * v10 +
           (1 - fx) * fy * v01 + fx * fy * v11;
}

}  // namespace reebqm
