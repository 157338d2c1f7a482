#pragma once

// Hamiltonian flows on the annulus: time-t maps of autonomous fields,
// right-to-left leg composition, rotation numbers via angular lifts, and an
// area-preservation monitor.
//
// Integrator: classical RK4 with a fixed step per leg.  The step is chosen
// from the field's velocity-Jacobian bound; pure theta-shear fields (s-only
// profiles) integrate exactly and take one step per time unit.  Positions
// accumulate with compensated summation so that differential quantities
// (the area monitor's quads) stay meaningful under strong shear.  Theta is
// never wrapped during integration: the lift is the plain difference.

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <vector>

#include "reebqm/field.hpp"

namespace reebqm {

namespace detail {

inline std::atomic<int>& thread_count() {
    static std::atomic<int> n{0};  // 0 = hardware default
    return n;
}

template <class Fn>
void parallel_for(int n, Fn&& fn) {
    int nt = thread_count().load();
    if (nt <= 0) nt = (int)std::thread::hardware_concurrency();
    nt = std::max(1, std::min({nt, n, 16}));
    if (nt == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < nt; ++t) {
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace detail

/// Set the worker count for batched flow evaluations (0 = hardware default).
/// Results are written to per-index slots, so the outcome does not depend on
/// the thread count.
inline void set_flow_threads(int n) { detail::thread_count().store(n); }

/// Sampled Hamiltonian velocity field (d theta/dt, d s/dt) =
/// (df/ds, -df/d theta).  Both components are exact derivatives of one
/// bilinear interpolant of the samples, evaluated on the patches between
/// cell centers, so the discrete field is divergence-free by construction:
/// inside every patch the velocity Jacobian is diag(a, -a) with a the mixed
/// difference, and the flow preserves area up to integrator truncation.
struct VelocityField {
    AnnulusGrid grid;
    std::vector<double> dfs;  // (f(i,j+1)-f(i,j)) * n_s,     row-major, j < n_s-1
    std::vector<double> dft;  // (f(i+1,j)-f(i,j)) * n_theta, row-major, theta wraps
    double max_speed = 0.0;
    double max_jacobian = 0.0;  // max |a| over the patches
    bool pure_theta_shear = false;

    VelocityField() = default;

    explicit VelocityField(const ScalarField& f) {
        if (f.on_sphere())
            throw std::invalid_argument("VelocityField: flows live on the annulus");
        grid = f.grid;
        const int nt = grid.n_theta, ns = grid.n_s;
        dfs.resize(size_t(nt) * (ns - 1));
        dft.resize(size_t(nt) * ns);
        for (int j = 0; j + 1 < ns; ++j)
            for (int i = 0; i < nt; ++i)
                dfs[size_t(j) * nt + i] = (f.at(i, j + 1) - f.at(i, j)) * ns;
        for (int j = 0; j < ns; ++j)
            for (int i = 0; i < nt; ++i)
                dft[size_t(j) * nt + i] = (f.at((i + 1) % nt, j) - f.at(i, j)) * nt;

        pure_theta_shear = true;
        for (double v : dft)
            if (v != 0.0) {
                pure_theta_shear = false;
                break;
            }
        if (pure_theta_shear) {
            for (int j = 0; j + 1 < ns && pure_theta_shear; ++j) {
                double v0 = dfs[size_t(j) * nt];
                for (int i = 1; i < nt; ++i)
                    if (dfs[size_t(j) * nt + i] != v0) {
                        pure_theta_shear = false;
                        break;
                    }
            }
        }
        for (double v : dfs) max_speed = std::max(max_speed, std::fabs(v));
        for (double v : dft) max_speed = std::max(max_speed, std::fabs(v));
        for (int j = 0; j + 1 < ns; ++j) {
            for (int i = 0; i < nt; ++i) {
                double a = (dfs[size_t(j) * nt + (i + 1) % nt] - dfs[size_t(j) * nt + i]) * nt;
                max_jacobian = std::max(max_jacobian, std::fabs(a));
            }
        }
    }

    std::array<double, 2> sample(double theta, double s) const {
        const int nt = grid.n_theta, ns = grid.n_s;
        double x = (theta - std::floor(theta)) * nt - 0.5;
        double y = s * ns - 0.5;
        y = std::clamp(y, 0.0, double(ns - 1));
        int i0 = (int)std::floor(x);
        double u = x - i0;
        int j0 = (int)y;
        if (j0 > ns - 2) j0 = ns - 2;
        double w = std::clamp(y - j0, 0.0, 1.0);
        int ia = i0 < 0 ? nt - 1 : i0;
        int ib = ia + 1 == nt ? 0 : ia + 1;
        const double* ds_row = &dfs[size_t(j0) * nt];
        const double* dt_lo = &dft[size_t(j0) * nt];
        const double* dt_hi = &dft[size_t(j0 + 1) * nt];
        return {(1 - u) * ds_row[ia] + u * ds_row[ib],
                -((1 - w) * dt_lo[ia] + w * dt_hi[ia])};
    }

    // value plus the exact in-patch Jacobian; jac is row-major
    // (d v_theta/d theta, d v_theta/d s, d v_s/d theta, d v_s/d s) =
    // (a, 0, 0, -a) inside a patch
    void sample_jac(double theta, double s, std::array<double, 2>& v,
                    std::array<double, 4>& jac) const {
        const int nt = grid.n_theta, ns = grid.n_s;
        double x = (theta - std::floor(theta)) * nt - 0.5;
        double y = s * ns - 0.5;
        y = std::clamp(y, 0.0, double(ns - 1));
        int i0 = (int)std::floor(x);
        double u = x - i0;
        int j0 = (int)y;
        if (j0 > ns - 2) j0 = ns - 2;
        double w = std::clamp(y - j0, 0.0, 1.0);
        int ia = i0 < 0 ? nt - 1 : i0;
        int ib = ia + 1 == nt ? 0 : ia + 1;
        const double* ds_row = &dfs[size_t(j0) * nt];
        const double* dt_lo = &dft[size_t(j0) * nt];
        const double* dt_hi = &dft[size_t(j0 + 1) * nt];
        v[0] = (1 - u) * ds_row[ia] + u * ds_row[ib];
        v[1] = -((1 - w) * dt_lo[ia] + w * dt_hi[ia]);
        double a = (ds_row[ib] - ds_row[ia]) * nt;
        jac = {a, 0.0, 0.0, -a};
    }
};

struct FlowLeg {
    VelocityField vel;
    double duration = 1.0;
    std::int64_t steps_per_unit = 1;
};

struct FlowPoint {
    double theta = 0.0;  // unwrapped: lift = theta_out - theta_in
    double s = 0.0;
    double lift = 0.0;
    bool clamped = false;  // trajectory left [0,1] numerically and was clamped
};

namespace detail {

// target |step * velocity-Jacobian|; calibrated so the area monitor stays
// a factor of a few under the documented 5e-3 bound for the paper's maps
constexpr double kStepRatio = 0.01;
constexpr std::int64_t kMinStepsPerUnit = 64;
constexpr std::int64_t kMaxStepsPerUnit = 6'000'000;

inline std::int64_t default_steps_per_unit(const VelocityField& v) {
    if (v.pure_theta_shear) return 1;  // exact at any step
    double s = v.max_jacobian / kStepRatio;
    if (!(s > (double)kMinStepsPerUnit)) return kMinStepsPerUnit;
    if (s > (double)kMaxStepsPerUnit) return kMaxStepsPerUnit;
    return (std::int64_t)s;
}

struct CompAccum {  // Kahan-compensated position component
    double v = 0.0, c = 0.0;
    void add(double x) {
        double y = x - c;
        double t = v + y;
        c = (t - v) - y;
        v = t;
    }
};

using Mat2 = std::array<double, 4>;  // row-major 2x2

inline Mat2 matmul(const Mat2& A, const Mat2& B) {
    return {A[0] * B[0] + A[1] * B[2], A[0] * B[1] + A[1] * B[3],
            A[2] * B[0] + A[3] * B[2], A[2] * B[1] + A[3] * B[3]};
}

// Positions plus the exact tangent (variational) matrix of the discrete RK4
// map.  The tangent updates are the literal derivatives of the stage
// equations, so det(J) is the area distortion of the numerical map itself.
inline void integrate_leg_variational(const FlowLeg& leg, double& theta, double& s, Mat2& J,
                                      double& log_scale, bool& clamped) {
    std::array<double, 2> v0;
    std::array<double, 4> a0;
    leg.vel.sample_jac(theta, s, v0, a0);
    if (v0[0] == 0.0 && v0[1] == 0.0 && a0[0] == 0.0 && a0[1] == 0.0 && a0[2] == 0.0 &&
        a0[3] == 0.0)
        return;  // interior of a zero patch: point and tangent both frozen
    std::int64_t n = (std::int64_t)std::llround(leg.steps_per_unit * leg.duration);
    if (n < 1) n = 1;
    const double h = leg.duration / (double)n;
    CompAccum th, ss;
    th.v = theta;
    ss.v = s;
    std::array<double, 2> k1, k2, k3, k4;
    std::array<double, 4> A1, A2, A3, A4;
    for (std::int64_t k = 0; k < n; ++k) {
        double x = th.v, y = ss.v;
        leg.vel.sample_jac(x, y, k1, A1);
        leg.vel.sample_jac(x + 0.5 * h * k1[0], y + 0.5 * h * k1[1], k2, A2);
        leg.vel.sample_jac(x + 0.5 * h * k2[0], y + 0.5 * h * k2[1], k3, A3);
        leg.vel.sample_jac(x + h * k3[0], y + h * k3[1], k4, A4);

        Mat2 dk1 = A1;
        Mat2 t2{1 + 0.5 * h * dk1[0], 0.5 * h * dk1[1], 0.5 * h * dk1[2], 1 + 0.5 * h * dk1[3]};
        Mat2 dk2 = matmul(A2, t2);
        Mat2 t3{1 + 0.5 * h * dk2[0], 0.5 * h * dk2[1], 0.5 * h * dk2[2], 1 + 0.5 * h * dk2[3]};
        Mat2 dk3 = matmul(A3, t3);
        Mat2 t4{1 + h * dk3[0], h * dk3[1], h * dk3[2], 1 + h * dk3[3]};
        Mat2 dk4 = matmul(A4, t4);

        Mat2 M;
        for (int c = 0; c < 4; ++c) {
            double id = (c == 0 || c == 3) ? 1.0 : 0.0;
            M[c] = id + h / 6.0 * (dk1[c] + 2.0 * dk2[c] + 2.0 * dk3[c] + dk4[c]);
        }
        J = matmul(M, J);
        double mx = std::max({std::fabs(J[0]), std::fabs(J[1]), std::fabs(J[2]),
                              std::fabs(J[3])});
        if (mx > 1e12) {
            for (auto& e : J) e /= mx;
            log_scale += std::log(mx);
        }

        th.add(h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]));
        ss.add(h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]));
    }
    theta = th.v;
    s = ss.v;
    if (s < 0.0 || s > 1.0) {
        clamped = true;
        s = std::clamp(s, 0.0, 1.0);
    }
}

// RK4 with fixed step h = duration/n over any sampler exposing
// sample(theta, s) -> {vtheta, vs}.
template <class Vel>
inline void rk4_march(const Vel& vel, double duration, std::int64_t n, double& theta,
                      double& s) {
    const double h = duration / (double)n;
    CompAccum th, ss;
    th.v = theta;
    ss.v = s;
    for (std::int64_t k = 0; k < n; ++k) {
        double x = th.v, y = ss.v;
        auto k1 = vel.sample(x, y);
        auto k2 = vel.sample(x + 0.5 * h * k1[0], y + 0.5 * h * k1[1]);
        auto k3 = vel.sample(x + 0.5 * h * k2[0], y + 0.5 * h * k2[1]);
        auto k4 = vel.sample(x + h * k3[0], y + h * k3[1]);
        th.add(h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]));
        ss.add(h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]));
    }
    theta = th.v;
    s = ss.v;
}

inline void integrate_leg(const FlowLeg& leg, double& theta, double& s, bool& clamped) {
    auto v0 = leg.vel.sample(theta, s);
    if (v0[0] == 0.0 && v0[1] == 0.0) return;  // stationary point of the leg
    std::int64_t n = (std::int64_t)std::llround(leg.steps_per_unit * leg.duration);
    if (n < 1) n = 1;
    rk4_march(leg.vel, leg.duration, n, theta, s);
    if (s < 0.0 || s > 1.0) {
        clamped = true;
        s = std::clamp(s, 0.0, 1.0);
    }
}

}  // namespace detail

/// Composition of autonomous Hamiltonian time-t maps.  Legs are applied
/// right to left, matching the composition order they are listed in.
class FlowMap {
  public:
    FlowMap() = default;

    static FlowMap from_field(const ScalarField& f, double duration) {
        if (duration < 0.0) throw std::invalid_argument("FlowMap: negative duration");
        FlowMap m;
        FlowLeg leg;
        leg.vel = VelocityField(f);
        leg.duration = duration;
        leg.steps_per_unit = detail::default_steps_per_unit(leg.vel);
        m.legs_.push_back(std::move(leg));
        return m;
    }

    /// g = legs[0] o legs[1] o ... (rightmost applied first)
    static FlowMap compose(std::vector<FlowMap> maps) {
        FlowMap m;
        for (auto& part : maps)
            for (auto& leg : part.legs_) m.legs_.push_back(std::move(leg));
        return m;
    }

    FlowMap inverse() const {
        FlowMap m;
        for (auto it = legs_.rbegin(); it != legs_.rend(); ++it) {
            FlowLeg leg = *it;
            for (auto& v : leg.vel.dfs) v = -v;
            for (auto& v : leg.vel.dft) v = -v;
            m.legs_.push_back(std::move(leg));
        }
        return m;
    }

    FlowPoint apply(double theta, double s) const {
        FlowPoint p{theta, s, 0.0, false};
        for (auto it = legs_.rbegin(); it != legs_.rend(); ++it)
            detail::integrate_leg(*it, p.theta, p.s, p.clamped);
        p.lift = p.theta - theta;
        return p;
    }

    FlowPoint apply_n(double theta, double s, int n) const {
        FlowPoint p{theta, s, 0.0, false};
        for (int k = 0; k < n; ++k) {
            bool cl = p.clamped;
            FlowPoint q = apply(p.theta, p.s);
            p = q;
            p.clamped = p.clamped || cl;
        }
        p.lift = p.theta - theta;
        return p;
    }

    const std::vector<FlowLeg>& legs() const { return legs_; }
    std::vector<FlowLeg>& legs() { return legs_; }

    /// effective fixed step of the slowest leg
    double integrator_step() const {
        double h = 0.0;
        for (auto& l : legs_) h = std::max(h, 1.0 / (double)l.steps_per_unit);
        return h;
    }

    double commute_error = -1.0;  // filled by make_g's verification

  private:
    std::vector<FlowLeg> legs_;
};

/// (d theta/dt, d s/dt) of the field at an interior point.
inline std::array<double, 2> hamiltonian_vector_field(const ScalarField& f, double theta,
                                                      double s) {
    if (!(s > 0.0 && s < 1.0))
        throw std::invalid_argument("hamiltonian_vector_field: point must be interior");
    return VelocityField(f).sample(theta, s);
}

/// Time-t map of the field applied to one point.
inline FlowPoint integrate(const ScalarField& f, double t, double theta, double s) {
    if (t < 0.0) throw std::invalid_argument("integrate: t must be nonnegative");
    return FlowMap::from_field(f, t).apply(theta, s);
}

// --- the paper's maps ------------------------------------------------------

/// f_T: time-T map of the s-profile field (rotates A by T).
inline FlowMap make_f(double T, const AnnulusGrid& grid) {
    return FlowMap::from_field(materialize(FieldSpec::make_linear_s(), grid), T);
}

/// phi_tau: time-tau map of the plateau bump (fixes D pointwise).
inline FlowMap make_phi(double tau, const AnnulusGrid& grid) {
    return FlowMap::from_field(materialize(FieldSpec::make_plateau_bump(0.8, 0.9), grid), tau);
}

/// Commutation discrepancy of two maps over a deterministic sample set.
inline double commutation_error(const FlowMap& a, const FlowMap& b, int n_samples = 24) {
    std::vector<double> errs(n_samples, 0.0);
    detail::parallel_for(n_samples, [&](int k) {
        // fixed low-discrepancy-ish points in the open annulus
        double theta = std::fmod(0.137 + 0.61803398875 * k, 1.0);
        double s = 0.04 + 0.92 * std::fmod(0.251 + 0.7548776662 * k, 1.0);
        auto pb = b.apply(theta, s);
        auto pa = a.apply(theta, s);
        auto ab = a.apply(pb.theta, pb.s);
        auto ba = b.apply(pa.theta, pa.s);
        double dt = std::fabs(detail::wrap_unit(ab.theta) - detail::wrap_unit(ba.theta));
        dt = std::min(dt, 1.0 - dt);
        errs[k] = std::hypot(dt, ab.s - ba.s);
    });
    double m = 0.0;
    for (double e : errs) m = std::max(m, e);
    return m;
}

/// g_{T,tau} = f_T o phi_tau.  Integer T makes f_T fix A pointwise, so the
/// legs commute; the constructor verifies this numerically on a sample set
/// and records the discrepancy.
inline FlowMap make_g(int T, int tau, const AnnulusGrid& grid, bool verify_commutation = true) {
    if (T < 0 || tau < 0) throw std::invalid_argument("make_g: T and tau must be >= 0");
    auto fT = make_f((double)T, grid);
    auto phi = make_phi((double)tau, grid);
    double err = verify_commutation ? commutation_error(fT, phi) : -1.0;
    FlowMap g = FlowMap::compose({std::move(fT), std::move(phi)});
    g.commute_error = err;
    return g;
}

// --- rotation numbers ------------------------------------------------------

struct RotationNumber {
    double value = 0.0;
    std::array<double, 2> point{0.0, 0.0};
    int trajectory_length = 0;
    bool converged = true;
    double residual = 0.0;  // Birkhoff-average change over the last doubling
};

constexpr double kRotationConvergenceTol = 1e-2;

/// Average angular displacement per application over n_iter applications.
inline RotationNumber rotation_number(const FlowMap& m, double theta, double s,
                                      int n_iter = 64) {
    if (n_iter < 1) throw std::invalid_argument("rotation_number: n_iter must be >= 1");
    RotationNumber r;
    r.point = {theta, s};
    r.trajectory_length = n_iter;
    int half = (n_iter + 1) / 2;
    double th = theta, ss = s, lift_half = 0.0;
    for (int k = 0; k < n_iter; ++k) {
        auto p = m.apply(th, ss);
        th = p.theta;
        ss = p.s;
        if (k + 1 == half) lift_half = th - theta;
    }
    double lift = th - theta;
    r.value = lift / n_iter;
    if (n_iter > 1) {
        r.residual = std::fabs(r.value - lift_half / half);
        r.converged = r.residual <= kRotationConvergenceTol;
    }
    return r;
}

// --- area preservation monitor ---------------------------------------------

/// Max relative area distortion of test quadrilaterals pushed through the
/// map.  The quads are infinitesimal: each one is transported by the exact
/// tangent flow of the integrator, and the distortion is |det J - 1|.  Quad
/// centers follow an R2 low-discrepancy sequence so thin features are
/// sampled in proportion to their area.
inline double area_preservation_error(const FlowMap& m, int n_test_cells) {
    int n = std::max(1, n_test_cells);
    std::vector<double> errs(n, 0.0);
    detail::parallel_for(n, [&](int idx) {
        double ct = std::fmod(0.5 + 0.7548776662466927 * (idx + 1), 1.0);
        double cs = 0.04 + 0.92 * std::fmod(0.5 + 0.5698402909980532 * (idx + 1), 1.0);
        detail::Mat2 J{1.0, 0.0, 0.0, 1.0};
        double log_scale = 0.0;
        bool clamped = false;
        const auto& legs = m.legs();
        for (auto it = legs.rbegin(); it != legs.rend(); ++it)
            detail::integrate_leg_variational(*it, ct, cs, J, log_scale, clamped);
        double det = (J[0] * J[3] - J[1] * J[2]) * std::exp(2.0 * log_scale);
        errs[idx] = std::fabs(det - 1.0);
    });
    double worst = 0.0;
    for (double e : errs) worst = std::max(worst, e);
    return worst;
}

}  // namespace reebqm
