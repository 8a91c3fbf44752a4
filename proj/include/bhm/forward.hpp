#pragma once

// Forward scattering of flexural plate waves by impenetrable obstacles.
//
// The field solves (Lap^2 - kappa^4) u = 0 outside the obstacles, which
// factors as (Lap + kappa^2)(Lap - kappa^2) u = 0, so every exterior
// solution splits into a propagating Helmholtz part and an evanescent
// modified-Helmholtz part.  Two boundary conditions hold on each obstacle,
// one pair per physical model:
//   clamped          u = 0,    du/dn = 0
//   simply supported u = 0,    M u   = 0
//   roller supported du/dn = 0, N u  = 0
//   free             M u = 0,  N u   = 0
// with the plate trace operators M, N from geometry.hpp.
//
// Two solvers are provided.  For a single circular obstacle the field is
// expanded in cylindrical modes about the circle center,
//   u^sc = sum_n [ alpha_n H_n(kappa rho) + beta_n K_n(kappa rho) ] e^{i n phi},
// and each |n| yields an independent 2x2 system.  For general shapes the
// method of fundamental solutions places source points on a shrunk copy of
// each boundary and represents the field by outgoing and evanescent kernels
// anchored there; the boundary conditions are enforced in the least-squares
// sense on a finer collocation grid through a rank-truncated SVD.
//
// Simulated measurements collect scattered-field traces on a receiver
// circle, far-field values on a direction set, or phaseless totals, for
// point-source or plane-wave excitations.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "bhm/common.hpp"
#include "bhm/geometry.hpp"
#include "bhm/specfun.hpp"

namespace bhm {

enum class BoundaryCondition { Clamped, SimplySupported, RollerSupported, Free };

inline const char* bc_name(BoundaryCondition bc) {
    switch (bc) {
        case BoundaryCondition::Clamped: return "clamped";
        case BoundaryCondition::SimplySupported: return "simply_supported";
        case BoundaryCondition::RollerSupported: return "roller_supported";
        case BoundaryCondition::Free: return "free";
    }
    return "?";
}

inline BoundaryCondition bc_from_name(const std::string& s) {
    if (s == "clamped") return BoundaryCondition::Clamped;
    if (s == "simply_supported") return BoundaryCondition::SimplySupported;
    if (s == "roller_supported") return BoundaryCondition::RollerSupported;
    if (s == "free") return BoundaryCondition::Free;
    throw std::invalid_argument("unknown boundary condition: " + s);
}

// Excitations: a plane wave exp(i kappa x.d), an outgoing point source
// Phi_kappa(., y), or the entire "regularized" excitation Im Phi_kappa(., z)
// = (1/4) J_0(kappa |x - z|), which stays finite at its own anchor point.
struct Incidence {
    enum class Kind { PlaneWave, PointSource, Regularized };
    Kind kind = Kind::PlaneWave;
    double theta = 0.0;  // propagation angle, PlaneWave only
    Vec2 point{};        // anchor, PointSource / Regularized only

    static Incidence plane(double theta) { return {Kind::PlaneWave, theta, {}}; }
    static Incidence source(Vec2 y) { return {Kind::PointSource, 0.0, y}; }
    static Incidence probe(Vec2 z) { return {Kind::Regularized, 0.0, z}; }
};

inline Jet3 plane_wave_jet(double kappa, Vec2 d, Vec2 x) {
    Jet3 j;
    const cplx c1 = cplx(0.0, kappa * d.x), c2 = cplx(0.0, kappa * d.y);
    const cplx u = std::exp(cplx(0.0, kappa * (x.x * d.x + x.y * d.y)));
    cplx p1[4] = {1.0, c1, c1 * c1, c1 * c1 * c1};
    cplx p2[4] = {1.0, c2, c2 * c2, c2 * c2 * c2};
    for (int a = 0; a <= 3; ++a)
        for (int b = 0; a + b <= 3; ++b)
            j.d[a][b] = p1[a] * p2[b] * u;
    return j;
}

// Jet of (1/4) J_0(kappa |x - z|).  The radial chain has removable 0/0
// ratios at the anchor, so small arguments go through the ascending series
// of S_n(q) = sum_m (-q)^m / (m! (m+n)!), q = (kappa r / 2)^2, for which all
// table entries are manifestly finite (at r = 0 the Hessian is
// -(kappa^2/8) I and the third derivatives vanish).
inline Jet3 regularized_jet(double kappa, Vec2 x, Vec2 z) {
    const double r = dist(x, z);
    const double zz = kappa * r;
    const Vec2 e = (r > 1e-300) ? (1.0 / r) * (x - z) : Vec2{1.0, 0.0};
    detail::RadialTable t;
    const cplx c{0.25, 0.0};
    if (zz < 0.5) {
        const double q = 0.25 * zz * zz;
        double s[3];
        for (int n = 0; n < 3; ++n) {
            double fact = 1.0;
            for (int k = 2; k <= n; ++k) fact *= k;  // n!
            double term = 1.0 / fact;                // m = 0 term of S_n
            double sum = term;
            for (int m = 1; m < 30; ++m) {
                term *= -q / (static_cast<double>(m) * (m + n));
                sum += term;
                if (std::abs(term) < 1e-18 * std::abs(sum)) break;
            }
            s[n] = sum;
        }
        const double k2 = kappa * kappa, k3 = k2 * kappa;
        t.f0 = c * s[0];
        t.f1 = -c * kappa * (0.5 * zz) * s[1];
        t.f1_over_r = -c * k2 * 0.5 * s[1];
        t.f2 = c * k2 * (0.25 * zz * zz * s[2] - 0.5 * s[1]);
        t.f3 = c * k3 * (0.5 * zz * s[1] - 0.25 * zz * s[2]);
        t.g = c * k3 * 0.25 * zz * s[2];
    } else {
        const double j0 = bessel_eval(Cyl::J, 0, zz);
        const double j1 = bessel_eval(Cyl::J, 1, zz);
        const double j2 = bessel_eval(Cyl::J, 2, zz);
        t = detail::radial_helmholtz_like(c, kappa, zz, j0, j1, j2);
    }
    return detail::radial_to_jet(t, e, r);
}

inline Jet3 incident_jet(const WaveParams& prm, const Incidence& inc, Vec2 x) {
    switch (inc.kind) {
        case Incidence::Kind::PlaneWave:
            return plane_wave_jet(prm.kappa, unit_dir(inc.theta), x);
        case Incidence::Kind::PointSource:
            return kernel_jet(KernelKind::Helmholtz, prm, x, inc.point);
        case Incidence::Kind::Regularized:
            return regularized_jet(prm.kappa, x, inc.point);
    }
    throw std::logic_error("incident_jet: unreachable");
}

struct Scene {
    WaveParams prm;
    std::vector<Curve> curves;  // may be empty (free propagation)
    BoundaryCondition bc = BoundaryCondition::Clamped;
    std::string name = "scene";

    void check() const {
        prm.check();
        for (const Curve& c : curves) validate_curve(c);
    }
};

// If the curve is exactly a circle (as produced by Curve::circle or an
// equivalent coefficient set), return its center and radius.
inline std::optional<std::pair<Vec2, double>> as_circle(const Curve& c) {
    auto degree = [](const std::vector<double>& a, const std::vector<double>& b) {
        std::size_t d = 0;
        for (std::size_t k = 1; k < std::max(a.size(), b.size()); ++k) {
            const double ca = k < a.size() ? a[k] : 0.0;
            const double cb = k < b.size() ? b[k] : 0.0;
            if (ca != 0.0 || cb != 0.0) d = k;
        }
        return d;
    };
    if (degree(c.xcos, c.xsin) != 1 || degree(c.ycos, c.ysin) != 1) return std::nullopt;
    const double r = c.xcos.size() > 1 ? c.xcos[1] : 0.0;
    const double ry = c.ysin.size() > 1 ? c.ysin[1] : 0.0;
    const double xs = c.xsin.size() > 1 ? c.xsin[1] : 0.0;
    const double yc = c.ycos.size() > 1 ? c.ycos[1] : 0.0;
    if (r <= 0.0 || r != ry || xs != 0.0 || yc != 0.0) return std::nullopt;
    return std::make_pair(Vec2{c.xcos[0], c.ycos[0]}, r);
}

namespace detail {

// Traces of the three radial mode families B_m(kappa rho) e^{i m phi} on the
// circle rho = a: value, radial derivative, and the two plate operators.
// For the J/H families Lap w = -kappa^2 w; for K, Lap w = +kappa^2 w.
enum class RadialFamily { J, H, K };

struct ModeTrace {
    cplx val, dn, M, N;
};

inline cplx cyl_value(RadialFamily fam, int m, double z) {
    switch (fam) {
        case RadialFamily::J: return bessel_eval(Cyl::J, m, z);
        case RadialFamily::H: return hankel1(m, z);
        case RadialFamily::K: return bessel_eval(Cyl::K, m, z);
    }
    throw std::logic_error("cyl_value: unreachable");
}

inline ModeTrace mode_trace(const WaveParams& prm, RadialFamily fam, int m, double a) {
    const double z = prm.kappa * a;
    const cplx val = cyl_value(fam, m, z);
    // d/dz of the cylinder function: B'_m = B_{m-1} - (m/z) B_m for J and H
    // (with B_{-1} = -B_1), and K'_m = -K_{m-1} - (m/z) K_m (K_{-1} = K_1).
    cplx deriv;
    if (fam == RadialFamily::K) {
        const cplx km1 = cyl_value(fam, m == 0 ? 1 : m - 1, z);
        deriv = -km1 - (static_cast<double>(m) / z) * val;
    } else if (m == 0) {
        deriv = -cyl_value(fam, 1, z);
    } else {
        deriv = cyl_value(fam, m - 1, z) - (static_cast<double>(m) / z) * val;
    }
    ModeTrace t;
    const double k2 = prm.kappa * prm.kappa;
    const double lapfac = (fam == RadialFamily::K) ? k2 : -k2;
    const double m2 = static_cast<double>(m) * m;
    t.val = val;
    t.dn = prm.kappa * deriv;
    t.M = lapfac * val - (1.0 - prm.nu) * (t.dn / a - m2 * val / (a * a));
    t.N = -lapfac * t.dn + (1.0 - prm.nu) * (m2 / (a * a)) * (t.dn - val / a);
    return t;
}

inline std::pair<cplx, cplx> bc_rows(BoundaryCondition bc, const ModeTrace& t) {
    switch (bc) {
        case BoundaryCondition::Clamped: return {t.val, t.dn};
        case BoundaryCondition::SimplySupported: return {t.val, t.M};
        case BoundaryCondition::RollerSupported: return {t.dn, t.N};
        case BoundaryCondition::Free: return {t.M, t.N};
    }
    throw std::logic_error("bc_rows: unreachable");
}

// (-i)^k for any integer k.
inline cplx neg_i_pow(int k) {
    switch (((k % 4) + 4) % 4) {
        case 0: return {1.0, 0.0};
        case 1: return {0.0, -1.0};
        case 2: return {-1.0, 0.0};
        default: return {0.0, 1.0};
    }
}

}  // namespace detail

struct ModalSolution {
    WaveParams prm;
    Vec2 center{};
    double radius = 0.0;
    int nmax = 0;
    std::vector<cplx> alpha, beta;  // order n stored at index n + nmax

    cplx a(int n) const { return alpha[static_cast<std::size_t>(n + nmax)]; }
    cplx b(int n) const { return beta[static_cast<std::size_t>(n + nmax)]; }
};

// Modal coefficients of the incident field about `center`: the expansion
// u^in = sum_n c_n J_n(kappa rho) e^{i n phi}.
inline std::vector<cplx> incident_mode_coefficients(const WaveParams& prm, const Incidence& inc,
                                                    Vec2 center, double radius, int nmax) {
    std::vector<cplx> c(2 * nmax + 1);
    auto signed_bessel = [](Cyl kind, int n, double t) {
        const int m = std::abs(n);
        const double v = bessel_eval(kind, m, t);
        return (n < 0 && (m & 1)) ? -v : v;
    };
    switch (inc.kind) {
        case Incidence::Kind::PlaneWave: {
            const Vec2 d = unit_dir(inc.theta);
            const cplx phase = std::exp(cplx(0.0, prm.kappa * dot(center, d)));
            for (int n = -nmax; n <= nmax; ++n)
                c[n + nmax] = phase * detail::neg_i_pow(-n)  // i^n
                              * std::exp(cplx(0.0, -n * inc.theta));
            break;
        }
        case Incidence::Kind::PointSource: {
            const Vec2 rel = inc.point - center;
            const double rho = norm(rel);
            if (rho <= radius)
                throw std::domain_error("incident_mode_coefficients: point source inside the obstacle");
            const double th = std::atan2(rel.y, rel.x);
            for (int n = -nmax; n <= nmax; ++n) {
                const int m = std::abs(n);
                cplx h = hankel1(m, prm.kappa * rho);
                if (n < 0 && (m & 1)) h = -h;
                c[n + nmax] = 0.25 * iu * h * std::exp(cplx(0.0, -n * th));
            }
            break;
        }
        case Incidence::Kind::Regularized: {
            const Vec2 rel = inc.point - center;
            const double rho = norm(rel);
            if (rho < 1e-14) {
                c[nmax] = 0.25;  // J_n(0) = delta_{n0}
                break;
            }
            const double th = std::atan2(rel.y, rel.x);
            for (int n = -nmax; n <= nmax; ++n)
                c[n + nmax] = 0.25 * signed_bessel(Cyl::J, n, prm.kappa * rho)
                              * std::exp(cplx(0.0, -n * th));
            break;
        }
    }
    return c;
}

// Solve the scattering problem for a single circular obstacle by separation
// of variables.  Each order couples one outgoing and one evanescent radial
// function through the two boundary conditions; the resulting 2x2 systems
// are solved with column equilibration, and a blow-up of the condition
// proxy reports an excluded wavenumber (possible for the free plate).
inline ModalSolution solve_circle_modes(const WaveParams& prm, Vec2 center, double radius,
                                        BoundaryCondition bc, const Incidence& inc) {
    prm.check();
    if (!(radius > 0.0)) throw std::invalid_argument("solve_circle_modes: radius must be positive");
    ModalSolution ms;
    ms.prm = prm;
    ms.center = center;
    ms.radius = radius;
    ms.nmax = static_cast<int>(std::ceil(prm.kappa * radius)) + 20;
    if (ms.nmax + 3 > 200)
        throw std::invalid_argument("solve_circle_modes: kappa * radius too large for the mode budget");
    ms.alpha.assign(2 * ms.nmax + 1, cplx{});
    ms.beta.assign(2 * ms.nmax + 1, cplx{});
    const auto c = incident_mode_coefficients(prm, inc, center, radius, ms.nmax);

    for (int m = 0; m <= ms.nmax; ++m) {
        const auto tj = detail::mode_trace(prm, detail::RadialFamily::J, m, radius);
        const auto th = detail::mode_trace(prm, detail::RadialFamily::H, m, radius);
        const auto tk = detail::mode_trace(prm, detail::RadialFamily::K, m, radius);
        const auto [h1, h2] = detail::bc_rows(bc, th);
        const auto [k1, k2] = detail::bc_rows(bc, tk);
        const auto [j1, j2] = detail::bc_rows(bc, tj);
        // Column equilibration keeps the 2x2 solve well scaled even when the
        // evanescent column is exponentially large in m.
        const double sh = std::max(std::abs(h1), std::abs(h2));
        const double sk = std::max(std::abs(k1), std::abs(k2));
        if (sh == 0.0 || sk == 0.0)
            throw std::runtime_error("solve_circle_modes: degenerate mode column");
        const cplx a11 = h1 / sh, a12 = k1 / sk, a21 = h2 / sh, a22 = k2 / sk;
        const cplx det = a11 * a22 - a12 * a21;
        const double frob2 = std::norm(a11) + std::norm(a12) + std::norm(a21) + std::norm(a22);
        if (!(frob2 < 1e12 * std::abs(det)))
            throw std::runtime_error(std::string("solve_circle_modes: boundary system singular at mode ")
                                     + std::to_string(m) + " (excluded wavenumber for the "
                                     + bc_name(bc) + " plate)");
        for (int n : {m, -m}) {
            if (n < 0 && m == 0) continue;
            // Signed orders reuse the |n| traces: J and H pick up (-1)^m,
            // K is even in its order.  With y1 = sgn sh alpha, y2 = sk beta
            // the system keeps the equilibrated matrix unchanged.
            const double sgn = (n < 0 && (m & 1)) ? -1.0 : 1.0;
            const cplx r1 = -c[n + ms.nmax] * sgn * j1;
            const cplx r2 = -c[n + ms.nmax] * sgn * j2;
            const cplx y1 = (r1 * a22 - a12 * r2) / det;
            const cplx y2 = (a11 * r2 - a21 * r1) / det;
            ms.alpha[n + ms.nmax] = sgn * y1 / sh;
            ms.beta[n + ms.nmax] = y2 / sk;
        }
    }
    return ms;
}

// Jet of the modal scattered field (or of its propagating part only) at an
// exterior point, assembled exactly through the ladder identities
//   (d1 + i d2) psi_n = -kappa psi_{n+1},
//   (d1 - i d2) psi_n = +kappa psi_{n-1}   (outgoing family),
// with both signs negative for the evanescent family.
inline Jet3 eval_scattered_jet(const ModalSolution& ms, Vec2 x, bool propagating_only = false) {
    const Vec2 rel = x - ms.center;
    const double rho = norm(rel);
    if (rho < ms.radius * (1.0 - 1e-12))
        throw std::domain_error("eval_scattered_jet: point inside the obstacle");
    const double kappa = ms.prm.kappa;
    const double z = kappa * rho;
    const double phi = std::atan2(rel.y, rel.x);
    const int top = ms.nmax + 3;

    std::vector<cplx> hv(top + 1);
    std::vector<double> kv(top + 1, 0.0);
    {
        std::vector<double> jv(top + 1), yv(top + 1);
        detail::bessel_jy_batch(top, z, jv.data(), yv.data());
        for (int m = 0; m <= top; ++m) hv[m] = {jv[m], yv[m]};
    }
    if (!propagating_only) {
        bool sat = false;
        detail::bessel_k_batch(top, z, kv.data(), &sat);  // underflow far out is benign
        if (sat) throw std::range_error("eval_scattered_jet: evanescent mode overflow");
    }
    std::vector<cplx> eip(2 * top + 1);  // e^{i m phi}, m = -top..top
    {
        const cplx step = std::exp(cplx(0.0, phi));  // rotation ladder; drift ~ top*eps
        eip[top] = 1.0;
        for (int m = 1; m <= top; ++m) {
            eip[top + m] = eip[top + m - 1] * step;
            eip[top - m] = std::conj(eip[top + m]);
        }
    }
    auto psi_h = [&](int m) {
        const int mm = std::abs(m);
        cplx v = hv[mm] * eip[m + top];
        return (m < 0 && (mm & 1)) ? -v : v;
    };
    auto psi_k = [&](int m) { return kv[std::abs(m)] * eip[m + top]; };

    static const double binom[4][4] = {
        {1, 0, 0, 0}, {1, 1, 0, 0}, {1, 2, 1, 0}, {1, 3, 3, 1}};
    Jet3 jet;
    const double kp[4] = {1.0, kappa, kappa * kappa, kappa * kappa * kappa};
    cplx ph[7], pk[7];  // psi at orders n-3 .. n+3, refreshed per mode
    for (int n = -ms.nmax; n <= ms.nmax; ++n) {
        const cplx an = ms.a(n);
        const cplx bn = propagating_only ? cplx{} : ms.b(n);
        if (an == cplx{} && bn == cplx{}) continue;
        const bool with_k = bn != cplx{};
        for (int s = -3; s <= 3; ++s) {
            ph[s + 3] = psi_h(n + s);
            if (with_k) pk[s + 3] = psi_k(n + s);
        }
        for (int a = 0; a <= 3; ++a) {
            for (int b = 0; a + b <= 3; ++b) {
                cplx sum_h{}, sum_k{};
                for (int j = 0; j <= a; ++j) {
                    for (int k = 0; k <= b; ++k) {
                        const double w = binom[a][j] * binom[b][k]
                                         * (((b - k) & 1) ? -1.0 : 1.0);
                        const int p = j + k;             // ladder-up count
                        const int shift = 2 * p - (a + b);
                        const double sh = (p & 1) ? -w : w;       // (-1)^p for H
                        sum_h += sh * ph[shift + 3];
                        if (with_k) sum_k += w * pk[shift + 3];
                    }
                }
                // d1^a d2^b = kappa^{a+b} / (2^{a+b} i^b) * sums, and
                // i^{-b} = (-i)^b; the K family carries a uniform (-1)^{a+b}.
                const cplx fac = kp[a + b] / std::pow(2.0, a + b) * detail::neg_i_pow(b);
                jet.d[a][b] += fac * (an * sum_h + (((a + b) & 1) ? -1.0 : 1.0) * bn * sum_k);
            }
        }
    }
    return jet;
}

inline cplx eval_farfield(const ModalSolution& ms, double theta) {
    const Vec2 xh = unit_dir(theta);
    const cplx phase = std::exp(cplx(0.0, -ms.prm.kappa * dot(xh, ms.center)));
    cplx sum{};
    for (int n = -ms.nmax; n <= ms.nmax; ++n)
        sum += 4.0 * detail::neg_i_pow(n + 1) * ms.a(n) * std::exp(cplx(0.0, n * theta));
    return phase * sum;
}

// ---------------------------------------------------------------------------
// Method of fundamental solutions.

// Where the fictitious sources go, per curve.  A uniformly shrunk copy of the
// boundary is the classic choice and is excellent for circles, but it stalls
// on non-convex curves (the shrunk copy pulls away from concave parts faster
// than the field's interior continuation allows).  There the sources follow
// the boundary at a small inward-normal depth instead.  Auto picks per curve.
enum class SourcePlacement { Auto, ScaledCopy, NormalOffset };

struct MfsConfig {
    int sources_per_curve = 96;
    int collocation_per_curve = 256;
    SourcePlacement placement = SourcePlacement::Auto;
    double offset = 0.8;        // ScaledCopy: shrink factor in (0, 1)
    double depth_factor = 2.0;  // NormalOffset: depth = factor * local node spacing
    double svd_rtol = 1e-13;    // relative singular value cutoff
    double residual_tol = 1e-3; // boundary residual that still counts as solved

    void check() const {
        if (!(offset > 0.0 && offset < 1.0))
            throw std::invalid_argument("MfsConfig: offset must lie strictly inside (0, 1)");
        if (!(depth_factor > 0.0))
            throw std::invalid_argument("MfsConfig: depth factor must be positive");
        if (sources_per_curve < 8)
            throw std::invalid_argument("MfsConfig: at least 8 sources per curve");
        if (collocation_per_curve < 2 * sources_per_curve)
            throw std::invalid_argument("MfsConfig: collocation must oversample sources at least 2x");
        if (collocation_per_curve % 2 != 0 || sources_per_curve % 2 != 0)
            throw std::invalid_argument("MfsConfig: counts must be even");
        if (!(svd_rtol > 0.0) || !(residual_tol > 0.0))
            throw std::invalid_argument("MfsConfig: tolerances must be positive");
    }
};

struct MfsSolution {
    WaveParams prm;
    std::vector<Curve> curves;
    std::vector<Vec2> sources;
    std::vector<cplx> coef_h;  // outgoing kernel weights
    std::vector<cplx> coef_k;  // evanescent kernel weights
    double residual = 0.0;     // relative boundary residual at the collocation nodes
};

inline Jet3 eval_scattered_jet(const MfsSolution& sol, Vec2 x, bool propagating_only = false) {
    if (point_in_curves(sol.curves, x))
        throw std::domain_error("eval_scattered_jet: point inside the obstacle");
    Jet3 jet;
    for (std::size_t j = 0; j < sol.sources.size(); ++j) {
        Jet3 h = kernel_jet(KernelKind::Helmholtz, sol.prm, x, sol.sources[j]);
        h *= sol.coef_h[j];
        jet += h;
        if (!propagating_only && sol.coef_k[j] != cplx{}) {
            Jet3 k = kernel_jet(KernelKind::ModifiedHelmholtz, sol.prm, x, sol.sources[j]);
            k *= sol.coef_k[j];
            jet += k;
        }
    }
    return jet;
}

inline cplx eval_farfield(const MfsSolution& sol, double theta) {
    // Far field of Phi_kappa(., y) is exp(-i kappa xhat . y); the evanescent
    // kernel contributes nothing.
    const Vec2 xh = unit_dir(theta);
    cplx sum{};
    for (std::size_t j = 0; j < sol.sources.size(); ++j)
        sum += sol.coef_h[j] * std::exp(cplx(0.0, -sol.prm.kappa * dot(xh, sol.sources[j])));
    return sum;
}

class MfsSolver {
  public:
    MfsSolver(Scene scene, MfsConfig cfg = {}) : scene_(std::move(scene)), cfg_(cfg) {
        scene_.check();
        cfg_.check();
        if (scene_.curves.empty())
            throw std::invalid_argument("MfsSolver: scene has no obstacles");
        build();
    }

    const Scene& scene() const { return scene_; }

    MfsSolution solve(const Incidence& inc) const {
        const int nc = static_cast<int>(colloc_.size());
        Eigen::VectorXcd rhs(2 * nc);
        for (int i = 0; i < nc; ++i) {
            const Jet3 uin = incident_jet(scene_.prm, inc, colloc_[i].x);
            const auto [b1, b2] = apply_bc(uin, colloc_[i]);
            rhs(2 * i) = -b1 / row_scale_[0];
            rhs(2 * i + 1) = -b2 / row_scale_[1];
        }
        Eigen::VectorXcd y = svd_.solve(rhs);
        MfsSolution sol;
        sol.prm = scene_.prm;
        sol.curves = scene_.curves;
        sol.sources = sources_;
        const int ns = static_cast<int>(sources_.size());
        sol.coef_h.resize(ns);
        sol.coef_k.resize(ns);
        for (int j = 0; j < ns; ++j) {
            sol.coef_h[j] = y(2 * j) / col_scale_[2 * j];
            sol.coef_k[j] = y(2 * j + 1) / col_scale_[2 * j + 1];
        }
        sol.residual = boundary_residual(sol, inc);
        if (sol.residual > cfg_.residual_tol)
            throw std::runtime_error("MfsSolver: boundary residual "
                                     + std::to_string(sol.residual) + " exceeds tolerance "
                                     + std::to_string(cfg_.residual_tol));
        return sol;
    }

    // Relative boundary residual of a candidate solution at the collocation
    // nodes, per operator block (the two blocks carry different powers of
    // kappa, so a joint norm would let one block hide the other).
    double boundary_residual(const MfsSolution& sol, const Incidence& inc) const {
        const int nc = static_cast<int>(colloc_.size());
        Eigen::VectorXcd coef(2 * static_cast<int>(sources_.size()));
        for (std::size_t j = 0; j < sources_.size(); ++j) {
            coef(2 * j) = sol.coef_h[j];
            coef(2 * j + 1) = sol.coef_k[j];
        }
        Eigen::VectorXcd bu = raw_matrix_ * coef;
        double num[2] = {0.0, 0.0}, den[2] = {0.0, 0.0};
        for (int i = 0; i < nc; ++i) {
            const Jet3 uin = incident_jet(scene_.prm, inc, colloc_[i].x);
            const auto [b1, b2] = apply_bc(uin, colloc_[i]);
            num[0] = std::max(num[0], std::abs(bu(2 * i) + b1));
            num[1] = std::max(num[1], std::abs(bu(2 * i + 1) + b2));
            den[0] = std::max(den[0], std::abs(b1));
            den[1] = std::max(den[1], std::abs(b2));
        }
        const double floor_ = std::max({den[0], den[1], 1e-300});
        return std::max(num[0] / std::max(den[0], 1e-6 * floor_),
                        num[1] / std::max(den[1], 1e-6 * floor_));
    }

  private:
    std::pair<cplx, cplx> apply_bc(const Jet3& jet, const BoundaryNode& nd) const {
        switch (scene_.bc) {
            case BoundaryCondition::Clamped:
                return {jet.val(), jet_dn(jet, nd.normal)};
            case BoundaryCondition::SimplySupported:
                return {jet.val(), apply_M(scene_.prm, jet, nd.normal)};
            case BoundaryCondition::RollerSupported:
                return {jet_dn(jet, nd.normal), apply_N(scene_.prm, jet, nd)};
            case BoundaryCondition::Free:
                return {apply_M(scene_.prm, jet, nd.normal), apply_N(scene_.prm, jet, nd)};
        }
        throw std::logic_error("apply_bc: unreachable");
    }

    void place_sources(const Curve& c) {
        SourcePlacement how = cfg_.placement;
        if (how == SourcePlacement::Auto)
            how = as_circle(c) ? SourcePlacement::ScaledCopy : SourcePlacement::NormalOffset;
        const int ns = cfg_.sources_per_curve;
        const double h = 2.0 * pi / ns;
        if (how == SourcePlacement::ScaledCopy) {
            const Vec2 center = area_centroid(c);
            if (!point_in_curve(c, center))
                throw std::invalid_argument("MfsSolver: curve centroid is not interior");
            for (int j = 0; j < ns; ++j) {
                const Vec2 yj = center + cfg_.offset * (curve_eval(c, j * h).x - center);
                if (!point_in_curve(c, yj))
                    throw std::invalid_argument("MfsSolver: source placement left the obstacle");
                sources_.push_back(yj);
            }
        } else {
            for (int j = 0; j < ns; ++j) {
                const BoundaryNode nd = curve_eval(c, j * h);
                const Vec2 yj = nd.x - (cfg_.depth_factor * nd.jac * h) * nd.normal;
                if (!point_in_curve(c, yj))
                    throw std::invalid_argument("MfsSolver: source placement left the obstacle");
                sources_.push_back(yj);
            }
        }
    }

    void build() {
        for (const Curve& c : scene_.curves) {
            place_sources(c);
            const auto nodes = discretize(c, cfg_.collocation_per_curve);
            colloc_.insert(colloc_.end(), nodes.begin(), nodes.end());
        }
        const int nc = static_cast<int>(colloc_.size());
        const int ns = static_cast<int>(sources_.size());
        raw_matrix_.resize(2 * nc, 2 * ns);
        for (int i = 0; i < nc; ++i) {
            for (int j = 0; j < ns; ++j) {
                const Jet3 h = kernel_jet(KernelKind::Helmholtz, scene_.prm, colloc_[i].x, sources_[j]);
                const Jet3 k = kernel_jet(KernelKind::ModifiedHelmholtz, scene_.prm, colloc_[i].x, sources_[j]);
                const auto [h1, h2] = apply_bc(h, colloc_[i]);
                const auto [k1, k2] = apply_bc(k, colloc_[i]);
                raw_matrix_(2 * i, 2 * j) = h1;
                raw_matrix_(2 * i, 2 * j + 1) = k1;
                raw_matrix_(2 * i + 1, 2 * j) = h2;
                raw_matrix_(2 * i + 1, 2 * j + 1) = k2;
            }
        }
        Eigen::MatrixXcd A = raw_matrix_;

        // Equilibrate: one scale per boundary-operator row block (the two
        // operators differ by powers of kappa), then unit-max columns.
        row_scale_[0] = row_scale_[1] = 0.0;
        for (int i = 0; i < nc; ++i) {
            row_scale_[0] = std::max(row_scale_[0], A.row(2 * i).cwiseAbs().maxCoeff());
            row_scale_[1] = std::max(row_scale_[1], A.row(2 * i + 1).cwiseAbs().maxCoeff());
        }
        if (row_scale_[0] == 0.0 || row_scale_[1] == 0.0)
            throw std::runtime_error("MfsSolver: degenerate boundary operator block");
        for (int i = 0; i < nc; ++i) {
            A.row(2 * i) /= row_scale_[0];
            A.row(2 * i + 1) /= row_scale_[1];
        }
        col_scale_.assign(2 * ns, 1.0);
        for (int j = 0; j < 2 * ns; ++j) {
            const double s = A.col(j).cwiseAbs().maxCoeff();
            if (s > 0.0) {
                col_scale_[j] = s;
                A.col(j) /= s;
            }
        }
        svd_.compute(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
        svd_.setThreshold(cfg_.svd_rtol);
    }

    Scene scene_;
    MfsConfig cfg_;
    std::vector<BoundaryNode> colloc_;
    std::vector<Vec2> sources_;
    Eigen::MatrixXcd raw_matrix_;
    Eigen::BDCSVD<Eigen::MatrixXcd> svd_;
    double row_scale_[2] = {1.0, 1.0};
    std::vector<double> col_scale_;
};

// ---------------------------------------------------------------------------
// Unified front end.

enum class ForwardBackend { Auto, Modal, Mfs };

struct ZeroSolution {};

class ForwardSolution {
  public:
    ForwardSolution(ZeroSolution z, WaveParams prm, Incidence inc)
        : impl_(z), prm_(prm), inc_(inc) {}
    ForwardSolution(ModalSolution ms, Incidence inc)
        : impl_(std::move(ms)), inc_(inc) {
        prm_ = std::get<ModalSolution>(impl_).prm;
    }
    ForwardSolution(MfsSolution ms, Incidence inc)
        : impl_(std::move(ms)), inc_(inc) {
        prm_ = std::get<MfsSolution>(impl_).prm;
    }

    const WaveParams& params() const { return prm_; }
    const Incidence& incidence() const { return inc_; }

    Jet3 scattered_jet(Vec2 x) const {
        if (std::holds_alternative<ZeroSolution>(impl_)) return Jet3{};
        if (const auto* m = std::get_if<ModalSolution>(&impl_)) return eval_scattered_jet(*m, x);
        return eval_scattered_jet(std::get<MfsSolution>(impl_), x);
    }

    // Jet of the propagating (Helmholtz) component u^pr of the scattered
    // field; the full field satisfies u^sc = u^pr + evanescent remainder.
    Jet3 propagating_jet(Vec2 x) const {
        if (std::holds_alternative<ZeroSolution>(impl_)) return Jet3{};
        if (const auto* m = std::get_if<ModalSolution>(&impl_))
            return eval_scattered_jet(*m, x, true);
        return eval_scattered_jet(std::get<MfsSolution>(impl_), x, true);
    }

    Jet3 total_jet(Vec2 x) const {
        Jet3 j = scattered_jet(x);
        j += incident_jet(prm_, inc_, x);
        return j;
    }

    cplx farfield(double theta) const {
        if (std::holds_alternative<ZeroSolution>(impl_)) return {};
        if (const auto* m = std::get_if<ModalSolution>(&impl_)) return eval_farfield(*m, theta);
        return eval_farfield(std::get<MfsSolution>(impl_), theta);
    }

    const ModalSolution* modal() const { return std::get_if<ModalSolution>(&impl_); }
    const MfsSolution* mfs() const { return std::get_if<MfsSolution>(&impl_); }

  private:
    std::variant<ZeroSolution, ModalSolution, MfsSolution> impl_;
    WaveParams prm_;
    Incidence inc_;
};

class ForwardEngine {
  public:
    explicit ForwardEngine(Scene scene, ForwardBackend backend = ForwardBackend::Auto,
                           MfsConfig cfg = {})
        : scene_(std::move(scene)) {
        scene_.check();
        const bool single_circle = scene_.curves.size() == 1 && as_circle(scene_.curves[0]);
        switch (backend) {
            case ForwardBackend::Auto:
                backend_ = scene_.curves.empty() ? ForwardBackend::Auto  // zero-field case
                           : single_circle ? ForwardBackend::Modal
                                           : ForwardBackend::Mfs;
                break;
            case ForwardBackend::Modal:
                if (!single_circle)
                    throw std::invalid_argument("ForwardEngine: modal backend needs a single circle");
                backend_ = ForwardBackend::Modal;
                break;
            case ForwardBackend::Mfs:
                backend_ = ForwardBackend::Mfs;
                break;
        }
        if (backend_ == ForwardBackend::Modal) {
            const auto c = as_circle(scene_.curves[0]);
            center_ = c->first;
            radius_ = c->second;
        } else if (backend_ == ForwardBackend::Mfs && !scene_.curves.empty()) {
            mfs_ = std::make_shared<MfsSolver>(scene_, cfg);
        }
    }

    const Scene& scene() const { return scene_; }

    ForwardSolution solve(const Incidence& inc) const {
        if (scene_.curves.empty())
            return ForwardSolution(ZeroSolution{}, scene_.prm, inc);
        if (backend_ == ForwardBackend::Modal)
            return ForwardSolution(
                solve_circle_modes(scene_.prm, center_, radius_, scene_.bc, inc), inc);
        return ForwardSolution(mfs_->solve(inc), inc);
    }

  private:
    Scene scene_;
    ForwardBackend backend_ = ForwardBackend::Auto;
    Vec2 center_{};
    double radius_ = 0.0;
    std::shared_ptr<const MfsSolver> mfs_;
};

// ---------------------------------------------------------------------------
// Boundary traces and integral-identity helpers.

struct BoundaryTraces {
    std::vector<cplx> val, dn, M, N;
};

template <typename FieldJet>
BoundaryTraces boundary_traces(const WaveParams& prm, const std::vector<BoundaryNode>& nodes,
                               FieldJet&& jet_at) {
    BoundaryTraces tr;
    const std::size_t n = nodes.size();
    tr.val.resize(n);
    tr.dn.resize(n);
    tr.M.resize(n);
    tr.N.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Jet3 j = jet_at(nodes[i].x);
        tr.val[i] = j.val();
        tr.dn[i] = jet_dn(j, nodes[i].normal);
        tr.M[i] = apply_M(prm, j, nodes[i].normal);
        tr.N[i] = apply_N(prm, j, nodes[i]);
    }
    return tr;
}

// Exterior representation of a radiating field from its boundary traces:
//   u(x) = int_Gamma [ N u . G(x,.) + M u . dG/dn - du/dn . M_y G - u . N_y G ] ds.
// The y-operators act on the second kernel argument through the symmetry of
// G.  Valid for x outside the closed curve carrying the nodes.
inline cplx green_representation(const WaveParams& prm, const std::vector<BoundaryNode>& nodes,
                                 const BoundaryTraces& tr, Vec2 x) {
    cplx acc{};
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const Jet3 g = kernel_jet(KernelKind::BiharmonicG, prm, nodes[i].x, x);
        const cplx gval = g.val();
        const cplx gdn = jet_dn(g, nodes[i].normal);
        const cplx gM = apply_M(prm, g, nodes[i].normal);
        const cplx gN = apply_N(prm, g, nodes[i]);
        acc += (tr.N[i] * gval + tr.M[i] * gdn - tr.dn[i] * gM - tr.val[i] * gN)
               * nodes[i].weight;
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Simulated measurement data.

enum class DataKind {
    ScatteredField,    // u^sc at the receivers
    NormalDerivative,  // du^sc/dn on the receiver circle
    BendingTrace,      // M u^sc on the receiver circle
    TransverseTrace,   // N u^sc on the receiver circle
    FarField,          // far-field pattern on the direction set
    AbsTotal           // |u^in + u^sc| at the receivers (phaseless)
};

inline const char* data_kind_tag(DataKind k) {
    switch (k) {
        case DataKind::ScatteredField: return "usc";
        case DataKind::NormalDerivative: return "dnusc";
        case DataKind::BendingTrace: return "Musc";
        case DataKind::TransverseTrace: return "Nusc";
        case DataKind::FarField: return "uinf";
        case DataKind::AbsTotal: return "abstotal";
    }
    return "?";
}

inline DataKind data_kind_from_tag(const std::string& s) {
    for (DataKind k : {DataKind::ScatteredField, DataKind::NormalDerivative,
                       DataKind::BendingTrace, DataKind::TransverseTrace, DataKind::FarField,
                       DataKind::AbsTotal})
        if (s == data_kind_tag(k)) return k;
    throw std::invalid_argument("unknown data kind tag: " + s);
}

enum class ExcitationKind { PointSources, PlaneWaves };

inline const char* excitation_tag(ExcitationKind e) {
    return e == ExcitationKind::PointSources ? "point" : "plane";
}

inline ExcitationKind excitation_from_tag(const std::string& s) {
    if (s == "point") return ExcitationKind::PointSources;
    if (s == "plane") return ExcitationKind::PlaneWaves;
    throw std::invalid_argument("unknown excitation tag: " + s);
}

struct DataMatrix {
    DataKind kind = DataKind::ScatteredField;
    ExcitationKind excitation = ExcitationKind::PointSources;
    int rows = 0, cols = 0;
    double kappa = 0.0, nu = 0.0;
    double radius_rec = 0.0, radius_src = 0.0;
    std::vector<cplx> a;  // row-major

    cplx& at(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
    const cplx& at(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }
};

// Synthesize one measurement matrix: columns enumerate excitations (point
// sources on the source circle, or plane-wave directions), rows enumerate
// receivers (or observation directions for far-field data).  Solves are
// independent across columns and run in parallel.
inline DataMatrix simulate(const ForwardEngine& eng, const ArrayGeometry& arr, DataKind kind,
                           ExcitationKind exc) {
    arr.check();
    const Scene& scene = eng.scene();
    if (kind == DataKind::AbsTotal && exc != ExcitationKind::PointSources)
        throw std::invalid_argument("simulate: phaseless totals are defined for point-source excitation");
    // The measurement circles must enclose the scene with clearance.
    double extent = 0.0;
    for (const Curve& c : scene.curves)
        for (int i = 0; i < 256; ++i)
            extent = std::max(extent, norm(curve_eval(c, 2.0 * pi * i / 256).x));
    const bool uses_receivers = kind != DataKind::FarField;
    if (uses_receivers && arr.radius_rec < extent + 0.5)
        throw std::invalid_argument("simulate: receiver circle does not enclose the scene");
    if (exc == ExcitationKind::PointSources && arr.radius_src < extent + 0.5)
        throw std::invalid_argument("simulate: source circle does not enclose the scene");

    DataMatrix dm;
    dm.kind = kind;
    dm.excitation = exc;
    dm.rows = uses_receivers ? arr.n_rec : arr.n_dir;
    dm.cols = exc == ExcitationKind::PointSources ? arr.n_src : arr.n_dir;
    dm.kappa = scene.prm.kappa;
    dm.nu = scene.prm.nu;
    dm.radius_rec = arr.radius_rec;
    dm.radius_src = arr.radius_src;
    dm.a.assign(static_cast<std::size_t>(dm.rows) * dm.cols, cplx{});

    parallel_for(dm.cols, [&](int j) {
        const Incidence inc = exc == ExcitationKind::PointSources
                                  ? Incidence::source(arr.source(j))
                                  : Incidence::plane(arr.dir_angle(j));
        const ForwardSolution sol = eng.solve(inc);
        for (int i = 0; i < dm.rows; ++i) {
            cplx v{};
            switch (kind) {
                case DataKind::FarField:
                    v = sol.farfield(arr.dir_angle(i));
                    break;
                case DataKind::AbsTotal: {
                    const Vec2 xr = arr.receiver(i);
                    if (dist(xr, inc.point) < 1e-9) {
                        v = 0.0;  // coincident receiver/source: masked entry
                        break;
                    }
                    const Jet3 jt = sol.total_jet(xr);
                    v = std::abs(jt.val());
                    break;
                }
                default: {
                    const Vec2 xr = arr.receiver(i);
                    const Jet3 js = sol.scattered_jet(xr);
                    if (kind == DataKind::ScatteredField) {
                        v = js.val();
                    } else if (kind == DataKind::NormalDerivative) {
                        v = jet_dn(js, (1.0 / norm(xr)) * xr);
                    } else if (kind == DataKind::BendingTrace) {
                        v = apply_M_polar(scene.prm, js, xr, Vec2{0.0, 0.0});
                    } else {
                        v = apply_N_polar(scene.prm, js, xr, Vec2{0.0, 0.0});
                    }
                    break;
                }
            }
            dm.at(i, j) = v;
        }
    });
    return dm;
}

}  // namespace bhm
