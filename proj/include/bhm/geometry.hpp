#pragma once

// Closed boundary curves and the plate boundary operators.
//
// Every curve is stored as a trigonometric polynomial
//   x(t) = xc[0] + sum_k xc[k] cos(kt) + xs[k] sin(kt),   t in [0, 2pi),
// and likewise for y.  Circles and kite shapes are just particular
// coefficient sets, which keeps evaluation, derivatives and spectral
// differentiation uniform across shapes.  Curves must be parametrized
// counter-clockwise with a nowhere-vanishing tangent; the outward normal is
// then (y', -x') / |x'|.
//
// The two boundary operators of thin-plate bending with Poisson ratio nu:
//   M v = nu Lap v + (1 - nu) d^2 v / dn^2                    (bending moment)
//   N v = -d(Lap v)/dn - (1 - nu) d/ds [ N0 v ]               (transverse force)
// with the twisting term
//   N0 v = -[ (v_11 - v_22) n1 n2 - v_12 (n1^2 - n2^2) ].
// The arc-length derivative d/ds is realized two ways: exactly by the chain
// rule through the curve's first and second parameter derivatives (pointwise,
// needs a third-order jet), and spectrally on a full periodic grid of nodes.
// Polar forms of both operators are provided for circles centered at a given
// point; they agree with the Cartesian forms and serve as cross-checks and as
// trace operators on measurement circles.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "bhm/common.hpp"
#include "bhm/specfun.hpp"

namespace bhm {

struct Curve {
    // Coefficient k multiplies cos(kt) / sin(kt); index 0 of the sin arrays
    // is kept for alignment and must stay zero.
    std::vector<double> xcos, xsin, ycos, ysin;

    static Curve circle(Vec2 center, double radius) {
        if (!(radius > 0.0)) throw std::invalid_argument("Curve::circle: radius must be positive");
        Curve c;
        c.xcos = {center.x, radius};
        c.xsin = {0.0, 0.0};
        c.ycos = {center.y, 0.0};
        c.ysin = {0.0, radius};
        return c;
    }

    // Kite shape: center + scale * (cos t + 0.65 cos 2t - 0.65, 1.5 sin t).
    // At t = 0 the point is center + scale * (1, 0) and the loop runs
    // counter-clockwise.
    static Curve kite(Vec2 center, double scale) {
        if (!(scale > 0.0)) throw std::invalid_argument("Curve::kite: scale must be positive");
        Curve c;
        c.xcos = {center.x - 0.65 * scale, scale, 0.65 * scale};
        c.xsin = {0.0, 0.0, 0.0};
        c.ycos = {center.y, 0.0, 0.0};
        c.ysin = {0.0, 1.5 * scale, 0.0};
        return c;
    }

    static Curve trig(std::vector<double> xc, std::vector<double> xs,
                      std::vector<double> yc, std::vector<double> ys) {
        Curve c;
        c.xcos = std::move(xc);
        c.xsin = std::move(xs);
        c.ycos = std::move(yc);
        c.ysin = std::move(ys);
        if (c.xcos.empty() || c.ycos.empty())
            throw std::invalid_argument("Curve::trig: constant coefficients are required");
        c.xsin.resize(std::max(c.xcos.size(), c.xsin.size()), 0.0);
        c.xcos.resize(c.xsin.size(), 0.0);
        c.ysin.resize(std::max(c.ycos.size(), c.ysin.size()), 0.0);
        c.ycos.resize(c.ysin.size(), 0.0);
        if (c.xsin[0] != 0.0 || c.ysin[0] != 0.0)
            throw std::invalid_argument("Curve::trig: sin coefficient of order zero must be zero");
        return c;
    }
};

// Everything a quadrature or operator evaluation needs at one boundary point.
struct BoundaryNode {
    double t = 0.0;
    Vec2 x{};        // position
    Vec2 d1{};       // x'(t)
    Vec2 d2{};       // x''(t)
    double jac = 0.0;  // |x'(t)|
    Vec2 normal{};   // outward unit normal (y', -x') / jac
    double weight = 0.0;  // quadrature weight including the jacobian
};

inline BoundaryNode curve_eval(const Curve& c, double t) {
    BoundaryNode node;
    node.t = t;
    auto accumulate = [t](const std::vector<double>& cc, const std::vector<double>& cs,
                          double& v, double& v1, double& v2) {
        v = cc[0];
        v1 = 0.0;
        v2 = 0.0;
        for (std::size_t k = 1; k < cc.size(); ++k) {
            const double ck = std::cos(k * t), sk = std::sin(k * t);
            const double kk = static_cast<double>(k);
            v += cc[k] * ck + cs[k] * sk;
            v1 += kk * (cs[k] * ck - cc[k] * sk);
            v2 += kk * kk * (-cc[k] * ck - cs[k] * sk);
        }
    };
    double x, x1, x2, y, y1, y2;
    accumulate(c.xcos, c.xsin, x, x1, x2);
    accumulate(c.ycos, c.ysin, y, y1, y2);
    node.x = {x, y};
    node.d1 = {x1, y1};
    node.d2 = {x2, y2};
    node.jac = std::sqrt(x1 * x1 + y1 * y1);
    if (node.jac < 1e-12)
        throw std::domain_error("curve_eval: degenerate tangent (jacobian ~ 0)");
    node.normal = {y1 / node.jac, -x1 / node.jac};
    return node;
}

// Counter-clockwise orientation and a non-degenerate tangent are contract
// requirements; this samples densely enough for the trig degrees in use.
inline void validate_curve(const Curve& c) {
    const int n = 256;
    double area2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const BoundaryNode nd = curve_eval(c, 2.0 * pi * i / n);
        area2 += (nd.x.x * nd.d1.y - nd.x.y * nd.d1.x) * (2.0 * pi / n);
    }
    if (!(area2 > 0.0))
        throw std::invalid_argument("validate_curve: curve must run counter-clockwise");
}

// Centroid of the enclosed region, by the Green's-theorem boundary integrals
// A = (1/2)∮(x dy − y dx), Cx = (1/2A)∮x² dy, Cy = −(1/2A)∮y² dx.  Trapezoid
// sums are spectrally accurate here since the integrands are trigonometric.
inline Vec2 area_centroid(const Curve& c, int samples = 1024) {
    double a2 = 0.0, cx = 0.0, cy = 0.0;
    for (int i = 0; i < samples; ++i) {
        const BoundaryNode nd = curve_eval(c, 2.0 * pi * i / samples);
        a2 += nd.x.x * nd.d1.y - nd.x.y * nd.d1.x;
        cx += nd.x.x * nd.x.x * nd.d1.y;
        cy -= nd.x.y * nd.x.y * nd.d1.x;
    }
    if (!(std::abs(a2) > 1e-12))
        throw std::invalid_argument("area_centroid: degenerate curve");
    // The common grid spacing cancels in the ratios.
    return {cx / a2, cy / a2};
}

// Equispaced periodic nodes with trapezoid weights; spectrally accurate for
// the smooth closed curves used here.  n must be even (the spectral
// differentiation formula needs it) and at least 16.
inline std::vector<BoundaryNode> discretize(const Curve& c, int n) {
    if (n < 16 || n % 2 != 0)
        throw std::invalid_argument("discretize: node count must be even and at least 16");
    validate_curve(c);
    std::vector<BoundaryNode> nodes(n);
    for (int i = 0; i < n; ++i) {
        nodes[i] = curve_eval(c, 2.0 * pi * i / n);
        nodes[i].weight = (2.0 * pi / n) * nodes[i].jac;
    }
    return nodes;
}

// Derivative with respect to the parameter of a periodic grid function given
// at n equispaced nodes.  Uses the standard cotangent differentiation
// weights, exact for trigonometric polynomials of degree below n/2.
template <typename Scalar>
std::vector<Scalar> spectral_derivative(const std::vector<Scalar>& f) {
    const int n = static_cast<int>(f.size());
    if (n < 4 || n % 2 != 0)
        throw std::invalid_argument("spectral_derivative: need an even number (>= 4) of samples");
    const double h = 2.0 * pi / n;
    std::vector<double> w(n, 0.0);
    for (int m = 1; m < n; ++m)
        w[m] = 0.5 * ((m % 2) ? -1.0 : 1.0) / std::tan(0.5 * m * h);
    std::vector<Scalar> out(n);
    for (int j = 0; j < n; ++j) {
        Scalar acc{};
        for (int k = 0; k < n; ++k) {
            if (k == j) continue;
            const int m = ((j - k) % n + n) % n;
            acc += w[m] * f[k];
        }
        out[j] = acc;
    }
    return out;
}

// Bending moment M v at a point with outward normal n, from a second-order
// (or higher) jet.
inline cplx apply_M(const WaveParams& prm, const Jet3& v, Vec2 n) {
    const cplx lap = v.at(2, 0) + v.at(0, 2);
    const cplx dnn = v.at(2, 0) * n.x * n.x + 2.0 * v.at(1, 1) * n.x * n.y
                     + v.at(0, 2) * n.y * n.y;
    return prm.nu * lap + (1.0 - prm.nu) * dnn;
}

// Twisting term N0 v = -[(v_11 - v_22) n1 n2 - v_12 (n1^2 - n2^2)].
inline cplx twist_N0(const Jet3& v, Vec2 n) {
    return -((v.at(2, 0) - v.at(0, 2)) * n.x * n.y
             - v.at(1, 1) * (n.x * n.x - n.y * n.y));
}

// Transverse force N v at one boundary node by the chain rule: the
// arc-length derivative of N0 picks up both the spatial gradient of the
// second derivatives of v and the rotation of the normal along the curve.
// Requires a full third-order jet and the node's d1/d2.
inline cplx apply_N(const WaveParams& prm, const Jet3& v, const BoundaryNode& nd) {
    const Vec2 n = nd.normal;
    // -d(Lap v)/dn
    const cplx dn_lap = n.x * (v.at(3, 0) + v.at(1, 2)) + n.y * (v.at(2, 1) + v.at(0, 3));
    // d/dt of N0(v(x(t)), n(t)):
    const double J = nd.jac;
    const double Jp = (nd.d1.x * nd.d2.x + nd.d1.y * nd.d2.y) / J;
    const double n1p = nd.d2.y / J - nd.d1.y * Jp / (J * J);
    const double n2p = -nd.d2.x / J + nd.d1.x * Jp / (J * J);
    // spatial part: gradient of (v_11 - v_22) and of v_12 dotted with x'
    const cplx gA = (v.at(3, 0) - v.at(1, 2)) * nd.d1.x + (v.at(2, 1) - v.at(0, 3)) * nd.d1.y;
    const cplx gB = v.at(2, 1) * nd.d1.x + v.at(1, 2) * nd.d1.y;
    const cplx dt_N0 = -(gA * n.x * n.y
                         + (v.at(2, 0) - v.at(0, 2)) * (n1p * n.y + n.x * n2p)
                         - gB * (n.x * n.x - n.y * n.y)
                         - v.at(1, 1) * (2.0 * n.x * n1p - 2.0 * n.y * n2p));
    return -dn_lap - (1.0 - prm.nu) * dt_N0 / J;
}

// Same operator assembled spectrally on a full periodic grid: N0 is sampled
// at every node, differentiated in the parameter, and divided by the
// jacobian.  Cross-validates the chain-rule route.
inline std::vector<cplx> apply_N_spectral(const WaveParams& prm,
                                          const std::vector<Jet3>& jets,
                                          const std::vector<BoundaryNode>& nodes) {
    if (jets.size() != nodes.size())
        throw std::invalid_argument("apply_N_spectral: jets and nodes must align");
    const int n = static_cast<int>(nodes.size());
    std::vector<cplx> n0(n);
    for (int i = 0; i < n; ++i) n0[i] = twist_N0(jets[i], nodes[i].normal);
    const std::vector<cplx> dt = spectral_derivative(n0);
    std::vector<cplx> out(n);
    for (int i = 0; i < n; ++i) {
        const Jet3& v = jets[i];
        const Vec2 nm = nodes[i].normal;
        const cplx dn_lap = nm.x * (v.at(3, 0) + v.at(1, 2)) + nm.y * (v.at(2, 1) + v.at(0, 3));
        out[i] = -dn_lap - (1.0 - prm.nu) * dt[i] / nodes[i].jac;
    }
    return out;
}

// Polar derivative bundle of a field at x relative to a circle center.  All
// quantities are assembled from the Cartesian jet; r must be positive.
struct PolarJet {
    double r = 0.0;
    cplx wr{};        // dw/dr
    cplx wtheta{};    // dw/dtheta
    cplx lap{};       // Laplacian
    cplx dr_lap{};    // d(Lap w)/dr
    cplx wtheta2{};   // d^2 w / dtheta^2
    cplx q{};         // d^2 w/(dr dtheta) - (1/r) dw/dtheta
    cplx dtheta_q{};  // dq/dtheta
};

inline PolarJet polar_quantities(const Jet3& w, Vec2 x_rel) {
    const double x1 = x_rel.x, x2 = x_rel.y;
    const double r = std::sqrt(x1 * x1 + x2 * x2);
    if (r < 1e-12) throw std::domain_error("polar_quantities: point at the circle center");
    PolarJet p;
    p.r = r;
    const cplx w10 = w.at(1, 0), w01 = w.at(0, 1);
    const cplx w20 = w.at(2, 0), w11 = w.at(1, 1), w02 = w.at(0, 2);
    const cplx w30 = w.at(3, 0), w21 = w.at(2, 1), w12 = w.at(1, 2), w03 = w.at(0, 3);
    p.wr = (x1 * w10 + x2 * w01) / r;
    p.wtheta = -x2 * w10 + x1 * w01;
    p.lap = w20 + w02;
    p.dr_lap = (x1 * (w30 + w12) + x2 * (w21 + w03)) / r;
    p.wtheta2 = x2 * x2 * w20 - 2.0 * x1 * x2 * w11 + x1 * x1 * w02 - x1 * w10 - x2 * w01;
    p.q = (-x1 * x2 * w20 + (x1 * x1 - x2 * x2) * w11 + x1 * x2 * w02) / r;
    p.dtheta_q = ((x2 * x2 - x1 * x1) * (w20 - w02) - 4.0 * x1 * x2 * w11
                  + x1 * x2 * x2 * w30 + (x2 * x2 * x2 - 2.0 * x1 * x1 * x2) * w21
                  + (x1 * x1 * x1 - 2.0 * x1 * x2 * x2) * w12 + x1 * x1 * x2 * w03)
                 / r;
    return p;
}

// M and N on a circle about `center` through the polar identities
//   M w = Lap w - (1-nu) ( (1/r) w_r + (1/r^2) w_theta_theta )
//   N w = -d(Lap w)/dr - (1-nu) (1/r^2) d/dtheta [ w_{r theta} - (1/r) w_theta ].
inline cplx apply_M_polar(const WaveParams& prm, const Jet3& w, Vec2 x, Vec2 center) {
    const PolarJet p = polar_quantities(w, x - center);
    return p.lap - (1.0 - prm.nu) * (p.wr / p.r + p.wtheta2 / (p.r * p.r));
}

inline cplx apply_N_polar(const WaveParams& prm, const Jet3& w, Vec2 x, Vec2 center) {
    const PolarJet p = polar_quantities(w, x - center);
    return -p.dr_lap - (1.0 - prm.nu) * p.dtheta_q / (p.r * p.r);
}

// Winding-number test against a densely sampled polygon.  Points within a
// thin collar of the boundary count as outside, so exterior fields may be
// evaluated on the curve itself; the winding sum is ill-conditioned exactly
// there and well-conditioned everywhere else.
inline bool point_in_curve(const Curve& c, Vec2 p, int samples = 720) {
    double winding = 0.0;
    double seg_dist = std::numeric_limits<double>::infinity();
    BoundaryNode prev = curve_eval(c, 0.0);
    for (int i = 1; i <= samples; ++i) {
        const BoundaryNode cur = curve_eval(c, 2.0 * pi * i / samples);
        const double ax = prev.x.x - p.x, ay = prev.x.y - p.y;
        const double bx = cur.x.x - p.x, by = cur.x.y - p.y;
        winding += std::atan2(ax * by - ay * bx, ax * bx + ay * by);
        // distance from p to the segment prev-cur
        const double ex = cur.x.x - prev.x.x, ey = cur.x.y - prev.x.y;
        const double len2 = ex * ex + ey * ey;
        double s = len2 > 0.0 ? (-(ax * ex + ay * ey)) / len2 : 0.0;
        s = std::clamp(s, 0.0, 1.0);
        const double dx = ax + s * ex, dy = ay + s * ey;
        seg_dist = std::min(seg_dist, std::sqrt(dx * dx + dy * dy));
        prev = cur;
    }
    if (seg_dist < 1e-4) return false;
    return std::abs(winding) > pi;  // ~2 pi inside, ~0 outside
}

inline bool point_in_curves(const std::vector<Curve>& cs, Vec2 p) {
    for (const Curve& c : cs)
        if (point_in_curve(c, p)) return true;
    return false;
}

// Distance from p to the sampled boundary of a curve set (used for margin
// checks and localization metrics; sampling error is << the tolerances that
// consume it).
inline double distance_to_curves(const std::vector<Curve>& cs, Vec2 p, int samples = 1024) {
    double best = std::numeric_limits<double>::infinity();
    for (const Curve& c : cs) {
        for (int i = 0; i < samples; ++i) {
            const BoundaryNode nd = curve_eval(c, 2.0 * pi * i / samples);
            best = std::min(best, dist(nd.x, p));
        }
    }
    return best;
}

// Circular receiver/source arrays and the direction set for far-field data.
struct ArrayGeometry {
    double radius_rec = 10.0;
    double radius_src = 10.0;
    int n_rec = 128;
    int n_src = 128;
    int n_dir = 128;

    void check() const {
        if (!(radius_rec > 0.0) || !(radius_src > 0.0))
            throw std::invalid_argument("ArrayGeometry: radii must be positive");
        if (n_rec < 1 || n_src < 1 || n_dir < 1)
            throw std::invalid_argument("ArrayGeometry: counts must be positive");
    }
    double rec_angle(int i) const { return 2.0 * pi * i / n_rec; }
    double src_angle(int j) const { return 2.0 * pi * j / n_src; }
    double dir_angle(int k) const { return 2.0 * pi * k / n_dir; }
    Vec2 receiver(int i) const { return radius_rec * unit_dir(rec_angle(i)); }
    Vec2 source(int j) const { return radius_src * unit_dir(src_angle(j)); }
    Vec2 direction(int k) const { return unit_dir(dir_angle(k)); }
};

}  // namespace bhm
