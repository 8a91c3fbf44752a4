#ifndef BHM_VALIDATE_HPP
#define BHM_VALIDATE_HPP

// The numbered validation suite: fourteen end-to-end checks covering the
// special-function layer through full reconstructions, each with its pinned
// tolerance, plus a sign-convention spot check that re-derives every
// indicator from its printed formula (so a flipped prefactor anywhere in the
// imaging table fails loudly).  Failures are report rows, never exceptions.
//
// Full level runs the published sizes.  Fast level shrinks data matrices,
// grids, and direction counts roughly 4x for a sub-minute smoke pass; every
// shrunk count keeps the periodic-trapezoid aliasing terms below 1e-5 (the
// bound is N > 2 kappa max|z| plus margin, checked against Bessel decay), so
// a fast failure means the same thing as a full failure.

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "bhm/experiment.hpp"

namespace bhm {

enum class ValidateLevel { Fast, Full };

namespace detail {

struct SuiteKnobs {
    int fh_dirs;                     // 01: direction count
    int green_nodes;                 // 03: boundary nodes
    int flux_nodes, flux_dirs;       // 05
    int corr_stride;                 // 07: probe-pair stride over the 3x3 cloud
    int oracle_data_dirs, oracle_dirs;  // 08
    int ex_data, ex_grid, ex_ndir;   // 09/10: array counts and grid resolution
    double ex_win;                   // 09/10: grid half-width
    int ex11_data, ex11_grid;        // 11
    double ex11_win;
    int pg_lo, pg_hi, pg_grid;       // 12: array counts at R=10 / R=20
    int decay_n;                     // 13
    int det_data, det_grid;          // 14
};

inline SuiteKnobs suite_knobs(ValidateLevel lv) {
    if (lv == ValidateLevel::Full)
        return {512, 512, 512, 512, 1, 128, 256, 128, 121, 128, 6.0,
                128,  121, 6.0, 512, 1024, 21,  64,  32,  21};
    return {128, 128, 128, 128, 4, 48, 128, 64, 27, 64, 2.5,
            96,  37,  4.5, 256, 512, 11, 64, 32, 21};
}

template <typename Fn>
inline CheckResult timed_check(const std::string& name, double tol, Fn&& body) {
    CheckResult cr{name, 0.0, tol, false, 0.0};
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(cr);
    } catch (const std::exception& e) {
        cr.pass = false;
        cr.measured = std::numeric_limits<double>::quiet_NaN();
        cr.name += std::string(" [error: ") + e.what() + "]";
    }
    cr.seconds = seconds_since(t0);
    return cr;
}

inline void apply_time_cap(CheckResult& cr, double limit) {
    if (!(cr.seconds < limit)) cr.pass = false;
}

inline cplx point_kernel(double kappa, Vec2 a, Vec2 b) { return phi0(kappa, a, b); }

inline double bessel_kernel(double kappa, Vec2 a, Vec2 b) {
    const double r = dist(a, b);
    // continued through coincidence (J0(0) = 1)
    return 0.25 * (r < 1e-14 ? 1.0 : bessel_eval(Cyl::J, 0, kappa * r));
}

inline std::vector<Vec2> sample_curves(const std::vector<Curve>& curves, int per = 1024) {
    std::vector<Vec2> pts;
    pts.reserve(static_cast<std::size_t>(per) * curves.size());
    for (const Curve& c : curves)
        for (int i = 0; i < per; ++i) pts.push_back(curve_eval(c, 2.0 * pi * i / per).x);
    return pts;
}

inline double dist_to_samples(Vec2 z, const std::vector<Vec2>& pts) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec2& p : pts) best = std::min(best, dist(z, p));
    return best;
}

struct Localization {
    double argmax_dist = 0.0;
    double near_mean = 0.0, far_mean = 0.0;
    bool contrast_ok = false;
};

// Argmax distance to the boundary plus the band-contrast statistic: the mean
// of the normalized image within 1/kappa of the boundary must exceed the
// mean beyond 3/kappa.
inline Localization localize(const SamplingGrid& img, const std::vector<Vec2>& boundary,
                             double kappa) {
    Localization loc;
    const GridSpec& gs = img.spec;
    int bx = 0, by = 0;
    double best = -std::numeric_limits<double>::infinity();
    double near_sum = 0.0, far_sum = 0.0;
    int near_n = 0, far_n = 0;
    for (int ix = 0; ix < gs.nx; ++ix)
        for (int iy = 0; iy < gs.ny; ++iy) {
            const double v = img.at(ix, iy);
            if (v > best) {
                best = v;
                bx = ix;
                by = iy;
            }
            const double d = dist_to_samples(gs.point(ix, iy), boundary);
            if (d < 1.0 / kappa) {
                near_sum += v;
                ++near_n;
            } else if (d > 3.0 / kappa) {
                far_sum += v;
                ++far_n;
            }
        }
    loc.argmax_dist = dist_to_samples(gs.point(bx, by), boundary);
    loc.near_mean = near_n > 0 ? near_sum / near_n : 0.0;
    loc.far_mean = far_n > 0 ? far_sum / far_n : 0.0;
    loc.contrast_ok = near_n > 0 && far_n > 0 && loc.near_mean > loc.far_mean;
    return loc;
}

// Reconstruction pipeline shared by checks 09-11: simulate the data each
// indicator needs (one solve per column), perturb, image, normalize.
inline SamplingGrid reconstruct_one(const ForwardEngine& eng, const ArrayGeometry& arr,
                                    const std::map<ExcitationKind, std::map<DataKind, DataMatrix>>& data,
                                    int j, const GridSpec& gs, double delta, std::uint64_t seed) {
    const IndicatorSpec spec = indicator_spec(j);
    const DataMatrix& clean =
        data.at(spec.excitation).at(spec.phaseless ? DataKind::ScatteredField : spec.kind);
    const NoiseSpec ns{delta, seed};
    const DataMatrix noisy =
        spec.phaseless ? make_phaseless(clean, arr, ns) : add_noise(clean, ns);
    return normalize(image_indicator(j, noisy, gs, arr, eng.scene().prm));
}

inline std::map<ExcitationKind, std::map<DataKind, DataMatrix>> bundle_for_indicators(
    const ForwardEngine& eng, const ArrayGeometry& arr, const std::vector<int>& indicators) {
    std::map<ExcitationKind, std::vector<DataKind>> needed;
    for (const int j : indicators) {
        const IndicatorSpec spec = indicator_spec(j);
        const DataKind kind = spec.phaseless ? DataKind::ScatteredField : spec.kind;
        auto& list = needed[spec.excitation];
        if (std::find(list.begin(), list.end(), kind) == list.end()) list.push_back(kind);
    }
    std::map<ExcitationKind, std::map<DataKind, DataMatrix>> data;
    for (const auto& [exc, kinds] : needed)
        data.emplace(exc, simulate_bundle(eng, arr, kinds, exc));
    return data;
}

// ---------------------------------------------------------------------------
// 01: direction average of plane-wave pairs reproduces the Bessel kernel.

inline CheckResult check_funk_hecke(const SuiteKnobs& kb) {
    return timed_check("01-funk-hecke-identity", 1e-10, [&](CheckResult& cr) {
        const WaveParams prm;
        Rng rng{7};
        double worst = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            const auto draw = [&] { return -2.2 + 4.4 * rng.next_unit(); };
            const Vec2 xi{draw(), draw()};
            const Vec2 z{draw(), draw()};
            cplx acc{};
            for (int i = 0; i < kb.fh_dirs; ++i) {
                const Vec2 d = unit_dir(2.0 * pi * i / kb.fh_dirs);
                acc += std::exp(cplx(0.0, prm.kappa * dot(d, Vec2{z.x - xi.x, z.y - xi.y})));
            }
            acc *= 2.0 * pi / kb.fh_dirs / (8.0 * pi);
            worst = std::max(worst, std::abs(acc - bessel_kernel(prm.kappa, xi, z)));
        }
        cr.measured = worst;
        cr.pass = worst <= cr.tol;
    });
}

// ---------------------------------------------------------------------------
// 02: MFS agrees with the modal series on the unit circle for all four
// boundary conditions (second-order conditions to 1e-6, third-order 1e-4).
// Reported as the worst error/tolerance quotient.

inline CheckResult check_forward_cross(const SuiteKnobs&) {
    return timed_check("02-forward-cross-validation", 1.0, [&](CheckResult& cr) {
        const WaveParams prm;
        const Incidence inc = Incidence::plane(0.3);
        double worst = 0.0;
        for (const BoundaryCondition bc :
             {BoundaryCondition::Clamped, BoundaryCondition::SimplySupported,
              BoundaryCondition::RollerSupported, BoundaryCondition::Free}) {
            Scene sc;
            sc.prm = prm;
            sc.curves = {Curve::circle({0.0, 0.0}, 1.0)};
            sc.bc = bc;
            const ModalSolution ms = solve_circle_modes(prm, {0.0, 0.0}, 1.0, bc, inc);
            MfsSolver solver(sc, {});
            const MfsSolution fs = solver.solve(inc);
            double err = 0.0, ref = 0.0;
            for (int i = 0; i < 16; ++i) {
                const double th = 2.0 * pi * i / 16;
                const double rho = 2.0 + (i % 3);
                const Vec2 x{rho * std::cos(th), rho * std::sin(th)};
                err = std::max(err, std::abs(eval_scattered_jet(ms, x).val() -
                                             eval_scattered_jet(fs, x).val()));
                ref = std::max(ref, std::abs(eval_scattered_jet(ms, x).val()));
            }
            const bool second_order =
                bc == BoundaryCondition::Clamped || bc == BoundaryCondition::SimplySupported;
            worst = std::max(worst, err / ref / (second_order ? 1e-6 : 1e-4));
        }
        cr.measured = worst;
        cr.pass = worst <= cr.tol;
    });
}

// ---------------------------------------------------------------------------
// 03: the boundary-trace representation reconstructs the exterior scattered
// field from quadrature.

inline CheckResult check_green_representation(const SuiteKnobs& kb) {
    return timed_check("03-green-representation", 1e-4, [&](CheckResult& cr) {
        const WaveParams prm;
        const ModalSolution ms = solve_circle_modes(prm, {0.0, 0.0}, 1.0,
                                                    BoundaryCondition::Clamped,
                                                    Incidence::plane(0.3));
        const auto nodes = discretize(Curve::circle({0.0, 0.0}, 1.0), kb.green_nodes);
        const BoundaryTraces tr =
            boundary_traces(prm, nodes, [&](Vec2 x) { return eval_scattered_jet(ms, x); });
        double worst = 0.0;
        for (int i = 0; i < 16; ++i) {
            const double th = 2.0 * pi * i / 16;
            const double rho = 1.6 + 0.4 * (i % 4);
            const Vec2 x{rho * std::cos(th), rho * std::sin(th)};
            const cplx direct = eval_scattered_jet(ms, x).val();
            worst = std::max(worst, std::abs(green_representation(prm, nodes, tr, x) - direct) /
                                        std::abs(direct));
        }
        cr.measured = worst;
        cr.pass = worst <= cr.tol;
    });
}

// ---------------------------------------------------------------------------
// 04: the sqrt(rho)-scaled far-field residual keeps decaying like 1/rho
// (ratio between rho = 1e3 and 2e3 lands in [0.35, 0.7]).

inline CheckResult check_farfield_expansion(const SuiteKnobs&) {
    return timed_check("04-farfield-expansion", 0.7, [&](CheckResult& cr) {
        const WaveParams prm;
        const ModalSolution ms = solve_circle_modes(prm, {0.0, 0.0}, 1.0,
                                                    BoundaryCondition::Clamped,
                                                    Incidence::plane(0.3));
        const cplx pref = std::exp(cplx(0.0, pi / 4)) / std::sqrt(8.0 * pi * prm.kappa);
        const auto scaled_residual = [&](double rho) {
            double worst = 0.0;
            for (int i = 0; i < 12; ++i) {
                const double th = 2.0 * pi * (i + 0.3) / 12;
                const Vec2 x{rho * std::cos(th), rho * std::sin(th)};
                const cplx lead = pref * std::exp(cplx(0.0, prm.kappa * rho)) / std::sqrt(rho) *
                                  eval_farfield(ms, th);
                worst = std::max(worst,
                                 std::abs(eval_scattered_jet(ms, x).val() - lead) * std::sqrt(rho));
            }
            return worst;
        };
        cr.measured = scaled_residual(2e3) / scaled_residual(1e3);
        cr.pass = cr.measured >= 0.35 && cr.measured <= cr.tol;
    });
}

// ---------------------------------------------------------------------------
// 05: the imaginary part of the boundary power pairing equals
// kappa^2/(4 pi) times the far-field energy.

inline CheckResult check_energy_identity(const SuiteKnobs& kb) {
    return timed_check("05-farfield-energy-identity", 1e-5, [&](CheckResult& cr) {
        const WaveParams prm;
        const ModalSolution ms = solve_circle_modes(prm, {0.0, 0.0}, 1.0, BoundaryCondition::Free,
                                                    Incidence::plane(0.3));
        const auto nodes = discretize(Curve::circle({0.0, 0.0}, 1.0), kb.flux_nodes);
        const BoundaryTraces tr =
            boundary_traces(prm, nodes, [&](Vec2 x) { return eval_scattered_jet(ms, x); });
        cplx pairing{};
        for (std::size_t i = 0; i < nodes.size(); ++i)
            pairing += (std::conj(tr.val[i]) * tr.N[i] + std::conj(tr.dn[i]) * tr.M[i]) *
                       nodes[i].weight;
        double energy = 0.0;
        for (int i = 0; i < kb.flux_dirs; ++i)
            energy += std::norm(eval_farfield(ms, 2.0 * pi * i / kb.flux_dirs)) *
                      (2.0 * pi / kb.flux_dirs);
        const double rhs = prm.kappa * prm.kappa / (4.0 * pi) * energy;
        cr.measured = std::abs(pairing.imag() - rhs) / std::abs(rhs);
        cr.pass = cr.measured <= cr.tol;
    });
}

// ---------------------------------------------------------------------------
// 06: far field under a point source reciprocates the propagating part of
// the plane-wave solution at the source location.

inline CheckResult check_mixed_reciprocity(const SuiteKnobs&) {
    return timed_check("06-mixed-reciprocity", 1e-6, [&](CheckResult& cr) {
        const WaveParams prm;
        double worst = 0.0;
        for (int k = 0; k < 8; ++k) {
            const double thd = 0.4 + 0.77 * k;
            const double rs = 2.8 + 0.3 * (k % 3);
            const Vec2 xs{rs * std::cos(1.1 + 0.7 * k), rs * std::sin(1.1 + 0.7 * k)};
            const ModalSolution mp = solve_circle_modes(prm, {0.0, 0.0}, 1.0,
                                                        BoundaryCondition::Clamped,
                                                        Incidence::source(xs));
            const ModalSolution mw = solve_circle_modes(prm, {0.0, 0.0}, 1.0,
                                                        BoundaryCondition::Clamped,
                                                        Incidence::plane(thd));
            worst = std::max(worst, std::abs(eval_farfield(mp, thd + pi) -
                                             eval_scattered_jet(mw, xs, true).val()));
        }
        cr.measured = worst;
        cr.pass = worst <= cr.tol;
    });
}

// ---------------------------------------------------------------------------
// 07: the five kernel-correlation remainders decay like 1/R on a generic
// (elliptical) sampling curve: sup-residual ratio between R and 2R within
// [0.35, 0.7] for every variant.  Concentric circles are excluded on
// purpose: there the plain-kernel remainders collapse like 1/R^2 (see the
// imaging test suite for the frozen measurement of that degeneracy).

inline CheckResult check_correlation_decay(const SuiteKnobs& kb) {
    return timed_check("07-kernel-correlation-decay", 0.7, [&](CheckResult& cr) {
        const WaveParams prm;
        const auto supw = [&](int variant, double R, int n) {
            double sup = 0.0;
            for (int a = 0; a < 9; a += kb.corr_stride)
                for (int b = 0; b < 9; b += kb.corr_stride) {
                    const Vec2 x{-2.0 + 2.0 * (a % 3), -2.0 + 2.0 * (a / 3)};
                    const Vec2 z{-2.0 + 2.0 * (b % 3), -2.0 + 2.0 * (b / 3)};
                    cplx acc{};
                    for (int i = 0; i < n; ++i) {
                        const double t = 2.0 * pi * i / n;
                        BoundaryNode nd;
                        nd.x = {1.25 * R * std::cos(t), R * std::sin(t)};
                        nd.d1 = {-1.25 * R * std::sin(t), R * std::cos(t)};
                        nd.d2 = {-1.25 * R * std::cos(t), -R * std::sin(t)};
                        nd.jac = norm(nd.d1);
                        nd.normal = {nd.d1.y / nd.jac, -nd.d1.x / nd.jac};
                        cplx K;
                        if (variant == 0) {
                            K = prm.kappa * point_kernel(prm.kappa, x, nd.x);
                        } else {
                            const Jet3 g = kernel_jet(KernelKind::BiharmonicG, prm, nd.x, x);
                            const double k = prm.kappa;
                            if (variant == 1) K = -2.0 * k * k * k * g.val();
                            if (variant == 2) K = -2.0 * k * k * jet_dn(g, nd.normal);
                            if (variant == 3) K = 2.0 * k * apply_M(prm, g, nd.normal);
                            if (variant == 4) K = 2.0 * apply_N(prm, g, nd);
                        }
                        acc += std::conj(K) * point_kernel(prm.kappa, z, nd.x) * nd.jac *
                               (2.0 * pi / n);
                    }
                    const cplx phase = (variant == 2)   ? cplx(0.0, -1.0)
                                       : (variant == 4) ? cplx(0.0, 1.0)
                                                        : cplx(1.0, 0.0);
                    sup = std::max(sup, std::abs(acc / phase - bessel_kernel(prm.kappa, x, z)));
                }
            return sup;
        };
        bool ok = true;
        double worst = 0.525;  // band midpoint; replaced by the worst offender
        for (int variant = 0; variant < 5; ++variant) {
            const double ratio = supw(variant, 20.0, 512) / supw(variant, 10.0, 256);
            if (std::abs(ratio - 0.525) > std::abs(worst - 0.525)) worst = ratio;
            ok = ok && ratio >= 0.35 && ratio <= 0.7;
        }
        cr.measured = worst;
        cr.pass = ok;
    });
}

// ---------------------------------------------------------------------------
// 08: the far-field autocorrelation image equals kappa^2/(4 pi) times the
// scattered energy of the regularized probe anchored at the sampling point.
// The reported value is the measured constant ratio (image / oracle).

inline CheckResult check_autocorrelation_oracle(const SuiteKnobs& kb) {
    return timed_check("08-autocorrelation-oracle", 0.02, [&](CheckResult& cr) {
        const WaveParams prm;
        Scene sc;
        sc.prm = prm;
        sc.curves = {Curve::circle({0.0, 0.0}, 1.0)};
        sc.bc = BoundaryCondition::Clamped;
        const ForwardEngine eng(sc);
        ArrayGeometry arr;
        arr.n_dir = kb.oracle_data_dirs;
        const DataMatrix dm = simulate(eng, arr, DataKind::FarField, ExcitationKind::PlaneWaves);
        GridSpec gs;
        gs.xmin = gs.ymin = -1.5;
        gs.xmax = gs.ymax = 1.5;
        gs.nx = gs.ny = 3;
        const SamplingGrid img = image_indicator(10, dm, gs, arr, prm);
        double ratio_sum = 0.0, worst = 0.0;
        for (int ix = 0; ix < 3; ++ix)
            for (int iy = 0; iy < 3; ++iy) {
                const Vec2 z = gs.point(ix, iy);
                const ModalSolution ms = solve_circle_modes(prm, {0.0, 0.0}, 1.0,
                                                            BoundaryCondition::Clamped,
                                                            Incidence::probe(z));
                double energy = 0.0;
                for (int i = 0; i < kb.oracle_dirs; ++i)
                    energy += std::norm(eval_farfield(ms, 2.0 * pi * i / kb.oracle_dirs)) *
                              (2.0 * pi / kb.oracle_dirs);
                const double oracle = prm.kappa * prm.kappa / (4.0 * pi) * energy;
                const double ratio = img.at(ix, iy) / oracle;
                ratio_sum += ratio;
                worst = std::max(worst, std::abs(ratio - 1.0));
            }
        cr.measured = ratio_sum / 9.0;  // the constant ratio, reported
        cr.pass = worst <= cr.tol;
    });
}

// ---------------------------------------------------------------------------
// 09-10: full reconstructions.  Localization demands the argmax of every
// normalized indicator within 0.5 of the boundary and the near-band mean
// above the far-field mean.

struct ExampleOutcome {
    double worst_argmax = 0.0;
    bool all_contrast = true;
};

inline ExampleOutcome run_example(const Scene& sc, const MfsConfig& mfs, const ArrayGeometry& arr,
                                  const GridSpec& gs, const std::vector<double>& deltas,
                                  std::uint64_t seed) {
    const ForwardEngine eng(sc, ForwardBackend::Auto, mfs);
    const std::vector<int> all = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
    const auto data = bundle_for_indicators(eng, arr, all);
    const std::vector<Vec2> boundary = sample_curves(sc.curves);
    ExampleOutcome out;
    for (std::size_t di = 0; di < deltas.size(); ++di)
        for (const int j : all) {
            const SamplingGrid img = reconstruct_one(
                eng, arr, data, j, gs, deltas[di], seed + 97 * di + static_cast<std::uint64_t>(j));
            const Localization loc = localize(img, boundary, sc.prm.kappa);
            out.worst_argmax = std::max(out.worst_argmax, loc.argmax_dist);
            out.all_contrast = out.all_contrast && loc.contrast_ok;
        }
    return out;
}

inline CheckResult check_example1(const SuiteKnobs& kb) {
    return timed_check("09-example1-disk", 0.5, [&](CheckResult& cr) {
        Scene sc;
        sc.curves = {Curve::circle({0.0, 0.0}, 1.0)};
        sc.bc = BoundaryCondition::Clamped;
        ArrayGeometry arr;
        arr.n_rec = arr.n_src = kb.ex_data;
        arr.n_dir = kb.ex_ndir;
        GridSpec gs;
        gs.xmin = gs.ymin = -kb.ex_win;
        gs.xmax = gs.ymax = kb.ex_win;
        gs.nx = gs.ny = kb.ex_grid;
        const ExampleOutcome out = run_example(sc, {}, arr, gs, {0.0}, 1);
        cr.measured = out.worst_argmax;
        cr.pass = out.worst_argmax <= cr.tol && out.all_contrast;
    });
}

inline CheckResult check_example2(const SuiteKnobs& kb) {
    return timed_check("10-example2-noise", 0.5, [&](CheckResult& cr) {
        Scene sc;
        sc.curves = {Curve::kite({0.0, 0.0}, 1.0)};
        sc.bc = BoundaryCondition::Clamped;
        MfsConfig mfs;
        mfs.sources_per_curve = 128;
        mfs.collocation_per_curve = 320;
        ArrayGeometry arr;
        arr.n_rec = arr.n_src = kb.ex_data;
        arr.n_dir = kb.ex_ndir;
        GridSpec gs;
        gs.xmin = gs.ymin = -kb.ex_win;
        gs.xmax = gs.ymax = kb.ex_win;
        gs.nx = gs.ny = kb.ex_grid;
        const ExampleOutcome out = run_example(sc, mfs, arr, gs, {0.0, 0.05, 0.10}, 1);
        cr.measured = out.worst_argmax;
        cr.pass = out.worst_argmax <= cr.tol && out.all_contrast;
    });
}

// ---------------------------------------------------------------------------
// 11: two obstacles produce two above-0.5 ridge clusters of the normalized
// point-source indicator, one per component, separated by at least two
// length units.

inline CheckResult check_example3(const SuiteKnobs& kb) {
    return timed_check("11-example3-two-obstacles", 2.0, [&](CheckResult& cr) {
        Scene sc;
        sc.curves = {Curve::circle({-2.0, -2.0}, 1.0), Curve::kite({2.0, 2.0}, 1.0)};
        sc.bc = BoundaryCondition::Clamped;
        MfsConfig mfs;
        mfs.sources_per_curve = 128;
        mfs.collocation_per_curve = 320;
        const ForwardEngine eng(sc, ForwardBackend::Auto, mfs);
        ArrayGeometry arr;
        arr.n_rec = arr.n_src = kb.ex11_data;
        GridSpec gs;
        gs.xmin = gs.ymin = -kb.ex11_win;
        gs.xmax = gs.ymax = kb.ex11_win;
        gs.nx = gs.ny = kb.ex11_grid;
        const DataMatrix usc =
            simulate(eng, arr, DataKind::ScatteredField, ExcitationKind::PointSources);
        const SamplingGrid img = normalize(image_indicator(1, usc, gs, arr, sc.prm));

        // connected components (4-neighbour) of the above-0.5 cells
        const int nx = gs.nx, ny = gs.ny;
        std::vector<int> label(static_cast<std::size_t>(nx) * ny, -1);
        int n_comp = 0;
        for (int ix = 0; ix < nx; ++ix)
            for (int iy = 0; iy < ny; ++iy) {
                const std::size_t id = static_cast<std::size_t>(ix) * ny + iy;
                if (img.values[id] <= 0.5 || label[id] >= 0) continue;
                std::vector<std::pair<int, int>> stack{{ix, iy}};
                label[id] = n_comp;
                while (!stack.empty()) {
                    const auto [cx, cy] = stack.back();
                    stack.pop_back();
                    const int nbr[4][2] = {{cx + 1, cy}, {cx - 1, cy}, {cx, cy + 1}, {cx, cy - 1}};
                    for (const auto& q : nbr) {
                        if (q[0] < 0 || q[0] >= nx || q[1] < 0 || q[1] >= ny) continue;
                        const std::size_t qid = static_cast<std::size_t>(q[0]) * ny + q[1];
                        if (img.values[qid] > 0.5 && label[qid] < 0) {
                            label[qid] = n_comp;
                            stack.push_back({q[0], q[1]});
                        }
                    }
                }
                ++n_comp;
            }

        // group the above-0.5 cells by the nearer obstacle; "matching the two
        // true components" means each obstacle owns ridge cells hugging its
        // boundary, and the two groups stay at least two length units apart
        // (interior hot spots count toward whichever obstacle contains them)
        const std::vector<Vec2> circ = sample_curves({sc.curves[0]});
        const std::vector<Vec2> kite = sample_curves({sc.curves[1]});
        std::vector<std::vector<Vec2>> cells(2);
        double hug[2] = {std::numeric_limits<double>::infinity(),
                         std::numeric_limits<double>::infinity()};
        for (int ix = 0; ix < nx; ++ix)
            for (int iy = 0; iy < ny; ++iy) {
                if (label[static_cast<std::size_t>(ix) * ny + iy] < 0) continue;
                const Vec2 z = gs.point(ix, iy);
                const double dc = dist_to_samples(z, circ), dk = dist_to_samples(z, kite);
                const int which = dc <= dk ? 0 : 1;
                cells[which].push_back(z);
                hug[which] = std::min(hug[which], std::min(dc, dk));
            }
        const bool matched = n_comp >= 2 && !cells[0].empty() && !cells[1].empty() &&
                             hug[0] <= 0.5 && hug[1] <= 0.5;
        double gap = std::numeric_limits<double>::infinity();
        for (const Vec2& a : cells[0])
            for (const Vec2& b : cells[1]) gap = std::min(gap, dist(a, b));
        if (cells[0].empty() || cells[1].empty()) gap = 0.0;
        cr.measured = gap;
        cr.pass = matched && gap >= cr.tol;
    });
}

// ---------------------------------------------------------------------------
// 12: the sup gap between the phaseless indicator and its phased counterpart,
// compared between sampling radii 10 and 20 (expected to shrink by 0.85).

inline CheckResult check_phaseless_gap(const SuiteKnobs& kb) {
    return timed_check("12-phaseless-gap-decay", 0.85, [&](CheckResult& cr) {
        Scene sc;
        sc.curves = {Curve::circle({0.0, 0.0}, 1.0)};
        sc.bc = BoundaryCondition::Clamped;
        const ForwardEngine eng(sc);
        GridSpec gs;
        gs.xmin = gs.ymin = -3.0;
        gs.xmax = gs.ymax = 3.0;
        gs.nx = gs.ny = kb.pg_grid;
        const auto gap_at = [&](double R, int n) {
            ArrayGeometry arr;
            arr.radius_rec = arr.radius_src = R;
            arr.n_rec = arr.n_src = n;
            const DataMatrix usc =
                simulate(eng, arr, DataKind::ScatteredField, ExcitationKind::PointSources);
            const DataMatrix mag = make_phaseless(usc, arr, {0.0, 1});
            const SamplingGrid phased = image_indicator(1, usc, gs, arr, sc.prm);
            const SamplingGrid phaseless = image_indicator(11, mag, gs, arr, sc.prm);
            double gap = 0.0;
            for (std::size_t i = 0; i < phased.values.size(); ++i)
                gap = std::max(gap, std::abs(phaseless.values[i] - phased.values[i]));
            return gap;
        };
        cr.measured = gap_at(20.0, kb.pg_hi) / gap_at(10.0, kb.pg_lo);
        cr.pass = cr.measured <= cr.tol;
    });
}

// ---------------------------------------------------------------------------
// 13: the peak scattered amplitude decays with the product of the array
// radii at an exponent near -1/2.

inline CheckResult check_data_decay(const SuiteKnobs& kb) {
    return timed_check("13-data-decay-exponent", 0.65, [&](CheckResult& cr) {
        Scene sc;
        sc.curves = {Curve::circle({0.0, 0.0}, 1.0)};
        sc.bc = BoundaryCondition::Clamped;
        const ForwardEngine eng(sc);
        std::vector<double> lx, ly;
        for (const double R : {10.0, 20.0, 40.0}) {
            ArrayGeometry arr;
            arr.radius_rec = arr.radius_src = R;
            arr.n_rec = arr.n_src = kb.decay_n;
            const DataMatrix dm =
                simulate(eng, arr, DataKind::ScatteredField, ExcitationKind::PointSources);
            double peak = 0.0;
            for (const cplx& u : dm.a) peak = std::max(peak, std::abs(u));
            lx.push_back(std::log(R * R));
            ly.push_back(std::log(peak));
        }
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            mx += lx[i] / lx.size();
            my += ly[i] / ly.size();
        }
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            num += (lx[i] - mx) * (ly[i] - my);
            den += (lx[i] - mx) * (lx[i] - mx);
        }
        cr.measured = num / den;  // least-squares slope of log peak vs log(Rr*Rs)
        cr.pass = cr.measured >= -0.65 && cr.measured <= -0.35;
    });
}

// ---------------------------------------------------------------------------
// 14: reconstruction is bit-deterministic: two runs with the same config and
// seed emit byte-identical artifacts.

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

inline CheckResult check_determinism(const SuiteKnobs& kb) {
    return timed_check("14-determinism", 0.0, [&](CheckResult& cr) {
        ExperimentConfig cfg;
        cfg.scene.name = "det";
        cfg.scene.curves = {Curve::circle({0.0, 0.0}, 1.0)};
        cfg.scene.bc = BoundaryCondition::Clamped;
        cfg.array.n_rec = cfg.array.n_src = kb.det_data;
        cfg.indicators = {1, 11};
        cfg.grid.xmin = cfg.grid.ymin = -3.0;
        cfg.grid.xmax = cfg.grid.ymax = 3.0;
        cfg.grid.nx = cfg.grid.ny = kb.det_grid;
        cfg.deltas = {0.0, 0.05};
        cfg.seed = 42;
        const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
        const std::filesystem::path base =
            std::filesystem::temp_directory_path() / ("bhm-det-" + std::to_string(stamp));
        double mismatches = 0.0;
        try {
            std::vector<std::string> names[2];
            for (int run = 0; run < 2; ++run) {
                cfg.out_dir = (base / (run == 0 ? "a" : "b")).string();
                run_experiment(cfg);
                for (const auto& entry : std::filesystem::directory_iterator(cfg.out_dir))
                    if (entry.is_regular_file())
                        names[run].push_back(entry.path().filename().string());
                std::sort(names[run].begin(), names[run].end());
            }
            if (names[0] != names[1]) mismatches += 1.0;
            for (const std::string& f : names[0])
                if (slurp(base / "a" / f) != slurp(base / "b" / f)) mismatches += 1.0;
            if (names[0].empty()) mismatches += 1.0;
        } catch (...) {
            std::filesystem::remove_all(base);
            throw;
        }
        std::filesystem::remove_all(base);
        cr.measured = mismatches;
        cr.pass = mismatches == 0.0;
    });
}

// ---------------------------------------------------------------------------
// 15: negative-control hook.  Every indicator value at a spot point is
// re-derived from its printed formula with explicit loops and kernels; any
// flipped sign or scaled prefactor in the imaging table breaks the match.

inline CheckResult check_sign_conventions(const SuiteKnobs&) {
    return timed_check("15-sign-conventions", 1e-10, [&](CheckResult& cr) {
        const WaveParams prm;
        Scene sc;
        sc.prm = prm;
        sc.curves = {Curve::circle({0.0, 0.0}, 1.0)};
        sc.bc = BoundaryCondition::Clamped;
        const ForwardEngine eng(sc);
        ArrayGeometry arr;
        arr.n_rec = arr.n_src = arr.n_dir = 24;
        const Vec2 z{0.7, -0.4};
        GridSpec gs;  // micro-grid; the engine value is read at the centre
        gs.xmin = z.x - 0.1;
        gs.xmax = z.x + 0.1;
        gs.ymin = z.y - 0.1;
        gs.ymax = z.y + 0.1;
        gs.nx = gs.ny = 3;

        const double k = prm.kappa;
        const double k2 = k * k, k3 = k2 * k, k4 = k3 * k;
        const double wr = 2.0 * pi * arr.radius_rec / arr.n_rec;
        const double ws = 2.0 * pi * arr.radius_src / arr.n_src;
        const double wd = 2.0 * pi / arr.n_dir;

        const auto sum_pp = [&](const DataMatrix& d, bool quotient) {
            cplx acc{};
            for (int r = 0; r < d.rows; ++r)
                for (int s = 0; s < d.cols; ++s) {
                    const Vec2 xr = arr.receiver(r), xs = arr.source(s);
                    cplx t;
                    if (!quotient) {
                        t = std::conj(d.at(r, s));
                    } else {
                        if (dist(xr, xs) < 1e-9) continue;
                        const cplx inc = point_kernel(k, xr, xs);
                        const double m = d.at(r, s).real();
                        t = (m * m - std::norm(inc)) / inc;
                    }
                    acc += point_kernel(k, z, xr) * point_kernel(k, z, xs) * t * wr * ws;
                }
            return acc;
        };
        const auto sum_pd = [&](const DataMatrix& d) {
            cplx acc{};
            for (int r = 0; r < d.rows; ++r)
                for (int c = 0; c < d.cols; ++c)
                    acc += point_kernel(k, z, arr.receiver(r)) *
                           std::exp(cplx(0.0, k * dot(z, arr.direction(c)))) *
                           std::conj(d.at(r, c)) * wr * wd;
            return acc;
        };
        const auto sum_dp = [&](const DataMatrix& d) {
            cplx acc{};
            for (int r = 0; r < d.rows; ++r)
                for (int c = 0; c < d.cols; ++c)
                    acc += std::exp(cplx(0.0, -k * dot(z, arr.direction(r)))) *
                           point_kernel(k, z, arr.source(c)) * std::conj(d.at(r, c)) * wd * ws;
            return acc;
        };
        const auto sum_dd = [&](const DataMatrix& d) {
            cplx acc{};
            for (int r = 0; r < d.rows; ++r)
                for (int c = 0; c < d.cols; ++c)
                    acc += std::exp(cplx(0.0, -k * dot(z, arr.direction(r)))) *
                           std::exp(cplx(0.0, k * dot(z, arr.direction(c)))) *
                           std::conj(d.at(r, c)) * wd * wd;
            return acc;
        };

        using DK = DataKind;
        using EK = ExcitationKind;
        const auto mat = [&](DK kind, EK exc) { return simulate(eng, arr, kind, exc); };
        double literal[12] = {};
        literal[1] = -2.0 * k4 * sum_pp(mat(DK::ScatteredField, EK::PointSources), false).imag();
        literal[2] = -2.0 * k3 * sum_pp(mat(DK::NormalDerivative, EK::PointSources), false).real();
        literal[3] = 2.0 * k2 * sum_pp(mat(DK::BendingTrace, EK::PointSources), false).imag();
        literal[4] = -2.0 * k * sum_pp(mat(DK::TransverseTrace, EK::PointSources), false).real();
        literal[5] = -k3 / (4.0 * pi) * sum_pd(mat(DK::ScatteredField, EK::PlaneWaves)).imag();
        literal[6] = -k2 / (4.0 * pi) * sum_pd(mat(DK::NormalDerivative, EK::PlaneWaves)).real();
        literal[7] = k / (4.0 * pi) * sum_pd(mat(DK::BendingTrace, EK::PlaneWaves)).imag();
        literal[8] = -1.0 / (4.0 * pi) * sum_pd(mat(DK::TransverseTrace, EK::PlaneWaves)).real();
        literal[9] = -k3 / (4.0 * pi) * sum_dp(mat(DK::FarField, EK::PointSources)).imag();
        literal[10] = -k2 / (32.0 * pi * pi) * sum_dd(mat(DK::FarField, EK::PlaneWaves)).imag();
        literal[11] = -2.0 * k4 * sum_pp(mat(DK::AbsTotal, EK::PointSources), true).imag();

        const std::pair<DK, EK> feeds[12] = {
            {},
            {DK::ScatteredField, EK::PointSources},
            {DK::NormalDerivative, EK::PointSources},
            {DK::BendingTrace, EK::PointSources},
            {DK::TransverseTrace, EK::PointSources},
            {DK::ScatteredField, EK::PlaneWaves},
            {DK::NormalDerivative, EK::PlaneWaves},
            {DK::BendingTrace, EK::PlaneWaves},
            {DK::TransverseTrace, EK::PlaneWaves},
            {DK::FarField, EK::PointSources},
            {DK::FarField, EK::PlaneWaves},
            {DK::AbsTotal, EK::PointSources},
        };
        double worst = 0.0;
        for (int j = 1; j <= 11; ++j) {
            const DataMatrix d = mat(feeds[j].first, feeds[j].second);
            const SamplingGrid img = image_indicator(j, d, gs, arr, prm);
            worst = std::max(worst, std::abs(img.at(1, 1) - literal[j]) /
                                        std::max(1.0, std::abs(literal[j])));
        }
        cr.measured = worst;
        cr.pass = worst <= cr.tol;
    });
}

}  // namespace detail

// Run the whole numbered suite at the given level.  Each completed check is
// streamed to `progress` (when given) as a PASS/FAIL line; the returned
// report carries all rows in fixed order.
inline RunReport validate_suite(ValidateLevel level, std::ostream* progress = nullptr) {
    const detail::SuiteKnobs kb = detail::suite_knobs(level);
    RunReport rep;
    const auto emit = [&](CheckResult cr, double time_cap = 0.0) {
        if (time_cap > 0.0) detail::apply_time_cap(cr, time_cap);
        rep.checks.push_back(std::move(cr));
        if (progress) {
            RunReport one;
            one.checks = {rep.checks.back()};
            print_report(one, *progress);
            progress->flush();
        }
    };
    emit(detail::check_funk_hecke(kb), 1.0);
    emit(detail::check_forward_cross(kb), 10.0);
    emit(detail::check_green_representation(kb));
    emit(detail::check_farfield_expansion(kb));
    emit(detail::check_energy_identity(kb));
    emit(detail::check_mixed_reciprocity(kb));
    emit(detail::check_correlation_decay(kb));
    emit(detail::check_autocorrelation_oracle(kb));
    emit(detail::check_example1(kb), 300.0);
    emit(detail::check_example2(kb));
    emit(detail::check_example3(kb));
    emit(detail::check_phaseless_gap(kb));
    emit(detail::check_data_decay(kb));
    emit(detail::check_determinism(kb));
    emit(detail::check_sign_conventions(kb));
    return rep;
}

}  // namespace bhm

#endif  // BHM_VALIDATE_HPP
