// Forward-problem tests: incident fields, the modal circle solver, the MFS
// solver for general curves, boundary/far-field identities, and simulated
// measurement matrices.  Numeric bounds are frozen from oracle runs; where a
// bound encodes a measured optimum rather than a round target, the comment
// says so.

#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "bhm/forward.hpp"
#include "oracles.hpp"

using bhm::BoundaryCondition;
using bhm::BoundaryNode;
using bhm::cplx;
using bhm::Curve;
using bhm::Incidence;
using bhm::Jet3;
using bhm::pi;
using bhm::Scene;
using bhm::Vec2;
using bhm::WaveParams;
using Catch::Approx;

namespace {

// Apply the two rows of a boundary condition to a field jet at a node.
std::pair<cplx, cplx> bc_rows_of(const WaveParams& prm, BoundaryCondition bc, const Jet3& jet,
                                 const BoundaryNode& nd) {
    switch (bc) {
        case BoundaryCondition::Clamped:
            return {jet.val(), bhm::jet_dn(jet, nd.normal)};
        case BoundaryCondition::SimplySupported:
            return {jet.val(), bhm::apply_M(prm, jet, nd.normal)};
        case BoundaryCondition::RollerSupported:
            return {bhm::jet_dn(jet, nd.normal), bhm::apply_N(prm, jet, nd)};
        case BoundaryCondition::Free:
            return {bhm::apply_M(prm, jet, nd.normal), bhm::apply_N(prm, jet, nd)};
    }
    throw std::logic_error("bc_rows_of: unreachable");
}

// Worst relative boundary residual of the total field, per operator block,
// sampled at `n` nodes deliberately offset from any collocation grid.
template <typename ScatteredJet>
double total_field_residual(const WaveParams& prm, const Curve& c, BoundaryCondition bc,
                            const Incidence& inc, ScatteredJet&& scat, int n) {
    double num[2] = {0.0, 0.0}, den[2] = {0.0, 0.0};
    for (int i = 0; i < n; ++i) {
        const BoundaryNode nd = bhm::curve_eval(c, 2.0 * pi * (i + 0.37) / n);
        Jet3 tot = scat(nd.x);
        const Jet3 ui = bhm::incident_jet(prm, inc, nd.x);
        tot += ui;
        const auto [r1, r2] = bc_rows_of(prm, bc, tot, nd);
        const auto [b1, b2] = bc_rows_of(prm, bc, ui, nd);
        num[0] = std::max(num[0], std::abs(r1));
        num[1] = std::max(num[1], std::abs(r2));
        den[0] = std::max(den[0], std::abs(b1));
        den[1] = std::max(den[1], std::abs(b2));
    }
    return std::max(num[0] / den[0], num[1] / den[1]);
}

const BoundaryCondition kAllBcs[4] = {
    BoundaryCondition::Clamped, BoundaryCondition::SimplySupported,
    BoundaryCondition::RollerSupported, BoundaryCondition::Free};

Scene unit_circle_scene(BoundaryCondition bc) {
    Scene sc;
    sc.curves = {Curve::circle({0.0, 0.0}, 1.0)};
    sc.bc = bc;
    return sc;
}

}  // namespace

TEST_CASE("plane-wave incident jet is the analytic exponential") {
    const WaveParams prm;
    const double th = 0.77;
    const Vec2 d = bhm::unit_dir(th);
    const Vec2 x{0.6, -1.3};
    const Jet3 j = bhm::incident_jet(prm, Incidence::plane(th), x);
    const cplx u = std::exp(cplx(0.0, prm.kappa * bhm::dot(x, d)));
    CHECK(std::abs(j.val() - u) < 1e-14);
    const cplx i1(0.0, prm.kappa * d.x), i2(0.0, prm.kappa * d.y);
    CHECK(std::abs(j.at(1, 0) - i1 * u) < 1e-13);
    CHECK(std::abs(j.at(0, 1) - i2 * u) < 1e-13);
    CHECK(std::abs(j.at(2, 1) - i1 * i1 * i2 * u) < 1e-11);
    // Plane waves solve the Helmholtz factor, hence the biharmonic equation.
    CHECK(std::abs(bhm::jet_lap(j) + prm.kappa * prm.kappa * j.val()) < 1e-10);
}

TEST_CASE("point-source incidence is the outgoing kernel") {
    const WaveParams prm;
    const Vec2 y{2.0, -0.5}, x{-0.3, 0.9};
    const Jet3 a = bhm::incident_jet(prm, Incidence::source(y), x);
    const Jet3 b = bhm::kernel_jet(bhm::KernelKind::Helmholtz, prm, x, y);
    for (int p = 0; p <= 3; ++p)
        for (int q = 0; p + q <= 3; ++q) CHECK(std::abs(a.at(p, q) - b.at(p, q)) == 0.0);
    CHECK_THROWS_AS(bhm::incident_jet(prm, Incidence::source(y), y), std::domain_error);
}

TEST_CASE("regularized incidence matches the Bessel series across the branch seam") {
    const WaveParams prm;  // kappa = 2pi: the internal series/table switch sits at r ~ 0.0796
    const Vec2 z{0.4, -0.2};
    // value must equal J0(kappa r)/4 on both sides of the switch; the series
    // oracle starts losing digits to cancellation past kappa r ~ 8, so the
    // sweep stops at r = 1
    for (double r : {0.01, 0.05, 0.079, 0.081, 0.3, 1.0}) {
        CAPTURE(r);
        const Vec2 x{z.x + r * std::cos(0.6), z.y + r * std::sin(0.6)};
        const Jet3 j = bhm::incident_jet(prm, Incidence::probe(z), x);
        const double ref = 0.25 * oracle::bessel_j_series(0, prm.kappa * r);
        CHECK(std::abs(j.val() - ref) < 1e-13);
    }
    // exact coincidence values: J0(0)/4, zero gradient, Hessian -kappa^2/8 I
    const Jet3 j0 = bhm::incident_jet(prm, Incidence::probe(z), z);
    CHECK(j0.val() == cplx(0.25, 0.0));
    CHECK(std::abs(j0.at(1, 0)) == 0.0);
    CHECK(std::abs(j0.at(0, 1)) == 0.0);
    CHECK(std::abs(j0.at(2, 0) + prm.kappa * prm.kappa / 8.0) < 1e-14);
    CHECK(std::abs(j0.at(0, 2) + prm.kappa * prm.kappa / 8.0) < 1e-14);
    CHECK(std::abs(j0.at(1, 1)) == 0.0);
    CHECK(std::abs(j0.at(3, 0)) == 0.0);
    CHECK(std::abs(j0.at(2, 1)) == 0.0);
}

TEST_CASE("regularized incidence derivatives agree with finite differences") {
    const WaveParams prm;
    const Vec2 z{-0.1, 0.25};
    for (const Vec2 x : {Vec2{0.02, 0.26}, Vec2{0.9, -0.4}}) {  // one per branch
        const Jet3 j = bhm::incident_jet(prm, Incidence::probe(z), x);
        const double h = 1e-5;
        auto f = [&](double dx, double dy) {
            return bhm::incident_jet(prm, Incidence::probe(z), {x.x + dx, x.y + dy}).val();
        };
        const cplx d10 = (f(h, 0) - f(-h, 0)) / (2 * h);
        const cplx d01 = (f(0, h) - f(0, -h)) / (2 * h);
        const cplx d20 = (f(h, 0) - 2.0 * f(0, 0) + f(-h, 0)) / (h * h);
        const cplx d11 = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4 * h * h);
        CHECK(std::abs(j.at(1, 0) - d10) < 1e-8);
        CHECK(std::abs(j.at(0, 1) - d01) < 1e-8);
        CHECK(std::abs(j.at(2, 0) - d20) < 1e-5);
        CHECK(std::abs(j.at(1, 1) - d11) < 1e-5);
        // thirds against finite differences of the analytic gradient
        auto g10 = [&](double dx, double dy) {
            return bhm::incident_jet(prm, Incidence::probe(z), {x.x + dx, x.y + dy}).at(1, 0);
        };
        const cplx d30 = (g10(h, 0) - 2.0 * g10(0, 0) + g10(-h, 0)) / (h * h);
        const cplx d21 = (g10(h, h) - g10(h, -h) - g10(-h, h) + g10(-h, -h)) / (4 * h * h);
        CHECK(std::abs(j.at(3, 0) - d30) < 2e-4);
        CHECK(std::abs(j.at(2, 1) - d21) < 2e-4);
    }
}

TEST_CASE("modal solve satisfies the boundary conditions off any collocation grid") {
    const WaveParams prm;
    const Curve c = Curve::circle({0.0, 0.0}, 1.0);
    for (BoundaryCondition bc : kAllBcs) {
        for (const Incidence& inc :
             {Incidence::plane(0.9), Incidence::source({2.4, -1.1}), Incidence::probe({0.3, 1.8})}) {
            const bhm::ModalSolution ms = bhm::solve_circle_modes(prm, {0, 0}, 1.0, bc, inc);
            const double res = total_field_residual(
                prm, c, bc, inc, [&](Vec2 x) { return bhm::eval_scattered_jet(ms, x); }, 199);
            // plane/probe incidences sit at machine precision; the point-source
            // Fourier expansion converges to ~1e-10 at this mode budget
            const double tol = inc.kind == Incidence::Kind::PointSource ? 1e-8 : 1e-12;
            CAPTURE(static_cast<int>(bc), static_cast<int>(inc.kind));
            CHECK(res < tol);
        }
    }
}

TEST_CASE("modal coefficients match a dense least-squares collocation oracle") {
    // Independent route: collocate {H_n, K_n} e^{i n theta} in a dense LS system
    // with the radial derivative taken by 4th-order finite differences, solved
    // by QR; compare the n=0 coefficients against the per-mode solver.
    const WaveParams prm;
    const Incidence inc = Incidence::plane(0.3);
    const bhm::ModalSolution ms =
        bhm::solve_circle_modes(prm, {0, 0}, 1.0, BoundaryCondition::Clamped, inc);

    const int N = 16, M = 128;
    const int cols = 2 * (2 * N + 1);
    Eigen::MatrixXcd A(2 * M, cols);
    Eigen::VectorXcd b(2 * M);
    const double h = 1e-3;
    auto radial = [&](bool outgoing, int n, double rho) -> cplx {
        return outgoing ? bhm::hankel1(std::abs(n), prm.kappa * rho) *
                              ((n < 0 && std::abs(n) % 2 == 1) ? -1.0 : 1.0)
                        : bhm::bessel_eval(bhm::Cyl::K, std::abs(n), prm.kappa * rho);
    };
    for (int i = 0; i < M; ++i) {
        const double th = 2.0 * pi * i / M;
        for (int n = -N; n <= N; ++n) {
            const cplx ang = std::exp(cplx(0.0, n * th));
            for (int fam = 0; fam < 2; ++fam) {
                const int col = 2 * (n + N) + fam;
                const bool outgoing = fam == 0;
                A(2 * i, col) = radial(outgoing, n, 1.0) * ang;
                const cplx dr = (-radial(outgoing, n, 1.0 + 2 * h) + 8.0 * radial(outgoing, n, 1.0 + h) -
                                 8.0 * radial(outgoing, n, 1.0 - h) + radial(outgoing, n, 1.0 - 2 * h)) /
                                (12.0 * h);
                A(2 * i + 1, col) = dr * ang;
            }
        }
        const Jet3 ui = bhm::incident_jet(prm, inc, {std::cos(th), std::sin(th)});
        b(2 * i) = -ui.val();
        b(2 * i + 1) = -bhm::jet_dn(ui, {std::cos(th), std::sin(th)});
    }
    // column scaling keeps the exponentially large K columns harmless
    Eigen::VectorXd cs(cols);
    for (int j = 0; j < cols; ++j) {
        cs(j) = A.col(j).cwiseAbs().maxCoeff();
        A.col(j) /= cs(j);
    }
    const Eigen::VectorXcd y = A.householderQr().solve(b);
    const cplx alpha0 = y(2 * N) / cs(2 * N);
    const cplx beta0 = y(2 * N + 1) / cs(2 * N + 1);
    CHECK(std::abs(alpha0 - ms.a(0)) < 1e-8 * std::abs(ms.a(0)));
    CHECK(std::abs(beta0 - ms.b(0)) < 1e-8 * std::abs(ms.b(0)));
}

TEST_CASE("modal tail decays far below the working precision") {
    const WaveParams prm;
    const bhm::ModalSolution ms =
        bhm::solve_circle_modes(prm, {0, 0}, 1.0, BoundaryCondition::Clamped, Incidence::plane(0.3));
    double amax = 0.0;
    for (int n = -ms.nmax; n <= ms.nmax; ++n) amax = std::max(amax, std::abs(ms.a(n)));
    CHECK(std::abs(ms.a(ms.nmax)) < 1e-12 * amax);
    CHECK(std::abs(ms.a(-ms.nmax)) < 1e-12 * amax);
    // the evanescent coefficients keep decaying at least geometrically past
    // the ringing region |n| ~ kappa a
    const int n0 = static_cast<int>(prm.kappa) + 10;
    for (int n = n0; n + 2 <= ms.nmax; ++n) {
        const double here = std::abs(ms.b(n)) * std::abs(bhm::bessel_eval(bhm::Cyl::K, n, prm.kappa));
        const double next =
            std::abs(ms.b(n + 2)) * std::abs(bhm::bessel_eval(bhm::Cyl::K, n + 2, prm.kappa));
        if (here < 1e-280) break;  // underflow floor reached; nothing left to compare
        CHECK(next < 0.8 * here);
    }
}

TEST_CASE("modal solver contracts") {
    const WaveParams prm;
    // point source must lie strictly outside the circle
    CHECK_THROWS_AS(bhm::solve_circle_modes(prm, {0, 0}, 1.0, BoundaryCondition::Clamped,
                                            Incidence::source({0.5, 0.0})),
                    std::domain_error);
    CHECK_THROWS_AS(bhm::solve_circle_modes(prm, {0, 0}, -1.0, BoundaryCondition::Clamped,
                                            Incidence::plane(0.0)),
                    std::invalid_argument);
    // mode budget guard for absurd kappa * radius
    CHECK_THROWS_AS(bhm::solve_circle_modes(prm, {0, 0}, 40.0, BoundaryCondition::Clamped,
                                            Incidence::plane(0.0)),
                    std::invalid_argument);
    // evaluation inside the circle is out of domain
    const bhm::ModalSolution ms =
        bhm::solve_circle_modes(prm, {0, 0}, 1.0, BoundaryCondition::Clamped, Incidence::plane(0.0));
    CHECK_THROWS_AS(bhm::eval_scattered_jet(ms, {0.3, 0.2}), std::domain_error);
    // linearity: doubling the coefficients doubles the jet
    bhm::ModalSolution ms2 = ms;
    for (auto& a : ms2.alpha) a *= 2.0;
    for (auto& b : ms2.beta) b *= 2.0;
    const Vec2 x{1.7, 0.4};
    const Jet3 j1 = bhm::eval_scattered_jet(ms, x), j2 = bhm::eval_scattered_jet(ms2, x);
    for (int p = 0; p <= 3; ++p)
        for (int q = 0; p + q <= 3; ++q)
            CHECK(std::abs(j2.at(p, q) - 2.0 * j1.at(p, q)) < 1e-14 + 1e-14 * std::abs(j1.at(p, q)));
}

TEST_CASE("MFS circle solve at the documented defaults") {
    const WaveParams prm;
    Scene sc = unit_circle_scene(BoundaryCondition::Clamped);
    sc.prm = prm;
    bhm::MfsSolver solver(sc, {});
    const bhm::MfsSolution sol = solver.solve(Incidence::plane(0.3));
    // 1.588e-8 is the least-squares optimum of this source/collocation budget
    // at kappa = 2pi (stable under refinement, re-weighting, and denser
    // collocation); the bound pins it with margin.
    CHECK(sol.residual < 2.5e-8);
    // residual off the collocation grid, 4x density: no interpolation artifacts
    const double dense = total_field_residual(
        prm, sc.curves[0], sc.bc, Incidence::plane(0.3),
        [&](Vec2 x) { return bhm::eval_scattered_jet(sol, x); }, 1024);
    CHECK(dense < 2.5e-8);
}

TEST_CASE("MFS matches the modal series on a circle for every boundary condition") {
    const WaveParams prm;
    const Incidence inc = Incidence::plane(0.3);
    for (BoundaryCondition bc : kAllBcs) {
        Scene sc = unit_circle_scene(bc);
        sc.prm = prm;
        const bhm::ModalSolution ms = bhm::solve_circle_modes(prm, {0, 0}, 1.0, bc, inc);
        bhm::MfsSolver solver(sc, {});
        const bhm::MfsSolution fs = solver.solve(inc);
        double ferr = 0.0, fmax = 0.0, gerr = 0.0, gmax = 0.0;
        for (int i = 0; i < 16; ++i) {
            const double th = 2.0 * pi * i / 16;
            const double rho = 2.0 + (i % 3);
            const Vec2 x{rho * std::cos(th), rho * std::sin(th)};
            ferr = std::max(ferr, std::abs(bhm::eval_scattered_jet(ms, x).val() -
                                           bhm::eval_scattered_jet(fs, x).val()));
            fmax = std::max(fmax, std::abs(bhm::eval_scattered_jet(ms, x).val()));
            gerr = std::max(gerr, std::abs(bhm::eval_farfield(ms, th) - bhm::eval_farfield(fs, th)));
            gmax = std::max(gmax, std::abs(bhm::eval_farfield(ms, th)));
        }
        CAPTURE(static_cast<int>(bc));
        const bool second_order = bc == BoundaryCondition::Clamped ||
                                  bc == BoundaryCondition::SimplySupported;
        const double tol = second_order ? 1e-6 : 1e-4;
        CHECK(ferr < tol * fmax);
        CHECK(gerr < tol * gmax);
    }
}

TEST_CASE("MFS solves a non-convex boundary with normal-offset sources") {
    const WaveParams prm;
    Scene sc;
    sc.prm = prm;
    sc.curves = {Curve::kite({0.0, 0.0}, 1.0)};
    sc.bc = BoundaryCondition::Clamped;
    bhm::MfsConfig cfg;
    cfg.sources_per_curve = 128;
    cfg.collocation_per_curve = 320;
    bhm::MfsSolver solver(sc, cfg);
    const bhm::MfsSolution sol = solver.solve(Incidence::plane(0.3));
    CHECK(sol.residual < 2e-4);  // measured 7.8e-5
    const double dense = total_field_residual(
        prm, sc.curves[0], sc.bc, Incidence::plane(0.3),
        [&](Vec2 x) { return bhm::eval_scattered_jet(sol, x); }, 1280);
    CHECK(dense < 4e-4);
}

TEST_CASE("shrunk-copy sources cannot resolve the kite and fail loudly") {
    // The classic scaled-copy source curve stalls on non-convex boundaries; the
    // solver must report that as a residual failure instead of returning junk.
    Scene sc;
    sc.curves = {Curve::kite({0.0, 0.0}, 1.0)};
    sc.bc = BoundaryCondition::Clamped;
    bhm::MfsConfig cfg;
    cfg.placement = bhm::SourcePlacement::ScaledCopy;
    bhm::MfsSolver solver(sc, cfg);
    CHECK_THROWS_AS(solver.solve(Incidence::plane(0.3)), std::runtime_error);
}

TEST_CASE("MFS handles two obstacles at once") {
    const WaveParams prm;
    Scene sc;
    sc.prm = prm;
    sc.curves = {Curve::circle({-2.0, -2.0}, 1.0), Curve::kite({1.35, 2.0}, 1.0)};
    sc.bc = BoundaryCondition::Clamped;
    bhm::MfsConfig cfg;
    cfg.sources_per_curve = 128;
    cfg.collocation_per_curve = 320;
    bhm::MfsSolver solver(sc, cfg);
    const bhm::MfsSolution sol = solver.solve(Incidence::plane(0.3));
    CHECK(sol.residual < 5e-4);  // measured 8.8e-5
    // evaluation guards apply to both components
    CHECK_THROWS_AS(bhm::eval_scattered_jet(sol, {-2.0, -2.0}), std::domain_error);
    CHECK_THROWS_AS(bhm::eval_scattered_jet(sol, {1.0, 2.0}), std::domain_error);
}

TEST_CASE("MFS configuration contracts") {
    Scene sc = unit_circle_scene(BoundaryCondition::Clamped);
    bhm::MfsConfig cfg;
    cfg.offset = 1.0;
    CHECK_THROWS_AS(bhm::MfsSolver(sc, cfg), std::invalid_argument);
    cfg = {};
    cfg.sources_per_curve = 97;
    CHECK_THROWS_AS(bhm::MfsSolver(sc, cfg), std::invalid_argument);
    cfg = {};
    cfg.collocation_per_curve = 100;
    CHECK_THROWS_AS(bhm::MfsSolver(sc, cfg), std::invalid_argument);
    cfg = {};
    cfg.depth_factor = 0.0;
    CHECK_THROWS_AS(bhm::MfsSolver(sc, cfg), std::invalid_argument);
    Scene empty;
    CHECK_THROWS_AS(bhm::MfsSolver(empty, bhm::MfsConfig{}), std::invalid_argument);
}

TEST_CASE("scattered waves satisfy the radiation condition far out") {
    const WaveParams prm;
    const bhm::ModalSolution ms =
        bhm::solve_circle_modes(prm, {0, 0}, 1.0, BoundaryCondition::Clamped, Incidence::plane(0.3));
    double worst = 0.0;
    for (int i = 0; i < 16; ++i) {
        const double th = 2.0 * pi * i / 16;
        const double r = 1e3;
        const Vec2 x{r * std::cos(th), r * std::sin(th)};
        const Jet3 j = bhm::eval_scattered_jet(ms, x);
        const cplx dr = bhm::jet_dn(j, bhm::unit_dir(th));
        worst = std::max(worst, std::abs(dr - cplx(0.0, prm.kappa) * j.val()) / std::abs(j.val()));
    }
    CHECK(worst < 1e-3);  // the remainder decays like 1/r; measured 5.0e-4
}

TEST_CASE("far-field pattern captures the leading asymptotics") {
    const WaveParams prm;
    const bhm::ModalSolution ms =
        bhm::solve_circle_modes(prm, {0, 0}, 1.0, BoundaryCondition::Clamped, Incidence::plane(0.3));
    const cplx pref = std::exp(cplx(0.0, pi / 4)) / std::sqrt(8.0 * pi * prm.kappa);
    auto scaled_residual = [&](double rho) {
        double worst = 0.0;
        for (int i = 0; i < 12; ++i) {
            const double th = 2.0 * pi * (i + 0.3) / 12;
            const Vec2 x{rho * std::cos(th), rho * std::sin(th)};
            const cplx lead = pref * std::exp(cplx(0.0, prm.kappa * rho)) / std::sqrt(rho) *
                              bhm::eval_farfield(ms, th);
            worst = std::max(worst,
                             std::abs(bhm::eval_scattered_jet(ms, x).val() - lead) * std::sqrt(rho));
        }
        return worst;
    };
    const double r1 = scaled_residual(1e3), r2 = scaled_residual(2e3);
    CHECK(r2 / r1 > 0.35);  // the sqrt-scaled remainder decays like 1/rho
    CHECK(r2 / r1 < 0.70);  // measured ratio 0.50
    // evanescent part alone has no far field
    bhm::MfsSolution ev;
    ev.prm = prm;
    ev.curves = {};
    ev.sources = {Vec2{0.1, 0.0}, Vec2{-0.2, 0.3}};
    ev.coef_h = {cplx{}, cplx{}};
    ev.coef_k = {cplx(1.0, 0.5), cplx(0.3, -2.0)};
    CHECK(std::abs(bhm::eval_farfield(ev, 1.234)) == 0.0);
    // a single unit outgoing density at the origin has far field identically 1
    bhm::MfsSolution unit;
    unit.prm = prm;
    unit.sources = {Vec2{0.0, 0.0}};
    unit.coef_h = {cplx(1.0, 0.0)};
    unit.coef_k = {cplx{}};
    for (double th : {0.0, 1.1, 3.9}) CHECK(std::abs(bhm::eval_farfield(unit, th) - 1.0) < 1e-15);
}

TEST_CASE("far field of modal coefficients matches the boundary-integral route") {
    // Independent representation: the far field is the Green representation
    // with the kernel replaced by its far-field limit.  Only the outgoing part
    // of G survives, and its limit is the plane wave
    //   ghat(y) = -exp(-i kappa xhat.y) / (2 kappa^2),
    // so every kernel trace (value, normal derivative, M_y, N_y) comes from
    // pushing that plane-wave jet through the same trace operators.
    const WaveParams prm;
    const bhm::ModalSolution ms =
        bhm::solve_circle_modes(prm, {0, 0}, 1.0, BoundaryCondition::Clamped, Incidence::plane(0.3));
    const auto nodes = bhm::discretize(Curve::circle({0, 0}, 1.0), 512);
    const bhm::BoundaryTraces tr = bhm::boundary_traces(
        prm, nodes, [&](Vec2 x) { return bhm::eval_scattered_jet(ms, x); });
    const double k2 = prm.kappa * prm.kappa;
    for (double th : {0.0, 0.8, 2.0, 4.4}) {
        CAPTURE(th);
        const Vec2 d = -1.0 * bhm::unit_dir(th);  // exp(-i kappa xhat.y) travels along -xhat
        cplx acc{};
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            Jet3 g = bhm::plane_wave_jet(prm.kappa, d, nodes[i].x);
            g *= cplx(-1.0 / (2.0 * k2), 0.0);
            acc += (tr.N[i] * g.val() + tr.M[i] * bhm::jet_dn(g, nodes[i].normal) -
                    tr.dn[i] * bhm::apply_M(prm, g, nodes[i].normal) -
                    tr.val[i] * bhm::apply_N(prm, g, nodes[i])) *
                   nodes[i].weight;
        }
        const cplx direct = bhm::eval_farfield(ms, th);
        CHECK(std::abs(acc - direct) < 1e-6 * std::abs(direct));
    }
}

TEST_CASE("Green representation reconstructs the exterior field from traces") {
    const WaveParams prm;
    SECTION("modal circle solution") {
        const bhm::ModalSolution ms = bhm::solve_circle_modes(prm, {0, 0}, 1.0,
                                                              BoundaryCondition::Clamped,
                                                              Incidence::plane(0.3));
        const auto nodes = bhm::discretize(Curve::circle({0, 0}, 1.0), 512);
        const bhm::BoundaryTraces tr = bhm::boundary_traces(
            prm, nodes, [&](Vec2 x) { return bhm::eval_scattered_jet(ms, x); });
        for (int i = 0; i < 16; ++i) {
            const double th = 2.0 * pi * i / 16;
            const double rho = 1.6 + 0.4 * (i % 4);
            const Vec2 x{rho * std::cos(th), rho * std::sin(th)};
            const cplx direct = bhm::eval_scattered_jet(ms, x).val();
            const cplx rep = bhm::green_representation(prm, nodes, tr, x);
            CHECK(std::abs(rep - direct) < 1e-4 * std::abs(direct));
        }
    }
    SECTION("MFS kite solution") {
        Scene sc;
        sc.prm = prm;
        sc.curves = {Curve::kite({0.0, 0.0}, 1.0)};
        sc.bc = BoundaryCondition::Clamped;
        bhm::MfsConfig cfg;
        cfg.sources_per_curve = 128;
        cfg.collocation_per_curve = 320;
        bhm::MfsSolver solver(sc, cfg);
        const bhm::MfsSolution sol = solver.solve(Incidence::plane(0.3));
        const auto nodes = bhm::discretize(sc.curves[0], 512);
        const bhm::BoundaryTraces tr = bhm::boundary_traces(
            prm, nodes, [&](Vec2 x) { return bhm::eval_scattered_jet(sol, x); });
        for (const Vec2 x : {Vec2{2.5, 0.3}, Vec2{-1.8, 2.2}, Vec2{0.4, -2.6}}) {
            const cplx direct = bhm::eval_scattered_jet(sol, x).val();
            const cplx rep = bhm::green_representation(prm, nodes, tr, x);
            CHECK(std::abs(rep - direct) < 1e-4 * std::abs(direct));
        }
    }
}

TEST_CASE("boundary power flux equals the far-field energy") {
    // Im of the boundary pairing of the traces equals kappa^2/(4 pi) times the
    // integrated far-field intensity.
    const WaveParams prm;
    const bhm::ModalSolution ms =
        bhm::solve_circle_modes(prm, {0, 0}, 1.0, BoundaryCondition::Free, Incidence::plane(0.3));
    const auto nodes = bhm::discretize(Curve::circle({0, 0}, 1.0), 512);
    const bhm::BoundaryTraces tr = bhm::boundary_traces(
        prm, nodes, [&](Vec2 x) { return bhm::eval_scattered_jet(ms, x); });
    cplx pairing{};
    for (std::size_t i = 0; i < nodes.size(); ++i)
        pairing += (std::conj(tr.val[i]) * tr.N[i] + std::conj(tr.dn[i]) * tr.M[i]) *
                   nodes[i].weight;
    double energy = 0.0;
    const int nd = 512;
    for (int i = 0; i < nd; ++i) {
        const cplx f = bhm::eval_farfield(ms, 2.0 * pi * i / nd);
        energy += std::norm(f) * (2.0 * pi / nd);
    }
    const double rhs = prm.kappa * prm.kappa / (4.0 * pi) * energy;
    CHECK(std::abs(pairing.imag() - rhs) < 1e-5 * std::abs(rhs));
}

TEST_CASE("point-source far field reciprocates the plane-wave propagating part") {
    // farfield(-d) under a point source at x_s equals the propagating part at
    // x_s under the plane wave with direction d (the normalizations in use
    // make the proportionality constant exactly 1; verified to 1e-15).
    const WaveParams prm;
    for (int k = 0; k < 8; ++k) {
        const double thd = 0.4 + 0.77 * k;
        const double rs = 2.8 + 0.3 * (k % 3);
        const Vec2 xs{rs * std::cos(1.1 + 0.7 * k), rs * std::sin(1.1 + 0.7 * k)};
        const bhm::ModalSolution mp = bhm::solve_circle_modes(
            prm, {0, 0}, 1.0, BoundaryCondition::Clamped, Incidence::source(xs));
        const cplx ff = bhm::eval_farfield(mp, thd + pi);
        const bhm::ModalSolution mw = bhm::solve_circle_modes(
            prm, {0, 0}, 1.0, BoundaryCondition::Clamped, Incidence::plane(thd));
        const cplx upr = bhm::eval_scattered_jet(mw, xs, true).val();
        CAPTURE(k);
        CHECK(std::abs(ff - upr) < 1e-6);
    }
}

TEST_CASE("propagating part equals the kernel-filtered scattered field") {
    // u_pr = -(lap u_sc - kappa^2 u_sc) / (2 kappa^2), point by point.
    const WaveParams prm;
    const double k2 = prm.kappa * prm.kappa;
    SECTION("modal solution") {
        const bhm::ModalSolution ms = bhm::solve_circle_modes(
            prm, {0, 0}, 1.0, BoundaryCondition::SimplySupported, Incidence::plane(1.1));
        for (const Vec2 x : {Vec2{1.9, 0.4}, Vec2{-1.2, 1.6}, Vec2{0.3, -2.4}}) {
            const Jet3 full = bhm::eval_scattered_jet(ms, x);
            const cplx filtered = -(bhm::jet_lap(full) - k2 * full.val()) / (2.0 * k2);
            const cplx direct = bhm::eval_scattered_jet(ms, x, true).val();
            CHECK(std::abs(filtered - direct) < 1e-8 * std::max(1.0, std::abs(direct)));
        }
        // beta == 0 makes the scattered field purely propagating
        bhm::ModalSolution prop = ms;
        std::fill(prop.beta.begin(), prop.beta.end(), cplx{});
        const Vec2 x{2.2, -0.7};
        CHECK(std::abs(bhm::eval_scattered_jet(prop, x).val() -
                       bhm::eval_scattered_jet(prop, x, true).val()) < 1e-14);
    }
    SECTION("MFS solution") {
        Scene sc = unit_circle_scene(BoundaryCondition::Clamped);
        sc.prm = prm;
        bhm::MfsSolver solver(sc, {});
        const bhm::MfsSolution sol = solver.solve(Incidence::plane(0.3));
        for (const Vec2 x : {Vec2{1.9, 0.4}, Vec2{-1.2, 1.6}}) {
            const Jet3 full = bhm::eval_scattered_jet(sol, x);
            const cplx filtered = -(bhm::jet_lap(full) - k2 * full.val()) / (2.0 * k2);
            const cplx direct = bhm::eval_scattered_jet(sol, x, true).val();
            CHECK(std::abs(filtered - direct) < 1e-8 * std::max(1.0, std::abs(direct)));
        }
    }
}

TEST_CASE("bending and transverse traces converge to the propagating far-form") {
    // On a far circle of radius R the physical traces reduce to the
    // propagating part: M u -> -kappa^2 u_pr and N u -> kappa^2 d_r u_pr with
    // a remainder that decays as R grows; doubling R from 20 to 40 shrinks the
    // combined sup-residual by a factor inside [0.2, 0.8].
    const WaveParams prm;
    const double k2 = prm.kappa * prm.kappa;
    const bhm::ModalSolution ms =
        bhm::solve_circle_modes(prm, {0, 0}, 1.0, BoundaryCondition::Clamped, Incidence::plane(0.3));
    auto combined = [&](double R) {
        double supM = 0.0, supN = 0.0;
        for (int i = 0; i < 64; ++i) {
            const double th = 2.0 * pi * i / 64;
            const Vec2 x{R * std::cos(th), R * std::sin(th)};
            const Jet3 full = bhm::eval_scattered_jet(ms, x);
            const Jet3 prj = bhm::eval_scattered_jet(ms, x, true);
            const cplx Mv = bhm::apply_M_polar(prm, full, x, {0, 0});
            const cplx Nv = bhm::apply_N_polar(prm, full, x, {0, 0});
            const cplx dr = bhm::jet_dn(prj, bhm::unit_dir(th));
            supM = std::max(supM, std::abs(Mv + k2 * prj.val()));
            supN = std::max(supN, std::abs(Nv - k2 * dr));
        }
        // N carries one more kappa power; normalize to common units
        return supM + supN / prm.kappa;
    };
    const double r20 = combined(20.0), r40 = combined(40.0);
    const double ratio = r40 / r20;
    CHECK(ratio > 0.2);
    CHECK(ratio < 0.8);  // measured 0.33; theory says 2^(-3/2) ~ 0.354 asymptotically
}

TEST_CASE("forward engine routes scenes to the right backend") {
    const WaveParams prm;
    // single circle: automatic modal backend agrees with the direct modal solve
    Scene sc = unit_circle_scene(BoundaryCondition::Clamped);
    sc.prm = prm;
    const bhm::ForwardEngine eng(sc);
    const bhm::ForwardSolution sol = eng.solve(Incidence::plane(0.3));
    CHECK(sol.modal() != nullptr);
    const bhm::ModalSolution direct =
        bhm::solve_circle_modes(prm, {0, 0}, 1.0, BoundaryCondition::Clamped, Incidence::plane(0.3));
    const Vec2 x{2.0, 0.5};
    CHECK(std::abs(sol.scattered_jet(x).val() - bhm::eval_scattered_jet(direct, x).val()) < 1e-14);
    // modal backend on a non-circle is a contract error
    Scene kt;
    kt.curves = {Curve::kite({0, 0}, 1.0)};
    CHECK_THROWS_AS(bhm::ForwardEngine(kt, bhm::ForwardBackend::Modal), std::invalid_argument);
    // empty scene: zero scattered field, total == incident
    Scene none;
    none.prm = prm;
    const bhm::ForwardEngine zero(none);
    const bhm::ForwardSolution zs = zero.solve(Incidence::plane(0.7));
    CHECK(std::abs(zs.scattered_jet({3.0, 1.0}).val()) == 0.0);
    CHECK(std::abs(zs.farfield(1.0)) == 0.0);
    const cplx inc_val = bhm::incident_jet(prm, Incidence::plane(0.7), {3.0, 1.0}).val();
    CHECK(std::abs(zs.total_jet({3.0, 1.0}).val() - inc_val) == 0.0);
}

TEST_CASE("simulate: zero-obstacle data is zero or the bare kernel") {
    const WaveParams prm;
    Scene none;
    none.prm = prm;
    const bhm::ForwardEngine eng(none);
    bhm::ArrayGeometry arr;
    arr.n_rec = 16;
    arr.n_src = 16;
    arr.n_dir = 16;
    const bhm::DataMatrix usc =
        bhm::simulate(eng, arr, bhm::DataKind::ScatteredField, bhm::ExcitationKind::PointSources);
    CHECK(usc.rows == 16);
    CHECK(usc.cols == 16);
    for (const cplx& v : usc.a) CHECK(std::abs(v) == 0.0);
    const bhm::DataMatrix tot =
        bhm::simulate(eng, arr, bhm::DataKind::AbsTotal, bhm::ExcitationKind::PointSources);
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j) {
            const Vec2 xr = arr.receiver(i), xs = arr.source(j);
            if (bhm::dist(xr, xs) < 1e-9) {
                CHECK(std::abs(tot.at(i, j)) == 0.0);  // masked coincident pair
            } else {
                const double phi =
                    std::abs(bhm::kernel_jet(bhm::KernelKind::Helmholtz, prm, xr, xs).val());
                CHECK(std::abs(tot.at(i, j) - phi) < 1e-14);
                CHECK(tot.at(i, j).imag() == 0.0);
                CHECK(tot.at(i, j).real() >= 0.0);
            }
        }
}

TEST_CASE("simulate: centered circle data is invariant under simultaneous rotation") {
    const WaveParams prm;
    Scene sc = unit_circle_scene(BoundaryCondition::Clamped);
    sc.prm = prm;
    const bhm::ForwardEngine eng(sc);
    bhm::ArrayGeometry arr;
    arr.n_rec = 24;
    arr.n_src = 24;
    arr.n_dir = 24;
    const bhm::DataMatrix dm =
        bhm::simulate(eng, arr, bhm::DataKind::ScatteredField, bhm::ExcitationKind::PointSources);
    double worst = 0.0, scale = 0.0;
    for (int i = 0; i < 24; ++i)
        for (int j = 0; j < 24; ++j) {
            worst = std::max(worst, std::abs(dm.at(i, j) - dm.at((i + 1) % 24, (j + 1) % 24)));
            scale = std::max(scale, std::abs(dm.at(i, j)));
        }
    CHECK(worst < 1e-9 * scale);
}

TEST_CASE("simulate: amplitude decays with the array radii") {
    const WaveParams prm;
    Scene sc = unit_circle_scene(BoundaryCondition::Clamped);
    sc.prm = prm;
    const bhm::ForwardEngine eng(sc);
    auto max_amp = [&](double R) {
        bhm::ArrayGeometry arr;
        arr.radius_rec = R;
        arr.radius_src = R;
        arr.n_rec = 12;
        arr.n_src = 12;
        const bhm::DataMatrix dm =
            bhm::simulate(eng, arr, bhm::DataKind::ScatteredField, bhm::ExcitationKind::PointSources);
        double m = 0.0;
        for (const cplx& v : dm.a) m = std::max(m, std::abs(v));
        return m;
    };
    const double m10 = max_amp(10.0), m20 = max_amp(20.0);
    // both radii double, so the (R_r R_s)^(-1/2) law predicts ratio 1/2
    CHECK(m20 / m10 > 0.35);
    CHECK(m20 / m10 < 0.70);  // measured 0.513
}

TEST_CASE("simulate: trace kinds agree with direct evaluation") {
    const WaveParams prm;
    Scene sc = unit_circle_scene(BoundaryCondition::Clamped);
    sc.prm = prm;
    const bhm::ForwardEngine eng(sc);
    bhm::ArrayGeometry arr;
    arr.n_rec = 8;
    arr.n_src = 8;
    arr.n_dir = 8;
    const Incidence inc = Incidence::source(arr.source(3));
    const bhm::ForwardSolution sol = eng.solve(inc);
    const bhm::DataMatrix mm =
        bhm::simulate(eng, arr, bhm::DataKind::BendingTrace, bhm::ExcitationKind::PointSources);
    const bhm::DataMatrix nn =
        bhm::simulate(eng, arr, bhm::DataKind::TransverseTrace, bhm::ExcitationKind::PointSources);
    const bhm::DataMatrix dn =
        bhm::simulate(eng, arr, bhm::DataKind::NormalDerivative, bhm::ExcitationKind::PointSources);
    for (int i = 0; i < 8; ++i) {
        const Vec2 xr = arr.receiver(i);
        const Jet3 js = sol.scattered_jet(xr);
        CHECK(std::abs(mm.at(i, 3) - bhm::apply_M_polar(prm, js, xr, {0, 0})) < 1e-12);
        CHECK(std::abs(nn.at(i, 3) - bhm::apply_N_polar(prm, js, xr, {0, 0})) < 1e-12);
        CHECK(std::abs(dn.at(i, 3) - bhm::jet_dn(js, (1.0 / bhm::norm(xr)) * xr)) < 1e-12);
    }
    // far-field data indexes directions on both axes under plane-wave excitation
    const bhm::DataMatrix ff =
        bhm::simulate(eng, arr, bhm::DataKind::FarField, bhm::ExcitationKind::PlaneWaves);
    CHECK(ff.rows == 8);
    CHECK(ff.cols == 8);
    const bhm::ForwardSolution pw = eng.solve(Incidence::plane(arr.dir_angle(2)));
    CHECK(std::abs(ff.at(5, 2) - pw.farfield(arr.dir_angle(5))) < 1e-12);
}

TEST_CASE("simulate: contract errors") {
    const WaveParams prm;
    Scene sc = unit_circle_scene(BoundaryCondition::Clamped);
    sc.prm = prm;
    const bhm::ForwardEngine eng(sc);
    bhm::ArrayGeometry arr;
    arr.n_rec = 8;
    arr.n_src = 8;
    // phaseless totals need point sources: the incident plane wave never decays
    CHECK_THROWS_AS(bhm::simulate(eng, arr, bhm::DataKind::AbsTotal, bhm::ExcitationKind::PlaneWaves),
                    std::invalid_argument);
    // measurement circles must enclose the scene with clearance
    bhm::ArrayGeometry tight;
    tight.radius_rec = 1.2;
    tight.n_rec = 8;
    tight.n_src = 8;
    CHECK_THROWS_AS(
        bhm::simulate(eng, tight, bhm::DataKind::ScatteredField, bhm::ExcitationKind::PointSources),
        std::invalid_argument);
    bhm::ArrayGeometry badsrc;
    badsrc.radius_src = 1.0;
    badsrc.n_rec = 8;
    badsrc.n_src = 8;
    CHECK_THROWS_AS(
        bhm::simulate(eng, badsrc, bhm::DataKind::ScatteredField, bhm::ExcitationKind::PointSources),
        std::invalid_argument);
}

TEST_CASE("simulate: wavelength scaling relates geometrically similar scenes") {
    // kappa -> kappa/2 with all lengths doubled is the same dimensionless
    // problem: the scattered fields agree at corresponding points.
    const WaveParams prm1{2.0 * pi, 0.25};
    const WaveParams prm2{pi, 0.25};
    Scene s1, s2;
    s1.prm = prm1;
    s1.curves = {Curve::circle({0, 0}, 1.0)};
    s1.bc = BoundaryCondition::Clamped;
    s2.prm = prm2;
    s2.curves = {Curve::circle({0, 0}, 2.0)};
    s2.bc = BoundaryCondition::Clamped;
    const bhm::ModalSolution m1 =
        bhm::solve_circle_modes(prm1, {0, 0}, 1.0, s1.bc, Incidence::plane(0.3));
    const bhm::ModalSolution m2 =
        bhm::solve_circle_modes(prm2, {0, 0}, 2.0, s2.bc, Incidence::plane(0.3));
    for (double th : {0.0, 1.3, 2.9}) {
        const Vec2 x1{2.0 * std::cos(th), 2.0 * std::sin(th)};
        const Vec2 x2 = 2.0 * x1;
        const cplx u1 = bhm::eval_scattered_jet(m1, x1).val();
        const cplx u2 = bhm::eval_scattered_jet(m2, x2).val();
        CHECK(std::abs(u1 - u2) < 1e-12 * std::abs(u1));
    }
}
