#ifndef BHM_IMAGING_HPP
#define BHM_IMAGING_HPP

// Reverse-time-migration imaging: eleven indicator functions that map one
// measurement matrix to a real-valued image over a rectangular sampling grid.
// Every indicator is the Re or Im part of a weighted double sum
//
//   I(z) = pref * Branch( sum_r sum_c  A(z, row_r) * B(z, col_c) * T(data_rc) )
//
// where A is the kernel attached to the data rows (an outgoing point kernel
// at the receivers, or a conjugated plane wave over observation directions),
// B the kernel attached to the columns (point kernel at the sources, or a
// plane wave over incident directions), and T the data transform (plain
// conjugation, or the phaseless quotient).  The indicators differ only in
// these slots plus a prefactor, so one table drives them all and the sign
// conventions stay auditable in one place.

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "bhm/forward.hpp"

namespace bhm {

// ---------------------------------------------------------------------------
// Sampling grid.

struct GridSpec {
    double xmin = -6.0, xmax = 6.0;
    double ymin = -6.0, ymax = 6.0;
    int nx = 121, ny = 121;  // ~10 points per wavelength at kappa = 2 pi

    void check() const {
        if (!(xmin < xmax) || !(ymin < ymax))
            throw std::invalid_argument("GridSpec: bounds must be nonempty intervals");
        if (nx < 2 || ny < 2)
            throw std::invalid_argument("GridSpec: need at least 2 points per axis");
    }
    double dx() const { return (xmax - xmin) / (nx - 1); }
    double dy() const { return (ymax - ymin) / (ny - 1); }
    Vec2 point(int ix, int iy) const { return {xmin + ix * dx(), ymin + iy * dy()}; }
    // largest distance from the origin over the four corners
    double corner_radius() const {
        const double ax = std::max(std::abs(xmin), std::abs(xmax));
        const double ay = std::max(std::abs(ymin), std::abs(ymax));
        return std::hypot(ax, ay);
    }
};

struct SamplingGrid {
    GridSpec spec;
    std::vector<double> values;  // x-major: values[ix * ny + iy]

    double& at(int ix, int iy) { return values[static_cast<std::size_t>(ix) * spec.ny + iy]; }
    double at(int ix, int iy) const { return values[static_cast<std::size_t>(ix) * spec.ny + iy]; }
    Vec2 point(int ix, int iy) const { return spec.point(ix, iy); }
};

// Divide by the signed maximum, exactly as the reconstruction algorithm
// prescribes (not by max |I|; indicator values may be negative).
inline SamplingGrid normalize(const SamplingGrid& g) {
    if (g.values.empty()) throw std::invalid_argument("normalize: empty grid");
    const double m = *std::max_element(g.values.begin(), g.values.end());
    if (m == 0.0) throw std::domain_error("normalize: grid maximum is zero");
    SamplingGrid out = g;
    for (double& v : out.values) v /= m;
    return out;
}

// Documented variant: divide by the largest magnitude instead, which keeps
// the output in [-1, 1] even when the extreme value is negative.
inline SamplingGrid normalize_abs(const SamplingGrid& g) {
    if (g.values.empty()) throw std::invalid_argument("normalize_abs: empty grid");
    double m = 0.0;
    for (double v : g.values) m = std::max(m, std::abs(v));
    if (m == 0.0) throw std::domain_error("normalize_abs: grid is identically zero");
    SamplingGrid out = g;
    for (double& v : out.values) v /= m;
    return out;
}

// ---------------------------------------------------------------------------
// Indicator table.

namespace detail {

// Scalar value of the outgoing point kernel; cheaper than a full derivative
// jet when only the value enters the correlation.
inline cplx phi0(double kappa, Vec2 a, Vec2 b) {
    const double r = dist(a, b);
    if (r < 1e-12) throw std::domain_error("phi0: evaluation at the source point");
    return 0.25 * iu * hankel1(0, kappa * r);
}

enum class KernelSlot {
    PointAtReceiver,  // Phi_kappa(z, x_r)
    PointAtSource,    // Phi_kappa(z, x_s)
    PlaneIncident,    // exp(+i kappa z . d)
    PlaneObserved     // exp(-i kappa z . xhat)
};

struct IndicatorSpec {
    DataKind kind;
    ExcitationKind excitation;
    double coeff;     // prefactor = coeff * kappa^kappa_pow
    int kappa_pow;
    bool imag_part;   // Im branch if true, Re branch otherwise
    KernelSlot row_kernel;
    KernelSlot col_kernel;
    bool phaseless;   // data transform: phaseless quotient instead of conj
};

inline IndicatorSpec indicator_spec(int j) {
    const double q4 = 1.0 / (4.0 * pi);
    switch (j) {
        case 1: return {DataKind::ScatteredField, ExcitationKind::PointSources, -2.0, 4, true,
                        KernelSlot::PointAtReceiver, KernelSlot::PointAtSource, false};
        case 2: return {DataKind::NormalDerivative, ExcitationKind::PointSources, -2.0, 3, false,
                        KernelSlot::PointAtReceiver, KernelSlot::PointAtSource, false};
        case 3: return {DataKind::BendingTrace, ExcitationKind::PointSources, 2.0, 2, true,
                        KernelSlot::PointAtReceiver, KernelSlot::PointAtSource, false};
        case 4: return {DataKind::TransverseTrace, ExcitationKind::PointSources, -2.0, 1, false,
                        KernelSlot::PointAtReceiver, KernelSlot::PointAtSource, false};
        case 5: return {DataKind::ScatteredField, ExcitationKind::PlaneWaves, -q4, 3, true,
                        KernelSlot::PointAtReceiver, KernelSlot::PlaneIncident, false};
        case 6: return {DataKind::NormalDerivative, ExcitationKind::PlaneWaves, -q4, 2, false,
                        KernelSlot::PointAtReceiver, KernelSlot::PlaneIncident, false};
        case 7: return {DataKind::BendingTrace, ExcitationKind::PlaneWaves, q4, 1, true,
                        KernelSlot::PointAtReceiver, KernelSlot::PlaneIncident, false};
        case 8: return {DataKind::TransverseTrace, ExcitationKind::PlaneWaves, -q4, 0, false,
                        KernelSlot::PointAtReceiver, KernelSlot::PlaneIncident, false};
        case 9: return {DataKind::FarField, ExcitationKind::PointSources, -q4, 3, true,
                        KernelSlot::PlaneObserved, KernelSlot::PointAtSource, false};
        case 10: return {DataKind::FarField, ExcitationKind::PlaneWaves, -1.0 / (32.0 * pi * pi),
                         2, true, KernelSlot::PlaneObserved, KernelSlot::PlaneIncident, false};
        case 11: return {DataKind::AbsTotal, ExcitationKind::PointSources, -2.0, 4, true,
                         KernelSlot::PointAtReceiver, KernelSlot::PointAtSource, true};
    }
    throw std::invalid_argument("indicator_spec: index must lie in 1..11, got " + std::to_string(j));
}

inline cplx slot_value(KernelSlot slot, double kappa, Vec2 z, const ArrayGeometry& arr, int i) {
    switch (slot) {
        case KernelSlot::PointAtReceiver: return phi0(kappa, z, arr.receiver(i));
        case KernelSlot::PointAtSource: return phi0(kappa, z, arr.source(i));
        case KernelSlot::PlaneIncident: return std::exp(cplx(0.0, kappa * dot(z, arr.direction(i))));
        case KernelSlot::PlaneObserved: return std::exp(cplx(0.0, -kappa * dot(z, arr.direction(i))));
    }
    throw std::logic_error("slot_value: unreachable");
}

// Arc-length (circle) or angular (direction set) quadrature weight of one slot.
inline double slot_weight(KernelSlot slot, const ArrayGeometry& arr) {
    switch (slot) {
        case KernelSlot::PointAtReceiver: return 2.0 * pi * arr.radius_rec / arr.n_rec;
        case KernelSlot::PointAtSource: return 2.0 * pi * arr.radius_src / arr.n_src;
        case KernelSlot::PlaneIncident:
        case KernelSlot::PlaneObserved: return 2.0 * pi / arr.n_dir;
    }
    throw std::logic_error("slot_weight: unreachable");
}

inline int slot_count(KernelSlot slot, const ArrayGeometry& arr) {
    switch (slot) {
        case KernelSlot::PointAtReceiver: return arr.n_rec;
        case KernelSlot::PointAtSource: return arr.n_src;
        case KernelSlot::PlaneIncident:
        case KernelSlot::PlaneObserved: return arr.n_dir;
    }
    throw std::logic_error("slot_count: unreachable");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// The imaging engine.

// Evaluate indicator j on the sampling grid.  The data matrix must carry
// exactly the kind/excitation the indicator is defined on, with shapes and
// metadata matching the array geometry; the grid must lie strictly inside
// every measurement circle the indicator integrates over.
inline SamplingGrid image_indicator(int j, const DataMatrix& data, const GridSpec& gs,
                                    const ArrayGeometry& arr, const WaveParams& prm) {
    const detail::IndicatorSpec spec = detail::indicator_spec(j);
    prm.check();
    gs.check();
    arr.check();
    if (data.kind != spec.kind || data.excitation != spec.excitation)
        throw std::invalid_argument(
            std::string("image_indicator: indicator ") + std::to_string(j) + " needs " +
            data_kind_tag(spec.kind) + "/" + excitation_tag(spec.excitation) + " data, got " +
            data_kind_tag(data.kind) + "/" + excitation_tag(data.excitation));
    const int rows = detail::slot_count(spec.row_kernel, arr);
    const int cols = detail::slot_count(spec.col_kernel, arr);
    if (data.rows != rows || data.cols != cols)
        throw std::invalid_argument("image_indicator: data shape " + std::to_string(data.rows) +
                                    "x" + std::to_string(data.cols) + " does not match the array (" +
                                    std::to_string(rows) + "x" + std::to_string(cols) + ")");
    if (data.kappa != prm.kappa)
        throw std::invalid_argument("image_indicator: data wavenumber differs from params");
    // The correlation kernels assume the grid is strictly enclosed by every
    // measurement circle in use; directions impose no such constraint.
    const double corner = gs.corner_radius();
    auto require_inside = [&](detail::KernelSlot s) {
        if (s == detail::KernelSlot::PointAtReceiver && corner >= arr.radius_rec)
            throw std::invalid_argument("image_indicator: grid reaches the receiver circle");
        if (s == detail::KernelSlot::PointAtSource && corner >= arr.radius_src)
            throw std::invalid_argument("image_indicator: grid reaches the source circle");
    };
    require_inside(spec.row_kernel);
    require_inside(spec.col_kernel);
    if (spec.row_kernel == detail::KernelSlot::PointAtReceiver && data.radius_rec != arr.radius_rec)
        throw std::invalid_argument("image_indicator: data receiver radius differs from the array");
    if (spec.col_kernel == detail::KernelSlot::PointAtSource && data.radius_src != arr.radius_src)
        throw std::invalid_argument("image_indicator: data source radius differs from the array");

    // Transform the data once; the result no longer depends on the sampling
    // point.  Plain indicators correlate against the conjugated measurement;
    // the phaseless indicator divides the excess intensity by the incident
    // kernel instead (coincident pairs arrive masked to zero and entries with
    // an untrustworthy divisor are flagged out of the sum the same way).
    std::vector<cplx> tdata(static_cast<std::size_t>(rows) * cols);
    if (!spec.phaseless) {
        for (std::size_t i = 0; i < tdata.size(); ++i) tdata[i] = std::conj(data.a[i]);
    } else {
        for (int r = 0; r < rows; ++r) {
            const Vec2 xr = arr.receiver(r);
            for (int c = 0; c < cols; ++c) {
                const Vec2 xs = arr.source(c);
                if (dist(xr, xs) < 1e-9) {
                    tdata[static_cast<std::size_t>(r) * cols + c] = cplx{};
                    continue;
                }
                const cplx inc = detail::phi0(prm.kappa, xr, xs);
                if (std::abs(inc) < 1e-14) {  // divisor vanished: flag the entry out
                    tdata[static_cast<std::size_t>(r) * cols + c] = cplx{};
                    continue;
                }
                const double total = std::abs(data.at(r, c));
                tdata[static_cast<std::size_t>(r) * cols + c] =
                    (total * total - std::norm(inc)) / inc;
            }
        }
    }

    const double pref = spec.coeff * std::pow(prm.kappa, spec.kappa_pow) *
                        detail::slot_weight(spec.row_kernel, arr) *
                        detail::slot_weight(spec.col_kernel, arr);

    // The double correlation sum dominates the whole reconstruction (grid
    // points x rows x cols), so it runs on separated real/imaginary arrays:
    // spelled this way the compiler keeps it in vector registers instead of
    // calling the library helper for every complex multiply.
    std::vector<double> tre(tdata.size()), tim(tdata.size());
    for (std::size_t i = 0; i < tdata.size(); ++i) {
        tre[i] = tdata[i].real();
        tim[i] = tdata[i].imag();
    }

    SamplingGrid out;
    out.spec = gs;
    out.values.assign(static_cast<std::size_t>(gs.nx) * gs.ny, 0.0);
    parallel_for(static_cast<std::int64_t>(gs.nx) * gs.ny, [&](std::int64_t idx) {
        const int ix = static_cast<int>(idx / gs.ny);
        const int iy = static_cast<int>(idx % gs.ny);
        const Vec2 z = gs.point(ix, iy);
        std::vector<double> are(rows), aim(rows), bre(cols), bim(cols);
        for (int r = 0; r < rows; ++r) {
            const cplx v = detail::slot_value(spec.row_kernel, prm.kappa, z, arr, r);
            are[r] = v.real();
            aim[r] = v.imag();
        }
        for (int c = 0; c < cols; ++c) {
            const cplx v = detail::slot_value(spec.col_kernel, prm.kappa, z, arr, c);
            bre[c] = v.real();
            bim[c] = v.imag();
        }
        double accr = 0.0, acci = 0.0;
        for (int r = 0; r < rows; ++r) {
            const double* tr = &tre[static_cast<std::size_t>(r) * cols];
            const double* ti = &tim[static_cast<std::size_t>(r) * cols];
            double sr = 0.0, si = 0.0;
            for (int c = 0; c < cols; ++c) {
                sr += tr[c] * bre[c] - ti[c] * bim[c];
                si += tr[c] * bim[c] + ti[c] * bre[c];
            }
            accr += are[r] * sr - aim[r] * si;
            acci += are[r] * si + aim[r] * sr;
        }
        out.values[static_cast<std::size_t>(idx)] = pref * (spec.imag_part ? acci : accr);
    });
    return out;
}

// Named entry points, one per data family; each restricts the admissible
// indicator indices and otherwise defers to the shared engine.
inline SamplingGrid image_nearfield_point(int j, const DataMatrix& data, const GridSpec& gs,
                                          const ArrayGeometry& arr, const WaveParams& prm) {
    if (j < 1 || j > 4)
        throw std::invalid_argument("image_nearfield_point: indicator index must lie in 1..4");
    return image_indicator(j, data, gs, arr, prm);
}

inline SamplingGrid image_nearfield_plane(int j, const DataMatrix& data, const GridSpec& gs,
                                          const ArrayGeometry& arr, const WaveParams& prm) {
    if (j < 5 || j > 8)
        throw std::invalid_argument("image_nearfield_plane: indicator index must lie in 5..8");
    return image_indicator(j, data, gs, arr, prm);
}

inline SamplingGrid image_farfield(int j, const DataMatrix& data, const GridSpec& gs,
                                   const ArrayGeometry& arr, const WaveParams& prm) {
    if (j != 9 && j != 10)
        throw std::invalid_argument("image_farfield: indicator index must be 9 or 10");
    return image_indicator(j, data, gs, arr, prm);
}

inline SamplingGrid image_phaseless(const DataMatrix& data, const GridSpec& gs,
                                    const ArrayGeometry& arr, const WaveParams& prm) {
    return image_indicator(11, data, gs, arr, prm);
}

}  // namespace bhm

#endif  // BHM_IMAGING_HPP
