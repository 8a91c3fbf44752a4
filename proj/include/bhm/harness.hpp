#ifndef BHM_HARNESS_HPP
#define BHM_HARNESS_HPP

// Reproducibility layer: a counter-based random generator with a frozen
// algorithm ("bhm-rng v1"), multiplicative complex noise for measurement
// matrices, the "bhm-data v1" text format for matrices, and CSV / portable
// pixmap emission of sampling grids.  Everything in this header is
// bit-deterministic: the same inputs and seeds produce the same bytes on
// every run regardless of thread count.

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bhm/imaging.hpp"

namespace bhm {

// ---------------------------------------------------------------------------
// bhm-rng v1.
//
// Output i of a stream with a given seed is the splitmix64 finalizer applied
// to seed + (i+1) * 0x9E3779B97F4A7C15, which is exactly the reference
// splitmix64 sequence seeded with `seed` (seed 0 starts 0xe220a8397b1dcdaf,
// the published test vector).  Stating the generator as a pure function of
// (seed, index) keeps noisy data reproducible across languages: any
// implementation of these three lines regenerates the same figures.

struct Rng {
    std::uint64_t seed = 0;
    std::uint64_t counter = 0;

    static std::uint64_t value(std::uint64_t seed, std::uint64_t index) {
        std::uint64_t z = seed + (index + 1) * 0x9E3779B97F4A7C15ull;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t next_u64() { return value(seed, counter++); }

    // uniform in [0, 1) built from the top 53 bits
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Standard normal pair by the polar rejection method.  Consumes two
    // uniforms per attempt; the number of attempts is part of the frozen
    // stream semantics (rejected pairs advance the counter).
    std::pair<double, double> next_gauss_pair() {
        for (;;) {
            const double u = 2.0 * next_unit() - 1.0;
            const double v = 2.0 * next_unit() - 1.0;
            const double s = u * u + v * v;
            if (s > 0.0 && s < 1.0) {
                const double m = std::sqrt(-2.0 * std::log(s) / s);
                return {u * m, v * m};
            }
        }
    }
};

// ---------------------------------------------------------------------------
// Noise injection.

struct NoiseSpec {
    double delta = 0.0;       // relative noise level
    std::uint64_t seed = 1;

    void check() const {
        if (!(delta >= 0.0)) throw std::domain_error("NoiseSpec: delta must be nonnegative");
    }
};

namespace detail {

// DataMatrix carries no validator of its own; the consumers here need the
// shape and wave metadata to be coherent before touching entries.
inline void check_matrix(const DataMatrix& data, const char* who) {
    if (data.rows <= 0 || data.cols <= 0)
        throw std::invalid_argument(std::string(who) + ": empty data matrix");
    if (data.a.size() != static_cast<std::size_t>(data.rows) * data.cols)
        throw std::invalid_argument(std::string(who) + ": entry count does not match the shape");
    if (!(data.kappa > 0.0))
        throw std::invalid_argument(std::string(who) + ": data needs a positive wavenumber");
}

}  // namespace detail

// Entrywise multiplicative noise u -> u + delta * (|u| / |xi|) * xi with
// xi = xi1 + i xi2 a standard complex normal, so the perturbation magnitude
// is exactly delta * |u| per entry while its direction is uniform.  Entries
// are processed in storage (row-major) order, one Gaussian pair each, so a
// fixed seed fixes the output bit for bit.  delta = 0 returns the input
// unchanged without touching the generator.  Magnitude-only matrices are
// rejected: the perturbation belongs on the complex total field before the
// modulus is taken (see make_phaseless).
inline DataMatrix add_noise(const DataMatrix& data, const NoiseSpec& ns) {
    ns.check();
    detail::check_matrix(data, "add_noise");
    if (data.kind == DataKind::AbsTotal)
        throw std::invalid_argument(
            "add_noise: magnitude data cannot be perturbed after the fact; "
            "use make_phaseless to inject noise into the complex total field");
    if (ns.delta == 0.0) return data;
    DataMatrix out = data;
    Rng rng{ns.seed};
    for (cplx& u : out.a) {
        const auto [g1, g2] = rng.next_gauss_pair();
        const cplx xi{g1, g2};
        u += ns.delta * (std::abs(u) / std::abs(xi)) * xi;
    }
    return out;
}

// Phaseless measurements from scattered point-source data: add the incident
// kernel to every receiver/source pair to form the complex total field,
// perturb that (same noise model and draw order as add_noise), then take the
// modulus.  Coincident receiver/source pairs carry a zero entry in the
// scattered matrix and stay exactly zero through every stage, matching the
// simulated |u_total| convention.  delta = 0 yields noise-free magnitudes
// without consuming any random draws.
inline DataMatrix make_phaseless(const DataMatrix& usc, const ArrayGeometry& arr,
                                 const NoiseSpec& ns) {
    ns.check();
    detail::check_matrix(usc, "make_phaseless");
    arr.check();
    if (usc.kind != DataKind::ScatteredField || usc.excitation != ExcitationKind::PointSources)
        throw std::invalid_argument("make_phaseless: needs scattered-field point-source data");
    if (usc.rows != arr.n_rec || usc.cols != arr.n_src)
        throw std::invalid_argument("make_phaseless: matrix shape does not match the array");
    if (usc.radius_rec != arr.radius_rec || usc.radius_src != arr.radius_src)
        throw std::invalid_argument("make_phaseless: circle radii do not match the array");
    DataMatrix out = usc;
    out.kind = DataKind::AbsTotal;
    Rng rng{ns.seed};
    for (int r = 0; r < out.rows; ++r) {
        for (int c = 0; c < out.cols; ++c) {
            const Vec2 xr = arr.receiver(r);
            const Vec2 xs = arr.source(c);
            cplx tot = usc.at(r, c);
            if (dist(xr, xs) < 1e-9)
                tot = cplx{};  // removed pair: no incident term, no scattered term
            else
                tot += detail::phi0(out.kappa, xr, xs);
            if (ns.delta > 0.0) {
                const auto [g1, g2] = rng.next_gauss_pair();
                const cplx xi{g1, g2};
                tot += ns.delta * (std::abs(tot) / std::abs(xi)) * xi;
            }
            out.at(r, c) = std::abs(tot);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// bhm-data v1 file format.
//
//   line 1:  bhm-data v1; <kind>; <excitation>; <rows>; <cols>; <kappa>; <nu>; <R_r>; <R_s>
//   then     <row> <col> <re> <im>      (one line per entry, row-major order)
//            <row> <col> <value>        (magnitude data)
//
// Reals are written with 17 significant digits, which round-trips IEEE
// doubles exactly; save -> load -> save reproduces the file byte for byte.

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        const std::size_t next = line.find(sep, pos);
        std::string f = line.substr(pos, next == std::string::npos ? next : next - pos);
        const std::size_t a = f.find_first_not_of(" \t");
        const std::size_t b = f.find_last_not_of(" \t\r");
        out.push_back(a == std::string::npos ? std::string{} : f.substr(a, b - a + 1));
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return out;
}

[[noreturn]] inline void load_fail(const std::string& path, std::size_t lineno,
                                   const std::string& what) {
    throw std::runtime_error("load_matrix: " + path + ":" + std::to_string(lineno) + ": " + what);
}

}  // namespace detail

inline void save_matrix(const DataMatrix& data, const std::string& path) {
    detail::check_matrix(data, "save_matrix");
    for (const cplx& u : data.a)
        if (!std::isfinite(u.real()) || !std::isfinite(u.imag()))
            throw std::invalid_argument("save_matrix: non-finite entry");
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("save_matrix: cannot open " + path + " for writing");
    std::fprintf(f, "bhm-data v1; %s; %s; %d; %d; %.16e; %.16e; %.16e; %.16e\n",
                 data_kind_tag(data.kind), excitation_tag(data.excitation), data.rows, data.cols,
                 data.kappa, data.nu, data.radius_rec, data.radius_src);
    const bool mag = data.kind == DataKind::AbsTotal;
    for (int r = 0; r < data.rows; ++r) {
        for (int c = 0; c < data.cols; ++c) {
            const cplx u = data.at(r, c);
            if (mag)
                std::fprintf(f, "%d %d %.16e\n", r, c, u.real());
            else
                std::fprintf(f, "%d %d %.16e %.16e\n", r, c, u.real(), u.imag());
        }
    }
    if (std::fclose(f) != 0) throw std::runtime_error("save_matrix: write failure on " + path);
}

inline DataMatrix load_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_matrix: cannot open " + path);
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line)) detail::load_fail(path, 1, "missing header");
    const std::vector<std::string> h = detail::split_fields(line, ';');
    if (h.size() != 9)
        detail::load_fail(path, 1, "header needs 9 ';'-separated fields, got " +
                                       std::to_string(h.size()));
    if (h[0] != "bhm-data v1") detail::load_fail(path, 1, "not a bhm-data v1 file: '" + h[0] + "'");

    DataMatrix m;
    try {
        m.kind = data_kind_from_tag(h[1]);
        m.excitation = excitation_from_tag(h[2]);
        std::size_t used = 0;
        m.rows = std::stoi(h[3], &used);
        if (used != h[3].size()) throw std::invalid_argument("rows");
        m.cols = std::stoi(h[4], &used);
        if (used != h[4].size()) throw std::invalid_argument("cols");
        m.kappa = std::stod(h[5], &used);
        if (used != h[5].size()) throw std::invalid_argument("kappa");
        m.nu = std::stod(h[6], &used);
        if (used != h[6].size()) throw std::invalid_argument("nu");
        m.radius_rec = std::stod(h[7], &used);
        if (used != h[7].size()) throw std::invalid_argument("radius_rec");
        m.radius_src = std::stod(h[8], &used);
        if (used != h[8].size()) throw std::invalid_argument("radius_src");
    } catch (const std::exception& e) {
        detail::load_fail(path, 1, std::string("bad header field (") + e.what() + ")");
    }
    if (m.rows <= 0 || m.cols <= 0) detail::load_fail(path, 1, "empty matrix shape");
    if (!(m.kappa > 0.0)) detail::load_fail(path, 1, "wavenumber must be positive");

    const std::size_t total = static_cast<std::size_t>(m.rows) * m.cols;
    m.a.assign(total, cplx{});
    const bool mag = m.kind == DataKind::AbsTotal;
    std::size_t count = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;  // blank line
        int r = -1, c = -1;
        double re = 0.0, im = 0.0;
        char junk = 0;
        const int want = mag ? 3 : 4;
        const int got = mag ? std::sscanf(line.c_str(), "%d %d %lf %c", &r, &c, &re, &junk)
                            : std::sscanf(line.c_str(), "%d %d %lf %lf %c", &r, &c, &re, &im, &junk);
        if (got != want)
            detail::load_fail(path, lineno,
                              got > want ? "trailing characters after entry" : "malformed entry");
        if (r < 0 || r >= m.rows || c < 0 || c >= m.cols)
            detail::load_fail(path, lineno, "entry index out of range");
        if (!std::isfinite(re) || !std::isfinite(im))
            detail::load_fail(path, lineno, "non-finite entry");
        if (static_cast<std::size_t>(r) * m.cols + c != count)
            detail::load_fail(path, lineno, "entries must appear once each in row-major order");
        m.a[count++] = cplx{re, im};
    }
    if (count != total)
        detail::load_fail(path, lineno, "truncated: " + std::to_string(count) + " of " +
                                            std::to_string(total) + " entries");
    return m;
}

// ---------------------------------------------------------------------------
// Grid emission: CSV table plus an uncompressed binary pixmap heat map.
//
// The CSV lists "x,y,value" one grid point per line in storage order (outer
// loop over x, inner over y), nx*ny lines total.  The pixmap is P6 with a
// fixed 256-entry palette: indices 0..254 ramp blue -> cyan -> yellow -> red
// over [min, max] of the grid (a constant grid maps everything to index 0),
// and index 255 is white, reserved for obstacle outlines sampled from the
// optional true curves.  Pixel row 0 corresponds to ymax so the image is
// oriented like a standard plot.

namespace detail {

inline void jet_color(int index, unsigned char rgb[3]) {
    if (index >= 255) {
        rgb[0] = rgb[1] = rgb[2] = 255;
        return;
    }
    const double t = static_cast<double>(index) / 254.0;
    const auto channel = [](double v) {
        v = std::min(1.0, std::max(0.0, v));
        return static_cast<unsigned char>(std::lround(255.0 * v));
    };
    rgb[0] = channel(1.5 - std::abs(4.0 * t - 3.0));
    rgb[1] = channel(1.5 - std::abs(4.0 * t - 2.0));
    rgb[2] = channel(1.5 - std::abs(4.0 * t - 1.0));
}

}  // namespace detail

inline void emit_grid(const SamplingGrid& grid, const std::string& csv_path,
                      const std::string& ppm_path, const std::vector<Curve>& outlines = {}) {
    grid.spec.check();
    const int nx = grid.spec.nx, ny = grid.spec.ny;
    if (grid.values.size() != static_cast<std::size_t>(nx) * ny)
        throw std::invalid_argument("emit_grid: value count does not match the grid spec");

    std::FILE* csv = std::fopen(csv_path.c_str(), "wb");
    if (!csv) throw std::runtime_error("emit_grid: cannot open " + csv_path + " for writing");
    for (int ix = 0; ix < nx; ++ix) {
        for (int iy = 0; iy < ny; ++iy) {
            const Vec2 p = grid.point(ix, iy);
            std::fprintf(csv, "%.10g,%.10g,%.16e\n", p.x, p.y, grid.at(ix, iy));
        }
    }
    if (std::fclose(csv) != 0) throw std::runtime_error("emit_grid: write failure on " + csv_path);

    // palette indices: data 0..254, outline 255
    double vmin = grid.values[0], vmax = grid.values[0];
    for (const double v : grid.values) {
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
    }
    const double span = vmax - vmin;
    std::vector<unsigned char> index(static_cast<std::size_t>(nx) * ny, 0);
    if (span > 0.0) {
        for (int ix = 0; ix < nx; ++ix)
            for (int iy = 0; iy < ny; ++iy) {
                const double t = (grid.at(ix, iy) - vmin) / span;
                int k = static_cast<int>(std::lround(t * 254.0));
                k = std::min(254, std::max(0, k));
                index[static_cast<std::size_t>(ix) * ny + iy] = static_cast<unsigned char>(k);
            }
    }
    const int samples = 4096;
    for (const Curve& curve : outlines) {
        for (int i = 0; i < samples; ++i) {
            const Vec2 p = curve_eval(curve, 2.0 * pi * i / samples).x;
            const int ix = static_cast<int>(std::lround((p.x - grid.spec.xmin) / grid.spec.dx()));
            const int iy = static_cast<int>(std::lround((p.y - grid.spec.ymin) / grid.spec.dy()));
            if (ix >= 0 && ix < nx && iy >= 0 && iy < ny)
                index[static_cast<std::size_t>(ix) * ny + iy] = 255;
        }
    }

    std::FILE* ppm = std::fopen(ppm_path.c_str(), "wb");
    if (!ppm) throw std::runtime_error("emit_grid: cannot open " + ppm_path + " for writing");
    std::fprintf(ppm, "P6\n%d %d\n255\n", nx, ny);
    std::vector<unsigned char> row(static_cast<std::size_t>(nx) * 3);
    for (int py = 0; py < ny; ++py) {
        const int iy = ny - 1 - py;  // top pixel row = ymax
        for (int ix = 0; ix < nx; ++ix)
            detail::jet_color(index[static_cast<std::size_t>(ix) * ny + iy], &row[3 * ix]);
        if (std::fwrite(row.data(), 1, row.size(), ppm) != row.size()) {
            std::fclose(ppm);
            throw std::runtime_error("emit_grid: write failure on " + ppm_path);
        }
    }
    if (std::fclose(ppm) != 0) throw std::runtime_error("emit_grid: write failure on " + ppm_path);
}

}  // namespace bhm

#endif  // BHM_HARNESS_HPP
