#ifndef BHM_EXPERIMENT_HPP
#define BHM_EXPERIMENT_HPP

// Experiment plumbing: the flat key=value configuration format, a bundled
// simulator that shares one boundary solve per excitation across all the
// measurement kinds that need it, the reconstruction driver that turns a
// config into heat maps on disk, and the report type the driver and the
// validation suite both speak.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bhm/harness.hpp"

namespace bhm {

// ---------------------------------------------------------------------------
// Configuration.

struct ExperimentConfig {
    Scene scene;                      // curves, boundary condition, kappa, nu, name
    ArrayGeometry array;
    std::vector<int> indicators = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
    GridSpec grid;
    std::vector<double> deltas = {0.0};  // noise levels, imaged one by one
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    ForwardBackend backend = ForwardBackend::Auto;
    MfsConfig mfs;
    bool normalize_abs = false;  // divide by max|I| instead of the signed max

    void check() const {
        scene.check();
        if (scene.curves.empty())
            throw std::invalid_argument("ExperimentConfig: scene has no obstacles");
        array.check();
        grid.check();
        if (indicators.empty())
            throw std::invalid_argument("ExperimentConfig: indicator list is empty");
        std::set<int> seen;
        for (const int j : indicators) {
            detail::indicator_spec(j);  // throws outside 1..11; also pins the
                                        // indicator -> data kind -> excitation map
            if (!seen.insert(j).second)
                throw std::invalid_argument("ExperimentConfig: duplicate indicator " +
                                            std::to_string(j));
        }
        if (deltas.empty()) throw std::invalid_argument("ExperimentConfig: no noise levels");
        for (const double d : deltas) NoiseSpec{d, 0}.check();
        if (out_dir.empty()) throw std::invalid_argument("ExperimentConfig: empty output directory");
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline double cfg_double(const std::string& key, const std::string& val) {
    try {
        std::size_t used = 0;
        const double v = std::stod(val, &used);
        if (used != val.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: key '" + key + "': bad number '" + val + "'");
    }
}

inline int cfg_int(const std::string& key, const std::string& val) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(val, &used);
        if (used != val.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: key '" + key + "': bad integer '" + val + "'");
    }
}

inline std::uint64_t cfg_u64(const std::string& key, const std::string& val) {
    try {
        std::size_t used = 0;
        const std::uint64_t v = std::stoull(val, &used);
        if (used != val.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: key '" + key + "': bad integer '" + val + "'");
    }
}

inline std::vector<std::string> cfg_list(const std::string& val) {
    std::vector<std::string> items;
    std::size_t pos = 0;
    while (pos <= val.size()) {
        const std::size_t next = val.find(',', pos);
        items.push_back(trim(val.substr(pos, next == std::string::npos ? next : next - pos)));
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return items;
}

// "circle" / "kite" (unit size at the origin) or "circle(cx,cy,r)" /
// "kite(cx,cy,scale)"; several curves joined with '+'.
inline Curve cfg_curve_item(const std::string& key, const std::string& item) {
    const std::size_t par = item.find('(');
    const std::string name = trim(par == std::string::npos ? item : item.substr(0, par));
    Vec2 center{0.0, 0.0};
    double size = 1.0;
    if (par != std::string::npos) {
        if (item.back() != ')')
            throw std::invalid_argument("config: key '" + key + "': missing ')' in '" + item + "'");
        const std::vector<std::string> args =
            cfg_list(item.substr(par + 1, item.size() - par - 2));
        if (args.size() != 3)
            throw std::invalid_argument("config: key '" + key + "': '" + name +
                                        "' needs (cx, cy, size)");
        center = {cfg_double(key, args[0]), cfg_double(key, args[1])};
        size = cfg_double(key, args[2]);
    }
    if (name == "circle") return Curve::circle(center, size);
    if (name == "kite") return Curve::kite(center, size);
    throw std::invalid_argument("config: key '" + key + "': unknown curve '" + name + "'");
}

inline std::vector<Curve> cfg_curves(const std::string& key, const std::string& val) {
    std::vector<Curve> out;
    std::size_t pos = 0;
    while (pos <= val.size()) {
        const std::size_t next = val.find('+', pos);
        const std::string item =
            trim(val.substr(pos, next == std::string::npos ? next : next - pos));
        if (item.empty())
            throw std::invalid_argument("config: key '" + key + "': empty curve item");
        out.push_back(cfg_curve_item(key, item));
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return out;
}

// Comma list of integers; a literal "..." between two values expands the
// unit-step run between them ("1,2,...,11" gives 1 through 11).
inline std::vector<int> cfg_indicators(const std::string& key, const std::string& val) {
    const std::vector<std::string> items = cfg_list(val);
    std::vector<int> out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i] == "...") {
            if (out.empty() || i + 1 >= items.size())
                throw std::invalid_argument("config: key '" + key + "': '...' needs a value on both sides");
            const int from = out.back();
            const int to = cfg_int(key, items[i + 1]);
            if (to <= from)
                throw std::invalid_argument("config: key '" + key + "': '...' range must ascend");
            for (int v = from + 1; v < to; ++v) out.push_back(v);
            continue;  // the upper endpoint is parsed as its own item
        }
        out.push_back(cfg_int(key, items[i]));
    }
    return out;
}

}  // namespace detail

// Flat "section.key = value" lines; '#' starts a comment, blank lines are
// skipped, unknown or repeated keys are errors.  See the README for the key
// reference.
inline ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    std::set<std::string> seen;
    std::size_t pos = 0, lineno = 0;
    while (pos <= text.size()) {
        const std::size_t next = text.find('\n', pos);
        std::string line = text.substr(pos, next == std::string::npos ? next : next - pos);
        pos = next == std::string::npos ? text.size() + 1 : next + 1;
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": empty key or value");
        if (!seen.insert(key).second)
            throw std::invalid_argument("config: duplicate key '" + key + "'");

        if (key == "scene.name") {
            cfg.scene.name = val;
        } else if (key == "scene.curve") {
            cfg.scene.curves = detail::cfg_curves(key, val);
        } else if (key == "scene.bc") {
            cfg.scene.bc = bc_from_name(val);
        } else if (key == "scene.kappa") {
            cfg.scene.prm.kappa = detail::cfg_double(key, val);
        } else if (key == "scene.nu") {
            cfg.scene.prm.nu = detail::cfg_double(key, val);
        } else if (key == "array.radius_rec") {
            cfg.array.radius_rec = detail::cfg_double(key, val);
        } else if (key == "array.radius_src") {
            cfg.array.radius_src = detail::cfg_double(key, val);
        } else if (key == "array.n_rec") {
            cfg.array.n_rec = detail::cfg_int(key, val);
        } else if (key == "array.n_src") {
            cfg.array.n_src = detail::cfg_int(key, val);
        } else if (key == "array.n_dir") {
            cfg.array.n_dir = detail::cfg_int(key, val);
        } else if (key == "forward.backend") {
            if (val == "auto") cfg.backend = ForwardBackend::Auto;
            else if (val == "modal") cfg.backend = ForwardBackend::Modal;
            else if (val == "mfs") cfg.backend = ForwardBackend::Mfs;
            else throw std::invalid_argument("config: key '" + key + "': unknown backend '" + val + "'");
        } else if (key == "forward.sources") {
            cfg.mfs.sources_per_curve = detail::cfg_int(key, val);
        } else if (key == "forward.collocation") {
            cfg.mfs.collocation_per_curve = detail::cfg_int(key, val);
        } else if (key == "forward.placement") {
            if (val == "auto") cfg.mfs.placement = SourcePlacement::Auto;
            else if (val == "scaled_copy") cfg.mfs.placement = SourcePlacement::ScaledCopy;
            else if (val == "normal_offset") cfg.mfs.placement = SourcePlacement::NormalOffset;
            else throw std::invalid_argument("config: key '" + key + "': unknown placement '" + val + "'");
        } else if (key == "forward.offset") {
            cfg.mfs.offset = detail::cfg_double(key, val);
        } else if (key == "forward.depth_factor") {
            cfg.mfs.depth_factor = detail::cfg_double(key, val);
        } else if (key == "imaging.indicators") {
            cfg.indicators = detail::cfg_indicators(key, val);
        } else if (key == "imaging.normalize") {
            if (val == "signed") cfg.normalize_abs = false;
            else if (val == "abs") cfg.normalize_abs = true;
            else throw std::invalid_argument("config: key '" + key + "': expected signed or abs");
        } else if (key == "grid.xmin") {
            cfg.grid.xmin = detail::cfg_double(key, val);
        } else if (key == "grid.xmax") {
            cfg.grid.xmax = detail::cfg_double(key, val);
        } else if (key == "grid.ymin") {
            cfg.grid.ymin = detail::cfg_double(key, val);
        } else if (key == "grid.ymax") {
            cfg.grid.ymax = detail::cfg_double(key, val);
        } else if (key == "grid.nx") {
            cfg.grid.nx = detail::cfg_int(key, val);
        } else if (key == "grid.ny") {
            cfg.grid.ny = detail::cfg_int(key, val);
        } else if (key == "noise.delta") {
            cfg.deltas.clear();
            for (const std::string& item : detail::cfg_list(val))
                cfg.deltas.push_back(detail::cfg_double(key, item));
        } else if (key == "noise.seed") {
            cfg.seed = detail::cfg_u64(key, val);
        } else if (key == "output.dir") {
            cfg.out_dir = val;
        } else {
            throw std::invalid_argument("config: unknown key '" + key + "'");
        }
    }
    cfg.check();
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_config: cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config(text);
}

// ---------------------------------------------------------------------------
// Bundled simulation: one boundary solve per excitation column, shared by
// every requested measurement kind.  Entry for entry this reproduces
// simulate() bit-exactly (same solve, same jet, same trace expressions); it
// exists because the solve and the receiver jets dominate the cost and all
// four near-field kinds read the same jet.

inline std::map<DataKind, DataMatrix> simulate_bundle(const ForwardEngine& eng,
                                                      const ArrayGeometry& arr,
                                                      const std::vector<DataKind>& kinds,
                                                      ExcitationKind exc) {
    arr.check();
    if (kinds.empty()) throw std::invalid_argument("simulate_bundle: no data kinds requested");
    for (const DataKind k : kinds)
        if (k == DataKind::AbsTotal)
            throw std::invalid_argument(
                "simulate_bundle: phaseless magnitudes are derived data; use make_phaseless");

    const Scene& scene = eng.scene();
    double extent = 0.0;
    for (const Curve& c : scene.curves)
        for (int i = 0; i < 256; ++i)
            extent = std::max(extent, norm(curve_eval(c, 2.0 * pi * i / 256).x));
    bool uses_receivers = false, uses_farfield = false;
    for (const DataKind k : kinds) (k == DataKind::FarField ? uses_farfield : uses_receivers) = true;
    if (uses_receivers && arr.radius_rec < extent + 0.5)
        throw std::invalid_argument("simulate_bundle: receiver circle does not enclose the scene");
    if (exc == ExcitationKind::PointSources && arr.radius_src < extent + 0.5)
        throw std::invalid_argument("simulate_bundle: source circle does not enclose the scene");

    const int cols = exc == ExcitationKind::PointSources ? arr.n_src : arr.n_dir;
    std::map<DataKind, DataMatrix> out;
    for (const DataKind k : kinds) {
        DataMatrix dm;
        dm.kind = k;
        dm.excitation = exc;
        dm.rows = k == DataKind::FarField ? arr.n_dir : arr.n_rec;
        dm.cols = cols;
        dm.kappa = scene.prm.kappa;
        dm.nu = scene.prm.nu;
        dm.radius_rec = arr.radius_rec;
        dm.radius_src = arr.radius_src;
        dm.a.assign(static_cast<std::size_t>(dm.rows) * dm.cols, cplx{});
        out.emplace(k, std::move(dm));
    }

    parallel_for(cols, [&](int j) {
        const Incidence inc = exc == ExcitationKind::PointSources
                                  ? Incidence::source(arr.source(j))
                                  : Incidence::plane(arr.dir_angle(j));
        const ForwardSolution sol = eng.solve(inc);
        if (uses_receivers) {
            for (int i = 0; i < arr.n_rec; ++i) {
                const Vec2 xr = arr.receiver(i);
                const Jet3 js = sol.scattered_jet(xr);
                for (auto& [k, dm] : out) {
                    switch (k) {
                        case DataKind::ScatteredField: dm.at(i, j) = js.val(); break;
                        case DataKind::NormalDerivative:
                            dm.at(i, j) = jet_dn(js, (1.0 / norm(xr)) * xr);
                            break;
                        case DataKind::BendingTrace:
                            dm.at(i, j) = apply_M_polar(scene.prm, js, xr, Vec2{0.0, 0.0});
                            break;
                        case DataKind::TransverseTrace:
                            dm.at(i, j) = apply_N_polar(scene.prm, js, xr, Vec2{0.0, 0.0});
                            break;
                        default: break;  // far field handled below
                    }
                }
            }
        }
        if (uses_farfield) {
            DataMatrix& dm = out.at(DataKind::FarField);
            for (int i = 0; i < arr.n_dir; ++i) dm.at(i, j) = sol.farfield(arr.dir_angle(i));
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// Reports.

struct CheckResult {
    std::string name;
    double measured = 0.0;
    double tol = 0.0;
    bool pass = false;
    double seconds = 0.0;
};

struct RunReport {
    std::vector<CheckResult> checks;

    bool all_pass() const {
        return std::all_of(checks.begin(), checks.end(),
                           [](const CheckResult& c) { return c.pass; });
    }
};

// One fixed-order line per check.  Timings vary run to run, so the report
// written next to the artifacts omits them to keep reruns byte-identical.
inline void print_report(const RunReport& rep, std::ostream& os, bool with_timings = true) {
    for (const CheckResult& c : rep.checks) {
        char buf[160];
        if (with_timings)
            std::snprintf(buf, sizeof buf, "%s %s measured=%.6g tol=%.6g time=%.2fs",
                          c.pass ? "PASS" : "FAIL", c.name.c_str(), c.measured, c.tol, c.seconds);
        else
            std::snprintf(buf, sizeof buf, "%s %s measured=%.6g tol=%.6g",
                          c.pass ? "PASS" : "FAIL", c.name.c_str(), c.measured, c.tol);
        os << buf << '\n';
    }
}

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// "0", "0.05", "0.1": shortest round-trip form for the artifact names
inline std::string delta_label(double delta) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", delta);
    return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Reconstruction driver.
//
// Simulates the data kinds the requested indicators need (one solve per
// excitation column, shared across kinds), applies each noise level, images
// each indicator, normalizes, and writes I<j>_<scene>_<delta>.csv/.ppm plus
// report.txt under the output directory.  Each (noise level, indicator)
// pair perturbs with seed + 97 * level_index + j, so every matrix gets an
// independent, reproducible stream.

inline RunReport run_experiment(const ExperimentConfig& cfg) {
    cfg.check();
    const auto t0 = std::chrono::steady_clock::now();
    std::filesystem::create_directories(cfg.out_dir);

    std::map<ExcitationKind, std::vector<DataKind>> needed;
    for (const int j : cfg.indicators) {
        const detail::IndicatorSpec spec = detail::indicator_spec(j);
        // phaseless magnitudes are derived from scattered point-source data
        const DataKind kind = spec.phaseless ? DataKind::ScatteredField : spec.kind;
        auto& list = needed[spec.excitation];
        if (std::find(list.begin(), list.end(), kind) == list.end()) list.push_back(kind);
    }

    RunReport rep;
    std::optional<ForwardEngine> eng;
    try {
        eng.emplace(cfg.scene, cfg.backend, cfg.mfs);
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("run_experiment[forward setup]: ") + e.what());
    }
    std::map<ExcitationKind, std::map<DataKind, DataMatrix>> data;
    for (const auto& [exc, kinds] : needed) {
        const auto ts = std::chrono::steady_clock::now();
        try {
            data.emplace(exc, simulate_bundle(*eng, cfg.array, kinds, exc));
        } catch (const std::exception& e) {
            throw std::runtime_error(std::string("run_experiment[simulate ") +
                                     excitation_tag(exc) + "]: " + e.what());
        }
        double peak = 0.0;
        for (const auto& [k, dm] : data.at(exc))
            for (const cplx& u : dm.a) peak = std::max(peak, std::abs(u));
        rep.checks.push_back({std::string("simulate ") + excitation_tag(exc), peak, 0.0, true,
                              detail::seconds_since(ts)});
    }

    for (std::size_t di = 0; di < cfg.deltas.size(); ++di) {
        const double delta = cfg.deltas[di];
        for (const int j : cfg.indicators) {
            const auto ts = std::chrono::steady_clock::now();
            const detail::IndicatorSpec spec = detail::indicator_spec(j);
            const NoiseSpec ns{delta, cfg.seed + 97 * di + static_cast<std::uint64_t>(j)};
            const std::string label = "I" + std::to_string(j) + "_" + cfg.scene.name + "_" +
                                      detail::delta_label(delta);
            try {
                const DataMatrix& clean =
                    data.at(spec.excitation)
                        .at(spec.phaseless ? DataKind::ScatteredField : spec.kind);
                const DataMatrix noisy = spec.phaseless ? make_phaseless(clean, cfg.array, ns)
                                                        : add_noise(clean, ns);
                const SamplingGrid raw =
                    image_indicator(j, noisy, cfg.grid, cfg.array, cfg.scene.prm);
                const double divisor =
                    cfg.normalize_abs
                        ? std::abs(*std::max_element(
                              raw.values.begin(), raw.values.end(),
                              [](double a, double b) { return std::abs(a) < std::abs(b); }))
                        : *std::max_element(raw.values.begin(), raw.values.end());
                const SamplingGrid img = cfg.normalize_abs ? normalize_abs(raw) : normalize(raw);
                const std::filesystem::path base = std::filesystem::path(cfg.out_dir) / label;
                emit_grid(img, base.string() + ".csv", base.string() + ".ppm", cfg.scene.curves);
                rep.checks.push_back({label, divisor, 0.0, true, detail::seconds_since(ts)});
            } catch (const std::exception& e) {
                throw std::runtime_error("run_experiment[" + label + "]: " + e.what());
            }
        }
    }

    const double n_images = static_cast<double>(cfg.deltas.size() * cfg.indicators.size());
    rep.checks.push_back({"total images", n_images, 0.0, true, detail::seconds_since(t0)});
    std::ofstream report(std::filesystem::path(cfg.out_dir) / "report.txt");
    if (!report) throw std::runtime_error("run_experiment: cannot write report.txt");
    print_report(rep, report, /*with_timings=*/false);
    return rep;
}

}  // namespace bhm

#endif  // BHM_EXPERIMENT_HPP
