// Command-line driver.
//
//   bhm simulate    --config c.cfg [--out dir] [--seed n]   forward data -> files
//   bhm image       --config c.cfg [--out dir] [--seed n]   files -> indicator maps
//   bhm reconstruct --config c.cfg [--out dir] [--seed n]   both ends in one go
//   bhm validate    [--level fast|full] [--out dir]         numbered check suite
//
// simulate writes one bhm-data file per required (kind, excitation) pair;
// image reads those files back, so the pair of commands reproduces
// reconstruct's heat maps byte for byte (the data format round-trips
// doubles exactly; only the stage lines of report.txt differ).
// Exit status is zero only when every step (and every validation check)
// succeeds.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bhm/validate.hpp"

namespace {

struct CommonOpts {
    std::string config;
    std::string out;  // overrides output.dir when set
    std::uint64_t seed = 0;
    bool seed_set = false;
};

bhm::ExperimentConfig load_with_overrides(const CommonOpts& opt) {
    bhm::ExperimentConfig cfg = bhm::load_config(opt.config);
    if (!opt.out.empty()) cfg.out_dir = opt.out;
    if (opt.seed_set) cfg.seed = opt.seed;
    return cfg;
}

std::string data_path(const bhm::ExperimentConfig& cfg, bhm::DataKind k, bhm::ExcitationKind e) {
    return (std::filesystem::path(cfg.out_dir) /
            ("data_" + std::string(bhm::data_kind_tag(k)) + "_" +
             std::string(bhm::excitation_tag(e)) + ".txt"))
        .string();
}

// excitation -> data kinds required by the configured indicators (phaseless
// indicators consume the complex scattered field)
std::map<bhm::ExcitationKind, std::vector<bhm::DataKind>> needed_data(
    const bhm::ExperimentConfig& cfg) {
    std::map<bhm::ExcitationKind, std::vector<bhm::DataKind>> needed;
    for (const int j : cfg.indicators) {
        const auto spec = bhm::detail::indicator_spec(j);
        const bhm::DataKind kind = spec.phaseless ? bhm::DataKind::ScatteredField : spec.kind;
        auto& list = needed[spec.excitation];
        if (std::find(list.begin(), list.end(), kind) == list.end()) list.push_back(kind);
    }
    return needed;
}

int cmd_simulate(const CommonOpts& opt) {
    const bhm::ExperimentConfig cfg = load_with_overrides(opt);
    std::filesystem::create_directories(cfg.out_dir);
    const bhm::ForwardEngine eng(cfg.scene, cfg.backend, cfg.mfs);
    for (const auto& [exc, kinds] : needed_data(cfg)) {
        const auto bundle = bhm::simulate_bundle(eng, cfg.array, kinds, exc);
        for (const auto& [kind, dm] : bundle) {
            const std::string path = data_path(cfg, kind, exc);
            bhm::save_matrix(dm, path);
            std::cout << "wrote " << path << " (" << dm.rows << "x" << dm.cols << ")\n";
        }
    }
    return 0;
}

int cmd_image(const CommonOpts& opt) {
    const bhm::ExperimentConfig cfg = load_with_overrides(opt);
    std::map<bhm::ExcitationKind, std::map<bhm::DataKind, bhm::DataMatrix>> data;
    for (const auto& [exc, kinds] : needed_data(cfg))
        for (const bhm::DataKind k : kinds)
            data[exc].emplace(k, bhm::load_matrix(data_path(cfg, k, exc)));

    bhm::RunReport rep;
    for (std::size_t di = 0; di < cfg.deltas.size(); ++di) {
        for (const int j : cfg.indicators) {
            const auto spec = bhm::detail::indicator_spec(j);
            const bhm::DataKind kind =
                spec.phaseless ? bhm::DataKind::ScatteredField : spec.kind;
            const bhm::DataMatrix& clean = data.at(spec.excitation).at(kind);
            const bhm::NoiseSpec ns{cfg.deltas[di],
                                    cfg.seed + 97 * di + static_cast<std::uint64_t>(j)};
            const bhm::DataMatrix noisy = spec.phaseless
                                              ? bhm::make_phaseless(clean, cfg.array, ns)
                                              : bhm::add_noise(clean, ns);
            const bhm::SamplingGrid raw =
                bhm::image_indicator(j, noisy, cfg.grid, cfg.array, cfg.scene.prm);
            const double divisor =
                cfg.normalize_abs
                    ? std::abs(*std::max_element(
                          raw.values.begin(), raw.values.end(),
                          [](double a, double b) { return std::abs(a) < std::abs(b); }))
                    : *std::max_element(raw.values.begin(), raw.values.end());
            const bhm::SamplingGrid img =
                cfg.normalize_abs ? bhm::normalize_abs(raw) : bhm::normalize(raw);
            const std::string label = "I" + std::to_string(j) + "_" + cfg.scene.name + "_" +
                                      bhm::detail::delta_label(cfg.deltas[di]);
            const std::filesystem::path dir(cfg.out_dir);
            bhm::emit_grid(img, (dir / (label + ".csv")).string(),
                           (dir / (label + ".ppm")).string(), cfg.scene.curves);
            rep.checks.push_back({label, divisor, 0.0, true, 0.0});
        }
    }
    std::ofstream report(std::filesystem::path(cfg.out_dir) / "report.txt");
    bhm::print_report(rep, report, false);
    bhm::print_report(rep, std::cout, false);
    return 0;
}

int cmd_reconstruct(const CommonOpts& opt) {
    const bhm::ExperimentConfig cfg = load_with_overrides(opt);
    const bhm::RunReport rep = bhm::run_experiment(cfg);
    bhm::print_report(rep, std::cout);
    return rep.all_pass() ? 0 : 1;
}

int cmd_validate(const std::string& level, const std::string& out) {
    const bhm::ValidateLevel lv =
        level == "full" ? bhm::ValidateLevel::Full : bhm::ValidateLevel::Fast;
    std::cout << "bhm validation suite (" << (lv == bhm::ValidateLevel::Full ? "full" : "fast")
              << " level)\n";
    const bhm::RunReport rep = bhm::validate_suite(lv, &std::cout);
    int failed = 0;
    for (const bhm::CheckResult& c : rep.checks)
        if (!c.pass) ++failed;
    std::cout << rep.checks.size() - failed << " of " << rep.checks.size() << " checks passed\n";
    if (!out.empty()) {
        std::filesystem::create_directories(out);
        std::ofstream report(std::filesystem::path(out) / "report.txt");
        bhm::print_report(rep, report);
    }
    return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"forward scattering and sampling-type imaging for flexural waves"};
    app.require_subcommand(1);

    CommonOpts opt;
    std::string level = "fast";
    std::string validate_out;

    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", opt.config, "experiment config file")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--out", opt.out, "output directory (overrides output.dir)");
        cmd->add_option("--seed", opt.seed, "noise seed (overrides noise.seed)")
            ->each([&](const std::string&) { opt.seed_set = true; });
    };

    CLI::App* simulate = app.add_subcommand("simulate", "solve the forward problem, write data files");
    add_common(simulate);
    CLI::App* image = app.add_subcommand("image", "read data files, write indicator maps");
    add_common(image);
    CLI::App* reconstruct =
        app.add_subcommand("reconstruct", "simulate and image in one run");
    add_common(reconstruct);
    CLI::App* validate = app.add_subcommand("validate", "run the numbered check suite");
    validate->add_option("--level", level, "fast or full")
        ->check(CLI::IsMember({"fast", "full"}));
    validate->add_option("--out", validate_out, "directory for the report file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) return cmd_simulate(opt);
        if (image->parsed()) return cmd_image(opt);
        if (reconstruct->parsed()) return cmd_reconstruct(opt);
        return cmd_validate(level, validate_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
