// occlumask: batch front-end for occlusion-mask computation and evaluation.

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "occlumask.hpp"

namespace {

using namespace occlumask;

std::pair<int, int> parse_alpha_range(const std::string& text) {
    const auto dots = text.find("..");
    if (dots == std::string::npos) throw UsageError("--alpha-range must look like LO..HI");
    try {
        std::size_t a = 0, b = 0;
        const std::string lo = text.substr(0, dots), hi = text.substr(dots + 2);
        const int l = std::stoi(lo, &a), h = std::stoi(hi, &b);
        if (a != lo.size() || b != hi.size()) throw std::invalid_argument(text);
        return {l, h};
    } catch (const std::exception&) {
        throw UsageError("--alpha-range must look like LO..HI with integers");
    }
}

std::vector<double> parse_numbers(const std::string& text, char sep, const std::string& what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError(what + ": '" + item + "' is not a number");
        }
    }
    return out;
}

// "dx,dy;dx,dy;..."
std::vector<calibration::Offset> parse_offsets(const std::string& text) {
    std::vector<calibration::Offset> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ';')) {
        const auto v = parse_numbers(item, ',', "--offsets");
        if (v.empty()) continue;
        if (v.size() != 2) throw UsageError("--offsets entries must be dx,dy");
        out.push_back({v[0], v[1]});
    }
    return out;
}

int run(int argc, char** argv) {
    CLI::App app{"Occlusion-mask computation and evaluation for see-through displays"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::vector<std::string> overrides;
    std::string alpha_range;
    bool print_config = false;
    app.add_option("-c,--config", config_path, "key = value configuration file");
    app.add_option("-o,--out", out_dir, "output directory")->capture_default_str();
    app.add_option("--seed", seed, "seed for scene noise (default 0)");
    app.add_option("--set", overrides, "override a configuration entry, KEY=VALUE (repeatable)");
    app.add_option("--alpha-range", alpha_range, "expansion radii to sweep, LO..HI");
    app.add_flag("--print-config", print_config, "print the fully resolved configuration and exit");

    auto* gen = app.add_subcommand("gen-scene", "write the configured synthetic scene as PGM");
    std::string scene_out;
    gen->add_option("--output", scene_out, "PGM path (default OUT/scene.pgm)");

    app.add_subcommand("simulate", "naive and optimized masks, simulated eye view, and report");

    auto* opt = app.add_subcommand("optimize", "sweep the expansion radius and export the score curve");
    bool dump_partitions = false;
    opt->add_flag("--dump-partitions", dump_partitions, "write a partition label image per alpha");

    auto* rmap = app.add_subcommand("radius-map", "optimal expansion radius per pupil aperture");
    std::string apertures;
    rmap->add_option("--apertures", apertures, "comma-separated aperture diameters in mm")->required();

    auto* est = app.add_subcommand("estimate-psf", "fit the blur radius from a displayed mask and its observation");
    std::string mask_path, observed_path, roi_text;
    psf::RadiusSearch search;
    est->add_option("--mask", mask_path, "displayed mask PGM")->required();
    est->add_option("--observed", observed_path, "observed blurred PGM on the mask grid")->required();
    est->add_option("--r-min", search.r_min)->capture_default_str();
    est->add_option("--r-max", search.r_max)->capture_default_str();
    est->add_option("--step", search.step)->capture_default_str();
    est->add_option("--roi", roi_text, "region for the residual, x,y,w,h (default whole image)");

    auto* cal = app.add_subcommand("calibrate", "estimate a homography from point correspondences");
    std::string points_path;
    cal->add_option("--points", points_path, "CSV of x_src,y_src,x_dst,y_dst")->required();

    auto* dev = app.add_subcommand("deviation-sweep", "re-simulate masks under calibration offsets");
    std::string offsets_text = "5,0;-5,0;0,5;0,-5";
    dev->add_option("--offsets", offsets_text, "dx,dy pairs separated by ';'")->capture_default_str();

    app.add_subcommand("compare", "naive, aperture-expanded, optimized and blurred-edge masks side by side");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    Config cfg = config_path.empty() ? Config{} : Config::load(config_path);
    for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw UsageError("--set expects KEY=VALUE, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed) cfg.set("scene.seed", std::to_string(*seed));
    if (!alpha_range.empty()) {
        const auto [lo, hi] = parse_alpha_range(alpha_range);
        cfg.set("optimizer.alpha_min", std::to_string(lo));
        cfg.set("optimizer.alpha_max", std::to_string(hi));
    }
    const pipeline::Setup setup = pipeline::load_setup(cfg);
    if (print_config) {
        std::cout << pipeline::canonical_config(setup).dump();
        return 0;
    }

    const std::string cmd = app.get_subcommands().front()->get_name();
    auto& log = std::cerr;
    if (cmd == "gen-scene") {
        pipeline::cmd_gen_scene(setup, scene_out.empty() ? pipeline::fs::path(out_dir) / "scene.pgm" : pipeline::fs::path(scene_out));
    } else if (cmd == "simulate") {
        pipeline::cmd_simulate(setup, out_dir, log);
    } else if (cmd == "optimize") {
        pipeline::cmd_optimize(setup, out_dir, dump_partitions, log);
    } else if (cmd == "radius-map") {
        pipeline::cmd_radius_map(setup, parse_numbers(apertures, ',', "--apertures"), out_dir, log);
    } else if (cmd == "estimate-psf") {
        std::optional<Rect> roi;
        if (!roi_text.empty()) {
            const auto v = parse_numbers(roi_text, ',', "--roi");
            if (v.size() != 4) throw UsageError("--roi expects x,y,w,h");
            roi = Rect{static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2]), static_cast<int>(v[3])};
        }
        pipeline::cmd_estimate_psf(mask_path, observed_path, search, roi, out_dir, log);
    } else if (cmd == "calibrate") {
        pipeline::cmd_calibrate(points_path, out_dir, log);
    } else if (cmd == "deviation-sweep") {
        pipeline::cmd_deviation_sweep(setup, parse_offsets(offsets_text), out_dir, log);
    } else if (cmd == "compare") {
        pipeline::cmd_compare(setup, out_dir, log);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const occlumask::UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const occlumask::DataError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const occlumask::NumericError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
