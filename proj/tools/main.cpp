#include "microsplat/aniso.hpp"
#include "microsplat/config.hpp"
#include "microsplat/error.hpp"
#include "microsplat/io.hpp"
#include "microsplat/ply.hpp"
#include "microsplat/refine.hpp"
#include "microsplat/scene.hpp"
#include "microsplat/trainer.hpp"

#include <boost/program_options.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
namespace po = boost::program_options;
using nlohmann::json;
using namespace microsplat;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Files written by the current command; removed if the command fails.
class OutputTracker {
public:
    void created(const fs::path &p) { paths_.push_back(p); }
    void created_dir(const fs::path &p) { dirs_.push_back(p); }
    void commit() {
        paths_.clear();
        dirs_.clear();
    }
    ~OutputTracker() {
        std::error_code ec;
        for (auto it = paths_.rbegin(); it != paths_.rend(); ++it) fs::remove(*it, ec);
        for (auto it = dirs_.rbegin(); it != dirs_.rend(); ++it) fs::remove(*it, ec);  // only if empty
    }

private:
    std::vector<fs::path> paths_;
    std::vector<fs::path> dirs_;
};

void ensure_dir(const fs::path &dir, OutputTracker &tracker) {
    if (dir.empty() || fs::exists(dir)) return;
    ensure_dir(dir.parent_path(), tracker);
    fs::create_directory(dir);
    tracker.created_dir(dir);
}

po::variables_map parse(const std::vector<std::string> &args, const po::options_description &desc) {
    po::variables_map vm;
    po::store(po::command_line_parser(args).options(desc).run(), vm);
    po::notify(vm);
    return vm;
}

Vec3 parse_color(const std::string &s) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) v.push_back(std::stod(item));
    if (v.size() == 1) v.assign(3, v[0]);
    if (v.size() != 3) throw UsageError("--background expects r,g,b");
    return {v[0], v[1], v[2]};
}

void print_json(const json &j) { std::cout << j.dump(2) << "\n"; }

std::string plot_psnr(const TrainLog &log) {
    PlotSeries s{"held-out PSNR", {}, {}};
    for (const auto &r : log.records) {
        s.x.push_back(r.iteration);
        s.y.push_back(r.heldout_psnr);
    }
    return line_chart_svg("PSNR vs iteration", "iteration", "PSNR (dB)", {s});
}

std::string plot_count(const TrainLog &log) {
    PlotSeries s{"splats", {}, {}};
    for (std::size_t i = 0; i < log.count_history.size(); ++i) {
        s.x.push_back(static_cast<double>(i + 1));
        s.y.push_back(static_cast<double>(log.count_history[i]));
    }
    return line_chart_svg("Splat count vs iteration", "iteration", "splats", {s});
}

json train_summary(const TrainLog &log, const SplatModel &model) {
    std::size_t peak = 0;
    int peak_it = 0;
    for (std::size_t i = 0; i < log.count_history.size(); ++i) {
        if (log.count_history[i] > peak) {
            peak = log.count_history[i];
            peak_it = static_cast<int>(i + 1);
        }
    }
    json j = {{"final_count", model.size()},
              {"peak_count", peak},
              {"peak_iteration", peak_it},
              {"trace_cap", log.trace_cap},
              {"position_lr_scale", log.position_lr_scale}};
    if (!log.records.empty()) {
        const double p = log.records.back().heldout_psnr;
        j["final_heldout_psnr"] = std::isfinite(p) ? json(p) : json(nullptr);
    }
    return j;
}

int cmd_train(const std::vector<std::string> &args) {
    po::options_description desc("train");
    desc.add_options()("config", po::value<std::string>()->required(), "run config JSON")(
        "out", po::value<std::string>(), "override output.dir")("quiet", "no progress output");
    const auto vm = parse(args, desc);
    RunConfig cfg = load_run_config(vm["config"].as<std::string>());
    if (vm.count("out")) cfg.output.dir = vm["out"].as<std::string>();
    const bool quiet = vm.count("quiet") > 0;

    OutputTracker tracker;
    const fs::path dir = cfg.output.dir;
    ensure_dir(dir, tracker);

    const SyntheticScene scene = generate_scene(cfg.scene, cfg.train.render);
    TrainHooks hooks;
    hooks.on_record = [&](const TrainLogRecord &r) {
        if (quiet) return;
        std::fprintf(stderr, "iter %6d  loss %.5f  psnr %.2f  splats %zu\n", r.iteration, r.total,
                     r.heldout_psnr, r.splat_count);
    };
    hooks.on_checkpoint = [&](int it, const SplatModel &m) {
        const fs::path p = dir / ("checkpoint_" + std::to_string(it) + ".ply");
        tracker.created(p);
        save_ply_file(m, p);
    };
    const TrainResult result = train(scene.dataset, scene.init, cfg.train, hooks);

    const fs::path model_path = dir / cfg.output.model;
    tracker.created(model_path);
    save_ply_file(result.model, model_path);

    const fs::path log_path = dir / cfg.output.log;
    tracker.created(log_path);
    {
        JsonlWriter log(log_path);
        json header = {{"type", "config"},
                       {"trace_cap", result.log.trace_cap},
                       {"position_lr_scale", result.log.position_lr_scale},
                       {"config", run_config_to_json(cfg)}};
        log.write(header);
        std::multimap<int, json> events;
        for (const auto &r : result.log.records)
            events.emplace(r.iteration, to_json(r, cfg.train.log_wall_clock));
        for (const auto &e : result.log.splits) events.emplace(e.iteration, to_json(e));
        for (const auto &e : result.log.refines) events.emplace(e.iteration, to_json(e));
        for (const auto &[_, j] : events) log.write(j);
    }

    const fs::path cams = dir / "cameras.json";
    tracker.created(cams);
    save_cameras(scene.dataset.cameras, cams);

    if (cfg.output.write_plots) {
        tracker.created(dir / "psnr.svg");
        write_text_file(dir / "psnr.svg", plot_psnr(result.log));
        tracker.created(dir / "splat_count.svg");
        write_text_file(dir / "splat_count.svg", plot_count(result.log));
    }
    if (cfg.output.write_images) {
        for (int v : scene.dataset.holdout_indices(cfg.train.holdout_every)) {
            const Image img = rasterize(result.model, scene.dataset.cameras[v],
                                        scene.dataset.background, cfg.train.render)
                                  .image;
            const fs::path p = dir / ("heldout_" + std::to_string(v) + ".png");
            tracker.created(p);
            write_png(img, p);
        }
    }
    const json summary = train_summary(result.log, result.model);
    tracker.created(dir / "summary.json");
    write_text_file(dir / "summary.json", summary.dump(2) + "\n");
    tracker.commit();
    print_json(summary);
    return 0;
}

int cmd_render(const std::vector<std::string> &args) {
    po::options_description desc("render");
    desc.add_options()("model", po::value<std::string>()->required(), "PLY model")(
        "camera", po::value<std::string>()->required(), "camera manifest")(
        "out", po::value<std::string>()->required(), "output PNG")(
        "index", po::value<int>()->default_value(0), "camera index in the manifest")(
        "background", po::value<std::string>()->default_value("0,0,0"), "r,g,b in [0,1]");
    const auto vm = parse(args, desc);
    const SplatModel model = load_ply_file(vm["model"].as<std::string>());
    const auto cameras = load_cameras(vm["camera"].as<std::string>());
    const int index = vm["index"].as<int>();
    require(index >= 0 && index < static_cast<int>(cameras.size()), ErrorCode::InvalidParameter,
            "camera index out of range");
    const Vec3 bg = parse_color(vm["background"].as<std::string>());
    const Image img = rasterize(model, cameras[index], bg).image;

    OutputTracker tracker;
    const fs::path out = vm["out"].as<std::string>();
    tracker.created(out);
    write_png(img, out);
    tracker.commit();
    return 0;
}

int cmd_compact(const std::vector<std::string> &args) {
    po::options_description desc("compact");
    desc.add_options()("model", po::value<std::string>()->required(), "input PLY")(
        "out", po::value<std::string>()->required(), "output PLY")(
        "q", po::value<double>(), "prune percent")("txyz", po::value<double>(), "position threshold")(
        "tcol", po::value<double>(), "DC color threshold")("tscale", po::value<double>(), "scale threshold");
    const auto vm = parse(args, desc);
    const SplatModel model = load_ply_file(vm["model"].as<std::string>());
    RefineConfig rc;
    if (vm.count("q")) rc.prune_percent = vm["q"].as<double>();
    if (vm.count("txyz")) rc.tau_xyz = vm["txyz"].as<double>();
    if (vm.count("tcol")) rc.tau_col = vm["tcol"].as<double>();
    if (vm.count("tscale")) rc.tau_scale = vm["tscale"].as<double>();
    rc.validate();
    const MergeThresholds t = resolve_merge_thresholds(model, rc);
    const RefineResult r = refine_step(model, rc.prune_percent, t);

    OutputTracker tracker;
    const fs::path out = vm["out"].as<std::string>();
    tracker.created(out);
    save_ply_file(r.model, out);
    tracker.commit();
    print_json({{"count_before", r.report.count_before},
                {"pruned", r.report.pruned},
                {"merged_pairs", r.report.merged_pairs},
                {"count_after", r.report.count_after},
                {"tau_xyz", t.xyz},
                {"tau_col", t.col},
                {"tau_scale", t.scale}});
    return 0;
}

int cmd_stats(const std::vector<std::string> &args) {
    po::options_description desc("stats");
    desc.add_options()("model", po::value<std::string>()->required(), "PLY model")(
        "cameras", po::value<std::string>(), "camera manifest for the radius histogram");
    const auto vm = parse(args, desc);
    const fs::path path = vm["model"].as<std::string>();
    const SplatModel model = load_ply_file(path);
    const ScoreSummary s = summarize(importance_scores(model));
    json j = {{"count", model.size()},
              {"size_bytes", fs::file_size(path)},
              {"sh_degree", model.sh_degree},
              {"importance", {{"min", s.min}, {"median", s.median}, {"mean", s.mean}, {"max", s.max}}}};
    if (vm.count("cameras")) {
        const auto cameras = load_cameras(vm["cameras"].as<std::string>());
        j["radius_histogram"] = radius_bin_histogram(model, cameras);
    }
    print_json(j);
    return 0;
}

int cmd_synth(const std::vector<std::string> &args) {
    po::options_description desc("synth");
    desc.add_options()("config", po::value<std::string>()->required(), "run config JSON")(
        "out", po::value<std::string>(), "override output.dir");
    const auto vm = parse(args, desc);
    RunConfig cfg = load_run_config(vm["config"].as<std::string>());
    if (vm.count("out")) cfg.output.dir = vm["out"].as<std::string>();
    const SyntheticScene scene = generate_scene(cfg.scene, cfg.train.render);

    OutputTracker tracker;
    const fs::path dir = cfg.output.dir;
    ensure_dir(dir, tracker);
    for (std::size_t i = 0; i < scene.dataset.images.size(); ++i) {
        const fs::path p = dir / ("view_" + std::to_string(i) + ".png");
        tracker.created(p);
        write_png(scene.dataset.images[i], p);
    }
    tracker.created(dir / "cameras.json");
    save_cameras(scene.dataset.cameras, dir / "cameras.json");
    tracker.created(dir / "reference.ply");
    save_ply_file(scene.reference, dir / "reference.ply");
    tracker.created(dir / "init.ply");
    save_ply_file(scene.init, dir / "init.ply");
    tracker.commit();
    print_json({{"views", scene.dataset.images.size()},
                {"reference_count", scene.reference.size()},
                {"init_count", scene.init.size()}});
    return 0;
}

int cmd_aniso(const std::vector<std::string> &args) {
    po::options_description desc("aniso-demo");
    desc.add_options()("out", po::value<std::string>()->required(), "output directory")(
        "seeds", po::value<int>()->default_value(10), "number of field seeds");
    const auto vm = parse(args, desc);
    const int seeds = vm["seeds"].as<int>();
    require(seeds >= 1, ErrorCode::InvalidParameter, "--seeds must be >= 1");

    json rows = json::array();
    std::ostringstream md;
    md << "| seed | degree | RMSE isotropic | RMSE anisotropic | aniso >= iso |\n";
    md << "|---:|---:|---:|---:|:---:|\n";
    bool all = true;
    for (int seed = 0; seed < seeds; ++seed) {
        for (const auto &r : anisotropy_experiment(static_cast<std::uint64_t>(seed))) {
            const bool ok = r.anisotropic >= r.isotropic;
            all = all && ok;
            rows.push_back({{"seed", seed}, {"degree", r.degree}, {"isotropic", r.isotropic},
                            {"anisotropic", r.anisotropic}});
            char line[160];
            std::snprintf(line, sizeof line, "| %d | %d | %.6f | %.6f | %s |\n", seed, r.degree,
                          r.isotropic, r.anisotropic, ok ? "yes" : "no");
            md << line;
        }
    }
    OutputTracker tracker;
    const fs::path dir = vm["out"].as<std::string>();
    ensure_dir(dir, tracker);
    tracker.created(dir / "aniso.json");
    write_text_file(dir / "aniso.json", json({{"rows", rows}, {"ordering_holds", all}}).dump(2) + "\n");
    tracker.created(dir / "aniso.md");
    write_text_file(dir / "aniso.md", md.str());
    tracker.commit();
    std::cout << md.str();
    return 0;
}

void print_usage() {
    std::cerr << "usage: microsplat <train|render|compact|stats|synth|aniso-demo> [options]\n"
                 "  train --config <json> [--out <dir>] [--quiet]\n"
                 "  render --model <ply> --camera <json> --out <png> [--index N] [--background r,g,b]\n"
                 "  compact --model <ply> --out <ply> [--q P] [--txyz T] [--tcol T] [--tscale T]\n"
                 "  stats --model <ply> [--cameras <json>]\n"
                 "  synth --config <json> [--out <dir>]\n"
                 "  aniso-demo --out <dir> [--seeds N]\n";
}

void report_error(const std::string &code, const std::string &message) {
    std::cerr << json({{"error", code}, {"message", message}}).dump() << std::endl;
}

} // namespace

int main(int argc, char **argv) {
    if (argc < 2) {
        print_usage();
        report_error("usage", "missing command");
        return 2;
    }
    const std::string verb = argv[1];
    const std::vector<std::string> args(argv + 2, argv + argc);
    try {
        if (verb == "train") return cmd_train(args);
        if (verb == "render") return cmd_render(args);
        if (verb == "compact") return cmd_compact(args);
        if (verb == "stats") return cmd_stats(args);
        if (verb == "synth") return cmd_synth(args);
        if (verb == "aniso-demo") return cmd_aniso(args);
        if (verb == "--help" || verb == "-h" || verb == "help") {
            print_usage();
            return 0;
        }
        report_error("usage", "unknown command '" + verb + "'");
        return 2;
    } catch (const po::error &e) {
        report_error("usage", e.what());
        return 2;
    } catch (const UsageError &e) {
        report_error("usage", e.what());
        return 2;
    } catch (const Error &e) {
        report_error(std::string(to_string(e.code())), e.what());
        return 1;
    } catch (const std::exception &e) {
        report_error("internal", e.what());
        return 1;
    }
}
