#include "microsplat/config.hpp"

#include "microsplat/error.hpp"
#include "microsplat/io.hpp"

#include <set>

namespace microsplat {

namespace {

using nlohmann::json;

/// Reads optional fields from one JSON object and rejects keys nobody asked for.
class Section {
public:
    Section(const json &obj, std::string where) : obj_(obj), where_(std::move(where)) {
        require(obj_.is_object(), ErrorCode::Config, where_ + " must be a JSON object");
    }

    template <class T>
    Section &field(const std::string &key, T &value) {
        known_.insert(key);
        if (!obj_.contains(key)) return *this;
        try {
            value = obj_.at(key).get<T>();
        } catch (const json::exception &) {
            fail(ErrorCode::Config, "bad value for '" + where_ + "." + key + "'");
        }
        return *this;
    }

    Section &field(const std::string &key, Vec3 &value) {
        std::vector<double> v{value.x(), value.y(), value.z()};
        field(key, v);
        require(v.size() == 3, ErrorCode::Config, "'" + where_ + "." + key + "' needs 3 values");
        value = Vec3(v[0], v[1], v[2]);
        return *this;
    }

    const json *child(const std::string &key) {
        known_.insert(key);
        return obj_.contains(key) ? &obj_.at(key) : nullptr;
    }

    void finish() const {
        for (const auto &[key, _] : obj_.items()) {
            require(known_.contains(key), ErrorCode::Config,
                    "unknown key '" + where_ + "." + key + "'");
        }
    }

private:
    const json &obj_;
    std::string where_;
    std::set<std::string> known_;
};

void read_scene(const json &obj, SceneSpec &s) {
    Section sec(obj, "scene");
    sec.field("seed", s.seed)
        .field("reference_count", s.reference_count)
        .field("extent", s.extent)
        .field("cluster_fraction", s.cluster_fraction)
        .field("cluster_count", s.cluster_count)
        .field("cluster_spread", s.cluster_spread)
        .field("init_fraction", s.init_fraction)
        .field("init_jitter", s.init_jitter)
        .field("init_scale", s.init_scale)
        .field("init_opacity", s.init_opacity)
        .field("view_dependence", s.view_dependence)
        .field("camera_count", s.camera_count)
        .field("camera_radius", s.camera_radius)
        .field("camera_elevation", s.camera_elevation)
        .field("fov_degrees", s.fov_degrees)
        .field("width", s.width)
        .field("height", s.height)
        .field("sh_degree", s.sh_degree)
        .field("background", s.background);
    sec.finish();
}

void read_train(const json &obj, TrainConfig &t) {
    Section sec(obj, "train");
    int t_refine = t.growth.growth_end;
    sec.field("total_iterations", t.total_iterations)
        .field("t_refine", t_refine)
        .field("seed", t.seed)
        .field("trace_cap", t.trace_cap)
        .field("trace_cap_factor", t.trace_cap_factor)
        .field("log_interval", t.log_interval)
        .field("checkpoint_interval", t.checkpoint_interval)
        .field("holdout_every", t.holdout_every)
        .field("enable_growth", t.enable_growth)
        .field("enable_refine", t.enable_refine)
        .field("log_wall_clock", t.log_wall_clock);
    t.growth.growth_end = t_refine;
    if (const json *j = sec.child("loss")) {
        Section s(*j, "train.loss");
        s.field("l1", t.weights.l1).field("l2", t.weights.l2).field("ssim", t.weights.ssim).field("cov", t.weights.cov);
        s.finish();
    }
    if (const json *j = sec.child("growth")) {
        Section s(*j, "train.growth");
        s.field("percentile", t.growth.percentile)
            .field("clones_per_split", t.growth.clones_per_split)
            .field("scale_halving_factor", t.growth.scale_halving_factor)
            .field("densify_interval", t.growth.densify_interval)
            .field("max_splats", t.growth.max_splats);
        s.finish();
    }
    if (const json *j = sec.child("refine")) {
        Section s(*j, "train.refine");
        s.field("prune_percent", t.refine.prune_percent)
            .field("tau_xyz", t.refine.tau_xyz)
            .field("tau_col", t.refine.tau_col)
            .field("tau_scale", t.refine.tau_scale)
            .field("refine_interval", t.refine.refine_interval)
            .field("xyz_nn_factor", t.refine.xyz_nn_factor)
            .field("scale_norm_factor", t.refine.scale_norm_factor);
        s.finish();
    }
    if (const json *j = sec.child("rates")) {
        Section s(*j, "train.rates");
        s.field("position", t.rates.position)
            .field("position_final", t.rates.position_final)
            .field("position_scale", t.rates.position_scale)
            .field("sh_dc", t.rates.sh_dc)
            .field("sh_rest", t.rates.sh_rest)
            .field("opacity", t.rates.opacity)
            .field("scale", t.rates.scale)
            .field("rotation", t.rates.rotation)
            .field("beta1", t.rates.beta1)
            .field("beta2", t.rates.beta2)
            .field("epsilon", t.rates.epsilon);
        s.finish();
    }
    if (const json *j = sec.child("render")) {
        Section s(*j, "train.render");
        s.field("dilation", t.render.dilation)
            .field("alpha_max", t.render.alpha_max)
            .field("alpha_min", t.render.alpha_min)
            .field("transmittance_min", t.render.transmittance_min)
            .field("tile_size", t.render.tile_size)
            .field("threads", t.render.threads);
        s.finish();
    }
    sec.finish();
}

void read_output(const json &obj, OutputConfig &o) {
    Section sec(obj, "output");
    sec.field("dir", o.dir)
        .field("model", o.model)
        .field("log", o.log)
        .field("write_images", o.write_images)
        .field("write_plots", o.write_plots);
    sec.finish();
}

json vec3(const Vec3 &v) { return {v.x(), v.y(), v.z()}; }

} // namespace

RunConfig run_config_from_json(const json &doc) {
    RunConfig cfg;
    Section top(doc, "config");
    if (const json *j = top.child("scene")) read_scene(*j, cfg.scene);
    if (const json *j = top.child("train")) read_train(*j, cfg.train);
    if (const json *j = top.child("output")) read_output(*j, cfg.output);
    top.finish();
    try {
        cfg.scene.validate();
        cfg.train.validate();
    } catch (const Error &e) {
        fail(ErrorCode::Config, e.what());
    }
    return cfg;
}

json run_config_to_json(const RunConfig &c) {
    const auto &s = c.scene;
    const auto &t = c.train;
    return {
        {"scene",
         {{"seed", s.seed}, {"reference_count", s.reference_count}, {"extent", s.extent},
          {"cluster_fraction", s.cluster_fraction}, {"cluster_count", s.cluster_count},
          {"cluster_spread", s.cluster_spread}, {"init_fraction", s.init_fraction},
          {"init_jitter", s.init_jitter}, {"init_scale", s.init_scale},
          {"init_opacity", s.init_opacity}, {"view_dependence", s.view_dependence},
          {"camera_count", s.camera_count}, {"camera_radius", s.camera_radius},
          {"camera_elevation", s.camera_elevation}, {"fov_degrees", s.fov_degrees},
          {"width", s.width}, {"height", s.height}, {"sh_degree", s.sh_degree},
          {"background", vec3(s.background)}}},
        {"train",
         {{"total_iterations", t.total_iterations}, {"t_refine", t.growth.growth_end},
          {"seed", t.seed}, {"trace_cap", t.trace_cap}, {"trace_cap_factor", t.trace_cap_factor},
          {"log_interval", t.log_interval}, {"checkpoint_interval", t.checkpoint_interval},
          {"holdout_every", t.holdout_every}, {"enable_growth", t.enable_growth},
          {"enable_refine", t.enable_refine}, {"log_wall_clock", t.log_wall_clock},
          {"loss", {{"l1", t.weights.l1}, {"l2", t.weights.l2}, {"ssim", t.weights.ssim}, {"cov", t.weights.cov}}},
          {"growth",
           {{"percentile", t.growth.percentile}, {"clones_per_split", t.growth.clones_per_split},
            {"scale_halving_factor", t.growth.scale_halving_factor},
            {"densify_interval", t.growth.densify_interval}, {"max_splats", t.growth.max_splats}}},
          {"refine",
           {{"prune_percent", t.refine.prune_percent}, {"tau_xyz", t.refine.tau_xyz},
            {"tau_col", t.refine.tau_col}, {"tau_scale", t.refine.tau_scale},
            {"refine_interval", t.refine.refine_interval}, {"xyz_nn_factor", t.refine.xyz_nn_factor},
            {"scale_norm_factor", t.refine.scale_norm_factor}}},
          {"rates",
           {{"position", t.rates.position}, {"position_final", t.rates.position_final},
            {"position_scale", t.rates.position_scale}, {"sh_dc", t.rates.sh_dc},
            {"sh_rest", t.rates.sh_rest}, {"opacity", t.rates.opacity}, {"scale", t.rates.scale},
            {"rotation", t.rates.rotation}, {"beta1", t.rates.beta1}, {"beta2", t.rates.beta2},
            {"epsilon", t.rates.epsilon}}},
          {"render",
           {{"dilation", t.render.dilation}, {"alpha_max", t.render.alpha_max},
            {"alpha_min", t.render.alpha_min}, {"transmittance_min", t.render.transmittance_min},
            {"tile_size", t.render.tile_size}, {"threads", t.render.threads}}}}},
        {"output",
         {{"dir", c.output.dir}, {"model", c.output.model}, {"log", c.output.log},
          {"write_images", c.output.write_images}, {"write_plots", c.output.write_plots}}}};
}

RunConfig load_run_config(const std::filesystem::path &path) {
    return run_config_from_json(read_json_file(path));
}

} // namespace microsplat
