#pragma once

#include "microsplat/camera.hpp"
#include "microsplat/image.hpp"
#include "microsplat/render.hpp"
#include "microsplat/splat.hpp"

#include <cstdint>
#include <vector>

namespace microsplat {

/// Synthetic scene recipe. The reference model mixes small saturated splats
/// grouped into clusters with large smooth background splats; cameras sit on a
/// ring around the origin looking at it.
struct SceneSpec {
    std::uint64_t seed = 42;
    int reference_count = 400;
    double extent = 1.0;             // reference splats live inside this radius
    double cluster_fraction = 0.5;   // share of reference splats in clusters
    int cluster_count = 8;
    double cluster_spread = 0.12;    // relative to extent
    double init_fraction = 0.2;
    double init_jitter = 0.05;       // relative to extent
    double init_scale = 0.12;        // relative to extent
    double init_opacity = 0.5;
    double view_dependence = 0.03;   // magnitude of higher-order SH in the reference
    int camera_count = 16;
    double camera_radius = 4.0;
    double camera_elevation = 1.0;   // height of the ring above the origin
    double fov_degrees = 40.0;
    int width = 64;
    int height = 64;
    int sh_degree = 3;
    Vec3 background = Vec3::Zero();

    void validate() const;
};

/// Posed images. Every `holdout_every`-th view (starting at 0) is held out.
struct Dataset {
    std::vector<Camera> cameras;
    std::vector<Image> images;
    Vec3 background = Vec3::Zero();

    std::vector<int> train_indices(int holdout_every) const;
    std::vector<int> holdout_indices(int holdout_every) const;
};

struct SyntheticScene {
    SplatModel reference;
    Dataset dataset;
    SplatModel init;
};

SyntheticScene generate_scene(const SceneSpec &spec, const RenderSettings &render = {});

/// Mean PSNR of `model` against the given dataset views.
double mean_psnr(const SplatModel &model, const Dataset &data, const std::vector<int> &views,
                 const RenderSettings &render = {});

} // namespace microsplat
