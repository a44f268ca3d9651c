#include "microsplat/scene.hpp"

#include "microsplat/error.hpp"
#include "microsplat/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

namespace microsplat {

void SceneSpec::validate() const {
    require(reference_count >= 1, ErrorCode::InvalidParameter, "reference_count must be >= 1");
    require(camera_count >= 1, ErrorCode::InvalidParameter, "camera_count must be >= 1");
    require(width >= 16 && height >= 16, ErrorCode::InvalidParameter,
            "scene resolution must be at least 16x16");
    require(extent > 0.0 && camera_radius > extent, ErrorCode::InvalidParameter,
            "cameras must sit outside the scene extent");
    require(cluster_fraction >= 0.0 && cluster_fraction <= 1.0, ErrorCode::InvalidParameter,
            "cluster_fraction must be in [0, 1]");
    require(cluster_count >= 1, ErrorCode::InvalidParameter, "cluster_count must be >= 1");
    require(init_fraction > 0.0 && init_fraction <= 1.0, ErrorCode::InvalidParameter,
            "init_fraction must be in (0, 1]");
    require(init_scale > 0.0 && init_opacity > 0.0 && init_opacity < 1.0,
            ErrorCode::InvalidParameter, "init scale/opacity out of range");
    require(fov_degrees > 1.0 && fov_degrees < 170.0, ErrorCode::InvalidParameter,
            "fov_degrees out of range");
    require(sh_degree >= 0 && sh_degree <= kMaxShDegree, ErrorCode::InvalidParameter,
            "sh_degree must be in [0, 3]");
}

std::vector<int> Dataset::train_indices(int holdout_every) const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(cameras.size()); ++i) {
        if (holdout_every <= 0 || i % holdout_every != 0) out.push_back(i);
    }
    return out;
}

std::vector<int> Dataset::holdout_indices(int holdout_every) const {
    std::vector<int> out;
    if (holdout_every <= 0) return out;
    for (int i = 0; i < static_cast<int>(cameras.size()); i += holdout_every) out.push_back(i);
    return out;
}

namespace {

Vec4 random_rotation(std::mt19937_64 &rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double a = u(rng), b = u(rng), c = u(rng);
    const double two_pi = 2.0 * std::numbers::pi;
    return {std::sqrt(a) * std::cos(two_pi * c), std::sqrt(1.0 - a) * std::sin(two_pi * b),
            std::sqrt(1.0 - a) * std::cos(two_pi * b), std::sqrt(a) * std::sin(two_pi * c)};
}

Vec3 random_in_ball(std::mt19937_64 &rng, double radius) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (;;) {
        const Vec3 p(u(rng), u(rng), u(rng));
        if (p.squaredNorm() <= 1.0) return radius * p;
    }
}

} // namespace

SyntheticScene generate_scene(const SceneSpec &spec, const RenderSettings &render) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };

    SyntheticScene scene;
    scene.reference.sh_degree = spec.sh_degree;
    const int n = spec.reference_count;
    const int n_cluster = static_cast<int>(std::lround(spec.cluster_fraction * n));
    const double ext = spec.extent;

    std::vector<Vec3> centers;
    for (int c = 0; c < spec.cluster_count; ++c) centers.push_back(random_in_ball(rng, 0.6 * ext));
    const Vec3 base_color(uniform(0.3, 0.6), uniform(0.3, 0.6), uniform(0.3, 0.6));

    auto add_view_dependence = [&](GaussianSplat &s) {
        for (int k = 1; k < sh_coeff_count(spec.sh_degree); ++k) {
            s.sh[k] = spec.view_dependence * Vec3(normal(rng), normal(rng), normal(rng));
        }
    };

    for (int i = 0; i < n; ++i) {
        GaussianSplat s;
        s.rotation = random_rotation(rng);
        Vec3 rgb;
        if (i < n_cluster) {
            const Vec3 &c = centers[i % spec.cluster_count];
            s.position = c + spec.cluster_spread * ext * Vec3(normal(rng), normal(rng), normal(rng));
            const double sigma = ext * uniform(0.015, 0.04);
            s.log_scales = Vec3(std::log(sigma * uniform(1.0, 1.6)), std::log(sigma),
                                std::log(sigma * uniform(0.7, 1.0)));
            rgb = Vec3(u01(rng), u01(rng), u01(rng));
            const double lo = rgb.minCoeff(), hi = rgb.maxCoeff();
            if (hi - lo > 1e-6) rgb = ((rgb.array() - lo) / (hi - lo)).matrix();
            rgb = 0.1 * Vec3::Ones() + 0.85 * rgb;
            s.opacity_logit = logit(uniform(0.7, 0.95));
        } else {
            s.position = random_in_ball(rng, 0.75 * ext);
            const double sigma = ext * uniform(0.12, 0.25);
            s.log_scales = Vec3(std::log(sigma * uniform(1.0, 1.5)), std::log(sigma),
                                std::log(sigma * uniform(0.8, 1.0)));
            rgb = (base_color + 0.12 * Vec3(normal(rng), normal(rng), normal(rng)))
                      .cwiseMax(0.05)
                      .cwiseMin(0.95);
            s.opacity_logit = logit(uniform(0.5, 0.9));
        }
        s.sh[0] = rgb_to_dc(rgb);
        add_view_dependence(s);
        scene.reference.splats.push_back(s);
    }

    // Cameras on a ring, looking at the origin.
    const double focal = 0.5 * spec.width / std::tan(0.5 * spec.fov_degrees * std::numbers::pi / 180.0);
    auto &data = scene.dataset;
    data.background = spec.background;
    for (int i = 0; i < spec.camera_count; ++i) {
        const double phi = 2.0 * std::numbers::pi * i / spec.camera_count;
        const Vec3 eye(spec.camera_radius * std::cos(phi), spec.camera_radius * std::sin(phi),
                       spec.camera_elevation);
        data.cameras.push_back(Camera::look_at(eye, Vec3::Zero(), Vec3(0.0, 0.0, 1.0), focal,
                                               focal, spec.width, spec.height));
    }
    for (const auto &cam : data.cameras) {
        data.images.push_back(rasterize(scene.reference, cam, spec.background, render).image);
    }

    // Sparse initialization from a subset of reference positions.
    std::vector<int> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    for (int i = n - 1; i > 0; --i) {
        std::uniform_int_distribution<int> pick(0, i);
        std::swap(ids[i], ids[pick(rng)]);
    }
    const int n_init = std::max(1, static_cast<int>(std::lround(spec.init_fraction * n)));
    ids.resize(n_init);
    std::sort(ids.begin(), ids.end());
    scene.init.sh_degree = spec.sh_degree;
    for (int id : ids) {
        GaussianSplat s;
        s.position = scene.reference.splats[id].position +
                     spec.init_jitter * ext * Vec3(normal(rng), normal(rng), normal(rng));
        s.log_scales = Vec3::Constant(std::log(spec.init_scale * ext));
        s.opacity_logit = logit(spec.init_opacity);
        s.sh[0] = rgb_to_dc(Vec3::Constant(0.5));
        scene.init.splats.push_back(s);
    }
    return scene;
}

double mean_psnr(const SplatModel &model, const Dataset &data, const std::vector<int> &views,
                 const RenderSettings &render) {
    require(!views.empty(), ErrorCode::EmptyInput, "no views to evaluate");
    double sum = 0.0;
    for (int v : views) {
        const Image img = rasterize(model, data.cameras[v], data.background, render).image;
        sum += psnr(img, data.images[v]);
    }
    return sum / static_cast<double>(views.size());
}

} // namespace microsplat
