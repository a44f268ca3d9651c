#pragma once

#include "microsplat/camera.hpp"
#include "microsplat/image.hpp"
#include "microsplat/splat.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <vector>

namespace microsplat {

/// Rasterizer constants. Defaults match the common 3DGS rasterizer.
struct RenderSettings {
    double dilation = 0.3;               // px^2 added to the projected covariance
    double alpha_max = 0.99;             // clamp on per-splat alpha
    double alpha_min = 1.0 / 255.0;      // contributions below this are skipped
    double transmittance_min = 1e-4;     // compositing stops below this
    double footprint_sigma_mult = 1.0;   // footprint radius = mult * sqrt(lambda_max)
    int tile_size = 16;
    int threads = 0;                     // 0 = hardware concurrency
};

/// A splat's image-space footprint.
struct ScreenSplat {
    Vec2 mean_2d = Vec2::Zero();
    Mat2 cov_2d = Mat2::Identity();  // dilated
    double depth = 0.0;
    double footprint_radius = 0.0;
};

/// sqrt of the largest eigenvalue of the (dilated) 2D covariance.
double footprint_radius(const ScreenSplat &screen);
double footprint_radius(const Mat2 &cov_2d);

/// Pinhole projection with the local affine (EWA) Jacobian at the camera-space
/// mean. Returns nullopt when the splat is in front of the near plane or none of
/// its non-negligible support reaches an image pixel.
std::optional<ScreenSplat> project(const GaussianSplat &splat, const Camera &camera,
                                   const RenderSettings &settings = {});

namespace detail {

/// Everything the backward pass needs from a projected splat.
struct ProjectedSplat {
    bool visible = false;
    ScreenSplat screen;
    Vec3 cam_point = Vec3::Zero();
    Mat3 cov_world = Mat3::Identity();
    Eigen::Matrix<double, 2, 3> jacobian = Eigen::Matrix<double, 2, 3>::Zero();
    Vec3 conic = Vec3::Zero();  // (a, b, c) of the inverse 2D covariance [[a, b], [b, c]]
    double opacity = 0.0;
    Vec3 view_dir = Vec3::Zero();  // unnormalized camera-center -> splat vector
    Vec3 raw_color = Vec3::Zero();
    Vec3 color = Vec3::Zero();     // raw_color clamped to >= 0
    int x0 = 0, x1 = -1, y0 = 0, y1 = -1;  // inclusive pixel bounding box
};

ProjectedSplat project_full(const GaussianSplat &splat, const Camera &camera, int sh_degree,
                            const RenderSettings &settings);

} // namespace detail

struct RenderResult {
    Image image;
    std::vector<ScreenSplat> screens;    // one per model splat
    std::vector<std::uint8_t> visible;   // one per model splat
    std::vector<double> transmittance;   // final T per pixel, row-major
    std::vector<int> depth_order;        // visible splat ids, front to back
    int skipped_singular = 0;

    std::vector<detail::ProjectedSplat> projected;
};

/// Per-splat parameter gradients plus the per-pixel gradient magnitude map
/// g(u, v) = |dL/d(pixel color)|.
struct GradientBundle {
    std::vector<GaussianSplat> splats;
    std::vector<double> magnitude;  // row-major H x W
};

/// Depth-sorted front-to-back alpha compositing over screen tiles.
RenderResult rasterize(const SplatModel &model, const Camera &camera, const Vec3 &background,
                       const RenderSettings &settings = {});

/// Analytic gradients of the composited image chained with `dl_dimage`.
/// Throws ShapeMismatch when `dl_dimage` does not match the camera resolution.
GradientBundle rasterize_backward(const SplatModel &model, const Camera &camera,
                                  const Vec3 &background, const RenderResult &forward,
                                  const Image &dl_dimage, const RenderSettings &settings = {});

GradientBundle rasterize_backward(const SplatModel &model, const Camera &camera,
                                  const Vec3 &background, const Image &dl_dimage,
                                  const RenderSettings &settings = {});

} // namespace microsplat
