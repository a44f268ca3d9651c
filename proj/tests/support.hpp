#pragma once

#include "microsplat/camera.hpp"
#include "microsplat/image.hpp"
#include "microsplat/render.hpp"
#include "microsplat/splat.hpp"

#include <filesystem>
#include <functional>
#include <random>
#include <string>

namespace testsupport {

using namespace microsplat;

/// Camera `dist` away from the origin along -dir, looking at the origin.
Camera front_camera(int width, int height, double dist = 3.0, double fov_deg = 40.0,
                    const Vec3 &dir = Vec3(0.3, -0.4, -1.0));

struct RandomModelOptions {
    int count = 8;
    int sh_degree = 3;
    double radius = 0.5;
    double min_sigma = 0.05;
    double max_sigma = 0.25;
    double min_opacity = 0.1;
    double max_opacity = 0.9;
    double sh_rest = 0.02;
};

SplatModel random_model(std::mt19937_64 &rng, const RandomModelOptions &opt = {});

/// Independent O(N * pixels) compositor: projects every splat itself, sorts by
/// depth (ties by id) and walks all splats at every pixel.
struct BruteForce {
    Image image;
    std::vector<double> transmittance;
};
BruteForce brute_force_render(const SplatModel &model, const Camera &camera, const Vec3 &background,
                              const RenderSettings &settings);

double max_abs_diff(const Image &a, const Image &b);

/// Central difference of f around x along the parameter addressed by `ref`.
double central_difference(const std::function<double()> &f, double &param, double h);

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string &name);

std::string read_file(const std::filesystem::path &path);

} // namespace testsupport

namespace testsupport {

/// The two splats encoded in tests/data/golden_2splat.ply.
microsplat::SplatModel golden_model();

std::filesystem::path data_dir();

/// Random model whose parameters survive a float32 round trip exactly.
microsplat::SplatModel random_float_model(std::mt19937_64 &rng, int count, int sh_degree);

} // namespace testsupport
