#include "support.hpp"

#include "microsplat/sh.hpp"

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

namespace testsupport {

Camera front_camera(int width, int height, double dist, double fov_deg, const Vec3 &dir) {
    const double f = 0.5 * width / std::tan(0.5 * fov_deg * std::numbers::pi / 180.0);
    const Vec3 eye = -dist * dir.normalized();
    return Camera::look_at(eye, Vec3::Zero(), Vec3(0.0, 1.0, 0.0), f, f, width, height);
}

SplatModel random_model(std::mt19937_64 &rng, const RandomModelOptions &opt) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> n(0.0, 1.0);
    SplatModel m;
    m.sh_degree = opt.sh_degree;
    for (int i = 0; i < opt.count; ++i) {
        GaussianSplat s;
        Vec3 p;
        do {
            p = Vec3(2 * u(rng) - 1, 2 * u(rng) - 1, 2 * u(rng) - 1);
        } while (p.squaredNorm() > 1.0);
        s.position = opt.radius * p;
        Vec4 q(n(rng), n(rng), n(rng), n(rng));
        s.rotation = q.normalized() * (0.5 + 1.5 * u(rng));
        for (int a = 0; a < 3; ++a) {
            s.log_scales[a] = std::log(opt.min_sigma) + u(rng) * std::log(opt.max_sigma / opt.min_sigma);
        }
        s.opacity_logit = logit(opt.min_opacity + (opt.max_opacity - opt.min_opacity) * u(rng));
        s.sh[0] = rgb_to_dc(Vec3(0.2 + 0.6 * u(rng), 0.2 + 0.6 * u(rng), 0.2 + 0.6 * u(rng)));
        for (int k = 1; k < sh_coeff_count(opt.sh_degree); ++k) {
            s.sh[k] = opt.sh_rest * Vec3(n(rng), n(rng), n(rng));
        }
        m.splats.push_back(s);
    }
    return m;
}

BruteForce brute_force_render(const SplatModel &model, const Camera &cam, const Vec3 &background,
                              const RenderSettings &settings) {
    struct Item {
        int id;
        double depth;
        Vec2 mean;
        Mat2 inv;
        double opacity;
        Vec3 color;
    };
    std::vector<Item> items;
    const Vec3 center = -cam.rotation.transpose() * cam.translation;
    for (int i = 0; i < static_cast<int>(model.size()); ++i) {
        const auto &s = model.splats[i];
        const Vec3 c = cam.rotation * s.position + cam.translation;
        if (c.z() < cam.near_plane) continue;
        const Eigen::Quaterniond q(s.rotation[0], s.rotation[1], s.rotation[2], s.rotation[3]);
        const Mat3 r = q.normalized().toRotationMatrix();
        const Vec3 sig = s.log_scales.array().exp();
        const Mat3 sigma = r * sig.cwiseAbs2().asDiagonal() * r.transpose();
        Eigen::Matrix<double, 2, 3> j;
        j << cam.fx / c.z(), 0, -cam.fx * c.x() / (c.z() * c.z()), 0, cam.fy / c.z(),
            -cam.fy * c.y() / (c.z() * c.z());
        Mat2 cov = j * cam.rotation * sigma * cam.rotation.transpose() * j.transpose();
        cov += settings.dilation * Mat2::Identity();
        Item it;
        it.id = i;
        it.depth = c.z();
        it.mean = Vec2(cam.fx * c.x() / c.z() + cam.cx, cam.fy * c.y() / c.z() + cam.cy);
        it.inv = cov.inverse();
        it.opacity = 1.0 / (1.0 + std::exp(-s.opacity_logit));
        const Vec3 d = (s.position - center).normalized();
        it.color = sh_evaluate(s.sh, d, model.sh_degree).cwiseMax(0.0);
        items.push_back(it);
    }
    std::sort(items.begin(), items.end(), [](const Item &a, const Item &b) {
        return a.depth < b.depth || (a.depth == b.depth && a.id < b.id);
    });
    BruteForce out{Image(cam.width, cam.height), std::vector<double>(cam.width * cam.height, 1.0)};
    for (int y = 0; y < cam.height; ++y) {
        for (int x = 0; x < cam.width; ++x) {
            double t = 1.0;
            Vec3 col = Vec3::Zero();
            for (const auto &it : items) {
                const Vec2 d = Vec2(x, y) - it.mean;
                const double a = std::min(settings.alpha_max, it.opacity * std::exp(-0.5 * d.dot(it.inv * d)));
                if (a < settings.alpha_min) continue;
                if (t * (1.0 - a) < settings.transmittance_min) break;
                col += it.color * a * t;
                t *= 1.0 - a;
            }
            out.image.set_pixel(x, y, col + t * background);
            out.transmittance[y * cam.width + x] = t;
        }
    }
    return out;
}

double max_abs_diff(const Image &a, const Image &b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

double central_difference(const std::function<double()> &f, double &param, double h) {
    const double saved = param;
    param = saved + h;
    const double fp = f();
    param = saved - h;
    const double fm = f();
    param = saved;
    return (fp - fm) / (2.0 * h);
}

std::filesystem::path temp_dir(const std::string &name) {
    const auto dir = std::filesystem::temp_directory_path() / ("microsplat_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string read_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace testsupport

namespace testsupport {

SplatModel golden_model() {
    SplatModel m;
    m.sh_degree = 3;
    GaussianSplat a;
    a.position = Vec3(0.5, -1.0, 2.0);
    a.sh[0] = Vec3(1.0, 0.5, -0.25);
    for (int j = 0; j < 45; ++j) a.sh[1 + j % 15][j / 15] = (j - 22) / 64.0;
    a.opacity_logit = 0.0;
    a.log_scales = Vec3(-1.0, -2.0, -0.5);
    a.rotation = Vec4(1, 0, 0, 0);
    GaussianSplat b;
    b.position = Vec3(-0.25, 0.75, 1.5);
    b.sh[0] = Vec3::Zero();
    for (int k = 1; k < 16; ++k) b.sh[k] = Vec3::Constant(0.125);
    b.opacity_logit = 2.0;
    b.log_scales = Vec3::Zero();
    b.rotation = Vec4(0.5, 0.5, 0.5, 0.5);
    m.splats = {a, b};
    return m;
}

std::filesystem::path data_dir() { return MICROSPLAT_TEST_DATA; }

SplatModel random_float_model(std::mt19937_64 &rng, int count, int sh_degree) {
    std::uniform_real_distribution<float> u(-3.0f, 3.0f);
    auto f = [&] { return static_cast<double>(u(rng)); };
    SplatModel m;
    m.sh_degree = sh_degree;
    for (int i = 0; i < count; ++i) {
        GaussianSplat s;
        s.position = Vec3(f(), f(), f());
        s.log_scales = Vec3(f(), f(), f());
        s.rotation = Vec4(f(), f(), f(), f());
        s.opacity_logit = f();
        for (int k = 0; k < sh_coeff_count(sh_degree); ++k) s.sh[k] = Vec3(f(), f(), f());
        m.splats.push_back(s);
    }
    return m;
}

} // namespace testsupport
