#include "microsplat/render.hpp"

#include "microsplat/error.hpp"
#include "microsplat/sh.hpp"
#include "parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace microsplat {

double footprint_radius(const Mat2 &cov) {
    const double mid = 0.5 * (cov(0, 0) + cov(1, 1));
    const double half_diff = 0.5 * (cov(0, 0) - cov(1, 1));
    const double off = 0.5 * (cov(0, 1) + cov(1, 0));
    const double lambda_max = mid + std::sqrt(half_diff * half_diff + off * off);
    return std::sqrt(std::max(lambda_max, 0.0));
}

double footprint_radius(const ScreenSplat &screen) { return footprint_radius(screen.cov_2d); }

namespace detail {

ProjectedSplat project_full(const GaussianSplat &splat, const Camera &camera, int sh_degree,
                            const RenderSettings &settings) {
    ProjectedSplat p;
    p.cam_point = camera.to_camera(splat.position);
    const double z = p.cam_point.z();
    if (!(z >= camera.near_plane)) {
        return p;
    }
    const double x = p.cam_point.x(), y = p.cam_point.y();
    p.opacity = splat.opacity();
    p.cov_world = covariance_from_params(splat.rotation, splat.log_scales).matrix;

    auto &J = p.jacobian;
    J << camera.fx / z, 0.0, -camera.fx * x / (z * z),
         0.0, camera.fy / z, -camera.fy * y / (z * z);
    const Mat3 view_cov = camera.rotation * p.cov_world * camera.rotation.transpose();
    Mat2 cov2 = J * view_cov * J.transpose();
    cov2(0, 1) = cov2(1, 0) = 0.5 * (cov2(0, 1) + cov2(1, 0));
    cov2(0, 0) += settings.dilation;
    cov2(1, 1) += settings.dilation;

    p.screen.mean_2d = Vec2(camera.fx * x / z + camera.cx, camera.fy * y / z + camera.cy);
    p.screen.cov_2d = cov2;
    p.screen.depth = z;
    p.screen.footprint_radius = settings.footprint_sigma_mult * footprint_radius(cov2);

    const double det = cov2(0, 0) * cov2(1, 1) - cov2(0, 1) * cov2(1, 0);
    if (!(det > 0.0) || !std::isfinite(det)) {
        // Caller counts these; the dilation floor makes this unreachable for finite input.
        p.x0 = -1;
        return p;
    }
    p.conic = Vec3(cov2(1, 1) / det, -cov2(0, 1) / det, cov2(0, 0) / det);

    // Support where alpha * G >= alpha_min, i.e. Mahalanobis^2 <= 2 ln(alpha / alpha_min).
    double hx = std::numeric_limits<double>::infinity();
    double hy = hx;
    if (settings.alpha_min > 0.0) {
        if (p.opacity <= settings.alpha_min) {
            return p;
        }
        const double k = 2.0 * std::log(p.opacity / settings.alpha_min);
        hx = std::sqrt(k * cov2(0, 0));
        hy = std::sqrt(k * cov2(1, 1));
    }
    const Vec2 &m = p.screen.mean_2d;
    constexpr double margin = 1e-7;
    const double fx0 = std::ceil(m.x() - hx - margin), fx1 = std::floor(m.x() + hx + margin);
    const double fy0 = std::ceil(m.y() - hy - margin), fy1 = std::floor(m.y() + hy + margin);
    if (fx1 < 0.0 || fy1 < 0.0 || fx0 > camera.width - 1 || fy0 > camera.height - 1) {
        return p;
    }
    p.x0 = static_cast<int>(std::max(fx0, 0.0));
    p.y0 = static_cast<int>(std::max(fy0, 0.0));
    p.x1 = static_cast<int>(std::min(fx1, static_cast<double>(camera.width - 1)));
    p.y1 = static_cast<int>(std::min(fy1, static_cast<double>(camera.height - 1)));

    p.view_dir = splat.position - camera.center();
    const double n = p.view_dir.norm();
    const Vec3 dir = n > 0.0 ? Vec3(p.view_dir / n) : Vec3(0.0, 0.0, 1.0);
    p.raw_color = sh_evaluate(splat.sh, dir, sh_degree);
    p.color = p.raw_color.cwiseMax(0.0);
    p.visible = true;
    return p;
}

namespace {

struct TileGrid {
    int size = 16;
    int cols = 0;
    int rows = 0;
    std::vector<std::vector<int>> lists;  // splat ids per tile, front to back
};

TileGrid bin_tiles(const std::vector<ProjectedSplat> &proj, const std::vector<int> &order,
                   const Camera &camera, int tile_size) {
    TileGrid grid;
    grid.size = std::max(1, tile_size);
    grid.cols = (camera.width + grid.size - 1) / grid.size;
    grid.rows = (camera.height + grid.size - 1) / grid.size;
    grid.lists.resize(static_cast<std::size_t>(grid.cols) * grid.rows);
    for (int id : order) {
        const auto &p = proj[id];
        for (int ty = p.y0 / grid.size; ty <= p.y1 / grid.size; ++ty) {
            for (int tx = p.x0 / grid.size; tx <= p.x1 / grid.size; ++tx) {
                grid.lists[static_cast<std::size_t>(ty) * grid.cols + tx].push_back(id);
            }
        }
    }
    return grid;
}

struct Contribution {
    int id;
    double alpha;  // clamped alpha-hat
    double gauss;
    double transmittance;  // before this splat
    bool clamped;
    double dx, dy;
};

/// Front-to-back compositing of one pixel. Fills `contribs` when non-null.
template <bool Record>
double composite_pixel(const std::vector<ProjectedSplat> &proj, const std::vector<int> &list,
                       double px, double py, const RenderSettings &s, Vec3 &color,
                       std::vector<Contribution> *contribs) {
    double t = 1.0;
    color.setZero();
    for (int id : list) {
        const auto &p = proj[id];
        const double dx = px - p.screen.mean_2d.x();
        const double dy = py - p.screen.mean_2d.y();
        const double maha = p.conic[0] * dx * dx + 2.0 * p.conic[1] * dx * dy + p.conic[2] * dy * dy;
        const double g = std::exp(-0.5 * maha);
        const double raw = p.opacity * g;
        const bool clamped = raw > s.alpha_max;
        const double a = clamped ? s.alpha_max : raw;
        if (a < s.alpha_min) continue;
        const double t_next = t * (1.0 - a);
        if (t_next < s.transmittance_min) break;
        color += p.color * (a * t);
        if constexpr (Record) {
            contribs->push_back({id, a, g, t, clamped, dx, dy});
        }
        t = t_next;
    }
    return t;
}

struct Grad2D {
    Vec2 mean = Vec2::Zero();
    Vec3 conic = Vec3::Zero();
    double opacity = 0.0;
    Vec3 color = Vec3::Zero();

    Grad2D &operator+=(const Grad2D &o) {
        mean += o.mean;
        conic += o.conic;
        opacity += o.opacity;
        color += o.color;
        return *this;
    }
};

/// Chains 2D gradients (mean, conic, opacity, color) back to the 3D parameters.
GaussianSplat backprop_projection(const GaussianSplat &splat, const ProjectedSplat &p,
                                  const Grad2D &g2, const Camera &cam, int sh_degree) {
    GaussianSplat out;
    out.rotation.setZero();

    // Color: clamp, SH basis, view direction.
    Vec3 graw = g2.color;
    for (int c = 0; c < 3; ++c) {
        if (p.raw_color[c] < 0.0) graw[c] = 0.0;
    }
    const double vn = p.view_dir.norm();
    const Vec3 dir = vn > 0.0 ? Vec3(p.view_dir / vn) : Vec3(0.0, 0.0, 1.0);
    const ShBasis basis = sh_basis(dir, sh_degree);
    const int ncoef = sh_coeff_count(sh_degree);
    for (int k = 0; k < ncoef; ++k) {
        out.sh[k] = basis[k] * graw;
    }
    Vec3 gpos = Vec3::Zero();
    if (sh_degree > 0 && vn > 0.0) {
        const ShBasisGrad bgrad = sh_basis_gradient(dir, sh_degree);
        Vec3 gdir = Vec3::Zero();
        for (int k = 1; k < ncoef; ++k) {
            gdir += graw.dot(splat.sh[k]) * bgrad[k];
        }
        gpos += (gdir - dir * dir.dot(gdir)) / vn;
    }

    // Opacity through the sigmoid.
    out.opacity_logit = g2.opacity * p.opacity * (1.0 - p.opacity);

    // Conic -> 2D covariance.
    const Vec3 &q = p.conic;
    Mat2 conic;
    conic << q[0], q[1], q[1], q[2];
    Mat2 g_conic;
    g_conic << g2.conic[0], 0.5 * g2.conic[1], 0.5 * g2.conic[1], g2.conic[2];
    const Mat2 g_cov2 = -conic * g_conic * conic;

    // 2D covariance -> view covariance and Jacobian.
    const auto &J = p.jacobian;
    const Mat3 &W = cam.rotation;
    const Mat3 view_cov = W * p.cov_world * W.transpose();
    const Mat3 g_view = J.transpose() * g_cov2 * J;
    const Eigen::Matrix<double, 2, 3> gJ = 2.0 * g_cov2 * J * view_cov;
    const Mat3 g_cov3 = W.transpose() * g_view * W;

    // Camera-space point from the mean and the Jacobian.
    const double x = p.cam_point.x(), y = p.cam_point.y(), z = p.cam_point.z();
    const double fx = cam.fx, fy = cam.fy;
    const double z2 = z * z, z3 = z2 * z;
    Vec3 gt = Vec3::Zero();
    gt.x() += g2.mean.x() * fx / z;
    gt.y() += g2.mean.y() * fy / z;
    gt.z() += -g2.mean.x() * fx * x / z2 - g2.mean.y() * fy * y / z2;
    gt.z() += gJ(0, 0) * (-fx / z2) + gJ(1, 1) * (-fy / z2);
    gt.x() += gJ(0, 2) * (-fx / z2);
    gt.z() += gJ(0, 2) * (2.0 * fx * x / z3);
    gt.y() += gJ(1, 2) * (-fy / z2);
    gt.z() += gJ(1, 2) * (2.0 * fy * y / z3);
    gpos += W.transpose() * gt;
    out.position = gpos;

    // Sigma = M M^T with M = R diag(sigma).
    const Mat3 R = quaternion_to_matrix(splat.rotation);
    const Vec3 sigma = splat.scales();
    const Mat3 M = R * sigma.asDiagonal();
    const Mat3 gM = (g_cov3 + g_cov3.transpose()) * M;
    for (int j = 0; j < 3; ++j) {
        out.log_scales[j] = gM.col(j).dot(R.col(j)) * sigma[j];
    }
    const Mat3 gR = gM * sigma.asDiagonal();

    const double qn = splat.rotation.norm();
    const Vec4 qh = splat.rotation / qn;
    const double w = qh[0], qx = qh[1], qy = qh[2], qz = qh[3];
    Vec4 gq;
    gq[0] = 2.0 * (-qz * gR(0, 1) + qy * gR(0, 2) + qz * gR(1, 0) - qx * gR(1, 2) -
                   qy * gR(2, 0) + qx * gR(2, 1));
    gq[1] = 2.0 * (qy * gR(0, 1) + qz * gR(0, 2) + qy * gR(1, 0) - 2.0 * qx * gR(1, 1) -
                   w * gR(1, 2) + qz * gR(2, 0) + w * gR(2, 1) - 2.0 * qx * gR(2, 2));
    gq[2] = 2.0 * (-2.0 * qy * gR(0, 0) + qx * gR(0, 1) + w * gR(0, 2) + qx * gR(1, 0) +
                   qz * gR(1, 2) - w * gR(2, 0) + qz * gR(2, 1) - 2.0 * qy * gR(2, 2));
    gq[3] = 2.0 * (-2.0 * qz * gR(0, 0) - w * gR(0, 1) + qx * gR(0, 2) + w * gR(1, 0) -
                   2.0 * qz * gR(1, 1) + qy * gR(1, 2) + qx * gR(2, 0) + qy * gR(2, 1));
    out.rotation = (gq - qh * qh.dot(gq)) / qn;
    return out;
}

} // namespace
} // namespace detail

std::optional<ScreenSplat> project(const GaussianSplat &splat, const Camera &camera,
                                   const RenderSettings &settings) {
    camera.validate();
    // Color is irrelevant for the footprint; evaluate at degree 0.
    const auto p = detail::project_full(splat, camera, 0, settings);
    if (!p.visible) return std::nullopt;
    return p.screen;
}

RenderResult rasterize(const SplatModel &model, const Camera &camera, const Vec3 &background,
                       const RenderSettings &settings) {
    using namespace detail;
    camera.validate();
    const std::size_t n = model.size();
    RenderResult out;
    out.projected.resize(n);
    out.screens.resize(n);
    out.visible.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        auto &p = out.projected[i];
        p = project_full(model.splats[i], camera, model.sh_degree, settings);
        if (!p.visible && p.x0 == -1) {
            ++out.skipped_singular;
        }
        out.screens[i] = p.screen;
        out.visible[i] = p.visible ? 1 : 0;
        if (p.visible) out.depth_order.push_back(static_cast<int>(i));
    }
    std::stable_sort(out.depth_order.begin(), out.depth_order.end(), [&](int a, int b) {
        return out.projected[a].screen.depth < out.projected[b].screen.depth;
    });

    const TileGrid grid = bin_tiles(out.projected, out.depth_order, camera, settings.tile_size);
    out.image = Image(camera.width, camera.height);
    out.transmittance.assign(out.image.pixel_count(), 1.0);

    parallel_for(grid.lists.size(), settings.threads, [&](int, std::size_t tile) {
        const int tx = static_cast<int>(tile) % grid.cols;
        const int ty = static_cast<int>(tile) / grid.cols;
        const auto &list = grid.lists[tile];
        const int xe = std::min(camera.width, (tx + 1) * grid.size);
        const int ye = std::min(camera.height, (ty + 1) * grid.size);
        Vec3 color;
        for (int py = ty * grid.size; py < ye; ++py) {
            for (int px = tx * grid.size; px < xe; ++px) {
                const double t = composite_pixel<false>(out.projected, list, px, py, settings,
                                                        color, nullptr);
                out.image.set_pixel(px, py, color + t * background);
                out.transmittance[static_cast<std::size_t>(py) * camera.width + px] = t;
            }
        }
    });
    return out;
}

GradientBundle rasterize_backward(const SplatModel &model, const Camera &camera,
                                  const Vec3 &background, const RenderResult &forward,
                                  const Image &dl_dimage, const RenderSettings &settings) {
    using namespace detail;
    require(dl_dimage.width == camera.width && dl_dimage.height == camera.height,
            ErrorCode::ShapeMismatch, "dL/dimage shape does not match the camera");
    require(forward.projected.size() == model.size(), ErrorCode::ShapeMismatch,
            "forward result does not match the model");

    GradientBundle out;
    out.magnitude.assign(dl_dimage.pixel_count(), 0.0);
    for (std::size_t i = 0; i < out.magnitude.size(); ++i) {
        const double *g = &dl_dimage.data[i * 3];
        out.magnitude[i] = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
    }

    const TileGrid grid =
        bin_tiles(forward.projected, forward.depth_order, camera, settings.tile_size);

    // Per-tile slots keep the reduction order fixed regardless of threading.
    std::vector<std::vector<Grad2D>> tile_grads(grid.lists.size());
    const int workers = std::min<int>(resolve_threads(settings.threads),
                                      static_cast<int>(std::max<std::size_t>(grid.lists.size(), 1)));
    std::vector<std::vector<Contribution>> scratch(workers);
    std::vector<std::vector<int>> slot_of(workers);

    parallel_for(grid.lists.size(), settings.threads, [&](int worker, std::size_t tile) {
        const auto &list = grid.lists[tile];
        auto &grads = tile_grads[tile];
        grads.assign(list.size(), Grad2D{});
        if (list.empty()) return;
        auto &contribs = scratch[worker];
        auto &slot = slot_of[worker];
        if (slot.size() != model.size()) slot.assign(model.size(), -1);
        for (std::size_t j = 0; j < list.size(); ++j) slot[list[j]] = static_cast<int>(j);

        const int tx = static_cast<int>(tile) % grid.cols;
        const int ty = static_cast<int>(tile) / grid.cols;
        const int xe = std::min(camera.width, (tx + 1) * grid.size);
        const int ye = std::min(camera.height, (ty + 1) * grid.size);
        Vec3 color;
        for (int py = ty * grid.size; py < ye; ++py) {
            for (int px = tx * grid.size; px < xe; ++px) {
                const Vec3 dl = dl_dimage.pixel(px, py);
                if (dl.isZero(0.0)) continue;
                contribs.clear();
                const double t_final = composite_pixel<true>(forward.projected, list, px, py,
                                                             settings, color, &contribs);
                Vec3 suffix = t_final * background;
                for (auto it = contribs.rbegin(); it != contribs.rend(); ++it) {
                    const auto &p = forward.projected[it->id];
                    Grad2D &g = grads[slot[it->id]];
                    const double w = it->alpha * it->transmittance;
                    g.color += w * dl;
                    const Vec3 dc_dalpha =
                        p.color * it->transmittance - suffix / (1.0 - it->alpha);
                    suffix += p.color * w;
                    if (it->clamped) continue;
                    const double g_alpha = dl.dot(dc_dalpha);
                    g.opacity += g_alpha * it->gauss;
                    const double g_maha = -0.5 * it->gauss * g_alpha * p.opacity;
                    const double dx = it->dx, dy = it->dy;
                    g.conic += g_maha * Vec3(dx * dx, 2.0 * dx * dy, dy * dy);
                    g.mean += g_maha * Vec2(-2.0 * (p.conic[0] * dx + p.conic[1] * dy),
                                            -2.0 * (p.conic[1] * dx + p.conic[2] * dy));
                }
            }
        }
        for (int id : list) slot[id] = -1;
    });

    std::vector<Grad2D> total(model.size());
    for (std::size_t tile = 0; tile < grid.lists.size(); ++tile) {
        const auto &list = grid.lists[tile];
        for (std::size_t j = 0; j < list.size(); ++j) {
            total[list[j]] += tile_grads[tile][j];
        }
    }

    out.splats.assign(model.size(), GaussianSplat{});
    for (auto &s : out.splats) s.rotation.setZero();
    parallel_for(forward.depth_order.size(), settings.threads, [&](int, std::size_t k) {
        const int id = forward.depth_order[k];
        out.splats[id] = backprop_projection(model.splats[id], forward.projected[id], total[id],
                                             camera, model.sh_degree);
    });
    return out;
}

GradientBundle rasterize_backward(const SplatModel &model, const Camera &camera,
                                  const Vec3 &background, const Image &dl_dimage,
                                  const RenderSettings &settings) {
    const RenderResult forward = rasterize(model, camera, background, settings);
    return rasterize_backward(model, camera, background, forward, dl_dimage, settings);
}

} // namespace microsplat
