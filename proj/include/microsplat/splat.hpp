#pragma once

#include "microsplat/sh.hpp"

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace microsplat {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

/// One Gaussian primitive.
///
/// Scales live in log space and opacity as a logit so every field is an
/// unconstrained real. The rotation is a quaternion stored (w, x, y, z); the
/// renderer normalizes it on the fly, the optimizer renormalizes after each step.
/// `sh[k]` holds the RGB coefficient of basis function k; only the first
/// sh_coeff_count(model degree) entries are meaningful.
struct GaussianSplat {
    Vec3 position = Vec3::Zero();
    Vec4 rotation{1.0, 0.0, 0.0, 0.0};
    Vec3 log_scales = Vec3::Zero();
    double opacity_logit = 0.0;
    std::array<Vec3, kMaxShCoeffs> sh{};

    GaussianSplat() { sh.fill(Vec3::Zero()); }

    double opacity() const;
    Vec3 scales() const { return log_scales.array().exp(); }
    Vec3 dc() const { return sh[0]; }

    bool operator==(const GaussianSplat &other) const = default;
};

/// Ordered splat collection. A splat's id is its index.
struct SplatModel {
    int sh_degree = kMaxShDegree;
    std::vector<GaussianSplat> splats;

    std::size_t size() const { return splats.size(); }
    bool empty() const { return splats.empty(); }

    bool operator==(const SplatModel &other) const = default;
};

/// Symmetric positive-definite 3x3 covariance.
struct Covariance3 {
    Mat3 matrix = Mat3::Identity();

    double trace() const { return matrix.trace(); }
};

double sigmoid(double x);
double logit(double p);

/// Rotation matrix of the normalized quaternion (w, x, y, z).
Mat3 quaternion_to_matrix(const Vec4 &q);

/// R diag(exp(2 s)) R^T. Throws InvalidParameter on non-finite input or a zero quaternion.
Covariance3 covariance_from_params(const Vec4 &rotation, const Vec3 &log_scales);

/// sum_axis exp(2 s_axis); equals the trace of the covariance for any rotation.
double trace_from_log_scales(const Vec3 &log_scales);

/// Hinge max(tr - cap, 0). Throws InvalidParameter if cap <= 0.
double trace_penalty(const Covariance3 &cov, double cap);
double trace_penalty(const Vec3 &log_scales, double cap);

/// d(trace_penalty)/d(log_scales); zero at and below the cap.
Vec3 trace_penalty_gradient(const Vec3 &log_scales, double cap);

// Flat parameter view used by the optimizer and by gradient checks.
enum class ParamGroup { Position, Rotation, Scale, Opacity, ShDc, ShRest };

inline constexpr int kParamsPerSplat = 3 + 4 + 3 + 1 + 3 * kMaxShCoeffs;

double &param_ref(GaussianSplat &s, int index);
double param_value(const GaussianSplat &s, int index);
ParamGroup param_group(int index);

/// Whether a flat parameter is live for the given SH degree.
bool param_active(int index, int sh_degree);

} // namespace microsplat
