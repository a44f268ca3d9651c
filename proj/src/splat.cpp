#include "microsplat/splat.hpp"

#include "microsplat/error.hpp"

#include <algorithm>
#include <cmath>

namespace microsplat {

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

double GaussianSplat::opacity() const { return sigmoid(opacity_logit); }

Mat3 quaternion_to_matrix(const Vec4 &q_raw) {
    const Vec4 q = q_raw.normalized();
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    Mat3 r;
    r << 1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y),
        2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x),
        2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y);
    return r;
}

Covariance3 covariance_from_params(const Vec4 &rotation, const Vec3 &log_scales) {
    require(rotation.allFinite() && log_scales.allFinite(), ErrorCode::InvalidParameter,
            "covariance parameters must be finite");
    require(rotation.norm() > 0.0, ErrorCode::InvalidParameter, "zero quaternion");
    const Mat3 r = quaternion_to_matrix(rotation);
    const Vec3 var = (2.0 * log_scales).array().exp();
    require(var.allFinite() && (var.array() > 0.0).all(), ErrorCode::InvalidParameter,
            "scales overflow or underflow");
    Covariance3 cov;
    cov.matrix = r * var.asDiagonal() * r.transpose();
    // Symmetrize away rounding.
    cov.matrix = 0.5 * (cov.matrix + cov.matrix.transpose()).eval();
    return cov;
}

double trace_from_log_scales(const Vec3 &log_scales) {
    return (2.0 * log_scales).array().exp().sum();
}

double trace_penalty(const Covariance3 &cov, double cap) {
    require(cap > 0.0, ErrorCode::InvalidParameter, "trace cap must be positive");
    require(cov.matrix.allFinite(), ErrorCode::InvalidParameter, "covariance not finite");
    return std::max(cov.trace() - cap, 0.0);
}

double trace_penalty(const Vec3 &log_scales, double cap) {
    require(cap > 0.0, ErrorCode::InvalidParameter, "trace cap must be positive");
    return std::max(trace_from_log_scales(log_scales) - cap, 0.0);
}

Vec3 trace_penalty_gradient(const Vec3 &log_scales, double cap) {
    if (trace_from_log_scales(log_scales) <= cap) {
        return Vec3::Zero();
    }
    return 2.0 * (2.0 * log_scales).array().exp();
}

double &param_ref(GaussianSplat &s, int index) {
    if (index < 3) return s.position[index];
    if (index < 7) return s.rotation[index - 3];
    if (index < 10) return s.log_scales[index - 7];
    if (index == 10) return s.opacity_logit;
    const int k = (index - 11) / 3;
    const int c = (index - 11) % 3;
    return s.sh[k][c];
}

double param_value(const GaussianSplat &s, int index) {
    return param_ref(const_cast<GaussianSplat &>(s), index);
}

ParamGroup param_group(int index) {
    if (index < 3) return ParamGroup::Position;
    if (index < 7) return ParamGroup::Rotation;
    if (index < 10) return ParamGroup::Scale;
    if (index == 10) return ParamGroup::Opacity;
    return index < 14 ? ParamGroup::ShDc : ParamGroup::ShRest;
}

bool param_active(int index, int sh_degree) {
    if (index < 11) return true;
    return (index - 11) / 3 < sh_coeff_count(sh_degree);
}

} // namespace microsplat
