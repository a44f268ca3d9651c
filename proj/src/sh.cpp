#include "microsplat/sh.hpp"

#include "microsplat/error.hpp"

#include <string>

namespace microsplat {

ShBasis sh_basis(const Eigen::Vector3d &dir, int degree) {
    ShBasis y{};
    const double x = dir.x(), yy_ = dir.y(), z = dir.z();
    y[0] = kShC0;
    if (degree < 1) return y;
    y[1] = -kShC1 * yy_;
    y[2] = kShC1 * z;
    y[3] = -kShC1 * x;
    if (degree < 2) return y;
    const double xx = x * x, yy = yy_ * yy_, zz = z * z;
    const double xy = x * yy_, yz = yy_ * z, xz = x * z;
    y[4] = kShC2[0] * xy;
    y[5] = kShC2[1] * yz;
    y[6] = kShC2[2] * (2.0 * zz - xx - yy);
    y[7] = kShC2[3] * xz;
    y[8] = kShC2[4] * (xx - yy);
    if (degree < 3) return y;
    y[9] = kShC3[0] * yy_ * (3.0 * xx - yy);
    y[10] = kShC3[1] * xy * z;
    y[11] = kShC3[2] * yy_ * (4.0 * zz - xx - yy);
    y[12] = kShC3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy);
    y[13] = kShC3[4] * x * (4.0 * zz - xx - yy);
    y[14] = kShC3[5] * z * (xx - yy);
    y[15] = kShC3[6] * x * (xx - 3.0 * yy);
    return y;
}

ShBasisGrad sh_basis_gradient(const Eigen::Vector3d &dir, int degree) {
    using V = Eigen::Vector3d;
    ShBasisGrad g;
    g.fill(V::Zero());
    if (degree < 1) return g;
    const double x = dir.x(), y = dir.y(), z = dir.z();
    g[1] = V(0.0, -kShC1, 0.0);
    g[2] = V(0.0, 0.0, kShC1);
    g[3] = V(-kShC1, 0.0, 0.0);
    if (degree < 2) return g;
    const double xx = x * x, yy = y * y, zz = z * z;
    g[4] = kShC2[0] * V(y, x, 0.0);
    g[5] = kShC2[1] * V(0.0, z, y);
    g[6] = kShC2[2] * V(-2.0 * x, -2.0 * y, 4.0 * z);
    g[7] = kShC2[3] * V(z, 0.0, x);
    g[8] = kShC2[4] * V(2.0 * x, -2.0 * y, 0.0);
    if (degree < 3) return g;
    g[9] = kShC3[0] * V(6.0 * x * y, 3.0 * xx - 3.0 * yy, 0.0);
    g[10] = kShC3[1] * V(y * z, x * z, x * y);
    g[11] = kShC3[2] * V(-2.0 * x * y, 4.0 * zz - xx - 3.0 * yy, 8.0 * y * z);
    g[12] = kShC3[3] * V(-6.0 * x * z, -6.0 * y * z, 6.0 * zz - 3.0 * xx - 3.0 * yy);
    g[13] = kShC3[4] * V(4.0 * zz - 3.0 * xx - yy, -2.0 * x * y, 8.0 * x * z);
    g[14] = kShC3[5] * V(2.0 * x * z, -2.0 * y * z, xx - yy);
    g[15] = kShC3[6] * V(3.0 * xx - 3.0 * yy, -6.0 * x * y, 0.0);
    return g;
}

Eigen::Vector3d sh_evaluate(std::span<const Eigen::Vector3d> coeffs,
                            const Eigen::Vector3d &dir, int degree) {
    require(degree >= 0 && degree <= kMaxShDegree, ErrorCode::InvalidParameter,
            "sh degree must be in [0, 3], got " + std::to_string(degree));
    const int n = sh_coeff_count(degree);
    require(static_cast<int>(coeffs.size()) >= n, ErrorCode::InvalidParameter,
            "sh degree " + std::to_string(degree) + " needs " + std::to_string(n) +
                " coefficients, got " + std::to_string(coeffs.size()));
    const ShBasis y = sh_basis(dir, degree);
    Eigen::Vector3d rgb = Eigen::Vector3d::Zero();
    for (int k = 0; k < n; ++k) {
        rgb += y[k] * coeffs[k];
    }
    return rgb;
}

} // namespace microsplat
