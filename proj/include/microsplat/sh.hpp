#pragma once

#include <Eigen/Core>

#include <array>
#include <span>

namespace microsplat {

inline constexpr int kMaxShDegree = 3;
inline constexpr int kMaxShCoeffs = (kMaxShDegree + 1) * (kMaxShDegree + 1);

// Real spherical harmonics, graphics normalization (orthonormal on the unit sphere).
inline constexpr double kShC0 = 0.28209479177387814;
inline constexpr double kShC1 = 0.4886025119029199;
inline constexpr std::array<double, 5> kShC2 = {
    1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
    -1.0925484305920792, 0.5462742152960396};
inline constexpr std::array<double, 7> kShC3 = {
    -0.5900435899266435, 2.890611442640554, -0.4570457994644658,
    0.3731763325901154, -0.4570457994644658, 1.445305721320277,
    -0.5900435899266435};

constexpr int sh_coeff_count(int degree) { return (degree + 1) * (degree + 1); }

using ShBasis = std::array<double, kMaxShCoeffs>;
using ShBasisGrad = std::array<Eigen::Vector3d, kMaxShCoeffs>;

/// Basis values Y_k(d) for k < sh_coeff_count(degree); remaining entries are zero.
/// The direction is used as given (callers normalize).
ShBasis sh_basis(const Eigen::Vector3d &dir, int degree);

/// Gradient of each polynomial basis function with respect to the (unnormalized) direction.
ShBasisGrad sh_basis_gradient(const Eigen::Vector3d &dir, int degree);

/// Per-channel color sum_k coeffs[k] * Y_k(dir). Throws InvalidParameter when
/// `degree` needs more coefficients than supplied or exceeds kMaxShDegree.
Eigen::Vector3d sh_evaluate(std::span<const Eigen::Vector3d> coeffs,
                            const Eigen::Vector3d &dir, int degree);

/// DC coefficient that makes a degree-0 evaluation return `rgb`.
inline Eigen::Vector3d rgb_to_dc(const Eigen::Vector3d &rgb) { return rgb / kShC0; }
inline Eigen::Vector3d dc_to_rgb(const Eigen::Vector3d &dc) { return dc * kShC0; }

} // namespace microsplat
