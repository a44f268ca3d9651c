#pragma once

#include "microsplat/splat.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace microsplat {

/// Smooth RGB field on the unit sphere: a constant plus von Mises-Fisher lobes.
struct DirectionalField {
    struct Lobe {
        Vec3 axis;
        double kappa = 1.0;
        Vec3 amplitude;
    };
    Vec3 base = Vec3::Constant(0.4);
    std::vector<Lobe> lobes;

    Vec3 operator()(const Vec3 &dir) const;

    /// Three random lobes; the "standard" field uses seed 0.
    static DirectionalField random(std::uint64_t seed);
};

/// Product rule on the sphere: Gauss-Legendre in cos(theta), uniform in phi.
struct SphereQuadrature {
    std::vector<Vec3> dirs;
    std::vector<double> weights;  // sum to 4*pi

    static SphereQuadrature product(int n_theta, int n_phi);
};

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
void gauss_legendre(int n, std::vector<double> &nodes, std::vector<double> &weights);

using SphereFunction = std::function<Vec3(const Vec3 &)>;

/// Weight a kernel with covariance `sigma` gives to direction d: its standard
/// deviation along d.
double kernel_weight(const Mat3 &sigma, const Vec3 &dir);

/// Weighted least-squares SH fit of `field`, weighting each quadrature node by
/// kernel_weight(sigma, d).
std::vector<Vec3> fit_sh(const SphereFunction &field, int degree, const Mat3 &sigma,
                         const SphereQuadrature &quad);

/// Root mean square error of an SH expansion against `field` over the sphere
/// (uniform measure, averaged over the three channels).
double sh_rmse(const SphereFunction &field, const std::vector<Vec3> &coeffs, int degree,
               const SphereQuadrature &quad);

struct AnisoRow {
    int degree = 0;
    double isotropic = 0.0;
    double anisotropic = 0.0;
};

Mat3 isotropic_kernel();    // 0.5 I
Mat3 anisotropic_kernel();  // diag(1.5, 0.5, 0.5)

std::vector<AnisoRow> anisotropy_experiment(std::uint64_t field_seed,
                                            const std::vector<int> &degrees = {1, 2, 3});

} // namespace microsplat
