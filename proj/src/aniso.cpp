#include "microsplat/aniso.hpp"

#include "microsplat/error.hpp"
#include "microsplat/sh.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

namespace microsplat {

Vec3 DirectionalField::operator()(const Vec3 &dir) const {
    Vec3 c = base;
    for (const auto &l : lobes) c += l.amplitude * std::exp(l.kappa * (l.axis.dot(dir) - 1.0));
    return c;
}

DirectionalField DirectionalField::random(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> n(0.0, 1.0);
    DirectionalField f;
    f.base = Vec3(0.3 + 0.2 * u(rng), 0.3 + 0.2 * u(rng), 0.3 + 0.2 * u(rng));
    for (int i = 0; i < 3; ++i) {
        Lobe l;
        l.axis = Vec3(n(rng), n(rng), n(rng)).normalized();
        l.kappa = 2.0 + 4.0 * u(rng);
        l.amplitude = Vec3(0.1 + 0.2 * u(rng), 0.1 + 0.2 * u(rng), 0.1 + 0.2 * u(rng));
        f.lobes.push_back(l);
    }
    return f;
}

void gauss_legendre(int n, std::vector<double> &nodes, std::vector<double> &weights) {
    require(n >= 1, ErrorCode::InvalidParameter, "Gauss-Legendre order must be >= 1");
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 1.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
}

SphereQuadrature SphereQuadrature::product(int n_theta, int n_phi) {
    require(n_theta >= 1 && n_phi >= 1, ErrorCode::InvalidParameter, "quadrature sizes must be >= 1");
    std::vector<double> z, wz;
    gauss_legendre(n_theta, z, wz);
    SphereQuadrature q;
    const double dphi = 2.0 * std::numbers::pi / n_phi;
    for (int i = 0; i < n_theta; ++i) {
        const double r = std::sqrt(std::max(0.0, 1.0 - z[i] * z[i]));
        for (int j = 0; j < n_phi; ++j) {
            const double phi = (j + 0.5) * dphi;
            q.dirs.emplace_back(r * std::cos(phi), r * std::sin(phi), z[i]);
            q.weights.push_back(wz[i] * dphi);
        }
    }
    return q;
}

double kernel_weight(const Mat3 &sigma, const Vec3 &dir) {
    return std::sqrt(dir.dot(sigma * dir));
}

std::vector<Vec3> fit_sh(const SphereFunction &field, int degree, const Mat3 &sigma,
                         const SphereQuadrature &quad) {
    const int k = sh_coeff_count(degree);
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(k, k);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(k, 3);
    for (std::size_t q = 0; q < quad.dirs.size(); ++q) {
        const Vec3 &d = quad.dirs[q];
        const double w = quad.weights[q] * kernel_weight(sigma, d);
        const ShBasis basis = sh_basis(d, degree);
        const Vec3 f = field(d);
        for (int a = 0; a < k; ++a) {
            for (int b = 0; b < k; ++b) gram(a, b) += w * basis[a] * basis[b];
            rhs.row(a) += w * basis[a] * f.transpose();
        }
    }
    const Eigen::MatrixXd sol = gram.ldlt().solve(rhs);
    std::vector<Vec3> coeffs(k);
    for (int a = 0; a < k; ++a) coeffs[a] = sol.row(a).transpose();
    return coeffs;
}

double sh_rmse(const SphereFunction &field, const std::vector<Vec3> &coeffs, int degree,
               const SphereQuadrature &quad) {
    double sum = 0.0, area = 0.0;
    for (std::size_t q = 0; q < quad.dirs.size(); ++q) {
        const Vec3 &d = quad.dirs[q];
        const Vec3 e = sh_evaluate(coeffs, d, degree) - field(d);
        sum += quad.weights[q] * e.squaredNorm();
        area += quad.weights[q];
    }
    return std::sqrt(sum / (3.0 * area));
}

Mat3 isotropic_kernel() { return 0.5 * Mat3::Identity(); }

Mat3 anisotropic_kernel() { return Vec3(1.5, 0.5, 0.5).asDiagonal(); }

std::vector<AnisoRow> anisotropy_experiment(std::uint64_t field_seed,
                                            const std::vector<int> &degrees) {
    const DirectionalField field = DirectionalField::random(field_seed);
    const SphereQuadrature quad = SphereQuadrature::product(48, 96);
    const SphereFunction f = [&](const Vec3 &d) { return field(d); };
    std::vector<AnisoRow> rows;
    for (int degree : degrees) {
        require(degree >= 0 && degree <= kMaxShDegree, ErrorCode::InvalidParameter,
                "SH degree must be in [0, 3]");
        AnisoRow row;
        row.degree = degree;
        row.isotropic = sh_rmse(f, fit_sh(f, degree, isotropic_kernel(), quad), degree, quad);
        row.anisotropic = sh_rmse(f, fit_sh(f, degree, anisotropic_kernel(), quad), degree, quad);
        rows.push_back(row);
    }
    return rows;
}

} // namespace microsplat
