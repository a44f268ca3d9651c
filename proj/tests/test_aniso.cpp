#include "microsplat/aniso.hpp"
#include "microsplat/sh.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace microsplat;

TEST(GaussLegendre, KnownNodes) {
    std::vector<double> x, w;
    gauss_legendre(3, x, w);
    ASSERT_EQ(x.size(), 3u);
    std::vector<std::pair<double, double>> got;
    for (int i = 0; i < 3; ++i) got.emplace_back(x[i], w[i]);
    std::sort(got.begin(), got.end());
    EXPECT_NEAR(got[0].first, -std::sqrt(0.6), 1e-14);
    EXPECT_NEAR(got[1].first, 0.0, 1e-14);
    EXPECT_NEAR(got[2].first, std::sqrt(0.6), 1e-14);
    EXPECT_NEAR(got[0].second, 5.0 / 9.0, 1e-14);
    EXPECT_NEAR(got[1].second, 8.0 / 9.0, 1e-14);
}

TEST(GaussLegendre, ExactForPolynomials) {
    std::vector<double> x, w;
    gauss_legendre(20, x, w);
    for (int p = 0; p <= 39; ++p) {
        double s = 0.0;
        for (int i = 0; i < 20; ++i) s += w[i] * std::pow(x[i], p);
        const double exact = p % 2 == 1 ? 0.0 : 2.0 / (p + 1);
        EXPECT_NEAR(s, exact, 1e-13) << p;
    }
}

TEST(SphereQuadrature, TotalAreaAndUnitDirections) {
    const SphereQuadrature q = SphereQuadrature::product(48, 96);
    double area = 0.0;
    for (std::size_t i = 0; i < q.dirs.size(); ++i) {
        area += q.weights[i];
        EXPECT_NEAR(q.dirs[i].norm(), 1.0, 1e-14);
    }
    EXPECT_NEAR(area, 4.0 * std::numbers::pi, 1e-12);
}

TEST(Aniso, KernelWeight) {
    EXPECT_NEAR(kernel_weight(anisotropic_kernel(), Vec3(1, 0, 0)), std::sqrt(1.5), 1e-15);
    EXPECT_NEAR(kernel_weight(anisotropic_kernel(), Vec3(0, 0, 1)), std::sqrt(0.5), 1e-15);
    const Vec3 d = Vec3(1, 2, 3).normalized();
    EXPECT_NEAR(kernel_weight(isotropic_kernel(), d), std::sqrt(0.5), 1e-15);
}

TEST(Aniso, RepresentableFieldIsFitExactly) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<Vec3> truth(9);
    for (auto &c : truth) c = Vec3(n(rng), n(rng), n(rng));
    const SphereFunction f = [&](const Vec3 &d) { return sh_evaluate(truth, d, 2); };
    const SphereQuadrature q = SphereQuadrature::product(24, 48);
    for (const Mat3 &k : {isotropic_kernel(), anisotropic_kernel()}) {
        const auto coeffs = fit_sh(f, 2, k, q);
        for (int i = 0; i < 9; ++i) EXPECT_NEAR((coeffs[i] - truth[i]).norm(), 0.0, 1e-10);
        EXPECT_LT(sh_rmse(f, coeffs, 2, q), 1e-11);
    }
}

TEST(Aniso, RmseMatchesDenseMidpointRule) {
    const DirectionalField field = DirectionalField::random(3);
    const SphereFunction f = [&](const Vec3 &d) { return field(d); };
    const SphereQuadrature q = SphereQuadrature::product(48, 96);
    const auto coeffs = fit_sh(f, 2, anisotropic_kernel(), q);

    // Midpoint rule in z = cos(theta), uniform in phi; d(area) = dz dphi.
    const int nz = 4000, nphi = 256;
    double sum = 0.0;
    for (int i = 0; i < nz; ++i) {
        const double z = -1.0 + (i + 0.5) * 2.0 / nz;
        const double r = std::sqrt(1.0 - z * z);
        for (int j = 0; j < nphi; ++j) {
            const double phi = 2.0 * std::numbers::pi * j / nphi;
            const Vec3 d(r * std::cos(phi), r * std::sin(phi), z);
            sum += (sh_evaluate(coeffs, d, 2) - field(d)).squaredNorm();
        }
    }
    const double mean_sq = sum * (2.0 / nz) * (2.0 * std::numbers::pi / nphi) / (4.0 * std::numbers::pi);
    const double oracle = std::sqrt(mean_sq / 3.0);
    EXPECT_NEAR(sh_rmse(f, coeffs, 2, q), oracle, 1e-6);
}

TEST(Aniso, AnisotropicKernelFitsWorseOnStandardField) {
    const auto rows = anisotropy_experiment(0);
    ASSERT_EQ(rows.size(), 3u);
    for (const auto &r : rows) {
        EXPECT_GE(r.anisotropic, r.isotropic) << "degree " << r.degree;
        EXPECT_GT(r.isotropic, 0.0);
    }
    EXPECT_LT(rows[2].isotropic, rows[0].isotropic);
}

TEST(Aniso, FieldIsDeterministic) {
    const DirectionalField a = DirectionalField::random(5), b = DirectionalField::random(5);
    const Vec3 d = Vec3(0.2, -0.5, 0.8).normalized();
    EXPECT_EQ(a(d), b(d));
    EXPECT_EQ(a.lobes.size(), 3u);
    for (const auto &l : a.lobes) {
        EXPECT_GE(l.kappa, 2.0);
        EXPECT_LE(l.kappa, 6.0);
    }
}
