#include "microsplat/error.hpp"
#include "microsplat/optimizer.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace microsplat;

namespace {

GaussianSplat zero_grad() {
    GaussianSplat g;
    g.rotation.setZero();
    return g;
}

} // namespace

TEST(Adam, MatchesHandRolledUpdates) {
    LearningRates lr;
    AdamOptimizer adam(lr);
    SplatModel m;
    m.sh_degree = 1;
    m.splats.resize(1);
    adam.reset(1);
    const double g_values[3] = {0.3, -0.1, 0.25};
    double x = m.splats[0].opacity_logit, mm = 0, vv = 0;
    for (int t = 1; t <= 3; ++t) {
        std::vector<GaussianSplat> grads(1, zero_grad());
        grads[0].opacity_logit = g_values[t - 1];
        adam.step(m, grads, 1e-3);
        const double g = g_values[t - 1];
        mm = 0.9 * mm + 0.1 * g;
        vv = 0.999 * vv + 0.001 * g * g;
        const double mh = mm / (1 - std::pow(0.9, t)), vh = vv / (1 - std::pow(0.999, t));
        x -= lr.opacity * mh / (std::sqrt(vh) + lr.epsilon);
        EXPECT_NEAR(m.splats[0].opacity_logit, x, 1e-15);
    }
    // Parameters with zero gradient never move.
    EXPECT_EQ(m.splats[0].position, Vec3::Zero());
}

TEST(Adam, UsesGroupRatesAndPositionOverride) {
    AdamOptimizer adam;
    SplatModel m;
    m.sh_degree = 3;
    m.splats.resize(1);
    adam.reset(1);
    std::vector<GaussianSplat> grads(1, zero_grad());
    grads[0].position = Vec3(1, 1, 1);
    grads[0].log_scales = Vec3(1, 1, 1);
    grads[0].sh[0] = Vec3(1, 1, 1);
    grads[0].sh[5] = Vec3(1, 1, 1);
    adam.step(m, grads, 0.123);
    // First Adam step moves each parameter by lr * sign(g).
    EXPECT_NEAR(m.splats[0].position.x(), -0.123, 1e-12);
    EXPECT_NEAR(m.splats[0].log_scales.x(), -5e-3, 1e-12);
    EXPECT_NEAR(m.splats[0].sh[0].x(), -2.5e-3, 1e-12);
    EXPECT_NEAR(m.splats[0].sh[5].x(), -1.25e-4, 1e-12);
}

TEST(Adam, RenormalizesQuaternions) {
    AdamOptimizer adam;
    SplatModel m;
    m.splats.resize(2);
    m.splats[1].rotation = Vec4(2, 0, 0, 0);
    adam.reset(2);
    std::vector<GaussianSplat> grads(2, zero_grad());
    grads[0].rotation = Vec4(0.5, -1, 2, 0.1);
    adam.step(m, grads, 0.0);
    for (const auto &s : m.splats) EXPECT_NEAR(s.rotation.norm(), 1.0, 1e-15);
}

TEST(Adam, RemapCarriesAndZeroesState) {
    AdamOptimizer adam;
    SplatModel m;
    m.splats.resize(2);
    adam.reset(2);
    std::vector<GaussianSplat> grads(2, zero_grad());
    grads[0].opacity_logit = 1.0;
    grads[1].opacity_logit = 1.0;
    adam.step(m, grads, 0.0);

    adam.remap({1, 0, 1}, {0, 0, 1});
    EXPECT_EQ(adam.size(), 3u);
    SplatModel m2;
    m2.splats.resize(3);
    std::vector<GaussianSplat> g2(3, zero_grad());
    for (auto &g : g2) g.opacity_logit = -1.0;
    adam.step(m2, g2, 0.0);
    // Carried state: momentum 0.1 * 1 then 0.9 * 0.1 - 0.1 = -0.01 at step 2.
    const double carried = 0.05 * (-0.01 / (1 - 0.81)) /
                           (std::sqrt((0.999 * 0.001 + 0.001) / (1 - 0.999 * 0.999)) + 1e-15);
    EXPECT_NEAR(m2.splats[0].opacity_logit, -carried, 1e-12);
    EXPECT_NEAR(m2.splats[1].opacity_logit, -carried, 1e-12);
    // Fresh slot behaves like a first step.
    EXPECT_NEAR(m2.splats[2].opacity_logit, 0.05, 1e-12);
    EXPECT_THROW(adam.remap({5}, {}), Error);
}

TEST(Adam, ShapeMismatchThrows) {
    AdamOptimizer adam;
    adam.reset(2);
    SplatModel m;
    m.splats.resize(3);
    std::vector<GaussianSplat> grads(3, zero_grad());
    EXPECT_THROW(adam.step(m, grads, 0.0), Error);
}

TEST(Schedule, ExponentialDecayEndpoints) {
    EXPECT_DOUBLE_EQ(exponential_decay(1.6e-4, 1.6e-6, 0.0), 1.6e-4);
    EXPECT_NEAR(exponential_decay(1.6e-4, 1.6e-6, 1.0), 1.6e-6, 1e-20);
    EXPECT_NEAR(exponential_decay(1.6e-4, 1.6e-6, 0.5), 1.6e-5, 1e-18);
}
