#include "microsplat/densify.hpp"
#include "microsplat/error.hpp"
#include "microsplat/loss.hpp"
#include "microsplat/render.hpp"
#include "microsplat/scene.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace microsplat;
using namespace testsupport;

namespace {

/// Scans every pixel of the image and averages those inside the disc.
std::vector<double> disc_scan_oracle(const std::vector<double> &g, int w, int h,
                                     const std::vector<ScreenSplat> &screens,
                                     const std::vector<std::uint8_t> &visible) {
    std::vector<double> out(screens.size(), 0.0);
    for (std::size_t k = 0; k < screens.size(); ++k) {
        if (!visible[k]) continue;
        double sum = 0.0;
        int n = 0;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double dx = x - screens[k].mean_2d.x(), dy = y - screens[k].mean_2d.y();
                if (dx * dx + dy * dy <= screens[k].footprint_radius * screens[k].footprint_radius) {
                    sum += g[y * w + x];
                    ++n;
                }
            }
        }
        out[k] = n ? sum / n : 0.0;
    }
    return out;
}

std::vector<ScreenSplat> random_screens(std::mt19937_64 &rng, int count, int w, int h) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<ScreenSplat> s(count);
    for (auto &sc : s) {
        sc.mean_2d = Vec2(-5 + (w + 10) * u(rng), -5 + (h + 10) * u(rng));
        sc.footprint_radius = 0.2 + 8.0 * u(rng);
    }
    return s;
}

} // namespace

TEST(LocalError, ZeroAndConstantMaps) {
    std::mt19937_64 rng(1);
    auto screens = random_screens(rng, 20, 24, 16);
    for (auto &s : screens) {
        s.mean_2d = s.mean_2d.cwiseMax(Vec2(0, 0)).cwiseMin(Vec2(23, 15));
        s.footprint_radius = std::max(s.footprint_radius, 1.0);
    }
    std::vector<std::uint8_t> vis(20, 1);
    for (double v : local_error_scores(std::vector<double>(24 * 16, 0.0), 24, 16, screens, vis)) EXPECT_EQ(v, 0.0);
    for (double v : local_error_scores(std::vector<double>(24 * 16, 0.37), 24, 16, screens, vis))
        EXPECT_NEAR(v, 0.37, 1e-15);
}

TEST(LocalError, MatchesDiscScanOracle) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int w = 31, h = 19;
        std::vector<double> g(w * h);
        for (double &v : g) v = u(rng);
        const auto screens = random_screens(rng, 25, w, h);
        std::vector<std::uint8_t> vis(25);
        for (auto &v : vis) v = u(rng) < 0.8;
        const auto got = local_error_scores(g, w, h, screens, vis);
        const auto want = disc_scan_oracle(g, w, h, screens, vis);
        for (int k = 0; k < 25; ++k) EXPECT_NEAR(got[k], want[k], 1e-12);
    }
}

TEST(LocalError, RejectsWrongMapSize) {
    EXPECT_THROW(local_error_scores(std::vector<double>(10), 4, 4, {}, {}), Error);
}

TEST(Threshold, NearestRank) {
    const std::vector<double> s = {3, 1, 4, 10, 5, 9, 2, 6, 8, 7};
    EXPECT_EQ(adaptive_threshold(s, 90), 9.0);
    EXPECT_EQ(adaptive_threshold(s, 100), 10.0);
    EXPECT_EQ(adaptive_threshold(s, 10), 1.0);
    EXPECT_EQ(adaptive_threshold(s, 0.001), 1.0);
    EXPECT_EQ(adaptive_threshold(std::vector<double>(7, 2.5), 37), 2.5);
    EXPECT_THROW(adaptive_threshold({}, 50), Error);
    EXPECT_THROW(adaptive_threshold(s, 0), Error);
    EXPECT_THROW(adaptive_threshold(s, 101), Error);
}

TEST(Threshold, MonotoneInPercentileAndMatchesSortOracle) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> s(137);
    for (double &v : s) v = u(rng);
    std::vector<double> sorted = s;
    std::sort(sorted.begin(), sorted.end());
    double prev = -1.0;
    for (double p = 0.5; p <= 100.0; p += 0.5) {
        const double eps = adaptive_threshold(s, p);
        EXPECT_GE(eps, prev);
        prev = eps;
        const std::size_t rank = static_cast<std::size_t>(std::ceil(p / 100.0 * s.size()));
        EXPECT_EQ(eps, sorted[std::max<std::size_t>(rank, 1) - 1]);
    }
}

TEST(ScoreAccumulator, AveragesOverVisibleViews) {
    ScoreAccumulator acc;
    acc.reset(3);
    acc.add({1.0, 2.0, 5.0}, {1, 1, 0});
    acc.add({3.0, 0.0, 7.0}, {1, 0, 0});
    const auto m = acc.means();
    EXPECT_DOUBLE_EQ(m[0], 2.0);
    EXPECT_DOUBLE_EQ(m[1], 2.0);
    EXPECT_DOUBLE_EQ(m[2], 0.0);
    EXPECT_THROW(acc.add({1.0}, {1}), Error);
}

TEST(Split, NoTriggerLeavesModelUnchanged) {
    std::mt19937_64 rng(4);
    const SplatModel m = random_model(rng);
    const std::vector<double> scores(m.size(), 0.5), pen(m.size(), 0.0);
    const SplitResult r = select_and_split(m, scores, 0.5, pen, GrowthConfig{}, 1);
    EXPECT_EQ(r.model.splats, m.splats);
    EXPECT_TRUE(r.report.split_ids.empty());
    EXPECT_EQ(r.report.count_after, m.size());
}

TEST(Split, TracePenaltyForcesSplitWithHalvedScales) {
    SplatModel m;
    GaussianSplat s;
    s.log_scales = Vec3(std::log(0.4), std::log(0.1), std::log(0.2));
    m.splats.push_back(s);
    const SplitResult r = select_and_split(m, {0.0}, 1.0, {0.5}, GrowthConfig{}, 7);
    ASSERT_EQ(r.model.size(), 2u);
    EXPECT_EQ(r.report.split_by_trace, std::vector<int>{0});
    EXPECT_TRUE(r.report.split_by_score.empty());
    for (const auto &c : r.model.splats) {
        EXPECT_LT((c.scales() - 0.5 * s.scales()).norm(), 1e-15);
        EXPECT_EQ(c.rotation, s.rotation);
        EXPECT_EQ(c.opacity_logit, s.opacity_logit);
    }
    // Clones sit at +-0.5 sigma along the longest axis (x here).
    EXPECT_NEAR(std::abs(r.model.splats[0].position.x()), 0.2, 1e-15);
    EXPECT_NEAR(r.model.splats[0].position.x(), -r.model.splats[1].position.x(), 1e-15);
    EXPECT_EQ(r.parent, (std::vector<int>{0, 0}));
    EXPECT_EQ(r.fresh, (std::vector<std::uint8_t>{1, 1}));
}

TEST(Split, ClonesTakeParentSlotAndAppendInOrder) {
    std::mt19937_64 rng(5);
    RandomModelOptions opt;
    opt.count = 6;
    const SplatModel m = random_model(rng, opt);
    GrowthConfig cfg;
    cfg.clones_per_split = 3;
    const std::vector<double> scores = {0.1, 0.9, 0.2, 0.8, 0.1, 0.1};
    const SplitResult r = select_and_split(m, scores, 0.5, std::vector<double>(6, 0.0), cfg, 3);
    EXPECT_EQ(r.report.split_ids, (std::vector<int>{1, 3}));
    ASSERT_EQ(r.model.size(), 10u);
    EXPECT_EQ(r.parent, (std::vector<int>{0, 1, 2, 3, 4, 5, 1, 1, 3, 3}));
    EXPECT_EQ(r.model.splats[0], m.splats[0]);
    EXPECT_EQ(r.model.splats[2], m.splats[2]);
    EXPECT_NE(r.model.splats[1], m.splats[1]);
}

TEST(Split, MaxSplatsKeepsHighestScores) {
    std::mt19937_64 rng(6);
    RandomModelOptions opt;
    opt.count = 5;
    const SplatModel m = random_model(rng, opt);
    GrowthConfig cfg;
    cfg.max_splats = 7;
    const SplitResult r = select_and_split(m, {0.9, 0.6, 0.95, 0.7, 0.6}, 0.5,
                                           std::vector<double>(5, 0.0), cfg, 1);
    EXPECT_EQ(r.report.split_ids, (std::vector<int>{0, 2}));
    EXPECT_EQ(r.model.size(), 7u);
}

TEST(Split, SplatsOverTheCapAreAlwaysSplit) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        RandomModelOptions opt;
        opt.count = 40;
        opt.max_sigma = 0.6;
        const SplatModel m = random_model(rng, opt);
        const double cap = 0.05 + 0.3 * u(rng);
        std::vector<double> scores(m.size()), pen;
        for (double &s : scores) s = u(rng);
        for (const auto &s : m.splats) pen.push_back(trace_penalty(s.log_scales, cap));
        const double eps = adaptive_threshold(scores, 90);
        const SplitResult r = select_and_split(m, scores, eps, pen, GrowthConfig{}, trial);
        for (std::size_t k = 0; k < m.size(); ++k) {
            const bool in = std::binary_search(r.report.split_ids.begin(), r.report.split_ids.end(), static_cast<int>(k));
            if (trace_from_log_scales(m.splats[k].log_scales) > cap) EXPECT_TRUE(in);
            EXPECT_EQ(in, scores[k] > eps || pen[k] > 0.0);
        }
    }
}

TEST(Split, DeterministicGivenSeed) {
    std::mt19937_64 rng(8);
    const SplatModel m = random_model(rng);
    const std::vector<double> scores(m.size(), 1.0), pen(m.size(), 0.0);
    const auto a = select_and_split(m, scores, 0.0, pen, GrowthConfig{}, 99);
    const auto b = select_and_split(m, scores, 0.0, pen, GrowthConfig{}, 99);
    EXPECT_EQ(a.model.splats, b.model.splats);
}

TEST(Split, SplittingOneSplatKeepsTheImageClose) {
    SceneSpec spec;
    const SyntheticScene scene = generate_scene(spec);
    const Camera &cam = scene.dataset.cameras[1];
    const SplatModel &m = scene.init;
    const Image before = rasterize(m, cam, Vec3::Zero()).image;
    std::vector<double> scores(m.size(), 0.0);
    scores[3] = 1.0;
    const auto r = select_and_split(m, scores, 0.5, std::vector<double>(m.size(), 0.0), GrowthConfig{}, 1);
    const Image after = rasterize(r.model, cam, Vec3::Zero()).image;
    EXPECT_LT(l1_loss(after, before).value, 0.1);
}
