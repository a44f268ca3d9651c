#include "microsplat/error.hpp"
#include "microsplat/loss.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace microsplat;

namespace {

Image random_image(std::mt19937_64 &rng, int w, int h) {
    Image img(w, h);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double &v : img.data) v = u(rng);
    return img;
}

Image structured_image(int w, int h) {
    Image img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                img.at(x, y, c) = 0.5 + 0.4 * std::sin(0.7 * x + 0.3 * c) * std::cos(0.5 * y);
    return img;
}

int fold(int i, int n) {
    // Mirror without repeating the edge sample until inside [0, n).
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * (n - 1) - i;
    }
    return i;
}

/// Direct windowed SSIM: explicit 11x11 Gaussian weights at every pixel.
double ssim_oracle(const Image &a, const Image &b) {
    double w[11][11], sum = 0.0;
    for (int i = 0; i < 11; ++i)
        for (int j = 0; j < 11; ++j) sum += w[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * 1.5 * 1.5));
    const double c1 = 1e-4, c2 = 9e-4;
    double total = 0.0;
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < a.height; ++y) {
            for (int x = 0; x < a.width; ++x) {
                double mx = 0, my = 0, xx = 0, yy = 0, xy = 0;
                for (int i = 0; i < 11; ++i) {
                    for (int j = 0; j < 11; ++j) {
                        const int yy_ = fold(y + i - 5, a.height), xx_ = fold(x + j - 5, a.width);
                        const double wt = w[i][j] / sum;
                        const double va = a.at(xx_, yy_, c), vb = b.at(xx_, yy_, c);
                        mx += wt * va;
                        my += wt * vb;
                        xx += wt * va * va;
                        yy += wt * vb * vb;
                        xy += wt * va * vb;
                    }
                }
                const double vx = xx - mx * mx, vy = yy - my * my, cxy = xy - mx * my;
                total += (2 * mx * my + c1) * (2 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            }
        }
    }
    return total / (3.0 * a.width * a.height);
}

} // namespace

TEST(L1, ValuesAndGradient) {
    Image a(4, 3, 0.5);
    EXPECT_EQ(l1_loss(a, a).value, 0.0);
    Image b(4, 3, 0.75);
    EXPECT_DOUBLE_EQ(l1_loss(a, b).value, 0.25);
    std::mt19937_64 rng(1);
    const Image r = random_image(rng, 7, 5), t = random_image(rng, 7, 5);
    double sum = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) sum += std::abs(r.data[i] - t.data[i]);
    const ImageLoss l = l1_loss(r, t);
    EXPECT_NEAR(l.value, sum / r.size(), 1e-12);
    for (std::size_t i = 0; i < r.size(); ++i) {
        EXPECT_DOUBLE_EQ(l.grad.data[i], (r.data[i] > t.data[i] ? 1.0 : -1.0) / r.size());
    }
}

TEST(L2, ValuesAndFiniteDifferenceGradient) {
    Image a(4, 4, 0.2), b(4, 4, 0.3);
    EXPECT_EQ(l2_loss(a, a).value, 0.0);
    EXPECT_NEAR(l2_loss(a, b).value, 0.01, 1e-15);
    std::mt19937_64 rng(2);
    Image r = random_image(rng, 4, 4);
    const Image t = random_image(rng, 4, 4);
    const ImageLoss l = l2_loss(r, t);
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double keep = r.data[i];
        r.data[i] = keep + 1e-6;
        const double fp = l2_loss(r, t).value;
        r.data[i] = keep - 1e-6;
        const double fm = l2_loss(r, t).value;
        r.data[i] = keep;
        EXPECT_NEAR(l.grad.data[i], (fp - fm) / 2e-6, 1e-8);
    }
}

TEST(Loss, ShapeMismatchThrows) {
    EXPECT_THROW(l1_loss(Image(4, 4), Image(4, 5)), Error);
    EXPECT_THROW(l2_loss(Image(4, 4), Image(5, 4)), Error);
    EXPECT_THROW(ssim_loss(Image(4, 4), Image(5, 4)), Error);
    EXPECT_THROW(psnr(Image(4, 4), Image(5, 4)), Error);
}

TEST(Ssim, IdenticalImagesGiveZeroLoss) {
    const Image a = structured_image(16, 16);
    EXPECT_NEAR(ssim_loss(a, a).value, 0.0, 1e-12);
    EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
}

TEST(Ssim, InvertedImageLossExceedsHalf) {
    const Image a = structured_image(24, 24);
    Image inv = a;
    for (double &v : inv.data) v = 1.0 - v;
    EXPECT_GT(ssim_loss(inv, a).value, 0.5);
}

TEST(Ssim, MatchesDirectWindowOracle) {
    std::mt19937_64 rng(3);
    for (auto [w, h] : {std::pair{16, 16}, std::pair{23, 9}, std::pair{4, 6}}) {
        const Image a = random_image(rng, w, h), b = random_image(rng, w, h);
        EXPECT_NEAR(ssim(a, b), ssim_oracle(a, b), 1e-12) << w << "x" << h;
    }
}

TEST(Ssim, GradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(4);
    Image r = random_image(rng, 16, 16);
    const Image t = random_image(rng, 16, 16);
    const ImageLoss l = ssim_loss(r, t);
    std::uniform_int_distribution<std::size_t> pick(0, r.size() - 1);
    for (int n = 0; n < 100; ++n) {
        const std::size_t i = pick(rng);
        const double keep = r.data[i];
        r.data[i] = keep + 1e-6;
        const double fp = ssim_loss(r, t).value;
        r.data[i] = keep - 1e-6;
        const double fm = ssim_loss(r, t).value;
        r.data[i] = keep;
        const double fd = (fp - fm) / 2e-6;
        EXPECT_LE(std::abs(l.grad.data[i] - fd), 1e-5 * std::abs(fd) + 1e-10) << i;
    }
}

TEST(CovarianceLoss, HingeSumAndGradient) {
    SplatModel m;
    GaussianSplat s;
    s.log_scales = Vec3::Constant(std::log(0.1));  // trace 0.03
    m.splats.push_back(s);
    EXPECT_EQ(covariance_loss(m, 1.0).value, 0.0);
    s.log_scales = Vec3(0.5 * std::log(2.0), 0.0, 0.0);  // trace 2 + 1 + 1 = 4
    m.splats.push_back(s);
    EXPECT_NEAR(covariance_loss(m, 3.0).value, 1.0, 1e-12);

    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(-1.0, 0.7);
    m.splats.clear();
    for (int i = 0; i < 30; ++i) {
        GaussianSplat g;
        g.log_scales = Vec3(n(rng), n(rng), n(rng));
        m.splats.push_back(g);
    }
    const double cap = 0.3;
    double oracle = 0.0;
    for (const auto &g : m.splats) {
        const double tr = std::exp(2 * g.log_scales.x()) + std::exp(2 * g.log_scales.y()) + std::exp(2 * g.log_scales.z());
        oracle += tr > cap ? tr - cap : 0.0;
    }
    const CovarianceLoss cl = covariance_loss(m, cap);
    EXPECT_NEAR(cl.value, oracle, 1e-12);
    ASSERT_EQ(cl.dlog_scales.size(), m.size());
}

TEST(TotalLoss, Recomposition) {
    std::mt19937_64 rng(6);
    const Image r = random_image(rng, 16, 16), t = random_image(rng, 16, 16);
    SplatModel m;
    GaussianSplat s;
    s.log_scales = Vec3(0.0, -1.0, -2.0);
    m.splats.push_back(s);

    LossWeights zero{0.5, 0.5, 0.0, 0.0};
    EXPECT_EQ(total_loss(r, r, m, zero, 10.0).total, 0.0);

    LossWeights only_l1{1.0, 0.0, 0.0, 0.0};
    EXPECT_EQ(total_loss(r, t, m, only_l1, 10.0).total, l1_loss(r, t).value);

    const LossWeights w;
    const double cap = 0.5;
    const LossReport rep = total_loss(r, t, m, w, cap);
    const double hand = 0.5 * l1_loss(r, t).value + 0.5 * l2_loss(r, t).value +
                        0.2 * (1.0 - ssim(r, t)) + 0.01 * covariance_loss(m, cap).value;
    EXPECT_NEAR(rep.total, hand, 1e-12);
    const Image g1 = l1_loss(r, t).grad, g2 = l2_loss(r, t).grad, gs = ssim_loss(r, t).grad;
    for (std::size_t i = 0; i < r.size(); ++i) {
        EXPECT_NEAR(rep.dl_dimage.data[i], 0.5 * g1.data[i] + 0.5 * g2.data[i] + 0.2 * gs.data[i], 1e-15);
    }
}

TEST(TotalLoss, RejectsNegativeWeights) {
    LossWeights w;
    w.ssim = -1.0;
    EXPECT_THROW(w.validate(), Error);
}

TEST(Psnr, KnownValues) {
    Image a(8, 8, 0.5);
    EXPECT_EQ(psnr(a, a), std::numeric_limits<double>::infinity());
    Image b(8, 8, 0.6);
    EXPECT_NEAR(psnr(a, b), 20.0, 1e-9);
    std::mt19937_64 rng(7);
    const Image r = random_image(rng, 9, 9), t = random_image(rng, 9, 9);
    double mse = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) mse += (r.data[i] - t.data[i]) * (r.data[i] - t.data[i]);
    mse /= r.size();
    EXPECT_NEAR(psnr(r, t), -10.0 * std::log10(mse), 1e-9);
}
