#pragma once

#include "microsplat/image.hpp"
#include "microsplat/splat.hpp"

#include <vector>

namespace microsplat {

struct LossWeights {
    double l1 = 0.5;
    double l2 = 0.5;
    double ssim = 0.2;
    double cov = 0.01;

    void validate() const;
};

/// A scalar loss and its gradient with respect to the rendered image.
struct ImageLoss {
    double value = 0.0;
    Image grad;
};

struct LossReport {
    double total = 0.0;
    double l1 = 0.0;
    double l2 = 0.0;
    double ssim_term = 0.0;  // 1 - SSIM
    double cov_term = 0.0;
    Image dl_dimage;                     // photometric part only
    std::vector<Vec3> dcov_dlog_scales;  // one per splat, already weighted by lambda_cov
};

/// Mean absolute error; gradient sign(e) / N with sign(0) = 0.
ImageLoss l1_loss(const Image &rendered, const Image &target);

/// Mean squared error; gradient 2 e / N.
ImageLoss l2_loss(const Image &rendered, const Image &target);

/// 1 - mean SSIM (11x11 Gaussian window, sigma 1.5, C1 = 0.01^2, C2 = 0.03^2,
/// reflected borders), with the analytic gradient with respect to `rendered`.
ImageLoss ssim_loss(const Image &rendered, const Image &target);

/// Mean SSIM only.
double ssim(const Image &a, const Image &b);

struct CovarianceLoss {
    double value = 0.0;
    std::vector<Vec3> dlog_scales;
};

/// Sum of trace hinge penalties over the model.
CovarianceLoss covariance_loss(const SplatModel &model, double trace_cap);

LossReport total_loss(const Image &rendered, const Image &target, const SplatModel &model,
                      const LossWeights &weights, double trace_cap);

/// 10 log10(1 / MSE); +infinity when the images are identical.
double psnr(const Image &rendered, const Image &target);

} // namespace microsplat
