#include "microsplat/loss.hpp"

#include "microsplat/error.hpp"

#include <cmath>
#include <limits>
#include <utility>

namespace microsplat {

void LossWeights::validate() const {
    for (double w : {l1, l2, ssim, cov}) {
        require(std::isfinite(w) && w >= 0.0, ErrorCode::InvalidParameter,
                "loss weights must be finite and non-negative");
    }
}

namespace {

void check_pair(const Image &a, const Image &b) {
    require(a.same_shape(b) && a.size() == b.size(), ErrorCode::ShapeMismatch,
            "image shapes differ");
    require(a.size() > 0, ErrorCode::ShapeMismatch, "empty image");
}

constexpr int kWindowRadius = 5;
constexpr double kWindowSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

int reflect(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - i;
}

/// One-dimensional Gaussian blur with reflected borders as a sparse matrix.
class Blur1D {
public:
    explicit Blur1D(int n) : rows_(n) {
        double weights[2 * kWindowRadius + 1];
        double sum = 0.0;
        for (int k = -kWindowRadius; k <= kWindowRadius; ++k) {
            weights[k + kWindowRadius] = std::exp(-(k * k) / (2.0 * kWindowSigma * kWindowSigma));
            sum += weights[k + kWindowRadius];
        }
        for (int i = 0; i < n; ++i) {
            auto &row = rows_[i];
            for (int k = -kWindowRadius; k <= kWindowRadius; ++k) {
                const int j = reflect(i + k, n);
                const double w = weights[k + kWindowRadius] / sum;
                bool merged = false;
                for (auto &[idx, val] : row) {
                    if (idx == j) {
                        val += w;
                        merged = true;
                        break;
                    }
                }
                if (!merged) row.emplace_back(j, w);
            }
        }
    }

    const std::vector<std::pair<int, double>> &row(int i) const { return rows_[i]; }

private:
    std::vector<std::vector<std::pair<int, double>>> rows_;
};

/// Separable 2D blur on a planar W x H buffer and its adjoint.
class Blur2D {
public:
    Blur2D(int w, int h) : w_(w), h_(h), bx_(w), by_(h), tmp_(static_cast<std::size_t>(w) * h) {}

    void apply(const std::vector<double> &in, std::vector<double> &out) {
        out.assign(in.size(), 0.0);
        for (int y = 0; y < h_; ++y) {
            for (int x = 0; x < w_; ++x) {
                double acc = 0.0;
                for (const auto &[j, wt] : bx_.row(x)) acc += wt * in[y * w_ + j];
                tmp_[y * w_ + x] = acc;
            }
        }
        for (int y = 0; y < h_; ++y) {
            for (const auto &[j, wt] : by_.row(y)) {
                for (int x = 0; x < w_; ++x) out[y * w_ + x] += wt * tmp_[j * w_ + x];
            }
        }
    }

    void adjoint(const std::vector<double> &in, std::vector<double> &out) {
        std::fill(tmp_.begin(), tmp_.end(), 0.0);
        for (int y = 0; y < h_; ++y) {
            for (const auto &[j, wt] : by_.row(y)) {
                for (int x = 0; x < w_; ++x) tmp_[j * w_ + x] += wt * in[y * w_ + x];
            }
        }
        out.assign(in.size(), 0.0);
        for (int y = 0; y < h_; ++y) {
            for (int x = 0; x < w_; ++x) {
                const double v = tmp_[y * w_ + x];
                for (const auto &[j, wt] : bx_.row(x)) out[y * w_ + j] += wt * v;
            }
        }
    }

private:
    int w_, h_;
    Blur1D bx_, by_;
    std::vector<double> tmp_;
};

struct SsimResult {
    double mean = 0.0;
    Image grad;  // d(mean SSIM)/d(a)
};

SsimResult ssim_impl(const Image &a, const Image &b, bool want_grad) {
    check_pair(a, b);
    const int w = a.width, h = a.height;
    const std::size_t np = a.pixel_count();
    const double n_total = static_cast<double>(np * 3);
    Blur2D blur(w, h);

    SsimResult res;
    if (want_grad) res.grad = Image(w, h);

    std::vector<double> x(np), y(np), xx(np), yy(np), xy(np);
    std::vector<double> mx, my, sxx, syy, sxy;
    std::vector<double> g_mx(np), g_sxx(np), g_sxy(np), back;
    double sum = 0.0;
    for (int c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < np; ++i) {
            x[i] = a.data[i * 3 + c];
            y[i] = b.data[i * 3 + c];
            xx[i] = x[i] * x[i];
            yy[i] = y[i] * y[i];
            xy[i] = x[i] * y[i];
        }
        blur.apply(x, mx);
        blur.apply(y, my);
        blur.apply(xx, sxx);
        blur.apply(yy, syy);
        blur.apply(xy, sxy);
        for (std::size_t i = 0; i < np; ++i) {
            const double ux = mx[i], uy = my[i];
            const double vx = sxx[i] - ux * ux;
            const double vy = syy[i] - uy * uy;
            const double cxy = sxy[i] - ux * uy;
            const double a1 = 2.0 * ux * uy + kC1;
            const double a2 = 2.0 * cxy + kC2;
            const double b1 = ux * ux + uy * uy + kC1;
            const double b2 = vx + vy + kC2;
            const double s = (a1 * a2) / (b1 * b2);
            sum += s;
            if (want_grad) {
                // Partials with respect to the blurred moments mu_x, E[x^2], E[xy].
                const double up = 1.0 / n_total;
                g_mx[i] = up * s *
                          (2.0 * uy / a1 - 2.0 * uy / a2 - 2.0 * ux / b1 + 2.0 * ux / b2);
                g_sxx[i] = up * (-s / b2);
                g_sxy[i] = up * (2.0 * s / a2);
            }
        }
        if (want_grad) {
            blur.adjoint(g_mx, back);
            for (std::size_t i = 0; i < np; ++i) res.grad.data[i * 3 + c] = back[i];
            blur.adjoint(g_sxx, back);
            for (std::size_t i = 0; i < np; ++i) res.grad.data[i * 3 + c] += 2.0 * x[i] * back[i];
            blur.adjoint(g_sxy, back);
            for (std::size_t i = 0; i < np; ++i) res.grad.data[i * 3 + c] += y[i] * back[i];
        }
    }
    res.mean = sum / n_total;
    return res;
}

} // namespace

ImageLoss l1_loss(const Image &rendered, const Image &target) {
    check_pair(rendered, target);
    ImageLoss out{0.0, Image(rendered.width, rendered.height)};
    const double n = static_cast<double>(rendered.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < rendered.size(); ++i) {
        const double e = rendered.data[i] - target.data[i];
        sum += std::abs(e);
        out.grad.data[i] = (e > 0.0 ? 1.0 : (e < 0.0 ? -1.0 : 0.0)) / n;
    }
    out.value = sum / n;
    return out;
}

ImageLoss l2_loss(const Image &rendered, const Image &target) {
    check_pair(rendered, target);
    ImageLoss out{0.0, Image(rendered.width, rendered.height)};
    const double n = static_cast<double>(rendered.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < rendered.size(); ++i) {
        const double e = rendered.data[i] - target.data[i];
        sum += e * e;
        out.grad.data[i] = 2.0 * e / n;
    }
    out.value = sum / n;
    return out;
}

ImageLoss ssim_loss(const Image &rendered, const Image &target) {
    SsimResult r = ssim_impl(rendered, target, true);
    for (double &g : r.grad.data) g = -g;
    return {1.0 - r.mean, std::move(r.grad)};
}

double ssim(const Image &a, const Image &b) { return ssim_impl(a, b, false).mean; }

CovarianceLoss covariance_loss(const SplatModel &model, double trace_cap) {
    require(trace_cap > 0.0, ErrorCode::InvalidParameter, "trace cap must be positive");
    CovarianceLoss out;
    out.dlog_scales.reserve(model.size());
    for (const auto &s : model.splats) {
        out.value += trace_penalty(s.log_scales, trace_cap);
        out.dlog_scales.push_back(trace_penalty_gradient(s.log_scales, trace_cap));
    }
    return out;
}

LossReport total_loss(const Image &rendered, const Image &target, const SplatModel &model,
                      const LossWeights &weights, double trace_cap) {
    weights.validate();
    check_pair(rendered, target);
    LossReport r;
    r.dl_dimage = Image(rendered.width, rendered.height);
    auto accumulate = [&](const ImageLoss &part, double weight) {
        for (std::size_t i = 0; i < r.dl_dimage.size(); ++i) {
            r.dl_dimage.data[i] += weight * part.grad.data[i];
        }
    };
    const ImageLoss l1 = l1_loss(rendered, target);
    const ImageLoss l2 = l2_loss(rendered, target);
    r.l1 = l1.value;
    r.l2 = l2.value;
    accumulate(l1, weights.l1);
    accumulate(l2, weights.l2);
    if (weights.ssim > 0.0) {
        const ImageLoss s = ssim_loss(rendered, target);
        r.ssim_term = s.value;
        accumulate(s, weights.ssim);
    } else {
        r.ssim_term = 1.0 - ssim(rendered, target);
    }
    const CovarianceLoss cov = covariance_loss(model, trace_cap);
    r.cov_term = cov.value;
    r.dcov_dlog_scales = cov.dlog_scales;
    for (auto &g : r.dcov_dlog_scales) g *= weights.cov;
    r.total = weights.l1 * r.l1 + weights.l2 * r.l2 + weights.ssim * r.ssim_term +
              weights.cov * r.cov_term;
    return r;
}

double psnr(const Image &rendered, const Image &target) {
    check_pair(rendered, target);
    double sum = 0.0;
    for (std::size_t i = 0; i < rendered.size(); ++i) {
        const double e = rendered.data[i] - target.data[i];
        sum += e * e;
    }
    const double mse = sum / static_cast<double>(rendered.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

} // namespace microsplat
