#include "microsplat/trainer.hpp"

#include "microsplat/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <string>

namespace microsplat {

int TrainConfig::refine_start() const {
    return growth.growth_end > 0 ? growth.growth_end : total_iterations / 2;
}

void TrainConfig::validate() const {
    require(total_iterations > 0, ErrorCode::Config, "total_iterations must be > 0");
    const int t_refine = refine_start();
    require(t_refine > 0 && t_refine < total_iterations, ErrorCode::Config,
            "T_refine must satisfy 0 < T_refine < total_iterations");
    weights.validate();
    growth.validate();
    refine.validate();
    rates.validate();
    require(trace_cap_factor > 0.0, ErrorCode::Config, "trace_cap_factor must be > 0");
    require(log_interval > 0, ErrorCode::Config, "log_interval must be > 0");
    require(checkpoint_interval >= 0, ErrorCode::Config, "checkpoint_interval must be >= 0");
    require(holdout_every >= 0, ErrorCode::Config, "holdout_every must be >= 0");
}

double auto_trace_cap(const SplatModel &model, double factor) {
    require(!model.empty(), ErrorCode::EmptyInput, "auto trace cap of an empty model");
    std::vector<double> traces;
    traces.reserve(model.size());
    for (const auto &s : model.splats) traces.push_back(trace_from_log_scales(s.log_scales));
    std::sort(traces.begin(), traces.end());
    const std::size_t n = traces.size();
    const double median = n % 2 == 1 ? traces[n / 2] : 0.5 * (traces[n / 2 - 1] + traces[n / 2]);
    return factor * median;
}

RadiusHistogram radius_bin_histogram(const SplatModel &model, const std::vector<Camera> &cameras,
                                     const RenderSettings &render) {
    RadiusHistogram hist{};
    if (model.empty()) return hist;
    std::vector<double> radius(model.size(), 0.0);
    for (std::size_t i = 0; i < model.size(); ++i) {
        double sum = 0.0;
        int seen = 0;
        for (const auto &cam : cameras) {
            if (const auto screen = project(model.splats[i], cam, render)) {
                sum += screen->footprint_radius;
                ++seen;
            }
        }
        radius[i] = seen > 0 ? sum / seen : 0.0;
    }
    const double max_r = *std::max_element(radius.begin(), radius.end());
    for (double r : radius) {
        std::size_t bin = 0;
        if (max_r > 0.0) {
            bin = std::min<std::size_t>(9, static_cast<std::size_t>(std::floor(r / max_r * 10.0)));
        }
        ++hist[bin];
    }
    return hist;
}

double camera_extent(const std::vector<Camera> &cameras) {
    if (cameras.empty()) return 1.0;
    Vec3 centroid = Vec3::Zero();
    for (const auto &c : cameras) centroid += c.center();
    centroid /= static_cast<double>(cameras.size());
    double max_d = 0.0;
    for (const auto &c : cameras) max_d = std::max(max_d, (c.center() - centroid).norm());
    return max_d > 0.0 ? 1.1 * max_d : 1.0;
}

LossAndGradient loss_and_gradient(const SplatModel &model, const Camera &camera,
                                  const Vec3 &background, const Image &target,
                                  const LossWeights &weights, double trace_cap,
                                  const RenderSettings &render) {
    LossAndGradient out;
    out.forward = rasterize(model, camera, background, render);
    out.loss = total_loss(out.forward.image, target, model, weights, trace_cap);
    out.grads = rasterize_backward(model, camera, background, out.forward, out.loss.dl_dimage, render);
    for (std::size_t k = 0; k < model.size(); ++k) {
        out.grads.splats[k].log_scales += out.loss.dcov_dlog_scales[k];
    }
    return out;
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace

TrainResult train(const Dataset &data, const SplatModel &init, const TrainConfig &config,
                  const TrainHooks &hooks) {
    config.validate();
    require(!data.cameras.empty() && data.cameras.size() == data.images.size(),
            ErrorCode::EmptyInput, "dataset is empty or cameras and images disagree");
    require(!init.empty(), ErrorCode::EmptyInput, "initial model is empty");
    const std::vector<int> train_views = data.train_indices(config.holdout_every);
    std::vector<int> eval_views = data.holdout_indices(config.holdout_every);
    require(train_views.size() >= 2, ErrorCode::EmptyInput, "need at least 2 training views");
    if (eval_views.empty()) eval_views = train_views;

    const auto start = std::chrono::steady_clock::now();
    TrainResult result;
    SplatModel &model = result.model;
    model = init;
    TrainLog &log = result.log;
    log.trace_cap = config.trace_cap > 0.0 ? config.trace_cap
                                           : auto_trace_cap(init, config.trace_cap_factor);
    const double tau = log.trace_cap;

    std::vector<Camera> train_cameras;
    for (int v : train_views) train_cameras.push_back(data.cameras[v]);
    log.position_lr_scale = config.rates.position_scale > 0.0 ? config.rates.position_scale
                                                              : camera_extent(data.cameras);

    AdamOptimizer adam(config.rates);
    adam.reset(model.size());
    ScoreAccumulator scores;
    scores.reset(model.size());

    const int total = config.total_iterations;
    const int t_refine = config.refine_start();
    std::optional<MergeThresholds> thresholds;

    std::mt19937_64 view_rng(mix_seed(config.seed, 0));
    std::vector<int> order = train_views;
    std::size_t cursor = order.size();

    TrainLogRecord last_loss;
    for (int it = 1; it <= total; ++it) {
        if (cursor == order.size()) {
            for (std::size_t i = order.size() - 1; i > 0; --i) {
                std::uniform_int_distribution<std::size_t> pick(0, i);
                std::swap(order[i], order[pick(view_rng)]);
            }
            cursor = 0;
        }
        const int view = order[cursor++];
        const Camera &cam = data.cameras[view];

        const LossAndGradient step = loss_and_gradient(model, cam, data.background, data.images[view],
                                                       config.weights, tau, config.render);
        const RenderResult &fwd = step.forward;
        const LossReport &loss = step.loss;
        const GradientBundle &grads = step.grads;
        if (!std::isfinite(loss.total)) {
            fail(ErrorCode::Training, "non-finite loss at iteration " + std::to_string(it));
        }

        const bool growing = config.enable_growth && it <= t_refine;
        if (growing) {
            scores.add(local_error_scores(grads.magnitude, cam.width, cam.height, fwd.screens,
                                          fwd.visible),
                       fwd.visible);
        }

        const double pos_lr =
            log.position_lr_scale *
            exponential_decay(config.rates.position, config.rates.position_final,
                              static_cast<double>(it - 1) / std::max(1, total - 1));
        adam.step(model, grads.splats, pos_lr);

        last_loss.total = loss.total;
        last_loss.l1 = loss.l1;
        last_loss.l2 = loss.l2;
        last_loss.ssim_term = loss.ssim_term;
        last_loss.cov_term = loss.cov_term;

        if (growing && it % config.growth.densify_interval == 0) {
            const std::vector<double> means = scores.means();
            const double eps = adaptive_threshold(means, config.growth.percentile);
            std::vector<double> penalties;
            penalties.reserve(model.size());
            for (const auto &s : model.splats) penalties.push_back(trace_penalty(s.log_scales, tau));
            SplitResult split = select_and_split(model, means, eps, penalties, config.growth,
                                                 mix_seed(config.seed, static_cast<std::uint64_t>(it)));
            adam.remap(split.parent, split.fresh);
            SplitEvent ev;
            ev.iteration = it;
            ev.threshold = eps;
            ev.by_score = split.report.split_by_score.size();
            ev.by_trace = split.report.split_by_trace.size();
            ev.split = split.report.split_ids.size();
            ev.count_before = split.report.count_before;
            ev.count_after = split.report.count_after;
            log.splits.push_back(ev);
            model = std::move(split.model);
            scores.reset(model.size());
        }

        if (config.enable_refine && it == t_refine) {
            thresholds = resolve_merge_thresholds(model, config.refine);
        }
        if (config.enable_refine && it > t_refine &&
            (it - t_refine) % config.refine.refine_interval == 0) {
            if (!thresholds) thresholds = resolve_merge_thresholds(model, config.refine);
            RefineResult ref = refine_step(model, config.refine.prune_percent, *thresholds);
            // Merged splats are new parameters; survivors keep their moments.
            adam.remap(ref.source_ids, ref.merged);
            log.refines.push_back({it, *thresholds, ref.report});
            model = std::move(ref.model);
        }

        if (model.empty()) {
            fail(ErrorCode::Training,
                 "splat population reached zero at iteration " + std::to_string(it));
        }
        log.count_history.push_back(model.size());

        if (it % config.log_interval == 0 || it == total) {
            TrainLogRecord rec = last_loss;
            rec.iteration = it;
            rec.heldout_psnr = mean_psnr(model, data, eval_views, config.render);
            rec.splat_count = model.size();
            rec.radius_histogram = radius_bin_histogram(model, train_cameras, config.render);
            if (config.log_wall_clock) {
                rec.wall_clock_s =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            }
            log.records.push_back(rec);
            if (hooks.on_record) hooks.on_record(rec);
        }
        if (config.checkpoint_interval > 0 && it % config.checkpoint_interval == 0 &&
            hooks.on_checkpoint) {
            hooks.on_checkpoint(it, model);
        }
    }
    return result;
}

} // namespace microsplat
