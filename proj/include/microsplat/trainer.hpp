#pragma once

#include "microsplat/densify.hpp"
#include "microsplat/loss.hpp"
#include "microsplat/optimizer.hpp"
#include "microsplat/refine.hpp"
#include "microsplat/render.hpp"
#include "microsplat/scene.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

namespace microsplat {

struct TrainConfig {
    int total_iterations = 30000;
    LossWeights weights;
    double trace_cap = -1.0;          // <= 0: auto_trace_cap(init)
    double trace_cap_factor = 9.0;
    GrowthConfig growth;              // growth.growth_end == 0 -> total / 2
    RefineConfig refine;
    LearningRates rates;
    RenderSettings render;
    std::uint64_t seed = 42;
    int log_interval = 100;
    int checkpoint_interval = 0;      // 0 disables
    int holdout_every = 8;
    bool enable_growth = true;
    bool enable_refine = true;
    bool log_wall_clock = true;

    int refine_start() const;
    void validate() const;
};

using RadiusHistogram = std::array<std::size_t, 10>;

struct TrainLogRecord {
    int iteration = 0;
    double total = 0.0;
    double l1 = 0.0;
    double l2 = 0.0;
    double ssim_term = 0.0;
    double cov_term = 0.0;
    double heldout_psnr = 0.0;
    std::size_t splat_count = 0;
    RadiusHistogram radius_histogram{};
    double wall_clock_s = 0.0;
};

struct SplitEvent {
    int iteration = 0;
    double threshold = 0.0;
    std::size_t by_score = 0;
    std::size_t by_trace = 0;
    std::size_t split = 0;
    std::size_t count_before = 0;
    std::size_t count_after = 0;
};

struct RefineEvent {
    int iteration = 0;
    MergeThresholds thresholds;
    RefineReport report;
};

struct TrainLog {
    double trace_cap = 0.0;
    double position_lr_scale = 1.0;
    std::vector<TrainLogRecord> records;
    std::vector<SplitEvent> splits;
    std::vector<RefineEvent> refines;
    std::vector<std::size_t> count_history;  // splat count after each iteration
};

struct TrainResult {
    SplatModel model;
    TrainLog log;
};

struct TrainHooks {
    std::function<void(const TrainLogRecord &)> on_record;
    std::function<void(int, const SplatModel &)> on_checkpoint;
};

struct LossAndGradient {
    RenderResult forward;
    LossReport loss;
    GradientBundle grads;  // includes the covariance penalty on log_scales
};

/// One forward/backward pass of the total loss against `target`.
LossAndGradient loss_and_gradient(const SplatModel &model, const Camera &camera,
                                  const Vec3 &background, const Image &target,
                                  const LossWeights &weights, double trace_cap,
                                  const RenderSettings &render = {});

/// Two-stage optimization: growth until T_refine, then prune/merge refinement,
/// with gradient updates throughout. Deterministic given the config.
TrainResult train(const Dataset &data, const SplatModel &init, const TrainConfig &config,
                  const TrainHooks &hooks = {});

/// 9 x median initial covariance trace (factor configurable).
double auto_trace_cap(const SplatModel &model, double factor = 9.0);

/// Ten equal-width bins over [0, max] of each splat's mean footprint radius
/// across the cameras that see it. Splats never visible land in bin 0.
RadiusHistogram radius_bin_histogram(const SplatModel &model, const std::vector<Camera> &cameras,
                                     const RenderSettings &render = {});

/// Scene extent used to scale the position learning rate: 1.1 x the largest
/// camera-center distance from the camera centroid.
double camera_extent(const std::vector<Camera> &cameras);

} // namespace microsplat
