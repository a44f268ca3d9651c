#pragma once

#include "microsplat/splat.hpp"

#include <cstdint>
#include <vector>

namespace microsplat {

/// Per-group learning rates for Adam. The position rate decays exponentially
/// from `position` to `position_final` over the run and is multiplied by
/// `position_scale` (scene extent; <= 0 means derive it from the cameras).
struct LearningRates {
    double position = 1.6e-4;
    double position_final = 1.6e-6;
    double position_scale = -1.0;
    double sh_dc = 2.5e-3;
    double sh_rest = 1.25e-4;
    double opacity = 5e-2;
    double scale = 5e-3;
    double rotation = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-15;

    void validate() const;
    double for_group(ParamGroup g) const;
};

/// Log-linear interpolation between `start` and `end` at fraction t in [0, 1].
double exponential_decay(double start, double end, double t);

/// Adam with one moment pair per splat parameter and a per-splat step counter,
/// so freshly created splats start with bias correction from step one.
class AdamOptimizer {
public:
    explicit AdamOptimizer(LearningRates rates = {}) : rates_(rates) {}

    void reset(std::size_t splat_count);

    /// One update; renormalizes quaternions afterwards. `position_lr` replaces
    /// the group rate for positions (already scaled).
    void step(SplatModel &model, const std::vector<GaussianSplat> &grads, double position_lr);

    /// Rebuilds state after a topology change. `source[i]` is the old id whose
    /// state output splat i inherits; `fresh[i] != 0` (or source < 0) zeroes it.
    void remap(const std::vector<int> &source, const std::vector<std::uint8_t> &fresh);

    std::size_t size() const { return first_.size(); }
    const LearningRates &rates() const { return rates_; }

private:
    LearningRates rates_;
    std::vector<GaussianSplat> first_;
    std::vector<GaussianSplat> second_;
    std::vector<std::int64_t> steps_;
};

} // namespace microsplat
