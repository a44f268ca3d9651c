#pragma once

#include "microsplat/render.hpp"
#include "microsplat/splat.hpp"

#include <cstdint>
#include <vector>

namespace microsplat {

/// Stage I (growth) settings.
struct GrowthConfig {
    double percentile = 90.0;          // p, in (0, 100]
    int clones_per_split = 2;
    double scale_halving_factor = 0.5;
    int densify_interval = 100;
    int growth_end = 0;                // T_refine; 0 = derive from the run length
    std::size_t max_splats = 2'000'000;

    void validate() const;
};

struct SplitReport {
    std::vector<double> scores;
    double threshold = 0.0;
    std::vector<int> split_by_score;   // ids with M_k > epsilon
    std::vector<int> split_by_trace;   // ids with P_k > 0
    std::vector<int> split_ids;        // ids actually split, ascending
    std::size_t count_before = 0;
    std::size_t count_after = 0;
};

/// Footprint-disc average of `magnitude` (row-major width x height) around each
/// visible splat. Culled splats and empty discs score 0.
std::vector<double> local_error_scores(const std::vector<double> &magnitude, int width,
                                       int height, const std::vector<ScreenSplat> &screens,
                                       const std::vector<std::uint8_t> &visible);

/// Nearest-rank p-th percentile. Throws EmptyInput on an empty list.
double adaptive_threshold(const std::vector<double> &scores, double percentile);

/// Running per-splat mean of error scores between split events. A splat's mean
/// is taken over the views in which it was visible.
class ScoreAccumulator {
public:
    void reset(std::size_t n);
    void add(const std::vector<double> &scores, const std::vector<std::uint8_t> &visible);
    std::vector<double> means() const;
    std::size_t size() const { return sums_.size(); }

private:
    std::vector<double> sums_;
    std::vector<int> counts_;
};

/// Result of a topology change: the new model plus, for every new splat, the
/// id it came from and whether it is a fresh clone.
struct SplitResult {
    SplatModel model;
    SplitReport report;
    std::vector<int> parent;       // parent id per output splat
    std::vector<std::uint8_t> fresh;
};

/// Splits every splat with score > threshold or penalty > 0. The first clone
/// takes the parent's slot; the rest are appended in parent order.
SplitResult select_and_split(const SplatModel &model, const std::vector<double> &scores,
                             double threshold, const std::vector<double> &penalties,
                             const GrowthConfig &config, std::uint64_t seed);

} // namespace microsplat
