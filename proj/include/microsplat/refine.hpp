#pragma once

#include "microsplat/splat.hpp"

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace microsplat {

/// Stage II (micro-refine) settings. A merge threshold left at a negative
/// value is derived from the model when the stage starts (see
/// resolve_merge_thresholds). A spatial threshold of exactly 0 disables merging.
struct RefineConfig {
    double prune_percent = 2.0;     // q, in [0, 100)
    double tau_xyz = -1.0;          // world units
    double tau_col = 0.05;          // DC coefficient distance
    double tau_scale = -1.0;        // sigma-vector distance
    int refine_interval = 500;
    double xyz_nn_factor = 0.5;     // tau_xyz = factor * median nearest-neighbor distance
    double scale_norm_factor = 0.5; // tau_scale = factor * median |sigma|

    void validate() const;
};

struct MergeThresholds {
    double xyz = 0.0;
    double col = 0.0;
    double scale = 0.0;
};

struct ScoreSummary {
    double min = 0.0;
    double median = 0.0;
    double mean = 0.0;
    double max = 0.0;
};

struct RefineReport {
    std::size_t pruned = 0;
    std::size_t merged_pairs = 0;
    std::size_t count_before = 0;
    std::size_t count_after = 0;
    ScoreSummary scores;
};

/// opacity * max axis standard deviation, per splat.
std::vector<double> importance_scores(const SplatModel &model);
ScoreSummary summarize(const std::vector<double> &values);

struct PruneResult {
    SplatModel model;
    std::vector<int> pruned_ids;  // ascending
    std::vector<int> kept_ids;    // source id of each surviving splat
};

/// Removes floor(q N / 100) lowest-importance splats (ties by id).
PruneResult prune(const SplatModel &model, double prune_percent);

struct MergeResult {
    SplatModel model;
    std::vector<std::pair<int, int>> pairs;  // (i, j), i < j, in merge order
    std::vector<int> source_ids;             // first source id of each output splat
    std::vector<std::uint8_t> merged;        // 1 where the output splat is a merge result
};

/// Greedy nearest-first pairwise merge of splats passing all three proximity
/// tests. Each splat takes part in at most one merge per call.
MergeResult merge(const SplatModel &model, double tau_xyz, double tau_col, double tau_scale);

/// Whether a pair passes the position, DC color and scale tests.
bool merge_compatible(const GaussianSplat &a, const GaussianSplat &b, double tau_xyz,
                      double tau_col, double tau_scale);

/// Attribute average of two splats; rotations are sign-aligned before averaging.
GaussianSplat average_splats(const GaussianSplat &a, const GaussianSplat &b);

/// Per-splat distance to the nearest other splat (0 for a single splat).
std::vector<double> nearest_neighbor_distances(const SplatModel &model);

/// Fills in data-adaptive defaults for negative thresholds.
MergeThresholds resolve_merge_thresholds(const SplatModel &model, const RefineConfig &config);

struct RefineResult {
    SplatModel model;
    RefineReport report;
    std::vector<int> source_ids;  // first source id of each output splat
    std::vector<std::uint8_t> merged;
};

/// One Stage II event: prune, then merge.
RefineResult refine_step(const SplatModel &model, double prune_percent,
                         const MergeThresholds &thresholds);

} // namespace microsplat
