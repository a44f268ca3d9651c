#include "microsplat/densify.hpp"

#include "microsplat/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace microsplat {

void GrowthConfig::validate() const {
    require(percentile > 0.0 && percentile <= 100.0, ErrorCode::InvalidParameter,
            "percentile must be in (0, 100]");
    require(clones_per_split >= 2, ErrorCode::InvalidParameter, "clones_per_split must be >= 2");
    require(scale_halving_factor > 0.0 && scale_halving_factor < 1.0,
            ErrorCode::InvalidParameter, "scale_halving_factor must be in (0, 1)");
    require(densify_interval > 0, ErrorCode::InvalidParameter, "densify_interval must be > 0");
    require(growth_end >= 0, ErrorCode::InvalidParameter, "growth_end must be >= 0");
    require(max_splats > 0, ErrorCode::InvalidParameter, "max_splats must be > 0");
}

std::vector<double> local_error_scores(const std::vector<double> &magnitude, int width,
                                       int height, const std::vector<ScreenSplat> &screens,
                                       const std::vector<std::uint8_t> &visible) {
    require(magnitude.size() == static_cast<std::size_t>(width) * height,
            ErrorCode::ShapeMismatch, "magnitude map does not match the image size");
    require(visible.size() == screens.size(), ErrorCode::ShapeMismatch,
            "visibility flags do not match the screen list");
    std::vector<double> scores(screens.size(), 0.0);
    for (std::size_t k = 0; k < screens.size(); ++k) {
        if (!visible[k]) continue;
        const Vec2 &m = screens[k].mean_2d;
        const double r = screens[k].footprint_radius;
        const double r2 = r * r;
        const int x0 = std::max(0, static_cast<int>(std::ceil(m.x() - r)));
        const int x1 = std::min(width - 1, static_cast<int>(std::floor(m.x() + r)));
        const int y0 = std::max(0, static_cast<int>(std::ceil(m.y() - r)));
        const int y1 = std::min(height - 1, static_cast<int>(std::floor(m.y() + r)));
        double sum = 0.0;
        int count = 0;
        for (int y = y0; y <= y1; ++y) {
            const double dy = y - m.y();
            for (int x = x0; x <= x1; ++x) {
                const double dx = x - m.x();
                if (dx * dx + dy * dy <= r2) {
                    sum += magnitude[static_cast<std::size_t>(y) * width + x];
                    ++count;
                }
            }
        }
        scores[k] = count > 0 ? sum / count : 0.0;
    }
    return scores;
}

double adaptive_threshold(const std::vector<double> &scores, double percentile) {
    require(!scores.empty(), ErrorCode::EmptyInput, "percentile of an empty score list");
    require(percentile > 0.0 && percentile <= 100.0, ErrorCode::InvalidParameter,
            "percentile must be in (0, 100]");
    std::vector<double> sorted = scores;
    const auto n = sorted.size();
    auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * static_cast<double>(n)));
    rank = std::clamp<std::size_t>(rank, 1, n);
    std::nth_element(sorted.begin(), sorted.begin() + (rank - 1), sorted.end());
    return sorted[rank - 1];
}

void ScoreAccumulator::reset(std::size_t n) {
    sums_.assign(n, 0.0);
    counts_.assign(n, 0);
}

void ScoreAccumulator::add(const std::vector<double> &scores,
                           const std::vector<std::uint8_t> &visible) {
    require(scores.size() == sums_.size() && visible.size() == sums_.size(),
            ErrorCode::ShapeMismatch, "score accumulator size mismatch");
    for (std::size_t k = 0; k < sums_.size(); ++k) {
        if (!visible[k]) continue;
        sums_[k] += scores[k];
        ++counts_[k];
    }
}

std::vector<double> ScoreAccumulator::means() const {
    std::vector<double> out(sums_.size(), 0.0);
    for (std::size_t k = 0; k < sums_.size(); ++k) {
        if (counts_[k] > 0) out[k] = sums_[k] / counts_[k];
    }
    return out;
}

SplitResult select_and_split(const SplatModel &model, const std::vector<double> &scores,
                             double threshold, const std::vector<double> &penalties,
                             const GrowthConfig &config, std::uint64_t seed) {
    config.validate();
    const std::size_t n = model.size();
    require(scores.size() == n && penalties.size() == n, ErrorCode::ShapeMismatch,
            "scores and penalties must have one entry per splat");

    SplitResult out;
    auto &rep = out.report;
    rep.scores = scores;
    rep.threshold = threshold;
    rep.count_before = n;

    std::vector<int> selected;
    for (std::size_t k = 0; k < n; ++k) {
        const bool by_score = scores[k] > threshold;
        const bool by_trace = penalties[k] > 0.0;
        if (by_score) rep.split_by_score.push_back(static_cast<int>(k));
        if (by_trace) rep.split_by_trace.push_back(static_cast<int>(k));
        if (by_score || by_trace) selected.push_back(static_cast<int>(k));
    }

    const std::size_t extra = static_cast<std::size_t>(config.clones_per_split - 1);
    const std::size_t room = config.max_splats > n ? (config.max_splats - n) / extra : 0;
    if (selected.size() > room) {
        std::stable_sort(selected.begin(), selected.end(),
                         [&](int a, int b) { return scores[a] > scores[b]; });
        selected.resize(room);
        std::sort(selected.begin(), selected.end());
    }
    rep.split_ids = selected;

    std::vector<std::uint8_t> is_selected(n, 0);
    for (int id : selected) is_selected[id] = 1;

    std::mt19937_64 rng(seed);
    std::vector<std::vector<GaussianSplat>> clones(n);
    const double log_shrink = std::log(config.scale_halving_factor);
    for (int id : selected) {
        const GaussianSplat &parent = model.splats[id];
        const Mat3 R = quaternion_to_matrix(parent.rotation);
        const Vec3 sigma = parent.scales();
        std::array<int, 3> axes = {0, 1, 2};
        std::stable_sort(axes.begin(), axes.end(), [&](int a, int b) { return sigma[a] > sigma[b]; });
        const double first_sign = (rng() & 1u) ? 1.0 : -1.0;
        auto &out_clones = clones[id];
        for (int c = 0; c < config.clones_per_split; ++c) {
            const int axis = axes[(c / 2) % 3];
            const double sign = (c % 2 == 0) ? first_sign : -first_sign;
            GaussianSplat child = parent;
            child.position += sign * 0.5 * sigma[axis] * R.col(axis);
            child.log_scales.array() += log_shrink;
            out_clones.push_back(child);
        }
    }

    out.model.sh_degree = model.sh_degree;
    out.model.splats.reserve(n + selected.size() * extra);
    for (std::size_t k = 0; k < n; ++k) {
        if (is_selected[k]) {
            out.model.splats.push_back(clones[k][0]);
            out.fresh.push_back(1);
        } else {
            out.model.splats.push_back(model.splats[k]);
            out.fresh.push_back(0);
        }
        out.parent.push_back(static_cast<int>(k));
    }
    for (int id : selected) {
        for (std::size_t c = 1; c < clones[id].size(); ++c) {
            out.model.splats.push_back(clones[id][c]);
            out.parent.push_back(id);
            out.fresh.push_back(1);
        }
    }
    rep.count_after = out.model.size();
    return out;
}

} // namespace microsplat
