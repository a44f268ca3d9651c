#include "microsplat/refine.hpp"

#include "microsplat/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>
#include <unordered_map>

namespace microsplat {

void RefineConfig::validate() const {
    require(prune_percent >= 0.0 && prune_percent < 100.0, ErrorCode::InvalidParameter,
            "prune percent must be in [0, 100)");
    require(std::isfinite(tau_col) && std::isfinite(tau_xyz) && std::isfinite(tau_scale),
            ErrorCode::InvalidParameter, "merge thresholds must be finite");
    require(tau_col >= 0.0, ErrorCode::InvalidParameter, "tau_col must be >= 0");
    require(refine_interval > 0, ErrorCode::InvalidParameter, "refine_interval must be > 0");
    require(xyz_nn_factor >= 0.0 && scale_norm_factor >= 0.0, ErrorCode::InvalidParameter,
            "threshold factors must be >= 0");
}

std::vector<double> importance_scores(const SplatModel &model) {
    std::vector<double> s;
    s.reserve(model.size());
    for (const auto &g : model.splats) {
        s.push_back(g.opacity() * g.log_scales.array().exp().maxCoeff());
    }
    return s;
}

namespace {

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct CellKey {
    std::int64_t x, y, z;
    bool operator==(const CellKey &) const = default;
};

struct CellHash {
    std::size_t operator()(const CellKey &k) const noexcept {
        std::uint64_t h = static_cast<std::uint64_t>(k.x) * 0x9E3779B97F4A7C15ull;
        h ^= static_cast<std::uint64_t>(k.y) * 0xC2B2AE3D27D4EB4Full + (h << 6) + (h >> 2);
        h ^= static_cast<std::uint64_t>(k.z) * 0x165667B19E3779F9ull + (h << 6) + (h >> 2);
        return static_cast<std::size_t>(h);
    }
};

/// Uniform hash grid over splat positions.
class SpatialHash {
public:
    SpatialHash(const SplatModel &model, double cell) : model_(model), cell_(cell) {
        for (std::size_t i = 0; i < model.size(); ++i) {
            cells_[key(model.splats[i].position)].push_back(static_cast<int>(i));
        }
    }

    CellKey key(const Vec3 &p) const {
        return {static_cast<std::int64_t>(std::floor(p.x() / cell_)),
                static_cast<std::int64_t>(std::floor(p.y() / cell_)),
                static_cast<std::int64_t>(std::floor(p.z() / cell_))};
    }

    template <class Fn>
    void for_each_in(const CellKey &k, Fn &&fn) const {
        const auto it = cells_.find(k);
        if (it == cells_.end()) return;
        for (int id : it->second) fn(id);
    }

private:
    const SplatModel &model_;
    double cell_;
    std::unordered_map<CellKey, std::vector<int>, CellHash> cells_;
};

} // namespace

ScoreSummary summarize(const std::vector<double> &values) {
    ScoreSummary s;
    if (values.empty()) return s;
    s.min = *std::min_element(values.begin(), values.end());
    s.max = *std::max_element(values.begin(), values.end());
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    s.median = median_of(values);
    return s;
}

PruneResult prune(const SplatModel &model, double prune_percent) {
    require(prune_percent >= 0.0 && prune_percent < 100.0, ErrorCode::InvalidParameter,
            "prune percent must be in [0, 100)");
    const std::size_t n = model.size();
    const auto count = static_cast<std::size_t>(std::floor(prune_percent * static_cast<double>(n) / 100.0));
    const std::vector<double> scores = importance_scores(model);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return scores[a] < scores[b]; });

    PruneResult out;
    out.pruned_ids.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
    std::sort(out.pruned_ids.begin(), out.pruned_ids.end());
    std::vector<std::uint8_t> drop(n, 0);
    for (int id : out.pruned_ids) drop[id] = 1;
    out.model.sh_degree = model.sh_degree;
    for (std::size_t i = 0; i < n; ++i) {
        if (drop[i]) continue;
        out.model.splats.push_back(model.splats[i]);
        out.kept_ids.push_back(static_cast<int>(i));
    }
    return out;
}

bool merge_compatible(const GaussianSplat &a, const GaussianSplat &b, double tau_xyz,
                      double tau_col, double tau_scale) {
    return (a.position - b.position).norm() <= tau_xyz && (a.sh[0] - b.sh[0]).norm() <= tau_col &&
           (a.scales() - b.scales()).norm() <= tau_scale;
}

GaussianSplat average_splats(const GaussianSplat &a, const GaussianSplat &b) {
    GaussianSplat m;
    m.position = 0.5 * (a.position + b.position);
    m.log_scales = 0.5 * (a.log_scales + b.log_scales);
    m.opacity_logit = 0.5 * (a.opacity_logit + b.opacity_logit);
    for (std::size_t k = 0; k < m.sh.size(); ++k) m.sh[k] = 0.5 * (a.sh[k] + b.sh[k]);
    const Vec4 qa = a.rotation.normalized();
    Vec4 qb = b.rotation.normalized();
    if (qa.dot(qb) < 0.0) qb = -qb;
    const Vec4 q = qa + qb;
    m.rotation = q.norm() > 0.0 ? Vec4(q.normalized()) : qa;
    return m;
}

MergeResult merge(const SplatModel &model, double tau_xyz, double tau_col, double tau_scale) {
    require(tau_xyz >= 0.0 && tau_col >= 0.0 && tau_scale >= 0.0, ErrorCode::InvalidParameter,
            "merge thresholds must be >= 0");
    const std::size_t n = model.size();
    MergeResult out;
    out.model.sh_degree = model.sh_degree;

    struct Candidate {
        double dist;
        int i, j;
    };
    std::vector<Candidate> candidates;
    if (tau_xyz > 0.0 && n > 1) {
        const SpatialHash grid(model, tau_xyz);
        for (std::size_t i = 0; i < n; ++i) {
            const auto &a = model.splats[i];
            const CellKey c = grid.key(a.position);
            for (int dz = -1; dz <= 1; ++dz)
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        grid.for_each_in({c.x + dx, c.y + dy, c.z + dz}, [&](int j) {
                            if (j <= static_cast<int>(i)) return;
                            const auto &b = model.splats[j];
                            if (merge_compatible(a, b, tau_xyz, tau_col, tau_scale)) {
                                candidates.push_back(
                                    {(a.position - b.position).norm(), static_cast<int>(i), j});
                            }
                        });
                    }
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate &x, const Candidate &y) {
        return std::tie(x.dist, x.i, x.j) < std::tie(y.dist, y.i, y.j);
    });

    std::vector<int> partner(n, -1);
    for (const auto &c : candidates) {
        if (partner[c.i] >= 0 || partner[c.j] >= 0) continue;
        partner[c.i] = c.j;
        partner[c.j] = c.i;
        out.pairs.emplace_back(c.i, c.j);
    }

    for (std::size_t i = 0; i < n; ++i) {
        const int p = partner[i];
        if (p < 0) {
            out.model.splats.push_back(model.splats[i]);
            out.source_ids.push_back(static_cast<int>(i));
            out.merged.push_back(0);
        } else if (p > static_cast<int>(i)) {
            out.model.splats.push_back(average_splats(model.splats[i], model.splats[p]));
            out.source_ids.push_back(static_cast<int>(i));
            out.merged.push_back(1);
        }
    }
    return out;
}

std::vector<double> nearest_neighbor_distances(const SplatModel &model) {
    const std::size_t n = model.size();
    std::vector<double> out(n, 0.0);
    if (n < 2) return out;

    Vec3 lo = model.splats[0].position, hi = lo;
    for (const auto &s : model.splats) {
        lo = lo.cwiseMin(s.position);
        hi = hi.cwiseMax(s.position);
    }
    const double extent = std::max((hi - lo).maxCoeff(), 1e-12);
    const double cell = extent / std::max(1.0, std::cbrt(static_cast<double>(n)));
    const SpatialHash grid(model, cell);
    const std::int64_t max_ring =
        static_cast<std::int64_t>(std::ceil(extent / cell)) + 1;

    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 &p = model.splats[i].position;
        const CellKey c = grid.key(p);
        double best = std::numeric_limits<double>::infinity();
        for (std::int64_t r = 0; r <= max_ring; ++r) {
            for (std::int64_t dz = -r; dz <= r; ++dz)
                for (std::int64_t dy = -r; dy <= r; ++dy)
                    for (std::int64_t dx = -r; dx <= r; ++dx) {
                        if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != r) continue;
                        grid.for_each_in({c.x + dx, c.y + dy, c.z + dz}, [&](int j) {
                            if (j == static_cast<int>(i)) return;
                            best = std::min(best, (model.splats[j].position - p).norm());
                        });
                    }
            if (best <= static_cast<double>(r) * cell) break;
        }
        out[i] = best;
    }
    return out;
}

MergeThresholds resolve_merge_thresholds(const SplatModel &model, const RefineConfig &config) {
    MergeThresholds t;
    t.col = config.tau_col;
    t.xyz = config.tau_xyz;
    t.scale = config.tau_scale;
    if (t.xyz < 0.0) {
        t.xyz = config.xyz_nn_factor * median_of(nearest_neighbor_distances(model));
    }
    if (t.scale < 0.0) {
        std::vector<double> norms;
        norms.reserve(model.size());
        for (const auto &s : model.splats) norms.push_back(s.scales().norm());
        t.scale = config.scale_norm_factor * median_of(norms);
    }
    return t;
}

RefineResult refine_step(const SplatModel &model, double prune_percent,
                         const MergeThresholds &thresholds) {
    RefineResult out;
    out.report.count_before = model.size();
    out.report.scores = summarize(importance_scores(model));
    PruneResult pr = prune(model, prune_percent);
    MergeResult mr = merge(pr.model, thresholds.xyz, thresholds.col, thresholds.scale);
    out.report.pruned = pr.pruned_ids.size();
    out.report.merged_pairs = mr.pairs.size();
    out.model = std::move(mr.model);
    out.source_ids.reserve(mr.source_ids.size());
    for (int id : mr.source_ids) out.source_ids.push_back(pr.kept_ids[id]);
    out.merged = std::move(mr.merged);
    out.report.count_after = out.model.size();
    return out;
}

} // namespace microsplat
