#include "microsplat/optimizer.hpp"

#include "microsplat/error.hpp"

#include <algorithm>
#include <cmath>

namespace microsplat {

void LearningRates::validate() const {
    for (double v : {position, position_final, sh_dc, sh_rest, opacity, scale, rotation}) {
        require(std::isfinite(v) && v >= 0.0, ErrorCode::InvalidParameter,
                "learning rates must be finite and >= 0");
    }
    require(position > 0.0 && position_final > 0.0, ErrorCode::InvalidParameter,
            "position learning rates must be > 0");
    require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0,
            ErrorCode::InvalidParameter, "Adam betas must be in [0, 1)");
    require(epsilon > 0.0, ErrorCode::InvalidParameter, "Adam epsilon must be > 0");
}

double LearningRates::for_group(ParamGroup g) const {
    switch (g) {
    case ParamGroup::Position: return position;
    case ParamGroup::Rotation: return rotation;
    case ParamGroup::Scale: return scale;
    case ParamGroup::Opacity: return opacity;
    case ParamGroup::ShDc: return sh_dc;
    case ParamGroup::ShRest: return sh_rest;
    }
    return 0.0;
}

double exponential_decay(double start, double end, double t) {
    t = std::clamp(t, 0.0, 1.0);
    return std::exp(std::log(start) * (1.0 - t) + std::log(end) * t);
}

void AdamOptimizer::reset(std::size_t splat_count) {
    GaussianSplat zero;
    zero.rotation.setZero();
    first_.assign(splat_count, zero);
    second_.assign(splat_count, zero);
    steps_.assign(splat_count, 0);
}

void AdamOptimizer::step(SplatModel &model, const std::vector<GaussianSplat> &grads,
                         double position_lr) {
    require(model.size() == first_.size() && grads.size() == model.size(),
            ErrorCode::ShapeMismatch, "optimizer state does not match the model");
    const double b1 = rates_.beta1, b2 = rates_.beta2;
    std::array<double, 6> group_lr{};
    for (int g = 0; g < 6; ++g) group_lr[g] = rates_.for_group(static_cast<ParamGroup>(g));
    group_lr[static_cast<int>(ParamGroup::Position)] = position_lr;

    for (std::size_t s = 0; s < model.size(); ++s) {
        GaussianSplat &p = model.splats[s];
        GaussianSplat &m = first_[s];
        GaussianSplat &v = second_[s];
        const std::int64_t t = ++steps_[s];
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
        for (int i = 0; i < kParamsPerSplat; ++i) {
            if (!param_active(i, model.sh_degree)) continue;
            const double g = param_value(grads[s], i);
            double &mi = param_ref(m, i);
            double &vi = param_ref(v, i);
            mi = b1 * mi + (1.0 - b1) * g;
            vi = b2 * vi + (1.0 - b2) * g * g;
            const double lr = group_lr[static_cast<int>(param_group(i))];
            param_ref(p, i) -= lr * (mi / c1) / (std::sqrt(vi / c2) + rates_.epsilon);
        }
        const double n = p.rotation.norm();
        if (n > 0.0) {
            p.rotation /= n;
        } else {
            p.rotation = Vec4(1.0, 0.0, 0.0, 0.0);
        }
    }
}

void AdamOptimizer::remap(const std::vector<int> &source, const std::vector<std::uint8_t> &fresh) {
    require(fresh.empty() || fresh.size() == source.size(), ErrorCode::ShapeMismatch,
            "remap: fresh flags do not match sources");
    GaussianSplat zero;
    zero.rotation.setZero();
    std::vector<GaussianSplat> m, v;
    std::vector<std::int64_t> steps;
    m.reserve(source.size());
    v.reserve(source.size());
    steps.reserve(source.size());
    for (std::size_t i = 0; i < source.size(); ++i) {
        const int src = source[i];
        const bool is_fresh = src < 0 || (!fresh.empty() && fresh[i]);
        if (is_fresh) {
            m.push_back(zero);
            v.push_back(zero);
            steps.push_back(0);
        } else {
            require(static_cast<std::size_t>(src) < first_.size(), ErrorCode::ShapeMismatch,
                    "remap: source id out of range");
            m.push_back(first_[src]);
            v.push_back(second_[src]);
            steps.push_back(steps_[src]);
        }
    }
    first_ = std::move(m);
    second_ = std::move(v);
    steps_ = std::move(steps);
}

} // namespace microsplat
