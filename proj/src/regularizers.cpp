#include "maxdrop/regularizers.hpp"

#include <algorithm>
#include <limits>

namespace maxdrop {

const char* variant_name(DropVariant v) {
    switch (v) {
        case DropVariant::Dropout: return "dropout";
        case DropVariant::MaxDropout: return "maxdropout";
        case DropVariant::MaxDropoutV2: return "maxdropoutv2";
    }
    return "?";
}

namespace {

DropResult passthrough(const Tensor& t, DropMask::Kind kind) {
    DropResult r;
    r.output = t;
    r.mask.kind = kind;
    r.mask.values = kind == DropMask::Kind::Full
                        ? Tensor::full(t.shape, 1.0f)
                        : Tensor::full(Shape{t.shape.n, 1, t.shape.h, t.shape.w}, 1.0f);
    r.comparisons = 0;
    return r;
}

}  // namespace

DropResult dropout_forward(const Tensor& t, const DropConfig& cfg) {
    cfg.validate();
    if (cfg.mode == Mode::Infer) return passthrough(t, DropMask::Kind::Full);

    DropResult r;
    r.output = Tensor(t.shape);
    r.mask.kind = DropMask::Kind::Full;
    r.mask.values = Tensor(t.shape);
    const float rate = cfg.rate;
    const float scale = 1.0f / (1.0f - rate);
    const std::uint64_t seed = cfg.seed;
    const std::int64_t total = static_cast<std::int64_t>(t.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < total; ++i) {
        const float u = Rng::to_unit(Rng::hash(seed, static_cast<std::uint64_t>(i)));
        const float keep = u < rate ? 0.0f : 1.0f;
        r.mask.values.data[i] = keep;
        r.output.data[i] = t.data[i] * keep * scale;
    }
    r.comparisons = static_cast<std::uint64_t>(total);
    return r;
}

DropMask max_dropout_mask(const Tensor& t, const DropConfig& cfg) {
    cfg.validate();
    DropMask mask;
    mask.kind = DropMask::Kind::Full;
    if (cfg.mode == Mode::Infer) {
        mask.values = Tensor::full(t.shape, 1.0f);
        return mask;
    }
    const Tensor norm = minmax_normalize(t, cfg.scope);
    const float thr = cfg.threshold();
    mask.values = Tensor(t.shape);
    const std::int64_t total = static_cast<std::int64_t>(t.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < total; ++i)
        mask.values.data[i] = norm.data[i] > thr ? 0.0f : 1.0f;
    return mask;
}

DropResult max_dropout_forward(const Tensor& t, const DropConfig& cfg) {
    cfg.validate();
    if (cfg.mode == Mode::Infer) return passthrough(t, DropMask::Kind::Full);

    // Fused: one min-max pass per scope, then normalize+threshold+apply.
    DropResult r;
    r.output = Tensor(t.shape);
    r.mask.kind = DropMask::Kind::Full;
    r.mask.values = Tensor(t.shape);
    const float thr = cfg.threshold();
    const std::size_t span =
        cfg.scope == NormScope::PerSample ? t.size() / t.shape.n : t.size();
    const int scopes = cfg.scope == NormScope::PerSample ? t.shape.n : 1;
#pragma omp parallel for schedule(static)
    for (int s = 0; s < scopes; ++s) {
        const float* src = t.data.data() + s * span;
        float* msk = r.mask.values.data.data() + s * span;
        float* dst = r.output.data.data() + s * span;
        float lo = std::numeric_limits<float>::infinity();
        float hi = -std::numeric_limits<float>::infinity();
        for (std::size_t i = 0; i < span; ++i) {
            lo = std::min(lo, src[i]);
            hi = std::max(hi, src[i]);
        }
        if (lo == hi) {
            // degenerate scope: normalized map is all zeros, nothing drops
            std::fill(msk, msk + span, 1.0f);
            std::copy(src, src + span, dst);
            continue;
        }
        const float range = hi - lo;
        for (std::size_t i = 0; i < span; ++i) {
            const float norm = (src[i] - lo) / range;
            const float keep = norm > thr ? 0.0f : 1.0f;
            msk[i] = keep;
            dst[i] = src[i] * keep;
        }
    }
    r.comparisons = t.size();
    return r;
}

DropResult max_dropout_v2_forward(const Tensor& t, const DropConfig& cfg) {
    cfg.validate();
    if (cfg.mode == Mode::Infer) return passthrough(t, DropMask::Kind::Spatial);

    const Tensor depth_sum = sum_axis1(t);
    const Tensor norm = minmax_normalize(depth_sum, cfg.scope);
    const float thr = cfg.threshold();

    DropResult r;
    r.mask.kind = DropMask::Kind::Spatial;
    r.mask.values = Tensor(norm.shape);
    const std::int64_t spatial = static_cast<std::int64_t>(norm.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < spatial; ++i)
        r.mask.values.data[i] = norm.data[i] > thr ? 0.0f : 1.0f;
    r.output = broadcast_mul(t, r.mask.values);
    r.comparisons = static_cast<std::uint64_t>(spatial);
    return r;
}

DropResult drop_forward(const Tensor& t, const DropConfig& cfg) {
    switch (cfg.variant) {
        case DropVariant::Dropout: return dropout_forward(t, cfg);
        case DropVariant::MaxDropout: return max_dropout_forward(t, cfg);
        case DropVariant::MaxDropoutV2: return max_dropout_v2_forward(t, cfg);
    }
    throw std::invalid_argument("drop_forward: unknown variant");
}

Tensor drop_backward(const Tensor& upstream, const DropMask& mask, const DropConfig& cfg) {
    cfg.validate();
    if (cfg.mode == Mode::Infer) return upstream;
    Tensor grad = mask.kind == DropMask::Kind::Spatial
                      ? broadcast_mul(upstream, mask.values)
                      : mul(upstream, mask.values);
    if (cfg.variant == DropVariant::Dropout)
        grad = scalar_mul(grad, 1.0f / (1.0f - cfg.rate));
    return grad;
}

std::uint64_t comparison_count(DropVariant v, Shape s) {
    const std::uint64_t full = s.elems();
    return v == DropVariant::MaxDropoutV2 ? full / s.c : full;
}

}  // namespace maxdrop
