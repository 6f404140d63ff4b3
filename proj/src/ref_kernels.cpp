#include "maxdrop/ref_kernels.hpp"

namespace maxdrop::ref {

namespace {

// Serial min-max normalize, written out longhand on purpose.
Tensor normalize(const Tensor& t, NormScope scope) {
    Tensor out(t.shape);
    const int scopes = scope == NormScope::PerSample ? t.shape.n : 1;
    const std::size_t span = scope == NormScope::PerSample ? t.size() / t.shape.n : t.size();
    for (int s = 0; s < scopes; ++s) {
        float lo = t.data[s * span];
        float hi = t.data[s * span];
        for (std::size_t i = 0; i < span; ++i) {
            const float v = t.data[s * span + i];
            if (v < lo) lo = v;
            if (v > hi) hi = v;
        }
        for (std::size_t i = 0; i < span; ++i) {
            const float v = t.data[s * span + i];
            out.data[s * span + i] = lo == hi ? 0.0f : (v - lo) / (hi - lo);
        }
    }
    return out;
}

}  // namespace

RefResult max_dropout_forward(const Tensor& t, float rate, NormScope scope) {
    const Tensor norm = normalize(t, scope);
    const float thr = 1.0f - rate;
    RefResult r;
    r.mask_full = Tensor(t.shape);
    r.output = Tensor(t.shape);
    for (std::size_t i = 0; i < t.size(); ++i) {
        ++r.comparisons;
        r.mask_full.data[i] = norm.data[i] > thr ? 0.0f : 1.0f;
        r.output.data[i] = t.data[i] * r.mask_full.data[i];
    }
    return r;
}

RefResult max_dropout_v2_forward(const Tensor& t, float rate, NormScope scope) {
    const int n = t.shape.n, c = t.shape.c, h = t.shape.h, w = t.shape.w;
    Tensor depth_sum(Shape{n, 1, h, w});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < c; ++j)
            for (int k = 0; k < h; ++k)
                for (int l = 0; l < w; ++l)
                    depth_sum.at(i, 0, k, l) += t.at(i, j, k, l);

    const Tensor norm = normalize(depth_sum, scope);
    const float thr = 1.0f - rate;
    RefResult r;
    Tensor spatial(norm.shape);
    for (std::size_t i = 0; i < norm.size(); ++i) {
        ++r.comparisons;
        spatial.data[i] = norm.data[i] > thr ? 0.0f : 1.0f;
    }

    // explicit c-fold repetition of the spatial mask
    r.mask_full = Tensor(t.shape);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < c; ++j)
            for (int k = 0; k < h; ++k)
                for (int l = 0; l < w; ++l)
                    r.mask_full.at(i, j, k, l) = spatial.at(i, 0, k, l);

    r.output = Tensor(t.shape);
    for (std::size_t i = 0; i < t.size(); ++i)
        r.output.data[i] = t.data[i] * r.mask_full.data[i];
    return r;
}

}  // namespace maxdrop::ref
