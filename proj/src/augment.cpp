#include "maxdrop/augment.hpp"

#include <algorithm>
#include <cmath>

namespace maxdrop {

namespace {

int uniform_int(Rng& rng, int bound) {  // [0, bound)
    return static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(bound));
}

float uniform_in(Rng& rng, float lo, float hi) {
    return lo + rng.next_float() * (hi - lo);
}

}  // namespace

Tensor cutout(const Tensor& img, int size, Rng& rng) {
    if (size < 1) throw std::invalid_argument("cutout: size must be >= 1");
    const int h = img.shape.h, w = img.shape.w, c = img.shape.c;
    const int cy = uniform_int(rng, h);
    const int cx = uniform_int(rng, w);
    const int r0 = std::max(0, cy - size / 2);
    const int r1 = std::min(h, cy - size / 2 + size);
    const int c0 = std::max(0, cx - size / 2);
    const int c1 = std::min(w, cx - size / 2 + size);
    Tensor out = img;
    for (int j = 0; j < c; ++j)
        for (int k = r0; k < r1; ++k)
            for (int l = c0; l < c1; ++l) out.at(0, j, k, l) = 0.0f;
    return out;
}

Tensor random_erasing(const Tensor& img, const EraseParams& p, Rng& rng) {
    if (!(0.0f < p.area_lo && p.area_lo <= p.area_hi && p.area_hi < 1.0f))
        throw std::invalid_argument("random_erasing: need 0 < area_lo <= area_hi < 1");
    const int h = img.shape.h, w = img.shape.w, c = img.shape.c;
    for (int attempt = 0; attempt < 10; ++attempt) {
        const float frac = uniform_in(rng, p.area_lo, p.area_hi);
        const float aspect = uniform_in(rng, p.aspect_lo, p.aspect_hi);
        const float area = frac * static_cast<float>(h) * static_cast<float>(w);
        const int rh = static_cast<int>(std::lround(std::sqrt(area * aspect)));
        const int rw = static_cast<int>(std::lround(std::sqrt(area / aspect)));
        if (rh < 1 || rw < 1 || rh > h || rw > w) continue;
        const int top = uniform_int(rng, h - rh + 1);
        const int left = uniform_int(rng, w - rw + 1);
        Tensor out = img;
        for (int j = 0; j < c; ++j)
            for (int k = top; k < top + rh; ++k)
                for (int l = left; l < left + rw; ++l)
                    out.at(0, j, k, l) = rng.next_float();
        return out;
    }
    return img;
}

Tensor random_crop(const Tensor& img, int out_h, int out_w, Rng& rng) {
    const int h = img.shape.h, w = img.shape.w, c = img.shape.c;
    if (out_h > h || out_w > w)
        throw std::invalid_argument("random_crop: output exceeds input dims");
    const int top = uniform_int(rng, h - out_h + 1);
    const int left = uniform_int(rng, w - out_w + 1);
    Tensor out(Shape{1, c, out_h, out_w});
    for (int j = 0; j < c; ++j)
        for (int k = 0; k < out_h; ++k)
            for (int l = 0; l < out_w; ++l)
                out.at(0, j, k, l) = img.at(0, j, top + k, left + l);
    return out;
}

Tensor hflip(const Tensor& img, float prob, Rng& rng) {
    if (rng.next_float() >= prob) return img;
    const int h = img.shape.h, w = img.shape.w, c = img.shape.c;
    Tensor out(img.shape);
    for (int j = 0; j < c; ++j)
        for (int k = 0; k < h; ++k)
            for (int l = 0; l < w; ++l)
                out.at(0, j, k, l) = img.at(0, j, k, w - 1 - l);
    return out;
}

Tensor resize_nearest(const Tensor& img, int out_h, int out_w) {
    if (out_h == img.shape.h && out_w == img.shape.w) return img;
    const int c = img.shape.c;
    Tensor out(Shape{1, c, out_h, out_w});
    for (int j = 0; j < c; ++j)
        for (int k = 0; k < out_h; ++k) {
            const int sk = k * img.shape.h / out_h;
            for (int l = 0; l < out_w; ++l)
                out.at(0, j, k, l) = img.at(0, j, sk, l * img.shape.w / out_w);
        }
    return out;
}

AugmentStep AugmentStep::crop(int out_h, int out_w) {
    AugmentStep s;
    s.kind = Kind::Crop;
    s.h = out_h;
    s.w = out_w;
    return s;
}
AugmentStep AugmentStep::hflip(float prob) {
    AugmentStep s;
    s.kind = Kind::HFlip;
    s.prob = prob;
    return s;
}
AugmentStep AugmentStep::cutout(int size) {
    AugmentStep s;
    s.kind = Kind::Cutout;
    s.size = size;
    return s;
}
AugmentStep AugmentStep::random_erasing(EraseParams p) {
    AugmentStep s;
    s.kind = Kind::RandomErasing;
    s.erase = p;
    return s;
}
AugmentStep AugmentStep::resize(int out_h, int out_w) {
    AugmentStep s;
    s.kind = Kind::Resize;
    s.h = out_h;
    s.w = out_w;
    return s;
}

Tensor AugmentPlan::apply(const Tensor& img, Rng& rng) const {
    Tensor out = img;
    for (const auto& step : steps) {
        switch (step.kind) {
            case AugmentStep::Kind::Crop: out = random_crop(out, step.h, step.w, rng); break;
            case AugmentStep::Kind::HFlip: out = hflip(out, step.prob, rng); break;
            case AugmentStep::Kind::Cutout: out = cutout(out, step.size, rng); break;
            case AugmentStep::Kind::RandomErasing:
                out = random_erasing(out, step.erase, rng);
                break;
            case AugmentStep::Kind::Resize: out = resize_nearest(out, step.h, step.w); break;
        }
    }
    return out;
}

}  // namespace maxdrop
