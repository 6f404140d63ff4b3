#pragma once

#include <vector>

#include "maxdrop/tensor.hpp"

namespace maxdrop {

/// Images are tensors with n == 1, c in {1,3}, pixel values in [0,1].

struct EraseParams {
    float area_lo = 0.02f;
    float area_hi = 0.33f;
    float aspect_lo = 0.3f;
    float aspect_hi = 3.3f;
};

/// Zeroes a size x size square centered at a uniformly random pixel,
/// clipped to the image bounds, across all channels.
Tensor cutout(const Tensor& img, int size, Rng& rng);

/// Overwrites one random rectangle (area fraction and aspect ratio drawn
/// from `p`) with iid uniform [0,1) values. Gives up after 10 failed
/// placements and returns the input unchanged.
Tensor random_erasing(const Tensor& img, const EraseParams& p, Rng& rng);

Tensor random_crop(const Tensor& img, int out_h, int out_w, Rng& rng);
Tensor hflip(const Tensor& img, float prob, Rng& rng);
Tensor resize_nearest(const Tensor& img, int out_h, int out_w);

struct AugmentStep {
    enum class Kind { Crop, HFlip, Cutout, RandomErasing, Resize };
    Kind kind = Kind::Crop;
    int h = 0, w = 0;       // Crop / Resize
    int size = 0;           // Cutout
    float prob = 0.5f;      // HFlip
    EraseParams erase;      // RandomErasing

    static AugmentStep crop(int out_h, int out_w);
    static AugmentStep hflip(float prob);
    static AugmentStep cutout(int size);
    static AugmentStep random_erasing(EraseParams p);
    static AugmentStep resize(int out_h, int out_w);
};

/// Ordered augmentation pipeline; stochastic choices come from the caller's
/// Rng so a fixed seed replays the same plan.
struct AugmentPlan {
    std::vector<AugmentStep> steps;

    Tensor apply(const Tensor& img, Rng& rng) const;
};

}  // namespace maxdrop
