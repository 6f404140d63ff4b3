#pragma once

#include <cstdint>

#include "maxdrop/tensor.hpp"

namespace maxdrop {

enum class DropVariant { Dropout, MaxDropout, MaxDropoutV2 };
enum class Mode { Train, Infer };

const char* variant_name(DropVariant v);

struct DropConfig {
    DropVariant variant = DropVariant::MaxDropoutV2;
    float rate = 0.5f;  // drop rate p in [0,1); value threshold is 1 - p
    Mode mode = Mode::Train;
    NormScope scope = NormScope::PerSample;
    std::uint64_t seed = 0;  // used by the Dropout variant only

    void validate() const {
        if (!(rate >= 0.0f && rate < 1.0f))
            throw std::invalid_argument("DropConfig: rate must lie in [0,1)");
    }
    float threshold() const { return 1.0f - rate; }
};

/// Binary keep/drop mask. Full masks match the input shape; Spatial masks
/// are (n,1,h,w) and apply identically to every channel.
struct DropMask {
    enum class Kind { Full, Spatial };
    Kind kind = Kind::Full;
    Tensor values;  // every element exactly 0 or 1
};

struct DropResult {
    Tensor output;
    DropMask mask;
    std::uint64_t comparisons = 0;  // threshold comparisons performed
};

/// Standard Dropout: each element zeroed with probability rate, survivors
/// scaled by 1/(1-rate). Infer mode passes through.
DropResult dropout_forward(const Tensor& t, const DropConfig& cfg);

/// Full-shape mask: drop where the normalized activation exceeds 1 - rate.
DropMask max_dropout_mask(const Tensor& t, const DropConfig& cfg);
DropResult max_dropout_forward(const Tensor& t, const DropConfig& cfg);

/// Spatial variant: threshold the normalized channel-sum map, one
/// comparison per (i,k,l) instead of per element.
DropResult max_dropout_v2_forward(const Tensor& t, const DropConfig& cfg);

/// Dispatch on cfg.variant.
DropResult drop_forward(const Tensor& t, const DropConfig& cfg);

/// Gradient through the layer with the mask held constant.
Tensor drop_backward(const Tensor& upstream, const DropMask& mask, const DropConfig& cfg);

/// Analytic comparison count: n*c*h*w for full-shape variants, n*h*w for V2.
std::uint64_t comparison_count(DropVariant v, Shape s);

}  // namespace maxdrop
