#pragma once

#include "maxdrop/regularizers.hpp"

namespace maxdrop::ref {

/// Serial reference kernels. Deliberately naive: single-threaded, every
/// intermediate materialized, comparisons counted one by one as they are
/// performed. Used as the oracle in tests and as the serial side of the
/// benchmark comparison.
struct RefResult {
    Tensor output;
    Tensor mask_full;  // full (n,c,h,w) mask, even for the spatial variant
    std::uint64_t comparisons = 0;
};

/// Normalize the array, threshold each element, multiply.
RefResult max_dropout_forward(const Tensor& t, float rate, NormScope scope);

/// Sum the depth axis, normalize, threshold the spatial map, then
/// materialize c explicit repetitions of the mask and multiply elementwise.
RefResult max_dropout_v2_forward(const Tensor& t, float rate, NormScope scope);

}  // namespace maxdrop::ref
