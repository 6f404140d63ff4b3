#pragma once

#include <span>
#include <vector>

#include "maxdrop/tensor.hpp"

namespace maxdrop::nn {

/// 3x3 convolution, stride 1, zero padding 1. Caches its input for backward.
struct Conv2d {
    int in_ch = 0, out_ch = 0;
    static constexpr int ksize = 3;
    static constexpr int pad = 1;
    std::vector<float> w;   // [oc][ic][3][3]
    std::vector<float> b;   // [oc]
    std::vector<float> gw;
    std::vector<float> gb;
    Tensor x_cache;

    Conv2d(int in_channels, int out_channels, Rng& rng);
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gy);
};

struct ReluLayer {
    Tensor x_cache;
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gy) const;
};

/// 2x2 max pooling, stride 2. Remembers argmax positions.
struct MaxPool2 {
    Shape in_shape;
    std::vector<std::uint32_t> argmax;
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gy) const;
};

/// Fully connected layer over the flattened (c*h*w) features.
struct Dense {
    int in_dim = 0, out_dim = 0;
    std::vector<float> w;  // [out][in]
    std::vector<float> b;
    std::vector<float> gw;
    std::vector<float> gb;
    Tensor x_cache;

    Dense(int in_features, int out_features, Rng& rng);
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gy);
};

/// Softmax + cross-entropy, mean over the batch. Loss is accumulated in
/// double; `dlogits`, when non-null, receives d(loss)/d(logits).
float softmax_xent(const Tensor& logits, const std::vector<int>& labels,
                   Tensor* dlogits);

/// argmax class per row of a (b,k,1,1) logits tensor.
std::vector<int> predict(const Tensor& logits);

}  // namespace maxdrop::nn
