#include "maxdrop/nn.hpp"

#include <algorithm>
#include <cmath>

namespace maxdrop::nn {

namespace {

// He-uniform fan-in init
void fill_he_uniform(std::vector<float>& w, int fan_in, Rng& rng) {
    const float limit = std::sqrt(6.0f / static_cast<float>(fan_in));
    for (auto& v : w) v = (rng.next_float() * 2.0f - 1.0f) * limit;
}

}  // namespace

Conv2d::Conv2d(int in_channels, int out_channels, Rng& rng)
    : in_ch(in_channels),
      out_ch(out_channels),
      w(static_cast<std::size_t>(out_channels) * in_channels * ksize * ksize),
      b(out_channels, 0.0f),
      gw(w.size(), 0.0f),
      gb(out_channels, 0.0f) {
    fill_he_uniform(w, in_ch * ksize * ksize, rng);
}

Tensor Conv2d::forward(const Tensor& x) {
    if (x.shape.c != in_ch)
        throw std::invalid_argument("Conv2d: expected " + std::to_string(in_ch) +
                                    " channels, got " + x.shape.str());
    x_cache = x;
    const int n = x.shape.n, h = x.shape.h, wd = x.shape.w;
    Tensor y(Shape{n, out_ch, h, wd});
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        for (int oc = 0; oc < out_ch; ++oc) {
            float* yp = y.data.data() + y.offset(i, oc, 0, 0);
            const float bias = b[oc];
            for (int p = 0; p < h * wd; ++p) yp[p] = bias;
            for (int ic = 0; ic < in_ch; ++ic) {
                const float* xp = x.data.data() + x.offset(i, ic, 0, 0);
                const float* wp = w.data() + ((static_cast<std::size_t>(oc) * in_ch + ic) * ksize * ksize);
                for (int kr = 0; kr < ksize; ++kr) {
                    for (int kc = 0; kc < ksize; ++kc) {
                        const float wv = wp[kr * ksize + kc];
                        const int dr = kr - pad, dc = kc - pad;
                        const int r0 = std::max(0, -dr), r1 = std::min(h, h - dr);
                        const int c0 = std::max(0, -dc), c1 = std::min(wd, wd - dc);
                        for (int r = r0; r < r1; ++r) {
                            float* yrow = yp + r * wd;
                            const float* xrow = xp + (r + dr) * wd + dc;
                            for (int cidx = c0; cidx < c1; ++cidx)
                                yrow[cidx] += wv * xrow[cidx];
                        }
                    }
                }
            }
        }
    }
    return y;
}

Tensor Conv2d::backward(const Tensor& gy) {
    const Tensor& x = x_cache;
    const int n = x.shape.n, h = x.shape.h, wd = x.shape.w;
    Tensor gx(x.shape);
    std::fill(gw.begin(), gw.end(), 0.0f);
    std::fill(gb.begin(), gb.end(), 0.0f);
    for (int i = 0; i < n; ++i) {
        for (int oc = 0; oc < out_ch; ++oc) {
            const float* gyp = gy.data.data() + gy.offset(i, oc, 0, 0);
            double bacc = 0.0;
            for (int p = 0; p < h * wd; ++p) bacc += gyp[p];
            gb[oc] += static_cast<float>(bacc);
            for (int ic = 0; ic < in_ch; ++ic) {
                const float* xp = x.data.data() + x.offset(i, ic, 0, 0);
                float* gxp = gx.data.data() + gx.offset(i, ic, 0, 0);
                float* gwp = gw.data() + ((static_cast<std::size_t>(oc) * in_ch + ic) * ksize * ksize);
                const float* wp = w.data() + ((static_cast<std::size_t>(oc) * in_ch + ic) * ksize * ksize);
                for (int kr = 0; kr < ksize; ++kr) {
                    for (int kc = 0; kc < ksize; ++kc) {
                        const int dr = kr - pad, dc = kc - pad;
                        const int r0 = std::max(0, -dr), r1 = std::min(h, h - dr);
                        const int c0 = std::max(0, -dc), c1 = std::min(wd, wd - dc);
                        const float wv = wp[kr * ksize + kc];
                        float wacc = 0.0f;
                        for (int r = r0; r < r1; ++r) {
                            const float* gyrow = gyp + r * wd;
                            const float* xrow = xp + (r + dr) * wd + dc;
                            float* gxrow = gxp + (r + dr) * wd + dc;
                            for (int cidx = c0; cidx < c1; ++cidx) {
                                wacc += gyrow[cidx] * xrow[cidx];
                                gxrow[cidx] += wv * gyrow[cidx];
                            }
                        }
                        gwp[kr * ksize + kc] += wacc;
                    }
                }
            }
        }
    }
    return gx;
}

Tensor ReluLayer::forward(const Tensor& x) {
    x_cache = x;
    return relu(x);
}

Tensor ReluLayer::backward(const Tensor& gy) const {
    Tensor gx(gy.shape);
    for (std::size_t i = 0; i < gy.size(); ++i)
        gx.data[i] = x_cache.data[i] > 0.0f ? gy.data[i] : 0.0f;
    return gx;
}

Tensor MaxPool2::forward(const Tensor& x) {
    in_shape = x.shape;
    const int n = x.shape.n, c = x.shape.c, h = x.shape.h, wd = x.shape.w;
    const int oh = h / 2, ow = wd / 2;
    Tensor y(Shape{n, c, oh, ow});
    argmax.assign(y.size(), 0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < c; ++j)
            for (int k = 0; k < oh; ++k)
                for (int l = 0; l < ow; ++l) {
                    std::uint32_t best = static_cast<std::uint32_t>(x.offset(i, j, 2 * k, 2 * l));
                    float bv = x.data[best];
                    for (int dr = 0; dr < 2; ++dr)
                        for (int dc = 0; dc < 2; ++dc) {
                            const auto idx = static_cast<std::uint32_t>(
                                x.offset(i, j, 2 * k + dr, 2 * l + dc));
                            if (x.data[idx] > bv) {
                                bv = x.data[idx];
                                best = idx;
                            }
                        }
                    const std::size_t o = y.offset(i, j, k, l);
                    y.data[o] = bv;
                    argmax[o] = best;
                }
    return y;
}

Tensor MaxPool2::backward(const Tensor& gy) const {
    Tensor gx(in_shape);
    for (std::size_t o = 0; o < gy.size(); ++o) gx.data[argmax[o]] += gy.data[o];
    return gx;
}

Dense::Dense(int in_features, int out_features, Rng& rng)
    : in_dim(in_features),
      out_dim(out_features),
      w(static_cast<std::size_t>(out_features) * in_features),
      b(out_features, 0.0f),
      gw(w.size(), 0.0f),
      gb(out_features, 0.0f) {
    fill_he_uniform(w, in_dim, rng);
}

Tensor Dense::forward(const Tensor& x) {
    const int n = x.shape.n;
    const int feat = static_cast<int>(x.size()) / n;
    if (feat != in_dim)
        throw std::invalid_argument("Dense: expected " + std::to_string(in_dim) +
                                    " features, got " + std::to_string(feat));
    x_cache = x;
    Tensor y(Shape{n, out_dim, 1, 1});
    for (int i = 0; i < n; ++i) {
        const float* xp = x.data.data() + static_cast<std::size_t>(i) * in_dim;
        for (int o = 0; o < out_dim; ++o) {
            const float* wp = w.data() + static_cast<std::size_t>(o) * in_dim;
            float acc = b[o];
            for (int f = 0; f < in_dim; ++f) acc += wp[f] * xp[f];
            y.data[static_cast<std::size_t>(i) * out_dim + o] = acc;
        }
    }
    return y;
}

Tensor Dense::backward(const Tensor& gy) {
    const int n = gy.shape.n;
    Tensor gx(x_cache.shape);
    std::fill(gw.begin(), gw.end(), 0.0f);
    std::fill(gb.begin(), gb.end(), 0.0f);
    for (int i = 0; i < n; ++i) {
        const float* xp = x_cache.data.data() + static_cast<std::size_t>(i) * in_dim;
        float* gxp = gx.data.data() + static_cast<std::size_t>(i) * in_dim;
        for (int o = 0; o < out_dim; ++o) {
            const float g = gy.data[static_cast<std::size_t>(i) * out_dim + o];
            gb[o] += g;
            const float* wp = w.data() + static_cast<std::size_t>(o) * in_dim;
            float* gwp = gw.data() + static_cast<std::size_t>(o) * in_dim;
            for (int f = 0; f < in_dim; ++f) {
                gwp[f] += g * xp[f];
                gxp[f] += g * wp[f];
            }
        }
    }
    return gx;
}

float softmax_xent(const Tensor& logits, const std::vector<int>& labels, Tensor* dlogits) {
    const int n = logits.shape.n;
    const int k = static_cast<int>(logits.size()) / n;
    if (static_cast<int>(labels.size()) != n)
        throw std::invalid_argument("softmax_xent: batch/label count mismatch");
    if (dlogits) *dlogits = Tensor(logits.shape);
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
        const float* lp = logits.data.data() + static_cast<std::size_t>(i) * k;
        float mx = lp[0];
        for (int j = 1; j < k; ++j) mx = std::max(mx, lp[j]);
        double denom = 0.0;
        for (int j = 0; j < k; ++j) denom += std::exp(static_cast<double>(lp[j] - mx));
        const int y = labels[i];
        loss += -(static_cast<double>(lp[y] - mx) - std::log(denom));
        if (dlogits) {
            float* dp = dlogits->data.data() + static_cast<std::size_t>(i) * k;
            for (int j = 0; j < k; ++j) {
                const double p = std::exp(static_cast<double>(lp[j] - mx)) / denom;
                dp[j] = static_cast<float>((p - (j == y ? 1.0 : 0.0)) / n);
            }
        }
    }
    return static_cast<float>(loss / n);
}

std::vector<int> predict(const Tensor& logits) {
    const int n = logits.shape.n;
    const int k = static_cast<int>(logits.size()) / n;
    std::vector<int> out(n);
    for (int i = 0; i < n; ++i) {
        const float* lp = logits.data.data() + static_cast<std::size_t>(i) * k;
        out[i] = static_cast<int>(std::max_element(lp, lp + k) - lp);
    }
    return out;
}

}  // namespace maxdrop::nn
