#include "doctest.h"
#include "maxdrop/nn.hpp"

#include <cmath>
#include <vector>

using namespace maxdrop;

namespace {

// f64 shadow of softmax cross-entropy for the gradient oracle
double softmax_xent_f64(const std::vector<double>& logits, int label) {
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double denom = 0.0;
    for (double v : logits) denom += std::exp(v - mx);
    return -(logits[label] - mx - std::log(denom));
}

}  // namespace

TEST_CASE("softmax cross-entropy gradient matches f64 finite differences") {
    Rng rng(41);
    for (int probe = 0; probe < 10; ++probe) {
        const int k = 2 + static_cast<int>(rng.next_u64() % 6);
        std::vector<double> logits(k);
        for (auto& v : logits) v = (rng.next_float() * 2.0 - 1.0) * 3.0;
        const int label = static_cast<int>(rng.next_u64() % k);

        Tensor lt(Shape{1, k, 1, 1});
        for (int j = 0; j < k; ++j) lt.data[j] = static_cast<float>(logits[j]);
        std::vector<int> labels{label};
        Tensor dlogits;
        nn::softmax_xent(lt, labels, &dlogits);

        const double eps = 1e-6;
        for (int j = 0; j < k; ++j) {
            auto plus = logits, minus = logits;
            plus[j] += eps;
            minus[j] -= eps;
            const double fd =
                (softmax_xent_f64(plus, label) - softmax_xent_f64(minus, label)) /
                (2.0 * eps);
            const double a = dlogits.data[j];
            CHECK(std::abs(fd - a) / std::max({std::abs(fd), std::abs(a), 1e-8}) < 1e-4);
        }
    }
}

TEST_CASE("dense layer gradients match finite differences") {
    Rng rng(42);
    nn::Dense fc(6, 3, rng);
    Tensor x = Tensor::uniform(Shape{2, 6, 1, 1}, rng);
    Tensor gy = Tensor::uniform(Shape{2, 3, 1, 1}, rng);

    fc.forward(x);
    const Tensor gx = fc.backward(gy);

    auto loss = [&](nn::Dense& layer, const Tensor& input) {
        const Tensor y = layer.forward(input);
        double acc = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i)
            acc += static_cast<double>(gy.data[i]) * y.data[i];
        return acc;
    };
    const float eps = 1e-2f;
    for (std::size_t i = 0; i < fc.w.size(); i += 3) {
        nn::Dense p = fc, m = fc;
        p.w[i] += eps;
        m.w[i] -= eps;
        const double fd = (loss(p, x) - loss(m, x)) / (2.0 * eps);
        CHECK(std::abs(fd - fc.gw[i]) / std::max({std::abs(fd), 1e-3}) < 1e-2);
    }
    for (std::size_t i = 0; i < x.size(); i += 2) {
        Tensor p = x, m = x;
        p.data[i] += eps;
        m.data[i] -= eps;
        const double fd = (loss(fc, p) - loss(fc, m)) / (2.0 * eps);
        CHECK(std::abs(fd - gx.data[i]) / std::max({std::abs(fd), 1e-3}) < 1e-2);
    }
}

TEST_CASE("conv layer gradients match finite differences") {
    Rng rng(43);
    nn::Conv2d conv(2, 3, rng);
    Tensor x = Tensor::uniform(Shape{1, 2, 5, 5}, rng);
    Tensor gy = Tensor::uniform(Shape{1, 3, 5, 5}, rng);

    conv.forward(x);
    const Tensor gx = conv.backward(gy);

    auto loss = [&](nn::Conv2d& layer, const Tensor& input) {
        const Tensor y = layer.forward(input);
        double acc = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i)
            acc += static_cast<double>(gy.data[i]) * y.data[i];
        return acc;
    };
    const float eps = 1e-2f;
    for (std::size_t i = 0; i < conv.w.size(); i += 7) {
        nn::Conv2d p = conv, m = conv;
        p.w[i] += eps;
        m.w[i] -= eps;
        const double fd = (loss(p, x) - loss(m, x)) / (2.0 * eps);
        CHECK(std::abs(fd - conv.gw[i]) / std::max({std::abs(fd), 1e-2}) < 1e-2);
    }
    for (std::size_t i = 0; i < x.size(); i += 5) {
        Tensor p = x, m = x;
        p.data[i] += eps;
        m.data[i] -= eps;
        const double fd = (loss(conv, p) - loss(conv, m)) / (2.0 * eps);
        CHECK(std::abs(fd - gx.data[i]) / std::max({std::abs(fd), 1e-2}) < 1e-2);
    }
}

TEST_CASE("maxpool forwards the max and routes gradient to the argmax") {
    Tensor x(Shape{1, 1, 2, 2}, {1, 5, 2, 3});
    nn::MaxPool2 pool;
    const Tensor y = pool.forward(x);
    CHECK(y.shape == Shape{1, 1, 1, 1});
    CHECK(y.data[0] == 5.0f);
    Tensor gy(Shape{1, 1, 1, 1}, {7});
    CHECK(pool.backward(gy).data == std::vector<float>{0, 7, 0, 0});
}

TEST_CASE("relu backward gates on the forward input") {
    Tensor x(Shape{1, 1, 1, 3}, {-1, 0, 2});
    nn::ReluLayer r;
    r.forward(x);
    Tensor gy(Shape{1, 1, 1, 3}, {5, 5, 5});
    CHECK(r.backward(gy).data == std::vector<float>{0, 0, 5});
}
