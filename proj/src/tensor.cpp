#include "maxdrop/tensor.hpp"

#include <algorithm>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>

namespace maxdrop {

std::string Shape::str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
           std::to_string(h) + "," + std::to_string(w) + ")";
}

std::uint64_t Rng::hash(std::uint64_t seed, std::uint64_t ctr) {
    // splitmix64 finalizer over the stream position
    std::uint64_t z = seed + (ctr + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Tensor Tensor::full(Shape s, float value) {
    Tensor t(s);
    std::fill(t.data.begin(), t.data.end(), value);
    return t;
}

Tensor Tensor::uniform(Shape s, Rng& rng) {
    Tensor t(s);
    const std::uint64_t base = rng.counter();
    const std::uint64_t seed = rng.seed();
    const std::int64_t total = static_cast<std::int64_t>(t.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < total; ++i)
        t.data[i] = Rng::to_unit(Rng::hash(seed, base + static_cast<std::uint64_t>(i)));
    rng.skip(static_cast<std::uint64_t>(total));
    return t;
}

bool Tensor::same_bits(const Tensor& other) const {
    if (shape != other.shape) return false;
    return std::memcmp(data.data(), other.data.data(), data.size() * sizeof(float)) == 0;
}

Tensor sum_axis1(const Tensor& t) {
    const int n = t.shape.n, c = t.shape.c, h = t.shape.h, w = t.shape.w;
    Tensor out(Shape{n, 1, h, w});
    const std::size_t plane = static_cast<std::size_t>(h) * w;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        float* dst = out.data.data() + static_cast<std::size_t>(i) * plane;
        const float* src = t.data.data() + static_cast<std::size_t>(i) * c * plane;
        std::memcpy(dst, src, plane * sizeof(float));
        for (int j = 1; j < c; ++j) {
            const float* ch = src + static_cast<std::size_t>(j) * plane;
            for (std::size_t p = 0; p < plane; ++p) dst[p] += ch[p];
        }
    }
    return out;
}

namespace {

void minmax_range(const float* p, std::size_t len, float& lo, float& hi) {
    lo = std::numeric_limits<float>::infinity();
    hi = -std::numeric_limits<float>::infinity();
    for (std::size_t i = 0; i < len; ++i) {
        lo = std::min(lo, p[i]);
        hi = std::max(hi, p[i]);
    }
}

}  // namespace

Tensor minmax_normalize(const Tensor& t, NormScope scope) {
    Tensor out(t.shape);
    const std::size_t per_sample = t.size() / t.shape.n;
    const int scopes = scope == NormScope::PerSample ? t.shape.n : 1;
    const std::size_t span = scope == NormScope::PerSample ? per_sample : t.size();
#pragma omp parallel for schedule(static)
    for (int s = 0; s < scopes; ++s) {
        const float* src = t.data.data() + s * span;
        float* dst = out.data.data() + s * span;
        float lo, hi;
        minmax_range(src, span, lo, hi);
        if (lo == hi) {
            std::fill(dst, dst + span, 0.0f);
            continue;
        }
        const float range = hi - lo;
        for (std::size_t i = 0; i < span; ++i) dst[i] = (src[i] - lo) / range;
    }
    return out;
}

Tensor broadcast_mul(const Tensor& t, const Tensor& m) {
    if (m.shape.c != 1 || m.shape.n != t.shape.n || m.shape.h != t.shape.h ||
        m.shape.w != t.shape.w)
        throw std::invalid_argument("broadcast_mul: mask shape " + m.shape.str() +
                                    " does not broadcast over " + t.shape.str());
    const int n = t.shape.n, c = t.shape.c, h = t.shape.h, w = t.shape.w;
    Tensor out(t.shape);
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const std::int64_t planes = static_cast<std::int64_t>(n) * c;
#pragma omp parallel for schedule(static)
    for (std::int64_t ij = 0; ij < planes; ++ij) {
        const std::int64_t i = ij / c;
        const float* src = t.data.data() + ij * plane;
        const float* msk = m.data.data() + i * plane;
        float* dst = out.data.data() + ij * plane;
        for (std::size_t p = 0; p < plane; ++p) dst[p] = src[p] * msk[p];
    }
    return out;
}

namespace {

template <typename F>
Tensor zip(const Tensor& a, const Tensor& b, const char* name, F f) {
    if (a.shape != b.shape)
        throw std::invalid_argument(std::string(name) + ": shape mismatch " +
                                    a.shape.str() + " vs " + b.shape.str());
    Tensor out(a.shape);
    const std::int64_t total = static_cast<std::int64_t>(a.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < total; ++i) out.data[i] = f(a.data[i], b.data[i]);
    return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return zip(a, b, "add", [](float x, float y) { return x + y; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return zip(a, b, "mul", [](float x, float y) { return x * y; });
}

Tensor relu(const Tensor& t) {
    Tensor out(t.shape);
    const std::int64_t total = static_cast<std::int64_t>(t.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < total; ++i) out.data[i] = std::max(0.0f, t.data[i]);
    return out;
}

Tensor scalar_mul(const Tensor& t, float s) {
    Tensor out(t.shape);
    for (std::size_t i = 0; i < t.size(); ++i) out.data[i] = t.data[i] * s;
    return out;
}

Tensor scalar_add(const Tensor& t, float s) {
    Tensor out(t.shape);
    for (std::size_t i = 0; i < t.size(); ++i) out.data[i] = t.data[i] + s;
    return out;
}

void dump_tensor(std::ostream& out, const Tensor& t) {
    const std::uint32_t header[4] = {
        static_cast<std::uint32_t>(t.shape.n), static_cast<std::uint32_t>(t.shape.c),
        static_cast<std::uint32_t>(t.shape.h), static_cast<std::uint32_t>(t.shape.w)};
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(float)));
}

Tensor load_tensor(std::istream& in) {
    std::uint32_t header[4];
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    if (!in) throw std::runtime_error("load_tensor: truncated shape header");
    Shape s{static_cast<int>(header[0]), static_cast<int>(header[1]),
            static_cast<int>(header[2]), static_cast<int>(header[3])};
    Tensor t(s);
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    if (!in) throw std::runtime_error("load_tensor: truncated payload for shape " + s.str());
    return t;
}

}  // namespace maxdrop
