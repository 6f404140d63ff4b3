#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace maxdrop {

/// Shape of a dense 4-D tensor in NCHW order.
struct Shape {
    int n = 1;
    int c = 1;
    int h = 1;
    int w = 1;

    std::size_t elems() const {
        return static_cast<std::size_t>(n) * c * h * w;
    }
    bool operator==(const Shape&) const = default;
    std::string str() const;
};

/// Counter-based deterministic generator. The stream depends only on
/// (seed, counter), so draws can be computed out of order or in parallel
/// and still match the sequential sequence bit for bit.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed) {}

    /// Stateless draw: value of the stream at position `ctr`.
    static std::uint64_t hash(std::uint64_t seed, std::uint64_t ctr);

    /// Maps 64 random bits to a float in [0, 1).
    static float to_unit(std::uint64_t bits) {
        return static_cast<float>(bits >> 40) * (1.0f / 16777216.0f);
    }

    std::uint64_t next_u64() { return hash(seed_, ctr_++); }
    float next_float() { return to_unit(next_u64()); }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return ctr_; }
    void skip(std::uint64_t count) { ctr_ += count; }

private:
    std::uint64_t seed_;
    std::uint64_t ctr_ = 0;
};

/// Dense 4-D float tensor, NCHW, row-major. Tensors are plain values;
/// every operation below returns a fresh tensor.
struct Tensor {
    Shape shape;
    std::vector<float> data;

    Tensor() : data(1, 0.0f) {}
    explicit Tensor(Shape s) : shape(s), data((check_shape(s), s.elems()), 0.0f) {}
    Tensor(Shape s, std::vector<float> values) : shape(s), data(std::move(values)) {
        check_shape(s);
        if (data.size() != s.elems())
            throw std::invalid_argument("Tensor: data length does not match shape " + s.str());
    }

    static Tensor zeros(Shape s) { return Tensor(s); }
    static Tensor full(Shape s, float value);
    /// Each element iid uniform in [0,1); advances `rng` by elems() draws.
    static Tensor uniform(Shape s, Rng& rng);

    std::size_t size() const { return data.size(); }

    std::size_t offset(int i, int j, int k, int l) const {
        return ((static_cast<std::size_t>(i) * shape.c + j) * shape.h + k) * shape.w + l;
    }
    float& at(int i, int j, int k, int l) { return data[offset(i, j, k, l)]; }
    float at(int i, int j, int k, int l) const { return data[offset(i, j, k, l)]; }

    bool same_bits(const Tensor& other) const;

private:
    static void check_shape(Shape s) {
        if (s.n < 1 || s.c < 1 || s.h < 1 || s.w < 1)
            throw std::invalid_argument("Tensor: all dimensions must be >= 1, got " + s.str());
    }
};

/// Scope over which min-max statistics are computed.
enum class NormScope { PerSample, WholeTensor };

/// out[i,0,k,l] = sum over channels j of t[i,j,k,l].
Tensor sum_axis1(const Tensor& t);

/// (x - min) / (max - min) within each scope; a scope with max == min
/// normalizes to all zeros.
Tensor minmax_normalize(const Tensor& t, NormScope scope);

/// Multiplies t (n,c,h,w) by a spatial tensor m (n,1,h,w), the mask applied
/// identically to every channel.
Tensor broadcast_mul(const Tensor& t, const Tensor& m);

Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor relu(const Tensor& t);
Tensor scalar_mul(const Tensor& t, float s);
Tensor scalar_add(const Tensor& t, float s);

/// Binary dump format: 4 x u32 little-endian shape header, then
/// n*c*h*w x f32 payload.
void dump_tensor(std::ostream& out, const Tensor& t);
Tensor load_tensor(std::istream& in);

}  // namespace maxdrop
