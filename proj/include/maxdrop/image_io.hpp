#pragma once

#include <cstddef>
#include <string>

#include "maxdrop/tensor.hpp"

namespace maxdrop {

/// Malformed PPM input; `offset` is the byte position of the problem.
struct PpmError : std::runtime_error {
    std::size_t offset;
    PpmError(const std::string& what, std::size_t off)
        : std::runtime_error(what + " (byte offset " + std::to_string(off) + ")"),
          offset(off) {}
};

/// Reads a binary P6 PPM (maxval 255) into a (1,3,h,w) tensor with values
/// mapped linearly to [0,1].
Tensor read_ppm(const std::string& path);
Tensor parse_ppm(const std::string& bytes);

/// Writes a (1,3,h,w) or (1,1,h,w) tensor as P6, values clamped to [0,1]
/// and scaled to maxval 255 (grayscale replicated to three channels).
void write_ppm(const std::string& path, const Tensor& img);
std::string encode_ppm(const Tensor& img);

}  // namespace maxdrop
