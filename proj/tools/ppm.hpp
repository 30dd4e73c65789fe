#pragma once

// Binary PPM (P6) output and the pixel mappings used by the CLI.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "afecnn/tensor.hpp"

namespace afecnn::tools {

struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major RGB triples
};

void write_ppm(std::ostream& out, const RgbImage& image);
void write_ppm(const std::filesystem::path& path, const RgbImage& image);

/// [3, H, W] image with channels mapped to R, G, B after one min-max
/// normalisation over the whole tensor. A constant tensor maps to black.
RgbImage feature_image(const Tensor<float>& image);

/// Row-major `width` x `height` values on a black-to-yellow ramp, min-max
/// normalised.
RgbImage yellow_heatmap(std::span<const double> values, std::size_t width, std::size_t height);

}  // namespace afecnn::tools
