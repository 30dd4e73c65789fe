#include "ppm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <string>

#include "afecnn/errors.hpp"

namespace afecnn::tools {

namespace {

std::uint8_t level(double v, double lo, double hi) {
  if (!(hi > lo)) return 0;
  return static_cast<std::uint8_t>(std::lround(255.0 * (v - lo) / (hi - lo)));
}

}  // namespace

void write_ppm(std::ostream& out, const RgbImage& image) {
  if (image.pixels.size() != image.width * image.height * 3) throw InputError("ppm: pixel buffer size mismatch");
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
}

void write_ppm(const std::filesystem::path& path, const RgbImage& image) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open " + path.string() + " for writing");
  write_ppm(out, image);
  if (!out) throw InputError("failed writing " + path.string());
}

RgbImage feature_image(const Tensor<float>& image) {
  if (image.rank() != 3 || image.extent(0) != 3) {
    throw DimensionError("feature_image expects [3, H, W], got " + shape_string(image.shape()));
  }
  const auto d = image.data();
  const auto [lo, hi] = std::minmax_element(d.begin(), d.end());
  RgbImage out{image.extent(2), image.extent(1), {}};
  const std::size_t plane = out.width * out.height;
  out.pixels.resize(plane * 3);
  for (std::size_t p = 0; p < plane; ++p) {
    for (std::size_t c = 0; c < 3; ++c) out.pixels[p * 3 + c] = level(d[c * plane + p], *lo, *hi);
  }
  return out;
}

RgbImage yellow_heatmap(std::span<const double> values, std::size_t width, std::size_t height) {
  if (values.size() != width * height) throw DimensionError("heatmap: value count does not match dimensions");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  RgbImage out{width, height, std::vector<std::uint8_t>(values.size() * 3, 0)};
  for (std::size_t p = 0; p < values.size(); ++p) {
    const std::uint8_t v = level(values[p], *lo, *hi);
    out.pixels[p * 3] = v;
    out.pixels[p * 3 + 1] = v;
  }
  return out;
}

}  // namespace afecnn::tools
