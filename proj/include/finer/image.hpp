#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "finer/matrix.hpp"

namespace finer {

/// Interleaved row-major pixels in [0, 1]: index (y * width + x) * channels + c.
struct ImageGrid {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 1;
  std::vector<double> pixels;

  ImageGrid() = default;
  ImageGrid(std::size_t width, std::size_t height, std::size_t channels, double fill = 0.0);

  std::size_t pixel_count() const { return width * height; }
  double& at(std::size_t x, std::size_t y, std::size_t c = 0) { return pixels[(y * width + x) * channels + c]; }
  double at(std::size_t x, std::size_t y, std::size_t c = 0) const { return pixels[(y * width + x) * channels + c]; }

  /// Throws std::invalid_argument on a bad channel count, size mismatch or
  /// values outside [0, 1].
  void validate() const;
  void clamp();
  bool same_shape(const ImageGrid& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
  std::string shape() const;

  /// pixel_count x channels, rows in pixel order.
  Matrix as_matrix() const;
  /// Inverse of as_matrix; values are clamped to [0, 1].
  static ImageGrid from_matrix(const Matrix& m, std::size_t width, std::size_t height);

  friend bool operator==(const ImageGrid&, const ImageGrid&) = default;
};

/// Binary PGM (P5) or PPM (P6) with maxval 255. Header comments are skipped.
/// Malformed input throws std::runtime_error naming the byte offset.
ImageGrid load_image(const std::filesystem::path& path);
ImageGrid decode_netpbm(const std::string& bytes);

/// P5 for one channel, P6 for three; "P6\n<w> <h>\n255\n" then the payload.
void save_image(const ImageGrid& img, const std::filesystem::path& path);
std::string encode_netpbm(const ImageGrid& img);

}  // namespace finer
