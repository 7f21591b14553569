#include "finer/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace finer {

ImageGrid::ImageGrid(std::size_t w, std::size_t h, std::size_t c, double fill)
    : width(w), height(h), channels(c), pixels(w * h * c, fill) {
  validate();
}

void ImageGrid::validate() const {
  if (channels != 1 && channels != 3)
    throw std::invalid_argument("image: channels must be 1 or 3, got " + std::to_string(channels));
  if (pixels.size() != width * height * channels)
    throw std::invalid_argument("image: " + shape() + " needs " + std::to_string(width * height * channels) +
                                " values, has " + std::to_string(pixels.size()));
  for (double v : pixels)
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("image: pixel value outside [0, 1]");
}

void ImageGrid::clamp() {
  for (double& v : pixels) v = std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0);
}

std::string ImageGrid::shape() const {
  return std::to_string(width) + "x" + std::to_string(height) + "x" + std::to_string(channels);
}

Matrix ImageGrid::as_matrix() const { return Matrix(pixel_count(), channels, pixels); }

ImageGrid ImageGrid::from_matrix(const Matrix& m, std::size_t w, std::size_t h) {
  if (m.rows() != w * h) throw std::invalid_argument("image: matrix " + m.shape() + " does not cover " +
                                                     std::to_string(w) + "x" + std::to_string(h) + " pixels");
  ImageGrid img;
  img.width = w;
  img.height = h;
  img.channels = m.cols();
  img.pixels.assign(m.values().begin(), m.values().end());
  img.clamp();
  img.validate();
  return img;
}

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(const std::string& b) : bytes_(b) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw std::runtime_error("netpbm: " + what + " at byte " + std::to_string(pos_));
  }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const unsigned char ch = static_cast<unsigned char>(bytes_[pos_]);
      if (ch == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else if (std::isspace(ch)) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::size_t number(const char* field) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size()) fail(std::string("truncated header, expected ") + field);
    if (!std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) fail(std::string("expected ") + field);
    std::size_t v = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      v = v * 10 + static_cast<std::size_t>(bytes_[pos_] - '0');
      if (v > (1u << 30)) fail(std::string(field) + " too large");
      ++pos_;
    }
    return v;
  }

  std::size_t pos_ = 0;

 private:
  const std::string& bytes_;
};

}  // namespace

ImageGrid decode_netpbm(const std::string& bytes) {
  HeaderReader r(bytes);
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) r.fail("bad magic, expected P5 or P6");
  const std::size_t channels = bytes[1] == '6' ? 3 : 1;
  r.pos_ = 2;
  const std::size_t w = r.number("width");
  const std::size_t h = r.number("height");
  const std::size_t maxval = r.number("maxval");
  if (w == 0 || h == 0) r.fail("zero image dimension");
  if (maxval != 255) r.fail("unsupported maxval " + std::to_string(maxval));
  if (r.pos_ >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[r.pos_])))
    r.fail("missing whitespace after maxval");
  ++r.pos_;
  const std::size_t need = w * h * channels;
  if (bytes.size() - r.pos_ < need)
    r.fail("truncated payload: need " + std::to_string(need) + " bytes, have " + std::to_string(bytes.size() - r.pos_));

  ImageGrid img;
  img.width = w;
  img.height = h;
  img.channels = channels;
  img.pixels.resize(need);
  for (std::size_t i = 0; i < need; ++i)
    img.pixels[i] = static_cast<unsigned char>(bytes[r.pos_ + i]) / 255.0;
  return img;
}

ImageGrid load_image(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open image " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return decode_netpbm(ss.str());
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

std::string encode_netpbm(const ImageGrid& img) {
  img.validate();
  std::string out = (img.channels == 3 ? "P6\n" : "P5\n") + std::to_string(img.width) + " " +
                    std::to_string(img.height) + "\n255\n";
  out.reserve(out.size() + img.pixels.size());
  // round() rounds halves away from zero
  for (double v : img.pixels) out += static_cast<char>(static_cast<unsigned char>(std::round(v * 255.0)));
  return out;
}

void save_image(const ImageGrid& img, const std::filesystem::path& path) {
  const std::string bytes = encode_netpbm(img);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace finer
