#include "finer/metrics.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace finer {

namespace {

void require_same(const ImageGrid& a, const ImageGrid& b, const char* who) {
  if (!a.same_shape(b)) throw std::invalid_argument(std::string(who) + ": shape mismatch " + a.shape() + " vs " + b.shape());
  if (a.pixels.size() != b.pixels.size()) throw std::invalid_argument(std::string(who) + ": corrupt image");
}

constexpr int kWin = 11;

std::array<double, kWin> gaussian_window() {
  std::array<double, kWin> g{};
  double sum = 0.0;
  for (int i = 0; i < kWin; ++i) {
    const double d = i - kWin / 2;
    g[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
    sum += g[i];
  }
  for (double& v : g) v /= sum;
  return g;
}

// Separable Gaussian filter over valid windows; out is (w-10) x (h-10).
std::vector<double> filter_valid(const std::vector<double>& src, std::size_t w, std::size_t h,
                                 const std::array<double, kWin>& g) {
  const std::size_t ow = w - kWin + 1, oh = h - kWin + 1;
  std::vector<double> tmp(ow * h);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int k = 0; k < kWin; ++k) s += g[k] * src[y * w + x + k];
      tmp[y * ow + x] = s;
    }
  std::vector<double> out(ow * oh);
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int k = 0; k < kWin; ++k) s += g[k] * tmp[(y + k) * ow + x];
      out[y * ow + x] = s;
    }
  return out;
}

}  // namespace

double psnr_from_mse(double mse, double peak) {
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

double psnr(const ImageGrid& a, const ImageGrid& b, double peak) {
  require_same(a, b, "psnr");
  if (a.pixels.empty()) throw std::invalid_argument("psnr: empty image");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = a.pixels[i] - b.pixels[i];
    sum += d * d;
  }
  return psnr_from_mse(sum / static_cast<double>(a.pixels.size()), peak);
}

ImageGrid to_gray(const ImageGrid& img) {
  if (img.channels == 1) return img;
  ImageGrid g;
  g.width = img.width;
  g.height = img.height;
  g.channels = 1;
  g.pixels.resize(img.pixel_count());
  for (std::size_t i = 0; i < g.pixels.size(); ++i)
    g.pixels[i] = 0.299 * img.pixels[3 * i] + 0.587 * img.pixels[3 * i + 1] + 0.114 * img.pixels[3 * i + 2];
  return g;
}

double ssim(const ImageGrid& a, const ImageGrid& b) {
  require_same(a, b, "ssim");
  if (a.width < kWin || a.height < kWin)
    throw std::invalid_argument("ssim: image " + a.shape() + " is smaller than the 11x11 window");
  const ImageGrid ga = to_gray(a), gb = to_gray(b);
  const std::size_t w = a.width, h = a.height, n = w * h;
  std::vector<double> aa(n), bb(n), ab(n);
  for (std::size_t i = 0; i < n; ++i) {
    aa[i] = ga.pixels[i] * ga.pixels[i];
    bb[i] = gb.pixels[i] * gb.pixels[i];
    ab[i] = ga.pixels[i] * gb.pixels[i];
  }
  const auto g = gaussian_window();
  const auto mu_a = filter_valid(ga.pixels, w, h, g), mu_b = filter_valid(gb.pixels, w, h, g);
  const auto e_aa = filter_valid(aa, w, h, g), e_bb = filter_valid(bb, w, h, g), e_ab = filter_valid(ab, w, h, g);
  constexpr double c1 = (0.01 * 1.0) * (0.01 * 1.0), c2 = (0.03 * 1.0) * (0.03 * 1.0);
  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i], mb = mu_b[i];
    const double va = e_aa[i] - ma * ma, vb = e_bb[i] - mb * mb, cov = e_ab[i] - ma * mb;
    total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return total / static_cast<double>(mu_a.size());
}

double sign_iou(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size())
    throw std::invalid_argument("sign_iou: voxel counts differ (" + std::to_string(pred.size()) + " vs " +
                                std::to_string(truth.size()) + ")");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] < 0.0, t = truth[i] < 0.0;
    inter += p && t;
    uni += p || t;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace finer
