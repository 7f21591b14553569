#pragma once

#include <span>
#include <string>

#include "finer/image.hpp"

namespace finer {

struct MetricValue {
  std::string name;
  double value;
  bool higher_better;
};

/// 10 log10(peak^2 / MSE) over all channels; +infinity when the images match.
double psnr(const ImageGrid& a, const ImageGrid& b, double peak = 1.0);
double psnr_from_mse(double mse, double peak = 1.0);

/// Mean SSIM over all valid 11x11 windows (Gaussian weights, sigma 1.5),
/// K1 = 0.01, K2 = 0.03, peak 1. RGB is reduced to luma first.
double ssim(const ImageGrid& a, const ImageGrid& b);

/// Luma (0.299, 0.587, 0.114) for RGB; single-channel images are copied.
ImageGrid to_gray(const ImageGrid& img);

/// |{pred<0} & {true<0}| / |{pred<0} | {true<0}|, or 1 when both are empty.
double sign_iou(std::span<const double> pred, std::span<const double> truth);

}  // namespace finer
