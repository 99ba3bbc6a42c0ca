#pragma once

#include <optional>

#include "reddiff/operators.hpp"
#include "reddiff/types.hpp"

namespace reddiff {

struct MetricReport {
  double mse = 0.0;
  double psnr_db = 0.0;         // +inf when the inputs are identical
  std::optional<double> ssim;  // images only
};

double mse(const Vector& x, const Vector& ref);

/// 10 log10(peak^2 n / ||x - ref||^2); returns +infinity for an exact match.
double psnr(const Vector& x, const Vector& ref, double peak);

/// Mean SSIM over all fully contained window x window patches of every channel,
/// uniform window, C1 = (0.01 peak)^2, C2 = (0.03 peak)^2, population statistics.
double ssim(const Vector& x, const Vector& ref, const ImageShape& shape, int window = 7, double peak = 1.0);

MetricReport evaluate(const Vector& x, const Vector& ref, double peak,
                      const std::optional<ImageShape>& shape = std::nullopt, int window = 7);

}  // namespace reddiff
