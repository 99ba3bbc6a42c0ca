#include "reddiff/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace reddiff {

namespace {

void check_pair(const Vector& x, const Vector& ref) {
  if (x.size() != ref.size()) throw std::invalid_argument("metric inputs differ in dimension");
  if (x.size() == 0) throw std::invalid_argument("metric inputs are empty");
}

}  // namespace

double mse(const Vector& x, const Vector& ref) {
  check_pair(x, ref);
  return (x - ref).squaredNorm() / static_cast<double>(x.size());
}

double psnr(const Vector& x, const Vector& ref, double peak) {
  check_pair(x, ref);
  if (!(peak > 0.0)) throw std::invalid_argument("psnr peak must be positive");
  const double err = (x - ref).squaredNorm();
  if (err == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak * static_cast<double>(x.size()) / err);
}

double ssim(const Vector& x, const Vector& ref, const ImageShape& shape, int window, double peak) {
  check_pair(x, ref);
  if (x.size() != shape.size()) throw std::invalid_argument("ssim: vector does not match image shape");
  if (window < 1 || window % 2 == 0) throw std::invalid_argument("ssim window must be odd and positive");
  if (window > shape.height || window > shape.width) {
    throw std::invalid_argument("ssim window larger than image");
  }
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  const double count = static_cast<double>(window * window);

  double total = 0.0;
  long patches = 0;
  for (int c = 0; c < shape.channels; ++c) {
    for (int r0 = 0; r0 + window <= shape.height; ++r0) {
      for (int k0 = 0; k0 + window <= shape.width; ++k0) {
        double sx = 0.0, sy = 0.0;
        for (int r = r0; r < r0 + window; ++r) {
          for (int k = k0; k < k0 + window; ++k) {
            const Eigen::Index i = (c * shape.height + r) * shape.width + k;
            sx += x[i];
            sy += ref[i];
          }
        }
        const double mx = sx / count;
        const double my = sy / count;
        double vx = 0.0, vy = 0.0, cxy = 0.0;
        for (int r = r0; r < r0 + window; ++r) {
          for (int k = k0; k < k0 + window; ++k) {
            const Eigen::Index i = (c * shape.height + r) * shape.width + k;
            const double dx = x[i] - mx;
            const double dy = ref[i] - my;
            vx += dx * dx;
            vy += dy * dy;
            cxy += dx * dy;
          }
        }
        vx /= count;
        vy /= count;
        cxy /= count;
        total += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
        ++patches;
      }
    }
  }
  return total / static_cast<double>(patches);
}

MetricReport evaluate(const Vector& x, const Vector& ref, double peak, const std::optional<ImageShape>& shape,
                      int window) {
  MetricReport report;
  report.mse = mse(x, ref);
  report.psnr_db = psnr(x, ref, peak);
  if (shape && window <= shape->height && window <= shape->width) {
    report.ssim = ssim(x, ref, *shape, window, peak);
  }
  return report;
}

}  // namespace reddiff
