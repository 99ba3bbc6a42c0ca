#pragma once

#include <algorithm>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "reddiff/types.hpp"

namespace reddiff {

/// Channel-major image layout; a flattened vector stores channel c, row r,
/// column k at index (c * height + r) * width + k.
struct ImageShape {
  int channels = 1;
  int height = 1;
  int width = 1;

  int size() const { return channels * height * width; }
  bool operator==(const ImageShape&) const = default;
};

/// Measurement map f with observation noise level sigma_v.
///
/// vjp(x, u) returns J_f(x)^T u. For linear operators it ignores x.
class ForwardOperator {
 public:
  /// Lower bound applied wherever sigma_v enters a formula (noiseless observations).
  static constexpr double kSigmaFloor = 1e-3;

  explicit ForwardOperator(double sigma_v);
  virtual ~ForwardOperator() = default;

  virtual std::string name() const = 0;
  virtual int in_dim() const = 0;
  virtual int out_dim() const = 0;
  virtual bool is_linear() const = 0;

  virtual Vector apply(const Vector& x) const = 0;
  virtual Vector vjp(const Vector& x, const Vector& u) const = 0;
  virtual Vector initial_estimate(const Vector& y) const = 0;

  double sigma_v() const { return sigma_v_; }
  double effective_sigma_v() const { return std::max(sigma_v_, kSigmaFloor); }

 protected:
  void check_input(const Vector& x) const;
  void check_output(const Vector& y) const;

 private:
  double sigma_v_;
};

using OperatorPtr = std::shared_ptr<const ForwardOperator>;

/// Observation y together with the operator that produced it.
struct Measurement {
  Measurement(Vector y, OperatorPtr op);

  Vector y;
  OperatorPtr op;
};

OperatorPtr make_inpainting_mask(std::vector<bool> mask, double sigma_v);
OperatorPtr make_downsample_avg(int factor, ImageShape shape, double sigma_v);
OperatorPtr make_gaussian_blur(double kernel_std, int kernel_size, ImageShape shape, double sigma_v);
OperatorPtr make_hdr_clip(int dim, double sigma_v);
OperatorPtr make_dft_magnitude(int signal_length, int oversample, double sigma_v);
OperatorPtr make_dense_linear(Matrix A, double sigma_v);

/// Reads a 0/1 grid, either ASCII digits or raw 0x00/0x01 bytes; whitespace is ignored.
std::vector<bool> load_mask_file(const std::filesystem::path& path);

/// Dense matrix of a linear operator, built column by column from apply().
Matrix materialize(const ForwardOperator& op);

}  // namespace reddiff
