#include "reddiff/operators.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <iterator>
#include <numbers>
#include <stdexcept>

namespace reddiff {

ForwardOperator::ForwardOperator(double sigma_v) : sigma_v_(sigma_v) {
  if (!(sigma_v >= 0.0) || !std::isfinite(sigma_v)) {
    throw std::invalid_argument("sigma_v must be a finite nonnegative number");
  }
}

void ForwardOperator::check_input(const Vector& x) const {
  if (x.size() != in_dim()) {
    throw std::invalid_argument(name() + ": input has " + std::to_string(x.size()) +
                                " entries, expected " + std::to_string(in_dim()));
  }
}

void ForwardOperator::check_output(const Vector& y) const {
  if (y.size() != out_dim()) {
    throw std::invalid_argument(name() + ": observation has " + std::to_string(y.size()) +
                                " entries, expected " + std::to_string(out_dim()));
  }
}

Measurement::Measurement(Vector y_in, OperatorPtr op_in) : y(std::move(y_in)), op(std::move(op_in)) {
  if (!op) throw std::invalid_argument("measurement needs an operator");
  if (y.size() != op->out_dim()) {
    throw std::invalid_argument("measurement dimension does not match operator output");
  }
}

namespace {

void check_shape(const ImageShape& s) {
  if (s.channels < 1 || s.height < 1 || s.width < 1) {
    throw std::invalid_argument("image shape must be positive in every axis");
  }
}

class InpaintingOperator final : public ForwardOperator {
 public:
  InpaintingOperator(std::vector<bool> mask, double sigma_v)
      : ForwardOperator(sigma_v), in_dim_(static_cast<int>(mask.size())) {
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (mask[i]) kept_.push_back(static_cast<Eigen::Index>(i));
    }
    if (kept_.empty()) {
      throw std::invalid_argument("inpainting mask observes no entries");
    }
  }

  std::string name() const override { return "inpaint"; }
  int in_dim() const override { return in_dim_; }
  int out_dim() const override { return static_cast<int>(kept_.size()); }
  bool is_linear() const override { return true; }

  Vector apply(const Vector& x) const override {
    check_input(x);
    Vector y(out_dim());
    for (std::size_t j = 0; j < kept_.size(); ++j) y[static_cast<Eigen::Index>(j)] = x[kept_[j]];
    return y;
  }

  Vector vjp(const Vector& x, const Vector& u) const override {
    check_input(x);
    return scatter(u);
  }

  Vector initial_estimate(const Vector& y) const override { return scatter(y); }

 private:
  Vector scatter(const Vector& u) const {
    check_output(u);
    Vector out = Vector::Zero(in_dim_);
    for (std::size_t j = 0; j < kept_.size(); ++j) out[kept_[j]] = u[static_cast<Eigen::Index>(j)];
    return out;
  }

  int in_dim_;
  std::vector<Eigen::Index> kept_;
};

class DownsampleOperator final : public ForwardOperator {
 public:
  DownsampleOperator(int factor, ImageShape shape, double sigma_v)
      : ForwardOperator(sigma_v), factor_(factor), shape_(shape) {
    check_shape(shape);
    if (factor < 1) throw std::invalid_argument("downsample factor must be >= 1");
    if (shape.height % factor != 0 || shape.width % factor != 0) {
      throw std::invalid_argument("image side not divisible by downsample factor");
    }
  }

  std::string name() const override { return "downsample"; }
  int in_dim() const override { return shape_.size(); }
  int out_dim() const override {
    return shape_.channels * (shape_.height / factor_) * (shape_.width / factor_);
  }
  bool is_linear() const override { return true; }

  Vector apply(const Vector& x) const override {
    check_input(x);
    const int lh = shape_.height / factor_;
    const int lw = shape_.width / factor_;
    const double inv = 1.0 / (factor_ * factor_);
    Vector y = Vector::Zero(out_dim());
    for (int c = 0; c < shape_.channels; ++c) {
      for (int r = 0; r < shape_.height; ++r) {
        for (int k = 0; k < shape_.width; ++k) {
          y[(c * lh + r / factor_) * lw + k / factor_] += inv * x[(c * shape_.height + r) * shape_.width + k];
        }
      }
    }
    return y;
  }

  Vector vjp(const Vector& x, const Vector& u) const override {
    check_input(x);
    return spread(u, 1.0 / (factor_ * factor_));
  }

  Vector initial_estimate(const Vector& y) const override { return spread(y, 1.0); }

 private:
  Vector spread(const Vector& u, double scale) const {
    check_output(u);
    const int lh = shape_.height / factor_;
    const int lw = shape_.width / factor_;
    Vector out(in_dim());
    for (int c = 0; c < shape_.channels; ++c) {
      for (int r = 0; r < shape_.height; ++r) {
        for (int k = 0; k < shape_.width; ++k) {
          out[(c * shape_.height + r) * shape_.width + k] = scale * u[(c * lh + r / factor_) * lw + k / factor_];
        }
      }
    }
    return out;
  }

  int factor_;
  ImageShape shape_;
};

// Half-sample symmetric reflection (edge sample repeated), valid for any offset.
int reflect_index(int i, int n) {
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

class GaussianBlurOperator final : public ForwardOperator {
 public:
  GaussianBlurOperator(double kernel_std, int kernel_size, ImageShape shape, double sigma_v)
      : ForwardOperator(sigma_v), shape_(shape) {
    check_shape(shape);
    if (kernel_size < 1 || kernel_size % 2 == 0) {
      throw std::invalid_argument("blur kernel size must be odd and positive");
    }
    if (!(kernel_std > 0.0)) throw std::invalid_argument("blur kernel std must be positive");
    const int radius = kernel_size / 2;
    kernel_.resize(static_cast<std::size_t>(kernel_size));
    double total = 0.0;
    for (int i = -radius; i <= radius; ++i) {
      const double v = std::exp(-0.5 * (i * i) / (kernel_std * kernel_std));
      kernel_[static_cast<std::size_t>(i + radius)] = v;
      total += v;
    }
    for (double& v : kernel_) v /= total;
  }

  std::string name() const override { return "blur"; }
  int in_dim() const override { return shape_.size(); }
  int out_dim() const override { return shape_.size(); }
  bool is_linear() const override { return true; }

  Vector apply(const Vector& x) const override {
    check_input(x);
    return pass(pass(x, /*along_rows=*/true, false), false, false);
  }

  // Exact adjoint of apply: scatter through the same reflection map, axes in reverse order.
  Vector vjp(const Vector& x, const Vector& u) const override {
    check_input(x);
    check_output(u);
    return pass(pass(u, false, true), true, true);
  }

  Vector initial_estimate(const Vector& y) const override {
    check_output(y);
    return y;
  }

 private:
  Vector pass(const Vector& in, bool along_rows, bool adjoint) const {
    const int radius = static_cast<int>(kernel_.size()) / 2;
    const int H = shape_.height;
    const int W = shape_.width;
    Vector out = Vector::Zero(in.size());
    for (int c = 0; c < shape_.channels; ++c) {
      for (int r = 0; r < H; ++r) {
        for (int k = 0; k < W; ++k) {
          const Eigen::Index dst = (c * H + r) * W + k;
          for (int o = -radius; o <= radius; ++o) {
            const double w = kernel_[static_cast<std::size_t>(o + radius)];
            const Eigen::Index src = along_rows ? (c * H + r) * W + reflect_index(k + o, W)
                                                : (c * H + reflect_index(r + o, H)) * W + k;
            if (adjoint) {
              out[src] += w * in[dst];
            } else {
              out[dst] += w * in[src];
            }
          }
        }
      }
    }
    return out;
  }

  ImageShape shape_;
  std::vector<double> kernel_;
};

class HdrClipOperator final : public ForwardOperator {
 public:
  HdrClipOperator(int dim, double sigma_v) : ForwardOperator(sigma_v), dim_(dim) {
    if (dim < 1) throw std::invalid_argument("HDR operator dimension must be positive");
  }

  std::string name() const override { return "hdr"; }
  int in_dim() const override { return dim_; }
  int out_dim() const override { return dim_; }
  bool is_linear() const override { return false; }

  Vector apply(const Vector& x) const override {
    check_input(x);
    return (2.0 * x).cwiseMax(-1.0).cwiseMin(1.0);
  }

  Vector vjp(const Vector& x, const Vector& u) const override {
    check_input(x);
    check_output(u);
    Vector g(dim_);
    for (Eigen::Index i = 0; i < dim_; ++i) g[i] = std::abs(2.0 * x[i]) < 1.0 ? 2.0 * u[i] : 0.0;
    return g;
  }

  Vector initial_estimate(const Vector& y) const override {
    check_output(y);
    return 0.5 * y;
  }

 private:
  int dim_;
};

class DftMagnitudeOperator final : public ForwardOperator {
 public:
  DftMagnitudeOperator(int n, int oversample, double sigma_v)
      : ForwardOperator(sigma_v), n_(n), N_(n * oversample) {
    if (oversample < 1) throw std::invalid_argument("DFT oversampling must be >= 1");
    if (n < 1) throw std::invalid_argument("DFT signal length must be positive");
    cos_.resize(static_cast<std::size_t>(N_));
    sin_.resize(static_cast<std::size_t>(N_));
    for (int m = 0; m < N_; ++m) {
      const double angle = 2.0 * std::numbers::pi * m / N_;
      cos_[static_cast<std::size_t>(m)] = std::cos(angle);
      sin_[static_cast<std::size_t>(m)] = std::sin(angle);
    }
  }

  std::string name() const override { return "phase"; }
  int in_dim() const override { return n_; }
  int out_dim() const override { return N_; }
  bool is_linear() const override { return false; }

  Vector apply(const Vector& x) const override {
    check_input(x);
    const auto z = transform(x);
    Vector y(N_);
    for (int k = 0; k < N_; ++k) y[k] = std::abs(z[static_cast<std::size_t>(k)]);
    return y;
  }

  // Re(sum_k u_k (z_k/|z_k|) e^{+2 pi i k j / N}) for j < n; bins with z_k = 0 contribute nothing.
  Vector vjp(const Vector& x, const Vector& u) const override {
    check_input(x);
    check_output(u);
    const auto z = transform(x);
    Vector g = Vector::Zero(n_);
    for (int k = 0; k < N_; ++k) {
      const std::complex<double> zk = z[static_cast<std::size_t>(k)];
      const double mag = std::abs(zk);
      if (mag == 0.0) continue;
      const double re = u[k] * zk.real() / mag;
      const double im = u[k] * zk.imag() / mag;
      for (int j = 0; j < n_; ++j) {
        const auto m = static_cast<std::size_t>((static_cast<long>(k) * j) % N_);
        g[j] += re * cos_[m] - im * sin_[m];
      }
    }
    return g;
  }

  Vector initial_estimate(const Vector& y) const override {
    check_output(y);
    return Vector::Zero(n_);
  }

 private:
  std::vector<std::complex<double>> transform(const Vector& x) const {
    std::vector<std::complex<double>> z(static_cast<std::size_t>(N_));
    for (int k = 0; k < N_; ++k) {
      double re = 0.0;
      double im = 0.0;
      for (int j = 0; j < n_; ++j) {
        const auto m = static_cast<std::size_t>((static_cast<long>(k) * j) % N_);
        re += x[j] * cos_[m];
        im -= x[j] * sin_[m];
      }
      z[static_cast<std::size_t>(k)] = {re, im};
    }
    return z;
  }

  int n_;
  int N_;
  std::vector<double> cos_;
  std::vector<double> sin_;
};

class DenseLinearOperator final : public ForwardOperator {
 public:
  DenseLinearOperator(Matrix A, double sigma_v) : ForwardOperator(sigma_v), A_(std::move(A)) {
    if (A_.rows() < 1 || A_.cols() < 1) throw std::invalid_argument("dense operator matrix is empty");
  }

  std::string name() const override { return "dense"; }
  int in_dim() const override { return static_cast<int>(A_.cols()); }
  int out_dim() const override { return static_cast<int>(A_.rows()); }
  bool is_linear() const override { return true; }

  Vector apply(const Vector& x) const override {
    check_input(x);
    return A_ * x;
  }

  Vector vjp(const Vector& x, const Vector& u) const override {
    check_input(x);
    check_output(u);
    return A_.transpose() * u;
  }

  Vector initial_estimate(const Vector& y) const override {
    check_output(y);
    return A_.transpose() * y;
  }

 private:
  Matrix A_;
};

}  // namespace

OperatorPtr make_inpainting_mask(std::vector<bool> mask, double sigma_v) {
  return std::make_shared<InpaintingOperator>(std::move(mask), sigma_v);
}

OperatorPtr make_downsample_avg(int factor, ImageShape shape, double sigma_v) {
  return std::make_shared<DownsampleOperator>(factor, shape, sigma_v);
}

OperatorPtr make_gaussian_blur(double kernel_std, int kernel_size, ImageShape shape, double sigma_v) {
  return std::make_shared<GaussianBlurOperator>(kernel_std, kernel_size, shape, sigma_v);
}

OperatorPtr make_hdr_clip(int dim, double sigma_v) { return std::make_shared<HdrClipOperator>(dim, sigma_v); }

OperatorPtr make_dft_magnitude(int signal_length, int oversample, double sigma_v) {
  return std::make_shared<DftMagnitudeOperator>(signal_length, oversample, sigma_v);
}

OperatorPtr make_dense_linear(Matrix A, double sigma_v) {
  return std::make_shared<DenseLinearOperator>(std::move(A), sigma_v);
}

std::vector<bool> load_mask_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open mask file " + path.string());
  std::vector<bool> mask;
  for (auto it = std::istreambuf_iterator<char>(in); it != std::istreambuf_iterator<char>(); ++it) {
    const char c = *it;
    if (c == '0' || c == '\0') {
      mask.push_back(false);
    } else if (c == '1' || c == '\x01') {
      mask.push_back(true);
    } else if (!(c == ' ' || c == '\n' || c == '\r' || c == '\t' || c == ',')) {
      throw std::runtime_error("mask file " + path.string() + " contains a byte that is not 0/1");
    }
  }
  if (mask.empty()) throw std::runtime_error("mask file " + path.string() + " is empty");
  return mask;
}

Matrix materialize(const ForwardOperator& op) {
  if (!op.is_linear()) throw std::invalid_argument("materialize: " + op.name() + " is not linear");
  Matrix A(op.out_dim(), op.in_dim());
  Vector e = Vector::Zero(op.in_dim());
  for (int j = 0; j < op.in_dim(); ++j) {
    e[j] = 1.0;
    A.col(j) = op.apply(e);
    e[j] = 0.0;
  }
  return A;
}

}  // namespace reddiff
