#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "reddiff/operators.hpp"
#include "reddiff/oracle.hpp"

using namespace reddiff;

namespace {

Vector randn(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> d;
  Vector v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

void check_adjoint(const ForwardOperator& op, std::mt19937_64& rng) {
  for (int trial = 0; trial < 5; ++trial) {
    const Vector x = randn(rng, op.in_dim());
    const Vector u = randn(rng, op.out_dim());
    const double lhs = op.apply(x).dot(u);
    const double rhs = x.dot(op.vjp(x, u));
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(lhs)));
    // Linear operators ignore the linearization point.
    CHECK((op.vjp(x, u) - op.vjp(randn(rng, op.in_dim()), u)).norm() == 0.0);
  }
}

void check_vjp_fd(const ForwardOperator& op, const Vector& x, const Vector& u) {
  const Vector fd = oracle::finite_diff_grad([&](const Vector& z) { return op.apply(z).dot(u); }, x, 1e-6);
  const Vector g = op.vjp(x, u);
  CHECK((g - fd).norm() <= 1e-5 * std::max(1.0, fd.norm()));
}

std::vector<OperatorPtr> linear_ops(std::mt19937_64& rng) {
  std::vector<bool> mask(48);
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = i % 3 != 1;
  return {
      make_inpainting_mask(mask, 0.1),
      make_downsample_avg(2, {1, 4, 6}, 0.1),
      make_downsample_avg(4, {3, 8, 4}, 0.1),
      make_gaussian_blur(1.5, 7, {1, 5, 9}, 0.1),
      make_gaussian_blur(0.7, 3, {3, 4, 4}, 0.1),
      make_dense_linear(Matrix::NullaryExpr(7, 11, [&] { return randn(rng, 1)[0]; }), 0.1),
  };
}

}  // namespace

TEST_CASE("inpainting") {
  SUBCASE("all-true mask is the identity") {
    const auto op = make_inpainting_mask(std::vector<bool>(5, true), 0.0);
    const Vector x = vec({1, 2, 3, 4, 5});
    CHECK(op->apply(x) == x);
    CHECK(op->vjp(x, x) == x);
  }
  SUBCASE("gather and scatter") {
    const auto op = make_inpainting_mask({true, false, true, false}, 0.0);
    CHECK(op->apply(vec({1, 2, 3, 4})) == vec({1, 3}));
    CHECK(op->vjp(vec({1, 2, 3, 4}), vec({5, 6})) == vec({5, 0, 6, 0}));
    CHECK(op->initial_estimate(vec({5, 6})) == vec({5, 0, 6, 0}));
  }
  SUBCASE("empty observation rejected") {
    CHECK_THROWS_AS(make_inpainting_mask({false, false}, 0.0), std::invalid_argument);
  }
}

TEST_CASE("downsampling") {
  const auto id = make_downsample_avg(1, {1, 3, 3}, 0.0);
  const Vector x = vec({1, 2, 3, 4, 5, 6, 7, 8, 9});
  CHECK(id->apply(x) == x);

  const auto op = make_downsample_avg(2, {1, 2, 2}, 0.0);
  CHECK(op->apply(vec({1, 3, 5, 7})) == vec({4}));
  CHECK(op->initial_estimate(vec({4})) == vec({4, 4, 4, 4}));

  CHECK_THROWS_AS(make_downsample_avg(2, {1, 3, 4}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(make_downsample_avg(0, {1, 4, 4}, 0.0), std::invalid_argument);
}

TEST_CASE("blur") {
  const auto id = make_gaussian_blur(2.0, 1, {1, 4, 5}, 0.0);
  std::mt19937_64 rng(1);
  const Vector x = randn(rng, 20);
  CHECK((id->apply(x) - x).norm() <= 1e-15);

  const auto op = make_gaussian_blur(1.3, 5, {3, 6, 7}, 0.0);
  const Vector c = Vector::Constant(op->in_dim(), 0.37);
  CHECK((op->apply(c) - c).lpNorm<Eigen::Infinity>() <= 1e-15);

  CHECK_THROWS_AS(make_gaussian_blur(1.0, 4, {1, 8, 8}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(make_gaussian_blur(0.0, 3, {1, 8, 8}, 0.0), std::invalid_argument);
}

TEST_CASE("hdr clip") {
  const auto op = make_hdr_clip(4, 0.0);
  const Vector x = vec({0.2, 0.9, -0.9, -0.1});
  const Vector y = op->apply(x);
  CHECK(y[0] == doctest::Approx(0.4));
  CHECK(y[1] == 1.0);
  CHECK(y[2] == -1.0);
  const Vector d = op->vjp(x, Vector::Ones(4));
  CHECK(d == vec({2, 0, 0, 2}));
  CHECK(op->initial_estimate(y)[0] == doctest::Approx(0.2));
}

TEST_CASE("Fourier magnitude") {
  SUBCASE("DC bin of a constant signal") {
    const auto op = make_dft_magnitude(8, 1, 0.0);
    const Vector y = op->apply(Vector::Constant(8, -1.5));
    CHECK(y[0] == doctest::Approx(12.0).epsilon(1e-14));
    for (int k = 1; k < 8; ++k) CHECK(std::abs(y[k]) <= 1e-13);
  }
  SUBCASE("oversampling zero-pads") {
    const auto op = make_dft_magnitude(5, 3, 0.0);
    CHECK(op->in_dim() == 5);
    CHECK(op->out_dim() == 15);
  }
  SUBCASE("magnitudes are invariant to a sign flip") {
    const auto op = make_dft_magnitude(6, 2, 0.0);
    std::mt19937_64 rng(2);
    const Vector x = randn(rng, 6);
    CHECK((op->apply(x) - op->apply(-x)).norm() <= 1e-12);
  }
  SUBCASE("vjp at an exact zero bin stays finite") {
    const auto op = make_dft_magnitude(4, 1, 0.0);
    const Vector g = op->vjp(Vector::Constant(4, 1.0), Vector::Ones(4));
    CHECK(g.allFinite());
  }
}

TEST_CASE("dense linear") {
  const auto id = make_dense_linear(Matrix::Identity(3, 3), 0.0);
  CHECK(id->apply(vec({1, 2, 3})) == vec({1, 2, 3}));
  const auto scalar = make_dense_linear(Matrix::Constant(1, 1, 1.0), 1.0);
  CHECK(scalar->initial_estimate(vec({2}))[0] == 2.0);
}

TEST_CASE("linear operators pass the adjoint test") {
  std::mt19937_64 rng(3);
  for (const auto& op : linear_ops(rng)) {
    CAPTURE(op->name());
    CHECK(op->is_linear());
    check_adjoint(*op, rng);
  }
}

TEST_CASE("materialized matrices agree with apply") {
  std::mt19937_64 rng(4);
  for (const auto& op : linear_ops(rng)) {
    const Matrix A = materialize(*op);
    const Vector x = randn(rng, op->in_dim());
    CHECK((A * x - op->apply(x)).norm() <= 1e-12 * std::max(1.0, x.norm()));
  }
  CHECK_THROWS_AS(materialize(*make_hdr_clip(3, 0.0)), std::invalid_argument);
}

TEST_CASE("every operator's vjp matches finite differences") {
  std::mt19937_64 rng(5);
  auto ops = linear_ops(rng);
  ops.push_back(make_dft_magnitude(9, 2, 0.0));
  ops.push_back(make_dft_magnitude(7, 1, 0.0));
  for (const auto& op : ops) {
    CAPTURE(op->name());
    check_vjp_fd(*op, randn(rng, op->in_dim()), randn(rng, op->out_dim()));
  }
  // hdr: probes kept away from the kinks at |2x| = 1.
  const auto hdr = make_hdr_clip(6, 0.0);
  check_vjp_fd(*hdr, vec({0.1, -0.3, 0.7, -0.8, 0.45, 0.0}), randn(rng, 6));
}

TEST_CASE("apply and vjp are pure") {
  std::mt19937_64 rng(6);
  auto ops = linear_ops(rng);
  ops.push_back(make_hdr_clip(10, 0.0));
  ops.push_back(make_dft_magnitude(8, 2, 0.0));
  for (const auto& op : ops) {
    const Vector x = randn(rng, op->in_dim());
    const Vector u = randn(rng, op->out_dim());
    const Vector y1 = op->apply(x);
    const Vector g1 = op->vjp(x, u);
    CHECK((op->apply(x) - y1).norm() == 0.0);
    CHECK((op->vjp(x, u) - g1).norm() == 0.0);
    CHECK(y1.size() == op->out_dim());
    CHECK(g1.size() == op->in_dim());
  }
}

TEST_CASE("dimension checks") {
  const auto op = make_inpainting_mask({true, true, false}, 0.0);
  CHECK_THROWS_AS(op->apply(Vector::Zero(2)), std::invalid_argument);
  CHECK_THROWS_AS(Measurement(Vector::Zero(3), op), std::invalid_argument);
  CHECK_NOTHROW(Measurement(Vector::Zero(2), op));
  CHECK_THROWS_AS(make_hdr_clip(3, -0.1), std::invalid_argument);
}

TEST_CASE("noise floor") {
  CHECK(make_hdr_clip(3, 0.0)->effective_sigma_v() == ForwardOperator::kSigmaFloor);
  CHECK(make_hdr_clip(3, 0.2)->effective_sigma_v() == 0.2);
}

TEST_CASE("mask files") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto text = dir / "reddiff_mask_test.txt";
  {
    std::ofstream(text) << "1 0 1\n0,1\n";
  }
  CHECK(load_mask_file(text) == std::vector<bool>{true, false, true, false, true});
  const auto bin = dir / "reddiff_mask_test.bin";
  {
    std::ofstream out(bin, std::ios::binary);
    const char bytes[] = {1, 0, 0, 1};
    out.write(bytes, 4);
  }
  CHECK(load_mask_file(bin) == std::vector<bool>{true, false, false, true});
  {
    std::ofstream(text) << "1 2";
  }
  CHECK_THROWS(load_mask_file(text));
  CHECK_THROWS(load_mask_file(dir / "reddiff_no_such_mask"));
  std::filesystem::remove(text);
  std::filesystem::remove(bin);
}
