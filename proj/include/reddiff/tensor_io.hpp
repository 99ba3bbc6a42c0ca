#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "reddiff/operators.hpp"
#include "reddiff/types.hpp"

namespace reddiff {

struct Tensor {
  std::vector<std::int64_t> shape;
  Vector data;
};

/// Sidecar path for a raw tensor file: same stem, ".json" extension.
std::filesystem::path sidecar_path(const std::filesystem::path& bin);

/// Raw little-endian float64, row-major, plus a sidecar
/// {"shape": [...], "dtype": "f64", "order": "row-major"}.
void write_tensor(const std::filesystem::path& bin, const Vector& data, const std::vector<std::int64_t>& shape);
Tensor read_tensor(const std::filesystem::path& bin);

/// 8-bit binary PGM (1 channel) or PPM (3 channels). Values map linearly from
/// [lo, hi] to [0, 255], clamped and rounded.
void write_image(const std::filesystem::path& path, const Vector& data, const ImageShape& shape, double lo,
                 double hi);

}  // namespace reddiff
