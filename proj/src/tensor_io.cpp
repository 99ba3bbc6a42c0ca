#include "reddiff/tensor_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include "json.hpp"
#include <stdexcept>

namespace reddiff {

namespace {

std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t out = 0;
    for (int i = 0; i < 8; ++i) out |= ((v >> (8 * i)) & 0xffULL) << (8 * (7 - i));
    return out;
  }
  return v;
}

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& bin) {
  auto p = bin;
  p.replace_extension(".json");
  return p;
}

void write_tensor(const std::filesystem::path& bin, const Vector& data, const std::vector<std::int64_t>& shape) {
  std::int64_t count = 1;
  for (auto d : shape) count *= d;
  if (count != data.size()) throw std::invalid_argument("tensor shape does not match data length");

  std::ofstream out(bin, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + bin.string());
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const std::uint64_t word = to_little_endian(std::bit_cast<std::uint64_t>(data[i]));
    out.write(reinterpret_cast<const char*>(&word), sizeof(word));
  }
  if (!out) throw std::runtime_error("short write to " + bin.string());

  nlohmann::ordered_json meta;
  meta["shape"] = shape;
  meta["dtype"] = "f64";
  meta["order"] = "row-major";
  std::ofstream side(sidecar_path(bin));
  if (!side) throw std::runtime_error("cannot write " + sidecar_path(bin).string());
  side << meta.dump(2) << '\n';
}

Tensor read_tensor(const std::filesystem::path& bin) {
  std::ifstream side(sidecar_path(bin));
  if (!side) throw std::runtime_error("missing tensor sidecar " + sidecar_path(bin).string());
  const auto meta = nlohmann::json::parse(side);
  if (meta.value("dtype", "") != "f64" || meta.value("order", "") != "row-major") {
    throw std::runtime_error("unsupported tensor encoding in " + sidecar_path(bin).string());
  }
  Tensor t;
  t.shape = meta.at("shape").get<std::vector<std::int64_t>>();
  std::int64_t count = 1;
  for (auto d : t.shape) count *= d;

  std::ifstream in(bin, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + bin.string());
  t.data.resize(count);
  for (std::int64_t i = 0; i < count; ++i) {
    std::uint64_t word = 0;
    if (!in.read(reinterpret_cast<char*>(&word), sizeof(word))) {
      throw std::runtime_error(bin.string() + " is shorter than its declared shape");
    }
    t.data[i] = std::bit_cast<double>(to_little_endian(word));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw std::runtime_error(bin.string() + " is longer than its declared shape");
  }
  return t;
}

void write_image(const std::filesystem::path& path, const Vector& data, const ImageShape& shape, double lo,
                 double hi) {
  if (data.size() != shape.size()) throw std::invalid_argument("image data does not match its shape");
  if (shape.channels != 1 && shape.channels != 3) {
    throw std::invalid_argument("images need 1 (PGM) or 3 (PPM) channels");
  }
  if (!(hi > lo)) throw std::invalid_argument("image range needs hi > lo");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << (shape.channels == 1 ? "P5" : "P6") << '\n' << shape.width << ' ' << shape.height << "\n255\n";
  const int plane = shape.height * shape.width;
  std::vector<unsigned char> pixels(static_cast<std::size_t>(shape.size()));
  for (int p = 0; p < plane; ++p) {
    for (int c = 0; c < shape.channels; ++c) {
      const double v = (data[c * plane + p] - lo) / (hi - lo) * 255.0;
      pixels[static_cast<std::size_t>(p * shape.channels + c)] =
          static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 255.0)));
    }
  }
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

}  // namespace reddiff
