#include "codi/tensor.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "codi/errors.hpp"

namespace codi {
namespace {

constexpr std::uint8_t kMagic[4] = {'C', 'F', 'T', '1'};
constexpr std::size_t kMaxRank = 3;

std::uint32_t load_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void store_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

std::size_t checked_product(std::span<const std::uint32_t> dims) {
  std::size_t n = 1;
  for (auto d : dims) {
    if (d == 0) throw FormatError("tensor dimension must be positive");
    if (n > SIZE_MAX / d) throw FormatError("tensor element count overflows");
    n *= d;
  }
  return n;
}

}  // namespace

Tensor::Tensor(std::vector<std::uint32_t> shape_, std::vector<float> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {}

std::size_t Tensor::element_count() const {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

void Tensor::validate() const {
  if (shape.empty() || shape.size() > kMaxRank) {
    throw ShapeError("tensor rank must be 1..3, got " + std::to_string(shape.size()));
  }
  for (auto d : shape) {
    if (d == 0) throw ShapeError("tensor dimension must be positive");
  }
  if (element_count() != data.size()) {
    throw ShapeError("tensor payload length does not match shape");
  }
  for (float v : data) {
    if (!std::isfinite(v)) throw ValidationError("tensor contains non-finite values");
  }
}

TokenMatrix::TokenMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

TokenMatrix::TokenMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) throw ShapeError("token matrix data length mismatch");
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 5 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("bad magic: not a CFT1 tensor");
  }
  const std::size_t rank = bytes[4];
  if (rank < 1 || rank > kMaxRank) {
    throw FormatError("unsupported CFT1 rank " + std::to_string(rank));
  }
  const std::size_t header = 5 + 4 * rank;
  if (bytes.size() < header) throw CorruptionError("CFT1 header truncated");

  Tensor t;
  t.shape.resize(rank);
  for (std::size_t k = 0; k < rank; ++k) t.shape[k] = load_u32(bytes.data() + 5 + 4 * k);
  const std::size_t count = checked_product(t.shape);

  const std::size_t payload = bytes.size() - header;
  if (count > SIZE_MAX / 4 || payload != count * 4) {
    throw CorruptionError("CFT1 payload holds " + std::to_string(payload / 4) +
                          " floats, shape requires " + std::to_string(count));
  }
  t.data.resize(count);
  const std::uint8_t* p = bytes.data() + header;
  for (std::size_t i = 0; i < count; ++i, p += 4) {
    t.data[i] = std::bit_cast<float>(load_u32(p));
    if (!std::isfinite(t.data[i])) {
      throw ValidationError("CFT1 payload contains non-finite value at element " +
                            std::to_string(i));
    }
  }
  return t;
}

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
  t.validate();
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  out.reserve(5 + 4 * t.rank() + 4 * t.data.size());
  out.push_back(static_cast<std::uint8_t>(t.rank()));
  for (auto d : t.shape) store_u32(out, d);
  for (float v : t.data) store_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return decode_tensor(bytes);
}

void write_tensor(const Tensor& t, const std::filesystem::path& path) {
  const auto bytes = encode_tensor(t);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

TokenMatrix flatten_spatial(const Tensor& t) {
  if (t.rank() != 3) {
    throw ShapeError("flatten_spatial expects rank 3 (H, W, d), got rank " +
                     std::to_string(t.rank()));
  }
  const std::size_t rows = std::size_t{t.shape[0]} * t.shape[1];
  const std::size_t cols = t.shape[2];
  return TokenMatrix(rows, cols, std::vector<double>(t.data.begin(), t.data.end()));
}

TokenMatrix to_token_matrix(const Tensor& t) {
  if (t.rank() == 3) return flatten_spatial(t);
  if (t.rank() != 2) {
    throw ShapeError("expected a rank-2 token matrix or rank-3 spatial map, got rank " +
                     std::to_string(t.rank()));
  }
  return TokenMatrix(t.shape[0], t.shape[1], std::vector<double>(t.data.begin(), t.data.end()));
}

Tensor to_tensor(const TokenMatrix& m) {
  auto v = m.values();
  return Tensor({static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())},
                std::vector<float>(v.begin(), v.end()));
}

Tensor vector_tensor(std::span<const double> values) {
  return Tensor({static_cast<std::uint32_t>(values.size())},
                std::vector<float>(values.begin(), values.end()));
}

std::vector<double> tensor_values(const Tensor& t) {
  return std::vector<double>(t.data.begin(), t.data.end());
}

}  // namespace codi
