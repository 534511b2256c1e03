#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace codi {

/// Dense rank-1..3 float tensor, row-major. This is the on-disk interchange type;
/// computation happens on TokenMatrix in double precision.
struct Tensor {
  std::vector<std::uint32_t> shape;
  std::vector<float> data;

  Tensor() = default;
  Tensor(std::vector<std::uint32_t> shape_, std::vector<float> data_);

  std::size_t rank() const { return shape.size(); }
  std::size_t element_count() const;

  /// Throws ShapeError / ValidationError when the invariants do not hold.
  void validate() const;

  bool operator==(const Tensor&) const = default;
};

/// Token features: `rows` tokens of dimension `cols`, row-major doubles.
class TokenMatrix {
 public:
  TokenMatrix() = default;
  TokenMatrix(std::size_t rows, std::size_t cols);
  TokenMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<const double> values() const { return data_; }
  std::span<double> values() { return data_; }

  bool operator==(const TokenMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// CFT1 codec. Layout: "CFT1", u8 rank, rank x u32le dims, f32le payload.
Tensor decode_tensor(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_tensor(const Tensor& t);

Tensor read_tensor(const std::filesystem::path& path);
void write_tensor(const Tensor& t, const std::filesystem::path& path);

/// (H, W, d) -> (H*W, d); row r is cell (r / W, r % W).
TokenMatrix flatten_spatial(const Tensor& t);

/// Rank-2 tensor -> matrix; rank-3 is flattened spatially.
TokenMatrix to_token_matrix(const Tensor& t);
Tensor to_tensor(const TokenMatrix& m);
Tensor vector_tensor(std::span<const double> values);
std::vector<double> tensor_values(const Tensor& t);

}  // namespace codi
