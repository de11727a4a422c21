#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tome {

/// Dense row-major float matrix. Rows are tokens, columns are channels.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, float fill = 0.0f);
  /// Takes ownership of `data`; throws ShapeError unless data.size() == rows * cols.
  Matrix(std::size_t rows, std::size_t cols, std::vector<float> data);

  static Matrix from_rows(const std::vector<std::vector<float>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  float& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  float operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<float> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const float> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<float> values() noexcept { return data_; }
  std::span<const float> values() const noexcept { return data_; }

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

using IndexList = std::vector<std::size_t>;

// All kernels below accumulate in ascending index order so repeated calls are
// bit-identical regardless of caller or thread.

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix softmax_rows(const Matrix& a);
Matrix layernorm_rows(const Matrix& a, float eps = 1e-5f);

/// softmax(scores) * values, with each output row formed as a running
/// weighted mean over the value rows. When every value row is identical the
/// result equals that row exactly, independent of how many rows there are.
Matrix softmax_weighted_sum(const Matrix& scores, const Matrix& values);

Matrix gather_rows(const Matrix& a, std::span<const std::size_t> idx);
/// Returns a copy of `a` with src row i added into row idx[i], i ascending.
Matrix scatter_add_rows(const Matrix& a, std::span<const std::size_t> idx, const Matrix& src);

Matrix slice_columns(const Matrix& a, std::size_t begin, std::size_t count);
void assign_columns(Matrix& dst, std::size_t begin, const Matrix& src);

Matrix add(const Matrix& a, const Matrix& b);
void add_inplace(Matrix& a, const Matrix& b);
void scale_inplace(Matrix& a, float s);
void add_row_bias(Matrix& a, std::span<const float> bias);
/// Per-column affine: a(r, c) = a(r, c) * gamma[c] + beta[c].
void affine_columns(Matrix& a, std::span<const float> gamma, std::span<const float> beta);
void gelu_inplace(Matrix& a);

bool all_finite(const Matrix& a) noexcept;

/// Multiply-add FLOPs (2 per multiply-accumulate) issued on this thread by
/// matmul and softmax_weighted_sum since the thread started.
std::uint64_t counted_flops() noexcept;

/// Captures counted_flops() on construction; elapsed() reports the difference.
class FlopTally {
 public:
  FlopTally() noexcept : start_(counted_flops()) {}
  std::uint64_t elapsed() const noexcept { return counted_flops() - start_; }

 private:
  std::uint64_t start_;
};

}  // namespace tome
