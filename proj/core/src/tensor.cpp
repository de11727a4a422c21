#include "tome/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tome/errors.hpp"

namespace tome {

namespace {

thread_local std::uint64_t t_flops = 0;

std::string dims(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + dims(a) + " vs " + dims(b));
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, float fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<float> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("matrix data length " + std::to_string(data_.size()) + " does not match " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Matrix Matrix::from_rows(const std::vector<std::vector<float>>& rows) {
  if (rows.empty()) return {};
  const std::size_t cols = rows.front().size();
  std::vector<float> data;
  data.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    if (r.size() != cols) throw ShapeError("from_rows: ragged rows");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Matrix(rows.size(), cols, std::move(data));
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ " + dims(a) + " x " + dims(b));
  }
  const std::size_t m = a.rows();
  const std::size_t k = a.cols();
  const std::size_t n = b.cols();
  Matrix c(m, n);
  // i-k-j order: each c(i, j) still accumulates over k in ascending order.
  for (std::size_t i = 0; i < m; ++i) {
    float* out = c.row(i).data();
    const float* arow = a.row(i).data();
    for (std::size_t p = 0; p < k; ++p) {
      const float aik = arow[p];
      const float* brow = b.row(p).data();
      for (std::size_t j = 0; j < n; ++j) out[j] += aik * brow[j];
    }
  }
  t_flops += 2ull * m * k * n;
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) t(c, r) = a(r, c);
  return t;
}

Matrix softmax_rows(const Matrix& a) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto in = a.row(r);
    auto o = out.row(r);
    if (in.empty()) continue;
    const float mx = *std::max_element(in.begin(), in.end());
    float sum = 0.0f;
    for (std::size_t c = 0; c < in.size(); ++c) {
      o[c] = std::exp(in[c] - mx);
      sum += o[c];
    }
    const float inv = 1.0f / sum;
    for (float& v : o) v *= inv;
  }
  return out;
}

Matrix layernorm_rows(const Matrix& a, float eps) {
  Matrix out(a.rows(), a.cols());
  const auto n = static_cast<float>(a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto in = a.row(r);
    float mean = 0.0f;
    for (float v : in) mean += v;
    mean /= n;
    float var = 0.0f;
    for (float v : in) var += (v - mean) * (v - mean);
    var /= n;
    const float inv = 1.0f / std::sqrt(var + eps);
    auto o = out.row(r);
    for (std::size_t c = 0; c < in.size(); ++c) o[c] = (in[c] - mean) * inv;
  }
  return out;
}

Matrix softmax_weighted_sum(const Matrix& scores, const Matrix& values) {
  if (scores.cols() != values.rows()) {
    throw ShapeError("softmax_weighted_sum: " + dims(scores) + " scores vs " + dims(values) +
                     " values");
  }
  const std::size_t d = values.cols();
  const std::size_t k = scores.cols();
  Matrix out(scores.rows(), d);
  std::vector<float> weight(k);
  std::vector<float> prefix(k);
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    const float* s = scores.row(i).data();
    float* o = out.row(i).data();
    if (k == 0) continue;
    const float mx = *std::max_element(s, s + k);
    // w_j = e_j / (e_0 + ... + e_j): the step size of a running weighted mean.
    float total = 0.0f;
    for (std::size_t j = 0; j < k; ++j) {
      weight[j] = std::exp(s[j] - mx);
      total += weight[j];
      prefix[j] = total;
    }
    for (std::size_t j = 0; j < k; ++j) weight[j] /= prefix[j];
    for (std::size_t j = 0; j < k; ++j) {
      const float w = weight[j];
      const float* v = values.row(j).data();
      for (std::size_t c = 0; c < d; ++c) o[c] += w * (v[c] - o[c]);
    }
  }
  t_flops += 2ull * scores.rows() * scores.cols() * d;
  return out;
}

Matrix gather_rows(const Matrix& a, std::span<const std::size_t> idx) {
  Matrix out(idx.size(), a.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= a.rows()) {
      throw IndexError("gather_rows: index " + std::to_string(idx[i]) + " out of range for " +
                       std::to_string(a.rows()) + " rows");
    }
    std::copy_n(a.row(idx[i]).data(), a.cols(), out.row(i).data());
  }
  return out;
}

Matrix scatter_add_rows(const Matrix& a, std::span<const std::size_t> idx, const Matrix& src) {
  if (src.rows() != idx.size() || src.cols() != a.cols()) {
    throw ShapeError("scatter_add_rows: src " + dims(src) + " does not match " +
                     std::to_string(idx.size()) + " indices into " + dims(a));
  }
  Matrix out = a;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= a.rows()) {
      throw IndexError("scatter_add_rows: index " + std::to_string(idx[i]) +
                       " out of range for " + std::to_string(a.rows()) + " rows");
    }
    auto dst = out.row(idx[i]);
    const auto s = src.row(i);
    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += s[c];
  }
  return out;
}

Matrix slice_columns(const Matrix& a, std::size_t begin, std::size_t count) {
  if (begin + count > a.cols()) throw ShapeError("slice_columns: range exceeds " + dims(a));
  Matrix out(a.rows(), count);
  for (std::size_t r = 0; r < a.rows(); ++r)
    std::copy_n(a.row(r).data() + begin, count, out.row(r).data());
  return out;
}

void assign_columns(Matrix& dst, std::size_t begin, const Matrix& src) {
  if (src.rows() != dst.rows() || begin + src.cols() > dst.cols()) {
    throw ShapeError("assign_columns: " + dims(src) + " does not fit into " + dims(dst));
  }
  for (std::size_t r = 0; r < dst.rows(); ++r)
    std::copy_n(src.row(r).data(), src.cols(), dst.row(r).data() + begin);
}

Matrix add(const Matrix& a, const Matrix& b) {
  Matrix out = a;
  add_inplace(out, b);
  return out;
}

void add_inplace(Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add");
  auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) av[i] += bv[i];
}

void scale_inplace(Matrix& a, float s) {
  for (float& v : a.values()) v *= s;
}

void add_row_bias(Matrix& a, std::span<const float> bias) {
  if (bias.size() != a.cols()) throw ShapeError("add_row_bias: bias length mismatch");
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto row = a.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bias[c];
  }
}

void affine_columns(Matrix& a, std::span<const float> gamma, std::span<const float> beta) {
  if (gamma.size() != a.cols() || beta.size() != a.cols()) {
    throw ShapeError("affine_columns: parameter length mismatch");
  }
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto row = a.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = row[c] * gamma[c] + beta[c];
  }
}

void gelu_inplace(Matrix& a) {
  constexpr float k = 0.7978845608028654f;  // sqrt(2 / pi)
  for (float& v : a.values()) v = 0.5f * v * (1.0f + std::tanh(k * (v + 0.044715f * v * v * v)));
}

bool all_finite(const Matrix& a) noexcept {
  return std::all_of(a.values().begin(), a.values().end(),
                     [](float v) { return std::isfinite(v); });
}

std::uint64_t counted_flops() noexcept { return t_flops; }

}  // namespace tome
