#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "tome/errors.hpp"
#include "tome/tensor.hpp"

namespace tome {
namespace {

TEST(Matmul, IdentityLeavesOperandUnchanged) {
  const Matrix id = Matrix::from_rows({{1, 0}, {0, 1}});
  const Matrix b = Matrix::from_rows({{3, 4}, {5, 6}});
  EXPECT_EQ(matmul(id, b), b);
}

TEST(Matmul, ScalarProduct) {
  EXPECT_EQ(matmul(Matrix::from_rows({{2}}), Matrix::from_rows({{3}})), Matrix::from_rows({{6}}));
}

TEST(Matmul, InnerDimensionMismatchThrows) {
  EXPECT_THROW(matmul(Matrix(3, 5), Matrix(4, 2)), ShapeError);
}

TEST(Matmul, MatchesNaiveDotProducts) {
  const Matrix a = testing::random_matrix(1, 7, 5);
  const Matrix b = testing::random_matrix(2, 5, 3);
  const Matrix c = matmul(a, b);
  for (std::size_t i = 0; i < 7; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      float dot = 0.0f;
      for (std::size_t k = 0; k < 5; ++k) dot += a(i, k) * b(k, j);
      EXPECT_EQ(c(i, j), dot);
    }
  }
}

TEST(Matmul, CountsTwoFlopsPerMultiplyAdd) {
  FlopTally tally;
  matmul(Matrix(3, 4), Matrix(4, 5));
  EXPECT_EQ(tally.elapsed(), 2u * 3 * 4 * 5);
}

TEST(Matrix, DataLengthMustMatchShape) {
  EXPECT_THROW(Matrix(2, 2, std::vector<float>{1, 2, 3}), ShapeError);
  EXPECT_THROW(Matrix::from_rows({{1, 2}, {3}}), ShapeError);
  const Matrix m(2, 3, std::vector<float>(6, 1.0f));
  EXPECT_EQ(m.size(), m.rows() * m.cols());
}

TEST(SoftmaxRows, EqualScoresSplitEvenly) {
  const Matrix s = softmax_rows(Matrix::from_rows({{0, 0}}));
  EXPECT_EQ(s(0, 0), 0.5f);
  EXPECT_EQ(s(0, 1), 0.5f);
}

TEST(SoftmaxRows, LargeScoresDoNotOverflow) {
  const Matrix s = softmax_rows(Matrix::from_rows({{1000, 0}}));
  EXPECT_TRUE(all_finite(s));
  EXPECT_NEAR(s(0, 0), 1.0f, 1e-6);
  EXPECT_NEAR(s(0, 1), 0.0f, 1e-6);
}

TEST(SoftmaxRows, LogTwoGivesTwoToOne) {
  const Matrix s = softmax_rows(Matrix::from_rows({{std::log(2.0f), 0.0f}}));
  EXPECT_NEAR(s(0, 0), 2.0 / 3.0, 1e-6);
  EXPECT_NEAR(s(0, 1), 1.0 / 3.0, 1e-6);
}

TEST(SoftmaxRows, RowsSumToOne) {
  const Matrix s = softmax_rows(testing::random_matrix(3, 9, 17));
  for (std::size_t r = 0; r < s.rows(); ++r) {
    double sum = 0.0;
    for (float v : s.row(r)) {
      EXPECT_GE(v, 0.0f);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-6);
  }
}

TEST(LayerNorm, ConstantRowBecomesZero) {
  const Matrix n = layernorm_rows(Matrix::from_rows({{5, 5, 5, 5}}));
  for (float v : n.values()) EXPECT_EQ(v, 0.0f);
}

TEST(LayerNorm, AlreadyNormalizedRow) {
  const Matrix n = layernorm_rows(Matrix::from_rows({{1, -1}}));
  EXPECT_NEAR(n(0, 0), 1.0f, 1e-5);
  EXPECT_NEAR(n(0, 1), -1.0f, 1e-5);
}

TEST(LayerNorm, MeanOneStdOne) {
  const Matrix n = layernorm_rows(Matrix::from_rows({{0, 2}}));
  EXPECT_NEAR(n(0, 0), -1.0f, 1e-5);
  EXPECT_NEAR(n(0, 1), 1.0f, 1e-5);
}

TEST(SoftmaxWeightedSum, AgreesWithSoftmaxThenMatmul) {
  const Matrix s = testing::random_matrix(4, 6, 11);
  const Matrix v = testing::random_matrix(5, 11, 3);
  const Matrix ref = matmul(softmax_rows(s), v);
  const Matrix got = softmax_weighted_sum(s, v);
  for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(got.values()[i], ref.values()[i], 1e-5);
}

TEST(SoftmaxWeightedSum, IdenticalValueRowsAreReproducedExactly) {
  const Matrix s = testing::random_matrix(6, 4, 13);
  const std::vector<float> row{0.1f, -2.7f, 3.3f};
  Matrix v(13, 3);
  for (std::size_t r = 0; r < 13; ++r)
    for (std::size_t c = 0; c < 3; ++c) v(r, c) = row[c];
  const Matrix out = softmax_weighted_sum(s, v);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(out(r, c), row[c]);
}

TEST(SoftmaxWeightedSum, ShapeMismatchThrows) {
  EXPECT_THROW(softmax_weighted_sum(Matrix(2, 3), Matrix(4, 2)), ShapeError);
}

TEST(GatherRows, PicksRowsInIndexOrder) {
  const Matrix a = Matrix::from_rows({{0, 1}, {2, 3}, {4, 5}});
  const std::vector<std::size_t> idx{2, 0};
  EXPECT_EQ(gather_rows(a, idx), Matrix::from_rows({{4, 5}, {0, 1}}));
}

TEST(GatherRows, OutOfRangeThrows) {
  const Matrix a(3, 2);
  const std::vector<std::size_t> idx{3};
  EXPECT_THROW(gather_rows(a, idx), IndexError);
}

TEST(ScatterAddRows, DuplicateIndicesAccumulate) {
  const std::vector<std::size_t> idx{0, 0};
  const Matrix out = scatter_add_rows(Matrix(2, 1), idx, Matrix::from_rows({{1}, {2}}));
  EXPECT_EQ(out(0, 0), 3.0f);
  EXPECT_EQ(out(1, 0), 0.0f);
}

TEST(ScatterAddRows, OutOfRangeThrows) {
  const std::vector<std::size_t> idx{5};
  EXPECT_THROW(scatter_add_rows(Matrix(2, 1), idx, Matrix(1, 1)), IndexError);
}

TEST(Columns, SliceAndAssignRoundTrip) {
  const Matrix a = testing::random_matrix(7, 3, 8);
  Matrix b(3, 8);
  assign_columns(b, 0, slice_columns(a, 0, 4));
  assign_columns(b, 4, slice_columns(a, 4, 4));
  EXPECT_EQ(a, b);
  EXPECT_THROW(slice_columns(a, 6, 3), ShapeError);
}

TEST(Elementwise, AddShapeMismatchThrows) {
  EXPECT_THROW(add(Matrix(2, 2), Matrix(2, 3)), ShapeError);
}

TEST(Elementwise, ResultsStayFinite) {
  Matrix a = testing::random_matrix(9, 16, 16);
  scale_inplace(a, 40.0f);
  gelu_inplace(a);
  EXPECT_TRUE(all_finite(a));
  EXPECT_TRUE(all_finite(layernorm_rows(a)));
  EXPECT_TRUE(all_finite(softmax_rows(a)));
}

}  // namespace
}  // namespace tome
