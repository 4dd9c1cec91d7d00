#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "h2st/errors.hpp"

namespace h2st {

// Dense row-major matrix; one sample per row.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  bool empty() const { return rows == 0; }

  /// Stacks equal-length vectors as rows.
  static Matrix from_rows(const std::vector<std::vector<double>>& rows_in);

  /// Rows of `top` followed by rows of `bottom`.
  static Matrix vstack(const Matrix& top, const Matrix& bottom);
};

inline Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows_in) {
  Matrix m;
  if (rows_in.empty()) return m;
  m.rows = rows_in.size();
  m.cols = rows_in.front().size();
  m.data.reserve(m.rows * m.cols);
  for (const auto& r : rows_in) {
    if (r.size() != m.cols) throw DimensionError("Matrix::from_rows: ragged rows");
    m.data.insert(m.data.end(), r.begin(), r.end());
  }
  return m;
}

inline Matrix Matrix::vstack(const Matrix& top, const Matrix& bottom) {
  if (top.empty()) return bottom;
  if (bottom.empty()) return top;
  if (top.cols != bottom.cols) throw DimensionError("Matrix::vstack: column mismatch");
  Matrix m = top;
  m.rows += bottom.rows;
  m.data.insert(m.data.end(), bottom.data.begin(), bottom.data.end());
  return m;
}

}  // namespace h2st
