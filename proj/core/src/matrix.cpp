#include "tam/matrix.hpp"

#include <string>
#include <utility>

#include "tam/error.hpp"

namespace tam {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw Error(ErrorCode::DimensionMismatch,
                "matrix data has " + std::to_string(data_.size()) +
                    " values, expected " + std::to_string(rows_ * cols_));
  }
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  const std::size_t cols = rows.front().size();
  Matrix m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) {
      throw Error(ErrorCode::DimensionMismatch,
                  "row " + std::to_string(r) + " has " +
                      std::to_string(rows[r].size()) + " columns, expected " +
                      std::to_string(cols));
    }
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = rows[r][c];
  }
  return m;
}

}  // namespace tam
