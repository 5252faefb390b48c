#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tam/matrix.hpp"

namespace tam {

// Ordered frame embeddings, one row per frame. Construction enforces at least
// one frame, a nonzero common dimension and finite coordinates.
class FeatureSequence {
 public:
  explicit FeatureSequence(Matrix frames);
  static FeatureSequence from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t length() const noexcept { return frames_.rows(); }
  std::size_t dim() const noexcept { return frames_.cols(); }
  std::span<const double> frame(std::size_t t) const { return frames_.row(t); }
  const Matrix& frames() const noexcept { return frames_; }

  bool operator==(const FeatureSequence&) const = default;

 private:
  Matrix frames_;
};

// Frame-level cosine distances, query frames along rows, support frames along
// columns. Entries are finite and lie in [0, 2].
class DistanceMatrix {
 public:
  explicit DistanceMatrix(Matrix entries);
  static DistanceMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t query_length() const noexcept { return entries_.rows(); }
  std::size_t support_length() const noexcept { return entries_.cols(); }
  bool is_square() const noexcept { return entries_.rows() == entries_.cols(); }
  double operator()(std::size_t q, std::size_t s) const { return entries_(q, s); }
  const Matrix& entries() const noexcept { return entries_; }

 private:
  Matrix entries_;
};

// T x (T+2) grid: zero border columns 0 and T+1 around a square distance
// matrix. Built by pad_boundary().
class PaddedDistanceMatrix {
 public:
  std::size_t length() const noexcept { return entries_.rows(); }
  std::size_t padded_cols() const noexcept { return entries_.cols(); }
  double operator()(std::size_t i, std::size_t j) const { return entries_(i, j); }
  const Matrix& entries() const noexcept { return entries_; }

 private:
  friend PaddedDistanceMatrix pad_boundary(const DistanceMatrix& d);
  explicit PaddedDistanceMatrix(Matrix entries) : entries_(std::move(entries)) {}

  Matrix entries_;
};

DistanceMatrix cosine_distance_matrix(const FeatureSequence& a, const FeatureSequence& b);

PaddedDistanceMatrix pad_boundary(const DistanceMatrix& d);

// Frames with norm below this are rejected as degenerate.
inline constexpr double kMinFrameNorm = 1e-12;

}  // namespace tam
