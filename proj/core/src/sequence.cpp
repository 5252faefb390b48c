#include "tam/sequence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "tam/error.hpp"

namespace tam {
namespace {

// Squared frame norms; rejects frames whose norm is below kMinFrameNorm.
std::vector<double> squared_frame_norms(const FeatureSequence& seq, const char* which) {
  std::vector<double> norms(seq.length());
  for (std::size_t t = 0; t < seq.length(); ++t) {
    const auto f = seq.frame(t);
    norms[t] = std::inner_product(f.begin(), f.end(), f.begin(), 0.0);
    if (!(std::sqrt(norms[t]) >= kMinFrameNorm)) {
      throw Error(ErrorCode::DegenerateFrame, std::string(which) + " frame " +
                                                  std::to_string(t) +
                                                  " has near-zero norm");
    }
  }
  return norms;
}

}  // namespace

FeatureSequence::FeatureSequence(Matrix frames) : frames_(std::move(frames)) {
  if (frames_.rows() == 0) {
    throw Error(ErrorCode::InvalidArgument, "feature sequence needs at least one frame");
  }
  if (frames_.cols() == 0) {
    throw Error(ErrorCode::InvalidArgument, "feature sequence frames need dimension >= 1");
  }
  for (std::size_t t = 0; t < frames_.rows(); ++t) {
    for (double x : frames_.row(t)) {
      if (!std::isfinite(x)) {
        throw Error(ErrorCode::InvalidArgument,
                    "frame " + std::to_string(t) + " has a non-finite coordinate");
      }
    }
  }
}

FeatureSequence FeatureSequence::from_rows(const std::vector<std::vector<double>>& rows) {
  return FeatureSequence(Matrix::from_rows(rows));
}

DistanceMatrix::DistanceMatrix(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.empty()) {
    throw Error(ErrorCode::InvalidArgument, "distance matrix must be nonempty");
  }
  for (double x : entries_.values()) {
    if (!std::isfinite(x) || x < 0.0 || x > 2.0) {
      throw Error(ErrorCode::InvalidArgument, "distance entry outside [0, 2]");
    }
  }
}

DistanceMatrix DistanceMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  return DistanceMatrix(Matrix::from_rows(rows));
}

DistanceMatrix cosine_distance_matrix(const FeatureSequence& a, const FeatureSequence& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                "frame dimensions differ: " + std::to_string(a.dim()) + " vs " +
                    std::to_string(b.dim()));
  }
  const auto na = squared_frame_norms(a, "query");
  const auto nb = squared_frame_norms(b, "support");
  Matrix d(a.length(), b.length());
  for (std::size_t l = 0; l < a.length(); ++l) {
    const auto fa = a.frame(l);
    for (std::size_t m = 0; m < b.length(); ++m) {
      const auto fb = b.frame(m);
      double dot = 0.0;
      for (std::size_t k = 0; k < fa.size(); ++k) dot += fa[k] * fb[k];
      // One square root of the product keeps identical frames at exactly
      // cosine 1; rounding can still push the value a hair outside [-1, 1].
      const double cosine = std::clamp(dot / std::sqrt(na[l] * nb[m]), -1.0, 1.0);
      d(l, m) = 1.0 - cosine;
    }
  }
  return DistanceMatrix(std::move(d));
}

PaddedDistanceMatrix pad_boundary(const DistanceMatrix& d) {
  if (!d.is_square()) {
    throw Error(ErrorCode::NonSquare,
                "boundary padding needs equal lengths, got " +
                    std::to_string(d.query_length()) + "x" +
                    std::to_string(d.support_length()));
  }
  const std::size_t t = d.query_length();
  Matrix padded(t, t + 2, 0.0);
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t j = 0; j < t; ++j) padded(i, j + 1) = d(i, j);
  }
  return PaddedDistanceMatrix(std::move(padded));
}

}  // namespace tam
