#include "tam/align.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <string>

#include "tam/error.hpp"
#include "tam/soft_min.hpp"

namespace tam {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Monotone lattice from (0,0) to (rows-1, cols-1). Diagonal and horizontal
// moves are always allowed; vertical moves only in columns where
// vertical_allowed() holds. Predecessors are listed in backtracking
// preference order: diagonal, horizontal, vertical.
struct Lattice {
  const Matrix& cost;
  bool tam_borders;  // vertical only in columns 0 and cols-1

  std::size_t rows() const { return cost.rows(); }
  std::size_t cols() const { return cost.cols(); }

  bool vertical_allowed(std::size_t j) const {
    return !tam_borders || j == 0 || j + 1 == cols();
  }

  // Fills `out` with predecessor cells (row, col); returns how many.
  std::size_t predecessors(std::size_t i, std::size_t j,
                           std::array<PathCell, 3>& out) const {
    std::size_t n = 0;
    if (i > 0 && j > 0) out[n++] = {i - 1, j - 1};
    if (j > 0) out[n++] = {i, j - 1};
    if (i > 0 && vertical_allowed(j)) out[n++] = {i - 1, j};
    return n;
  }
};

void check_grid(const Matrix& m, bool padded) {
  if (m.empty()) throw Error(ErrorCode::InvalidArgument, "alignment grid is empty");
  if (padded && m.cols() != m.rows() + 2) {
    throw Error(ErrorCode::NonSquare, "padded grid must be T x (T+2)");
  }
  if (!padded && m.rows() != m.cols()) {
    throw Error(ErrorCode::NonSquare, "DTW needs a square distance matrix, got " +
                                          std::to_string(m.rows()) + "x" +
                                          std::to_string(m.cols()));
  }
  for (double x : m.values()) {
    if (!std::isfinite(x)) throw Error(ErrorCode::InvalidArgument, "non-finite grid entry");
  }
}

Matrix hard_forward(const Lattice& lat) {
  Matrix acc(lat.rows(), lat.cols(), kInf);
  std::array<PathCell, 3> preds;
  for (std::size_t i = 0; i < lat.rows(); ++i) {
    for (std::size_t j = 0; j < lat.cols(); ++j) {
      if (i == 0 && j == 0) {
        acc(0, 0) = lat.cost(0, 0);
        continue;
      }
      double best = kInf;
      const std::size_t n = lat.predecessors(i, j, preds);
      for (std::size_t p = 0; p < n; ++p) best = std::min(best, acc(preds[p].row, preds[p].col));
      if (std::isfinite(best)) acc(i, j) = lat.cost(i, j) + best;
    }
  }
  return acc;
}

std::vector<PathCell> backtrack(const Lattice& lat, const Matrix& acc) {
  std::vector<PathCell> path;
  PathCell cur{lat.rows() - 1, lat.cols() - 1};
  path.push_back(cur);
  std::array<PathCell, 3> preds;
  while (cur.row != 0 || cur.col != 0) {
    const std::size_t n = lat.predecessors(cur.row, cur.col, preds);
    PathCell next = preds[0];
    double best = acc(next.row, next.col);
    for (std::size_t p = 1; p < n; ++p) {
      const double v = acc(preds[p].row, preds[p].col);
      if (v < best) {
        best = v;
        next = preds[p];
      }
    }
    if (!std::isfinite(best)) throw Error(ErrorCode::Internal, "backtracking hit an unreachable cell");
    cur = next;
    path.push_back(cur);
  }
  std::reverse(path.begin(), path.end());
  return path;
}

// Forward soft recurrence followed by the exact reverse pass. The gradient
// with respect to each cost entry equals the adjoint of its cumulative cell,
// which is the cell's occupancy probability under the Gibbs path measure.
AlignmentOutcome soft_solve(const Lattice& lat, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::InvalidArgument, "smoothing lambda must be positive and finite");
  }
  const std::size_t rows = lat.rows();
  const std::size_t cols = lat.cols();
  Matrix acc(rows, cols, kInf);
  std::array<PathCell, 3> preds;
  std::array<double, 3> vals;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      if (i == 0 && j == 0) {
        acc(0, 0) = lat.cost(0, 0);
        continue;
      }
      const std::size_t n = lat.predecessors(i, j, preds);
      bool any_finite = false;
      for (std::size_t p = 0; p < n; ++p) {
        vals[p] = acc(preds[p].row, preds[p].col);
        any_finite = any_finite || std::isfinite(vals[p]);
      }
      if (any_finite) acc(i, j) = lat.cost(i, j) + soft_min({vals.data(), n}, lambda);
    }
  }

  Matrix adjoint(rows, cols, 0.0);
  adjoint(rows - 1, cols - 1) = 1.0;
  for (std::size_t idx = rows * cols; idx-- > 1;) {
    const std::size_t i = idx / cols;
    const std::size_t j = idx % cols;
    const double e = adjoint(i, j);
    if (e == 0.0 || !std::isfinite(acc(i, j))) continue;
    const double smoothed = acc(i, j) - lat.cost(i, j);
    const std::size_t n = lat.predecessors(i, j, preds);
    for (std::size_t p = 0; p < n; ++p) {
      const double v = acc(preds[p].row, preds[p].col);
      if (!std::isfinite(v)) continue;
      adjoint(preds[p].row, preds[p].col) += e * std::exp((smoothed - v) / lambda);
    }
  }

  AlignmentOutcome out;
  out.score = acc(rows - 1, cols - 1);
  out.soft_gradient = std::move(adjoint);
  out.lambda = lambda;
  return out;
}

}  // namespace

namespace detail {

AlignmentOutcome hard_tam_grid(const Matrix& padded) {
  check_grid(padded, true);
  const Lattice lat{padded, true};
  const Matrix acc = hard_forward(lat);
  AlignmentOutcome out;
  out.score = acc(lat.rows() - 1, lat.cols() - 1);
  std::vector<PathCell> interior;
  for (const PathCell& c : backtrack(lat, acc)) {
    if (c.col >= 1 && c.col + 1 < lat.cols()) interior.push_back({c.row, c.col - 1});
  }
  out.hard_path = std::move(interior);
  return out;
}

AlignmentOutcome soft_tam_grid(const Matrix& padded, double lambda) {
  check_grid(padded, true);
  return soft_solve(Lattice{padded, true}, lambda);
}

AlignmentOutcome hard_dtw_grid(const Matrix& d) {
  check_grid(d, false);
  const Lattice lat{d, false};
  const Matrix acc = hard_forward(lat);
  AlignmentOutcome out;
  out.score = acc(lat.rows() - 1, lat.cols() - 1);
  out.hard_path = backtrack(lat, acc);
  return out;
}

AlignmentOutcome soft_dtw_grid(const Matrix& d, double lambda) {
  check_grid(d, false);
  return soft_solve(Lattice{d, false}, lambda);
}

}  // namespace detail

void MatchingStrategy::validate() const {
  if (mode == MatchMode::Soft) {
    if (kind != MatcherKind::PlainDTW && kind != MatcherKind::TAM) {
      throw Error(ErrorCode::InvalidArgument,
                  std::string("soft mode is not defined for ") +
                      std::string(matcher_kind_name(kind)));
    }
    if (!lambda || !(*lambda > 0.0) || !std::isfinite(*lambda)) {
      throw Error(ErrorCode::InvalidArgument, "soft mode needs a positive lambda");
    }
  } else if (lambda) {
    throw Error(ErrorCode::InvalidArgument, "hard mode takes no lambda");
  }
}

bool MatchingStrategy::differentiable() const {
  switch (kind) {
    case MatcherKind::Mean:
    case MatcherKind::Diagonal:
      return true;
    case MatcherKind::PlainDTW:
    case MatcherKind::TAM:
      return mode == MatchMode::Soft;
    case MatcherKind::Min:
      return false;
  }
  return false;
}

bool MatchingStrategy::requires_square() const {
  return kind != MatcherKind::Min && kind != MatcherKind::Mean;
}

std::string MatchingStrategy::name() const {
  std::string s(matcher_kind_name(kind));
  if (mode == MatchMode::Soft) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "-soft(%g)", lambda.value_or(0.0));
    s += buf;
  }
  return s;
}

MatcherKind parse_matcher_kind(std::string_view text) {
  if (text == "min") return MatcherKind::Min;
  if (text == "mean") return MatcherKind::Mean;
  if (text == "diagonal") return MatcherKind::Diagonal;
  if (text == "dtw") return MatcherKind::PlainDTW;
  if (text == "tam") return MatcherKind::TAM;
  throw Error(ErrorCode::InvalidArgument, "unknown matcher '" + std::string(text) + "'");
}

std::string_view matcher_kind_name(MatcherKind kind) {
  switch (kind) {
    case MatcherKind::Min: return "min";
    case MatcherKind::Mean: return "mean";
    case MatcherKind::Diagonal: return "diagonal";
    case MatcherKind::PlainDTW: return "dtw";
    case MatcherKind::TAM: return "tam";
  }
  return "unknown";
}

AlignmentOutcome hard_align_tam(const PaddedDistanceMatrix& dp) {
  return detail::hard_tam_grid(dp.entries());
}

AlignmentOutcome soft_align_tam(const PaddedDistanceMatrix& dp, double lambda) {
  return detail::soft_tam_grid(dp.entries(), lambda);
}

AlignmentOutcome hard_align_plain_dtw(const DistanceMatrix& d) {
  return detail::hard_dtw_grid(d.entries());
}

AlignmentOutcome soft_align_plain_dtw(const DistanceMatrix& d, double lambda) {
  return detail::soft_dtw_grid(d.entries(), lambda);
}

double min_score(const DistanceMatrix& d) {
  const auto v = d.entries().values();
  return *std::min_element(v.begin(), v.end());
}

double mean_score(const DistanceMatrix& d) {
  const auto v = d.entries().values();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double diagonal_score(const DistanceMatrix& d) {
  if (!d.is_square()) {
    throw Error(ErrorCode::NonSquare, "diagonal matcher needs a square distance matrix");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < d.query_length(); ++i) s += d(i, i);
  return s / static_cast<double>(d.query_length());
}

ScoreGradient differentiable_score(const DistanceMatrix& d, const MatchingStrategy& strategy) {
  strategy.validate();
  if (!strategy.differentiable()) {
    throw Error(ErrorCode::NonDifferentiableStrategy, strategy.name() + " has no gradient");
  }
  const std::size_t tq = d.query_length();
  const std::size_t ts = d.support_length();
  ScoreGradient out;
  switch (strategy.kind) {
    case MatcherKind::Mean:
      out.score = mean_score(d);
      out.gradient = Matrix(tq, ts, 1.0 / static_cast<double>(tq * ts));
      break;
    case MatcherKind::Diagonal:
      out.score = diagonal_score(d);
      out.gradient = Matrix(tq, ts, 0.0);
      for (std::size_t i = 0; i < tq; ++i) out.gradient(i, i) = 1.0 / static_cast<double>(tq);
      break;
    case MatcherKind::PlainDTW: {
      auto r = soft_align_plain_dtw(d, *strategy.lambda);
      out.score = r.score;
      out.gradient = std::move(*r.soft_gradient);
      break;
    }
    case MatcherKind::TAM: {
      auto r = soft_align_tam(pad_boundary(d), *strategy.lambda);
      out.score = r.score;
      out.gradient = Matrix(tq, ts);
      for (std::size_t i = 0; i < tq; ++i) {
        for (std::size_t j = 0; j < ts; ++j) out.gradient(i, j) = (*r.soft_gradient)(i, j + 1);
      }
      break;
    }
    case MatcherKind::Min:
      break;
  }
  return out;
}

namespace {

AlignmentOutcome match_outcome(const DistanceMatrix& d, const MatchingStrategy& strategy) {
  strategy.validate();
  if (strategy.requires_square() && !d.is_square()) {
    throw Error(ErrorCode::NonSquare, strategy.name() + " needs equal-length sequences");
  }
  const bool soft = strategy.mode == MatchMode::Soft;
  switch (strategy.kind) {
    case MatcherKind::Min: return {min_score(d), std::nullopt, std::nullopt, std::nullopt};
    case MatcherKind::Mean: return {mean_score(d), std::nullopt, std::nullopt, std::nullopt};
    case MatcherKind::Diagonal:
      return {diagonal_score(d), std::nullopt, std::nullopt, std::nullopt};
    case MatcherKind::PlainDTW:
      return soft ? soft_align_plain_dtw(d, *strategy.lambda) : hard_align_plain_dtw(d);
    case MatcherKind::TAM: {
      const auto dp = pad_boundary(d);
      return soft ? soft_align_tam(dp, *strategy.lambda) : hard_align_tam(dp);
    }
  }
  throw Error(ErrorCode::Internal, "unhandled matcher kind");
}

}  // namespace

double match_score(const DistanceMatrix& d, const MatchingStrategy& strategy) {
  return match_outcome(d, strategy).score;
}

AlignmentOutcome video_distance(const FeatureSequence& query, const FeatureSequence& support,
                                const MatchingStrategy& strategy, bool normalize_by_length) {
  strategy.validate();
  auto out = match_outcome(cosine_distance_matrix(query, support), strategy);
  if (normalize_by_length &&
      (strategy.kind == MatcherKind::TAM || strategy.kind == MatcherKind::PlainDTW)) {
    out.score /= static_cast<double>(query.length());
  }
  return out;
}

}  // namespace tam
