#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tam/matrix.hpp"
#include "tam/sequence.hpp"

namespace tam {

enum class MatcherKind { Min, Mean, Diagonal, PlainDTW, TAM };
enum class MatchMode { Hard, Soft };

inline constexpr double kDefaultLambda = 0.1;

// A matcher plus its relaxation. Soft mode exists only for PlainDTW and TAM
// and then requires a positive lambda; Mean and Diagonal are differentiable
// in hard mode already, Min is not differentiable at all.
struct MatchingStrategy {
  MatcherKind kind = MatcherKind::TAM;
  MatchMode mode = MatchMode::Hard;
  std::optional<double> lambda;

  static MatchingStrategy hard(MatcherKind kind) { return {kind, MatchMode::Hard, std::nullopt}; }
  static MatchingStrategy soft(MatcherKind kind, double lambda = kDefaultLambda) {
    return {kind, MatchMode::Soft, lambda};
  }

  // Throws InvalidArgument when the combination is not allowed.
  void validate() const;
  bool differentiable() const;
  // Whether the matcher needs T_q == T_s.
  bool requires_square() const;
  // e.g. "tam-soft(0.1)", "mean".
  std::string name() const;
};

// Parses "min", "mean", "diagonal", "dtw", "tam".
MatcherKind parse_matcher_kind(std::string_view text);
std::string_view matcher_kind_name(MatcherKind kind);

// (query frame, support frame), 0-based, in DistanceMatrix coordinates.
struct PathCell {
  std::size_t row = 0;
  std::size_t col = 0;
  bool operator==(const PathCell&) const = default;
};

struct AlignmentOutcome {
  double score = 0.0;
  // d score / d entry. TAM: over the T x (T+2) padded grid. PlainDTW and the
  // pooling matchers: over the T_q x T_s distance matrix.
  std::optional<Matrix> soft_gradient;
  std::optional<std::vector<PathCell>> hard_path;
  std::optional<double> lambda;
};

// Boundary-relaxed alignment over a padded grid. The path starts anywhere in
// the zero column 0, crosses every interior column exactly once moving
// diagonally or horizontally, and leaves through the zero column T+1.
AlignmentOutcome hard_align_tam(const PaddedDistanceMatrix& dp);
AlignmentOutcome soft_align_tam(const PaddedDistanceMatrix& dp, double lambda);

// Classic DTW with fixed endpoints (0,0) and (T-1,T-1).
AlignmentOutcome hard_align_plain_dtw(const DistanceMatrix& d);
AlignmentOutcome soft_align_plain_dtw(const DistanceMatrix& d, double lambda);

double min_score(const DistanceMatrix& d);
double mean_score(const DistanceMatrix& d);
double diagonal_score(const DistanceMatrix& d);

// Score of `d` under `strategy` together with d score / d D over the
// T_q x T_s matrix. Throws NonDifferentiableStrategy for Min and hard DTW/TAM.
struct ScoreGradient {
  double score = 0.0;
  Matrix gradient;
};
ScoreGradient differentiable_score(const DistanceMatrix& d, const MatchingStrategy& strategy);

// Score only, any valid strategy.
double match_score(const DistanceMatrix& d, const MatchingStrategy& strategy);

// Query-first video distance: cosine distances followed by the selected
// matcher. normalize_by_length divides DTW/TAM scores by T for reporting.
AlignmentOutcome video_distance(const FeatureSequence& query, const FeatureSequence& support,
                                const MatchingStrategy& strategy,
                                bool normalize_by_length = false);

namespace detail {

// Unvalidated entry points over raw grids. The recurrences are the same as
// the public functions, but entries may be any finite values, which is what
// finite-difference checks need.
AlignmentOutcome hard_tam_grid(const Matrix& padded);
AlignmentOutcome soft_tam_grid(const Matrix& padded, double lambda);
AlignmentOutcome hard_dtw_grid(const Matrix& d);
AlignmentOutcome soft_dtw_grid(const Matrix& d, double lambda);

}  // namespace detail

}  // namespace tam
