#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "doctest.h"
#include "tam/align.hpp"
#include "tam/error.hpp"
#include "tam/oracle.hpp"
#include "tam/soft_min.hpp"
#include "test_support.hpp"

using namespace tam;
using tam::testing::gibbs_enumeration;
using tam::testing::pad;
using tam::testing::random_distances;
using tam::testing::random_grid;

namespace {

const DistanceMatrix kCrossed = DistanceMatrix::from_rows({{0.1, 0.9}, {0.8, 0.2}});
const DistanceMatrix kLateStart = DistanceMatrix::from_rows({{0.5, 0.5}, {0.0, 0.5}});

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

// Ordering-only fixture over orthonormal atoms a = e0, b = e1.
FeatureSequence atoms(const char* pattern) {
  std::vector<std::vector<double>> rows;
  for (const char* c = pattern; *c; ++c) rows.push_back(*c == 'a' ? std::vector{1.0, 0.0} : std::vector{0.0, 1.0});
  return FeatureSequence::from_rows(rows);
}

}  // namespace

TEST_SUITE("cosine distance") {
  TEST_CASE("identical, orthogonal and antipodal frames") {
    const auto e0 = FeatureSequence::from_rows({{1.0, 0.0}});
    CHECK(cosine_distance_matrix(e0, e0)(0, 0) == doctest::Approx(0.0));
    CHECK(cosine_distance_matrix(e0, FeatureSequence::from_rows({{0.0, 1.0}}))(0, 0) ==
          doctest::Approx(1.0));
    CHECK(cosine_distance_matrix(e0, FeatureSequence::from_rows({{-1.0, 0.0}}))(0, 0) ==
          doctest::Approx(2.0));
  }

  TEST_CASE("scale invariant and shaped query x support") {
    const auto a = FeatureSequence::from_rows({{3.0, 4.0}, {1.0, 1.0}, {0.0, 2.0}});
    const auto b = FeatureSequence::from_rows({{6.0, 8.0}, {-2.0, 0.5}});
    const auto d = cosine_distance_matrix(a, b);
    CHECK(d.query_length() == 3);
    CHECK(d.support_length() == 2);
    CHECK(d(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
    const double cos12 = (1.0 * -2.0 + 1.0 * 0.5) / (std::sqrt(2.0) * std::sqrt(4.25));
    CHECK(d(1, 1) == doctest::Approx(1.0 - cos12));
  }

  TEST_CASE("errors") {
    const auto a = FeatureSequence::from_rows({{1.0, 0.0}});
    const auto b = FeatureSequence::from_rows({{1.0, 0.0, 0.0}});
    CHECK(code_of([&] { cosine_distance_matrix(a, b); }) == ErrorCode::DimensionMismatch);
    const auto z = FeatureSequence::from_rows({{1.0, 0.0}, {0.0, 0.0}});
    CHECK(code_of([&] { cosine_distance_matrix(a, z); }) == ErrorCode::DegenerateFrame);
    CHECK(code_of([&] { FeatureSequence::from_rows({{1.0, std::nan("")}}); }) ==
          ErrorCode::InvalidArgument);
    CHECK(code_of([&] { FeatureSequence(Matrix(0, 2)); }) == ErrorCode::InvalidArgument);
  }

  TEST_CASE("entries stay in [0, 2] for random sequences") {
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 50; ++rep) {
      const auto d = cosine_distance_matrix(tam::testing::random_sequence(5, 4, rng),
                                            tam::testing::random_sequence(6, 4, rng));
      for (double x : d.entries().values()) {
        CHECK(x >= 0.0);
        CHECK(x <= 2.0);
      }
    }
  }
}

TEST_SUITE("pad_boundary") {
  TEST_CASE("T = 1") {
    const auto p = pad_boundary(DistanceMatrix::from_rows({{0.5}}));
    REQUIRE(p.padded_cols() == 3);
    CHECK(p(0, 0) == 0.0);
    CHECK(p(0, 1) == 0.5);
    CHECK(p(0, 2) == 0.0);
  }

  TEST_CASE("structure for T = 2") {
    const auto p = pad_boundary(kCrossed);
    CHECK(p.entries() == Matrix::from_rows({{0, 0.1, 0.9, 0}, {0, 0.8, 0.2, 0}}));
  }

  TEST_CASE("rectangular input is rejected") {
    const DistanceMatrix d(Matrix(3, 4, 0.5));
    CHECK(code_of([&] { pad_boundary(d); }) == ErrorCode::NonSquare);
  }
}

TEST_SUITE("soft_min") {
  TEST_CASE("single value") {
    const double v[] = {0.0};
    CHECK(soft_min(v, 0.1) == 0.0);
  }

  TEST_CASE("two equal values") {
    const double v[] = {1.0, 1.0};
    CHECK(soft_min(v, 0.1) == doctest::Approx(0.930685281944005).epsilon(1e-14));
  }

  TEST_CASE("small lambda approaches the minimum") {
    const double v[] = {0.2, 0.5};
    CHECK(std::abs(soft_min(v, 0.001) - 0.2) < 1e-3);
  }

  TEST_CASE("infinite entries carry no mass, all-infinite is an error") {
    constexpr double inf = std::numeric_limits<double>::infinity();
    const double mixed[] = {inf, 0.3, inf};
    CHECK(soft_min(mixed, 0.5) == doctest::Approx(0.3));
    const double none[] = {inf, inf};
    CHECK(code_of([&] { soft_min(none, 0.1); }) == ErrorCode::AllInfinite);
    CHECK(code_of([&] { soft_min(mixed, 0.0); }) == ErrorCode::InvalidArgument);
  }

  TEST_CASE("no overflow for large values and tiny lambda") {
    const double v[] = {16.0, 15.0, 17.0};
    const double s = soft_min(v, 0.01);
    CHECK(std::isfinite(s));
    CHECK(s <= 15.0);
    CHECK(s >= 15.0 - 0.01 * std::log(3.0));
  }

  TEST_CASE("weights sum to one") {
    const double v[] = {0.4, 0.1, 0.9};
    double w[3];
    soft_min_weights(v, 0.2, w);
    CHECK(w[0] + w[1] + w[2] == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_SUITE("hard TAM") {
  TEST_CASE("crossed fixture takes the diagonal") {
    const auto r = hard_align_tam(pad_boundary(kCrossed));
    CHECK(r.score == doctest::Approx(0.3).epsilon(1e-15));
    REQUIRE(r.hard_path);
    CHECK(*r.hard_path == std::vector<PathCell>{{0, 0}, {1, 1}});
    CHECK_FALSE(r.soft_gradient);
  }

  TEST_CASE("path may start on a later query frame") {
    const auto r = hard_align_tam(pad_boundary(kLateStart));
    CHECK(r.score == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(*r.hard_path == std::vector<PathCell>{{1, 0}, {1, 1}});
  }

  TEST_CASE("all zeros") {
    const auto r = hard_align_tam(pad_boundary(DistanceMatrix(Matrix(4, 4, 0.0))));
    CHECK(r.score == 0.0);
  }

  TEST_CASE("identical sequences align along the diagonal") {
    std::mt19937_64 rng(3);
    const auto a = tam::testing::random_sequence(5, 3, rng);
    const auto r = video_distance(a, a, MatchingStrategy::hard(MatcherKind::TAM));
    CHECK(r.score == 0.0);
    for (std::size_t j = 0; j < 5; ++j) CHECK((*r.hard_path)[j] == PathCell{j, j});
  }
}

TEST_SUITE("soft TAM") {
  TEST_CASE("all zeros lies in [-lambda T ln 3, 0]") {
    for (double lambda : {0.01, 0.1, 1.0}) {
      const auto r = soft_align_tam(pad_boundary(DistanceMatrix(Matrix(5, 5, 0.0))), lambda);
      CHECK(r.score <= 0.0);
      CHECK(r.score >= -lambda * 5 * std::log(3.0));
    }
  }

  TEST_CASE("tiny lambda recovers the hard score") {
    const auto r = soft_align_tam(pad_boundary(kCrossed), 1e-3);
    CHECK(std::abs(r.score - 0.3) < 2e-3);
    CHECK_FALSE(r.hard_path);
    CHECK(r.lambda == 1e-3);
  }

  TEST_CASE("interior column sums of the gradient are one") {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 10; ++rep) {
      const auto r = soft_align_tam(pad_boundary(random_distances(4, rng)), 0.1);
      const Matrix& g = *r.soft_gradient;
      REQUIRE(g.cols() == 6);
      for (std::size_t j = 1; j <= 4; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < 4; ++i) s += g(i, j);
        CHECK(std::abs(s - 1.0) < 1e-9);
      }
      for (double x : g.values()) {
        CHECK(x >= 0.0);
        CHECK(x <= 1.0 + 1e-12);
      }
    }
  }

  TEST_CASE("score and gradient match explicit Gibbs path enumeration") {
    std::mt19937_64 rng(5);
    for (std::size_t t : {1, 2, 3, 5}) {
      const Matrix grid = pad(random_grid(t, t, rng));
      for (double lambda : {0.05, 0.3, 2.0}) {
        const auto r = detail::soft_tam_grid(grid, lambda);
        const auto oracle = gibbs_enumeration(grid, lambda, true);
        CHECK(r.score == doctest::Approx(oracle.score).epsilon(1e-12));
        CHECK(tam::testing::max_relative_error(*r.soft_gradient, oracle.occupancy, 1e-12) < 1e-9);
      }
    }
  }

  TEST_CASE("padded path count stays below 3^T") {
    for (std::size_t t = 1; t <= 7; ++t) {
      const auto oracle = gibbs_enumeration(Matrix(t, t + 2, 0.0), 1.0, true);
      CHECK(static_cast<double>(oracle.paths) <= std::pow(3.0, static_cast<double>(t)));
    }
  }

  TEST_CASE("gradient including border columns matches finite differences") {
    std::mt19937_64 rng(21);
    const Matrix grid = pad(random_grid(4, 4, rng));
    const double lambda = 0.2;
    const auto r = detail::soft_tam_grid(grid, lambda);
    const Matrix fd = tam::testing::finite_difference(
        [&](const Matrix& m) { return detail::soft_tam_grid(m, lambda).score; }, grid);
    CHECK(tam::testing::max_relative_error(*r.soft_gradient, fd) < 1e-4);
  }
}

TEST_SUITE("plain DTW") {
  TEST_CASE("examples") {
    CHECK(hard_align_plain_dtw(kCrossed).score == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(hard_align_plain_dtw(kLateStart).score == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(hard_align_plain_dtw(DistanceMatrix::from_rows({{0.7}})).score == 0.7);
  }

  TEST_CASE("ties between moves prefer the diagonal") {
    const auto r = hard_align_plain_dtw(kLateStart);
    CHECK(*r.hard_path == std::vector<PathCell>{{0, 0}, {1, 1}});
  }

  TEST_CASE("rectangular input is rejected") {
    CHECK(code_of([] { hard_align_plain_dtw(DistanceMatrix(Matrix(2, 3, 0.1))); }) ==
          ErrorCode::NonSquare);
    CHECK(code_of([] { soft_align_plain_dtw(DistanceMatrix(Matrix(2, 3, 0.1)), 0.1); }) ==
          ErrorCode::NonSquare);
  }

  TEST_CASE("soft variant") {
    CHECK(std::abs(soft_align_plain_dtw(kCrossed, 1e-3).score - 0.3) < 2e-3);
    const std::size_t t = 4;
    const double lambda = 0.1;
    const auto zero = soft_align_plain_dtw(DistanceMatrix(Matrix(t, t, 0.0)), lambda);
    CHECK(zero.score <= 0.0);
    CHECK(zero.score >= -lambda * (2 * t - 1) * std::log(3.0));

    std::mt19937_64 rng(8);
    const auto r = soft_align_plain_dtw(random_distances(t, rng), lambda);
    double total = 0.0;
    for (double x : r.soft_gradient->values()) {
      CHECK(x >= 0.0);
      CHECK(x <= 1.0 + 1e-12);
      total += x;
    }
    CHECK(total >= t - 1e-9);
    CHECK(total <= 2 * t - 1 + 1e-9);
  }

  TEST_CASE("soft variant matches Gibbs enumeration and finite differences") {
    std::mt19937_64 rng(9);
    const Matrix grid = random_grid(4, 4, rng);
    const auto r = detail::soft_dtw_grid(grid, 0.15);
    const auto oracle = gibbs_enumeration(grid, 0.15, false);
    CHECK(r.score == doctest::Approx(oracle.score).epsilon(1e-12));
    CHECK(tam::testing::max_relative_error(*r.soft_gradient, oracle.occupancy, 1e-12) < 1e-9);
    const Matrix fd = tam::testing::finite_difference(
        [](const Matrix& m) { return detail::soft_dtw_grid(m, 0.15).score; }, grid);
    CHECK(tam::testing::max_relative_error(*r.soft_gradient, fd) < 1e-4);
  }
}

TEST_SUITE("pooling matchers") {
  TEST_CASE("min") {
    CHECK(min_score(kCrossed) == 0.1);
    CHECK(min_score(DistanceMatrix(Matrix(3, 3, 0.0))) == 0.0);
    CHECK(min_score(DistanceMatrix::from_rows({{2.0}})) == 2.0);
  }

  TEST_CASE("mean") {
    CHECK(mean_score(kCrossed) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(mean_score(DistanceMatrix(Matrix(3, 5, 0.25))) == doctest::Approx(0.25));
  }

  TEST_CASE("mean ignores frame order") {
    std::mt19937_64 rng(4);
    const auto a = tam::testing::random_sequence(6, 3, rng);
    const auto b = tam::testing::random_sequence(6, 3, rng);
    std::vector<std::size_t> order(6);
    std::iota(order.begin(), order.end(), 0);
    for (int rep = 0; rep < 5; ++rep) {
      std::shuffle(order.begin(), order.end(), rng);
      Matrix shuffled(6, 3);
      for (std::size_t t = 0; t < 6; ++t)
        std::copy(b.frame(order[t]).begin(), b.frame(order[t]).end(), shuffled.row(t).begin());
      const auto base = mean_score(cosine_distance_matrix(a, b));
      CHECK(mean_score(cosine_distance_matrix(a, FeatureSequence(shuffled))) ==
            doctest::Approx(base).epsilon(1e-12));
    }
  }

  TEST_CASE("diagonal") {
    CHECK(diagonal_score(kCrossed) == doctest::Approx(0.15).epsilon(1e-15));
    CHECK(diagonal_score(DistanceMatrix::from_rows({{0.0, 1.0}, {1.0, 0.0}})) == 0.0);
    CHECK(diagonal_score(DistanceMatrix::from_rows({{1.3}})) == 1.3);
    CHECK(code_of([] { diagonal_score(DistanceMatrix(Matrix(2, 3, 0.1))); }) ==
          ErrorCode::NonSquare);
  }
}

TEST_SUITE("strategy and video_distance") {
  TEST_CASE("strategy validation") {
    CHECK(code_of([] { MatchingStrategy{MatcherKind::Mean, MatchMode::Soft, 0.1}.validate(); }) ==
          ErrorCode::InvalidArgument);
    CHECK(code_of([] { MatchingStrategy{MatcherKind::TAM, MatchMode::Soft, 0.0}.validate(); }) ==
          ErrorCode::InvalidArgument);
    CHECK(code_of([] { MatchingStrategy{MatcherKind::TAM, MatchMode::Hard, 0.1}.validate(); }) ==
          ErrorCode::InvalidArgument);
    CHECK(MatchingStrategy::hard(MatcherKind::Mean).differentiable());
    CHECK(MatchingStrategy::hard(MatcherKind::Diagonal).differentiable());
    CHECK_FALSE(MatchingStrategy::hard(MatcherKind::Min).differentiable());
    CHECK_FALSE(MatchingStrategy::hard(MatcherKind::TAM).differentiable());
    CHECK(MatchingStrategy::soft(MatcherKind::PlainDTW).differentiable());
    CHECK(code_of([] { differentiable_score(kCrossed, MatchingStrategy::hard(MatcherKind::Min)); }) ==
          ErrorCode::NonDifferentiableStrategy);
  }

  TEST_CASE("mean of a sequence against itself is positive") {
    const auto a = FeatureSequence::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
    CHECK(video_distance(a, a, MatchingStrategy::hard(MatcherKind::Mean)).score > 0.0);
    CHECK(video_distance(a, a, MatchingStrategy::hard(MatcherKind::TAM)).score == 0.0);
  }

  TEST_CASE("TAM through the facade equals the oracle at T = 4") {
    std::mt19937_64 rng(17);
    for (int rep = 0; rep < 20; ++rep) {
      const auto a = tam::testing::random_sequence(4, 3, rng);
      const auto b = tam::testing::random_sequence(4, 3, rng);
      const auto d = cosine_distance_matrix(a, b);
      CHECK(video_distance(a, b, MatchingStrategy::hard(MatcherKind::TAM)).score ==
            doctest::Approx(brute_force_align(d, OracleVariant::TAM)).epsilon(1e-12));
    }
  }

  TEST_CASE("normalization divides alignment scores by T only") {
    std::mt19937_64 rng(2);
    const auto a = tam::testing::random_sequence(4, 3, rng);
    const auto b = tam::testing::random_sequence(4, 3, rng);
    const auto tam_s = MatchingStrategy::hard(MatcherKind::TAM);
    CHECK(video_distance(a, b, tam_s, true).score ==
          doctest::Approx(video_distance(a, b, tam_s).score / 4.0));
    const auto mean_s = MatchingStrategy::hard(MatcherKind::Mean);
    CHECK(video_distance(a, b, mean_s, true).score == video_distance(a, b, mean_s).score);
  }

  TEST_CASE("TAM is asymmetric") {
    // Support frames may repeat a query frame, but query frames between the
    // first and last matched one can never be skipped.
    const auto x = atoms("bab");
    const auto y = atoms("aab");
    const auto s = MatchingStrategy::hard(MatcherKind::TAM);
    CHECK(video_distance(x, y, s).score == 0.0);
    CHECK(video_distance(y, x, s).score == doctest::Approx(1.0));
  }

  TEST_CASE("differentiable_score gradients match finite differences") {
    std::mt19937_64 rng(31);
    const Matrix base = random_grid(4, 4, rng, 0.2, 1.8);
    for (const auto& s : {MatchingStrategy::hard(MatcherKind::Mean),
                          MatchingStrategy::hard(MatcherKind::Diagonal),
                          MatchingStrategy::soft(MatcherKind::PlainDTW, 0.1),
                          MatchingStrategy::soft(MatcherKind::TAM, 0.1)}) {
      const auto sg = differentiable_score(DistanceMatrix(base), s);
      const Matrix fd = tam::testing::finite_difference(
          [&](const Matrix& m) { return differentiable_score(DistanceMatrix(m), s).score; }, base);
      CHECK(tam::testing::max_relative_error(sg.gradient, fd) < 1e-4);
    }
  }
}

TEST_SUITE("brute-force oracle") {
  TEST_CASE("examples") {
    CHECK(brute_force_align(kCrossed, OracleVariant::TAM) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(brute_force_align(kLateStart, OracleVariant::TAM) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(brute_force_align(kLateStart, OracleVariant::PlainDTW) ==
          doctest::Approx(1.0).epsilon(1e-15));
    const auto one = DistanceMatrix::from_rows({{0.42}});
    CHECK(brute_force_align(one, OracleVariant::TAM) == 0.42);
    CHECK(brute_force_align(one, OracleVariant::PlainDTW) == 0.42);
  }

  TEST_CASE("size guard") {
    std::mt19937_64 rng(1);
    CHECK_NOTHROW(brute_force_align(random_distances(8, rng), OracleVariant::PlainDTW));
    CHECK(code_of([&] { brute_force_align(random_distances(9, rng), OracleVariant::TAM); }) ==
          ErrorCode::TooLarge);
  }
}

TEST_SUITE("properties") {
  TEST_CASE("DP equals exhaustive enumeration") {
    std::mt19937_64 rng(101);
    for (int rep = 0; rep < 200; ++rep) {
      const std::size_t t = 1 + rep % 6;
      const auto d = random_distances(t, rng);
      CHECK(std::abs(hard_align_tam(pad_boundary(d)).score -
                     brute_force_align(d, OracleVariant::TAM)) < 1e-12);
      CHECK(std::abs(hard_align_plain_dtw(d).score -
                     brute_force_align(d, OracleVariant::PlainDTW)) < 1e-12);
    }
  }

  TEST_CASE("soft is a lower bound within lambda T ln 3") {
    std::mt19937_64 rng(102);
    for (int rep = 0; rep < 20; ++rep) {
      const auto dp = pad_boundary(random_distances(8, rng));
      const double hard = hard_align_tam(dp).score;
      for (double lambda : {1.0, 0.1, 0.01, 0.001}) {
        const double soft = soft_align_tam(dp, lambda).score;
        CHECK(soft <= hard + 1e-12);
        CHECK(hard - soft <= lambda * 8 * std::log(3.0));
      }
    }
  }

  TEST_CASE("shift covariance") {
    std::mt19937_64 rng(103);
    for (int rep = 0; rep < 20; ++rep) {
      const std::size_t t = 2 + rep % 5;
      const Matrix d = random_grid(t, t, rng, 0.0, 1.0);
      const double c = std::uniform_real_distribution<double>(-0.5, 0.9)(rng);
      Matrix shifted = d;
      for (double& x : shifted.values()) x += c;
      const double ct = c * static_cast<double>(t);
      CHECK(std::abs(detail::hard_tam_grid(pad(shifted)).score -
                     detail::hard_tam_grid(pad(d)).score - ct) < 1e-9);
      CHECK(std::abs(detail::soft_tam_grid(pad(shifted), 0.1).score -
                     detail::soft_tam_grid(pad(d), 0.1).score - ct) < 1e-9);
    }
  }

  TEST_CASE("lowering one entry never raises the hard score") {
    std::mt19937_64 rng(104);
    std::uniform_int_distribution<std::size_t> cell(0, 4);
    std::uniform_real_distribution<double> frac(0.0, 1.0);
    for (int rep = 0; rep < 100; ++rep) {
      Matrix d = random_grid(5, 5, rng);
      const double before = hard_align_tam(pad_boundary(DistanceMatrix(d))).score;
      d(cell(rng), cell(rng)) *= frac(rng);
      CHECK(hard_align_tam(pad_boundary(DistanceMatrix(d))).score <= before);
    }
  }

  TEST_CASE("recovered paths are valid and reproduce the score") {
    std::mt19937_64 rng(105);
    for (int rep = 0; rep < 100; ++rep) {
      const std::size_t t = 1 + rep % 7;
      const auto d = random_distances(t, rng);

      const auto tam_r = hard_align_tam(pad_boundary(d));
      const auto& tp = *tam_r.hard_path;
      REQUIRE(tp.size() == t);
      double cost = 0.0;
      for (std::size_t j = 0; j < t; ++j) {
        CHECK(tp[j].col == j);
        if (j > 0) CHECK((tp[j].row == tp[j - 1].row || tp[j].row == tp[j - 1].row + 1));
        cost += d(tp[j].row, tp[j].col);
      }
      CHECK(cost == doctest::Approx(tam_r.score).epsilon(1e-12));
      CHECK(tam_r.score >= 0.0);
      CHECK(tam_r.score <= 2.0 * static_cast<double>(t));

      const auto dtw_r = hard_align_plain_dtw(d);
      const auto& dp = *dtw_r.hard_path;
      CHECK(dp.front() == PathCell{0, 0});
      CHECK(dp.back() == PathCell{t - 1, t - 1});
      double dcost = d(0, 0);
      for (std::size_t s = 1; s < dp.size(); ++s) {
        const auto di = dp[s].row - dp[s - 1].row;
        const auto dj = dp[s].col - dp[s - 1].col;
        CHECK(((di == 1 && dj == 1) || (di == 1 && dj == 0) || (di == 0 && dj == 1)));
        dcost += d(dp[s].row, dp[s].col);
      }
      CHECK(dcost == doctest::Approx(dtw_r.score).epsilon(1e-12));
    }
  }

  TEST_CASE("frame order changes TAM but not Mean") {
    const auto query = atoms("aabb");
    const auto support = atoms("aabb");
    const auto reversed = atoms("bbaa");
    const auto tam_s = MatchingStrategy::hard(MatcherKind::TAM);
    const auto mean_s = MatchingStrategy::hard(MatcherKind::Mean);
    CHECK(video_distance(query, support, tam_s).score == 0.0);
    CHECK(video_distance(query, reversed, tam_s).score == doctest::Approx(2.0));
    CHECK(video_distance(query, support, mean_s).score ==
          video_distance(query, reversed, mean_s).score);
  }
}
