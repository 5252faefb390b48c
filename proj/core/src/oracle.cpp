#include "tam/oracle.hpp"

#include <algorithm>
#include <limits>
#include <string>
#include <vector>

#include "tam/error.hpp"

namespace tam {
namespace {

double enumerate_row_assignments(const DistanceMatrix& d) {
  const std::size_t t = d.query_length();
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> rows(t);
  // Start row r0 free, then T-1 binary steps encoded in a bitmask.
  for (std::size_t r0 = 0; r0 < t; ++r0) {
    for (std::size_t mask = 0; mask < (std::size_t{1} << (t - 1)); ++mask) {
      rows[0] = r0;
      bool ok = true;
      for (std::size_t j = 1; j < t && ok; ++j) {
        rows[j] = rows[j - 1] + ((mask >> (j - 1)) & 1U);
        ok = rows[j] < t;
      }
      if (!ok) continue;
      double cost = 0.0;
      for (std::size_t j = 0; j < t; ++j) cost += d(rows[j], j);
      best = std::min(best, cost);
    }
  }
  return best;
}

void walk_dtw(const DistanceMatrix& d, std::size_t i, std::size_t j, double cost, double& best) {
  cost += d(i, j);
  const std::size_t last = d.query_length() - 1;
  if (i == last && j == last) {
    best = std::min(best, cost);
    return;
  }
  if (i < last && j < last) walk_dtw(d, i + 1, j + 1, cost, best);
  if (i < last) walk_dtw(d, i + 1, j, cost, best);
  if (j < last) walk_dtw(d, i, j + 1, cost, best);
}

}  // namespace

double brute_force_align(const DistanceMatrix& d, OracleVariant variant) {
  if (!d.is_square()) throw Error(ErrorCode::NonSquare, "oracle needs a square matrix");
  if (d.query_length() > kMaxOracleLength) {
    throw Error(ErrorCode::TooLarge, "oracle enumeration limited to T <= " +
                                         std::to_string(kMaxOracleLength));
  }
  if (variant == OracleVariant::TAM) return enumerate_row_assignments(d);
  double best = std::numeric_limits<double>::infinity();
  walk_dtw(d, 0, 0, 0.0, best);
  return best;
}

}  // namespace tam
