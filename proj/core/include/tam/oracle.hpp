#pragma once

#include <cstddef>

#include "tam/sequence.hpp"

namespace tam {

enum class OracleVariant { TAM, PlainDTW };

inline constexpr std::size_t kMaxOracleLength = 8;

// Minimum alignment cost by exhaustive enumeration of admissible paths,
// independent of the dynamic program.
//   TAM: one query row per support column, rows nondecreasing in steps of 0
//        or 1, any start and end row.
//   PlainDTW: every monotone contiguous path from (0,0) to (T-1,T-1).
// Throws TooLarge for T > kMaxOracleLength and NonSquare for rectangles.
double brute_force_align(const DistanceMatrix& d, OracleVariant variant);

}  // namespace tam
