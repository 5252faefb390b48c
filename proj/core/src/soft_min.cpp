#include "tam/soft_min.hpp"

#include <cmath>
#include <limits>

#include "tam/error.hpp"

namespace tam {
namespace {

void check_lambda(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::InvalidArgument, "smoothing lambda must be positive and finite");
  }
}

double smallest_finite(std::span<const double> values) {
  double lo = std::numeric_limits<double>::infinity();
  for (double x : values) {
    if (std::isfinite(x) && x < lo) lo = x;
  }
  if (!std::isfinite(lo)) {
    throw Error(ErrorCode::AllInfinite, "soft_min needs at least one finite value");
  }
  return lo;
}

}  // namespace

double soft_min(std::span<const double> values, double lambda) {
  check_lambda(lambda);
  const double lo = smallest_finite(values);
  double sum = 0.0;
  for (double x : values) {
    if (std::isfinite(x)) sum += std::exp(-(x - lo) / lambda);
  }
  return lo - lambda * std::log(sum);
}

double soft_min_weights(std::span<const double> values, double lambda,
                        std::span<double> weights) {
  if (weights.size() != values.size()) {
    throw Error(ErrorCode::DimensionMismatch, "soft_min weight buffer size mismatch");
  }
  const double value = soft_min(values, lambda);
  for (std::size_t i = 0; i < values.size(); ++i) {
    weights[i] = std::isfinite(values[i]) ? std::exp((value - values[i]) / lambda) : 0.0;
  }
  return value;
}

}  // namespace tam
