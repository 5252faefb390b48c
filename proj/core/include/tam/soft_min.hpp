#pragma once

#include <span>

namespace tam {

// Smoothed minimum -lambda * log(sum_i exp(-x_i / lambda)), shifted by the
// smallest finite value before exponentiating. Infinite entries carry no mass.
// Throws AllInfinite when no value is finite and InvalidArgument when
// lambda <= 0.
double soft_min(std::span<const double> values, double lambda);

// Softmax weights of soft_min: w_i = exp((soft_min - x_i) / lambda), zero for
// infinite x_i. `weights` must have the same size as `values`.
double soft_min_weights(std::span<const double> values, double lambda,
                        std::span<double> weights);

}  // namespace tam
