#pragma once

#include <cstddef>
#include <string_view>
#include <utility>
#include <vector>

#include "tam/matrix.hpp"
#include "tam/sequence.hpp"

namespace tam {

enum class Activation { Tanh, Identity };

Activation parse_activation(std::string_view text);
std::string_view activation_name(Activation a);

// Per-frame encoder y = act(x W + b) with W of shape raw_dim x out_dim.
struct EncoderParams {
  Matrix weight;
  std::vector<double> bias;
  Activation activation = Activation::Tanh;

  std::size_t raw_dim() const noexcept { return weight.rows(); }
  std::size_t out_dim() const noexcept { return weight.cols(); }
  void validate() const;
  bool operator==(const EncoderParams&) const = default;
};

// Rectangular identity weight, zero bias.
EncoderParams identity_encoder(std::size_t raw_dim, std::size_t out_dim,
                               Activation activation = Activation::Tanh);

// Pre-activations are kept for the backward pass.
struct EncodedSequence {
  Matrix pre_activation;
  Matrix output;
};

EncodedSequence encode_frames(const EncoderParams& params, const FeatureSequence& raw);
FeatureSequence encode(const EncoderParams& params, const FeatureSequence& raw);

struct EncoderGradient {
  Matrix weight;
  std::vector<double> bias;

  explicit EncoderGradient(const EncoderParams& like)
      : weight(like.raw_dim(), like.out_dim(), 0.0), bias(like.out_dim(), 0.0) {}
  EncoderGradient& operator+=(const EncoderGradient& other);
};

// Accumulates d loss / d params given d loss / d output for one sequence.
void encoder_backward(const EncoderParams& params, const FeatureSequence& raw,
                      const EncodedSequence& encoded, const Matrix& output_gradient,
                      EncoderGradient& grad);

// Gradient of sum_{l,m} upstream(l,m) * D(l,m), D the cosine distance matrix
// of a and b, with respect to the frames of a and of b.
std::pair<Matrix, Matrix> distance_matrix_backward(const FeatureSequence& a,
                                                   const FeatureSequence& b,
                                                   const Matrix& upstream);

}  // namespace tam
