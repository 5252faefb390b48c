#include "tam/encoder.hpp"

#include <cmath>
#include <string>

#include "tam/error.hpp"

namespace tam {

Activation parse_activation(std::string_view text) {
  if (text == "tanh") return Activation::Tanh;
  if (text == "identity") return Activation::Identity;
  throw Error(ErrorCode::InvalidArgument, "unknown activation '" + std::string(text) + "'");
}

std::string_view activation_name(Activation a) {
  return a == Activation::Tanh ? "tanh" : "identity";
}

void EncoderParams::validate() const {
  if (weight.rows() == 0 || weight.cols() == 0) {
    throw Error(ErrorCode::InvalidArgument, "encoder weight must be nonempty");
  }
  if (bias.size() != weight.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "encoder bias length " + std::to_string(bias.size()) +
                                                  " does not match output dim " +
                                                  std::to_string(weight.cols()));
  }
  for (double x : weight.values()) {
    if (!std::isfinite(x)) throw Error(ErrorCode::InvalidArgument, "non-finite encoder weight");
  }
  for (double x : bias) {
    if (!std::isfinite(x)) throw Error(ErrorCode::InvalidArgument, "non-finite encoder bias");
  }
}

EncoderParams identity_encoder(std::size_t raw_dim, std::size_t out_dim, Activation activation) {
  EncoderParams p{Matrix(raw_dim, out_dim, 0.0), std::vector<double>(out_dim, 0.0), activation};
  for (std::size_t i = 0; i < std::min(raw_dim, out_dim); ++i) p.weight(i, i) = 1.0;
  return p;
}

EncodedSequence encode_frames(const EncoderParams& params, const FeatureSequence& raw) {
  if (raw.dim() != params.raw_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "encoder expects raw dim " +
                                                  std::to_string(params.raw_dim()) + ", got " +
                                                  std::to_string(raw.dim()));
  }
  const std::size_t t_len = raw.length();
  EncodedSequence out{Matrix(t_len, params.out_dim()), Matrix(t_len, params.out_dim())};
  for (std::size_t t = 0; t < t_len; ++t) {
    const auto x = raw.frame(t);
    for (std::size_t o = 0; o < params.out_dim(); ++o) {
      double z = params.bias[o];
      for (std::size_t i = 0; i < x.size(); ++i) z += x[i] * params.weight(i, o);
      out.pre_activation(t, o) = z;
      out.output(t, o) = params.activation == Activation::Tanh ? std::tanh(z) : z;
    }
  }
  return out;
}

FeatureSequence encode(const EncoderParams& params, const FeatureSequence& raw) {
  return FeatureSequence(encode_frames(params, raw).output);
}

EncoderGradient& EncoderGradient::operator+=(const EncoderGradient& other) {
  auto dst = weight.values();
  const auto src = other.weight.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  for (std::size_t i = 0; i < bias.size(); ++i) bias[i] += other.bias[i];
  return *this;
}

void encoder_backward(const EncoderParams& params, const FeatureSequence& raw,
                      const EncodedSequence& encoded, const Matrix& output_gradient,
                      EncoderGradient& grad) {
  for (std::size_t t = 0; t < raw.length(); ++t) {
    const auto x = raw.frame(t);
    for (std::size_t o = 0; o < params.out_dim(); ++o) {
      double dz = output_gradient(t, o);
      if (params.activation == Activation::Tanh) {
        const double y = encoded.output(t, o);
        dz *= 1.0 - y * y;
      }
      if (dz == 0.0) continue;
      grad.bias[o] += dz;
      for (std::size_t i = 0; i < x.size(); ++i) grad.weight(i, o) += x[i] * dz;
    }
  }
}

std::pair<Matrix, Matrix> distance_matrix_backward(const FeatureSequence& a,
                                                   const FeatureSequence& b,
                                                   const Matrix& upstream) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "frame dimensions differ");
  }
  if (upstream.rows() != a.length() || upstream.cols() != b.length()) {
    throw Error(ErrorCode::DimensionMismatch, "upstream gradient shape mismatch");
  }
  const std::size_t dim = a.dim();
  auto norms = [](const FeatureSequence& s) {
    std::vector<double> n(s.length());
    for (std::size_t t = 0; t < s.length(); ++t) {
      double ss = 0.0;
      for (double x : s.frame(t)) ss += x * x;
      n[t] = std::sqrt(ss);
      if (!(n[t] >= kMinFrameNorm)) {
        throw Error(ErrorCode::DegenerateFrame, "frame " + std::to_string(t) + " has near-zero norm");
      }
    }
    return n;
  };
  const auto na = norms(a);
  const auto nb = norms(b);
  Matrix ga(a.length(), dim, 0.0);
  Matrix gb(b.length(), dim, 0.0);
  for (std::size_t l = 0; l < a.length(); ++l) {
    const auto fa = a.frame(l);
    for (std::size_t m = 0; m < b.length(); ++m) {
      const double u = upstream(l, m);
      if (u == 0.0) continue;
      const auto fb = b.frame(m);
      double dot = 0.0;
      for (std::size_t k = 0; k < dim; ++k) dot += fa[k] * fb[k];
      const double inv = 1.0 / (na[l] * nb[m]);
      const double cosine = dot * inv;
      // D = 1 - cos, so dD/da = -(b / (|a||b|) - cos * a / |a|^2).
      const double ca = cosine / (na[l] * na[l]);
      const double cb = cosine / (nb[m] * nb[m]);
      for (std::size_t k = 0; k < dim; ++k) {
        ga(l, k) -= u * (fb[k] * inv - ca * fa[k]);
        gb(m, k) -= u * (fa[k] * inv - cb * fb[k]);
      }
    }
  }
  return {std::move(ga), std::move(gb)};
}

}  // namespace tam
