#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tam/align.hpp"
#include "tam/dataset.hpp"
#include "tam/encoder.hpp"
#include "tam/episodic.hpp"

namespace tam {

struct TrainConfig {
  double learning_rate = 0.001;
  double decay_factor = 0.1;
  std::size_t decay_interval = 30;  // epochs
  std::size_t epochs = 20;
  std::size_t episodes_per_epoch = 100;
  // Episode gradients summed per parameter update.
  std::size_t accumulate = 1;
  std::size_t n = 5;
  std::size_t k = 1;
  MatchingStrategy strategy = MatchingStrategy::soft(MatcherKind::TAM, kDefaultLambda);
  ProxyMode proxy_mode = ProxyMode::MeanSequence;
  Activation activation = Activation::Tanh;
  std::size_t out_dim = 0;  // 0: same as the dataset's frame dim
  std::size_t val_episodes = 200;
  std::size_t patience = 5;  // 0 disables early stopping
  std::uint64_t seed = 0;
  unsigned threads = 1;

  void validate() const;
};

// lr(epoch) = learning_rate * decay_factor ^ floor(epoch / decay_interval)
double learning_rate_at(const TrainConfig& cfg, std::size_t epoch);

struct EpisodeGradient {
  double loss = 0.0;  // mean over the episode's queries
  EncoderGradient gradient;
};

// Loss and its exact gradient with respect to the encoder parameters, chained
// through the proxy average, the cosine distances and the matcher.
EpisodeGradient episode_gradient(const EncoderParams& params, const Episode& episode,
                                 const MatchingStrategy& strategy,
                                 ProxyMode proxy_mode = ProxyMode::MeanSequence);

// Loss value only, same definition as episode_gradient.
double episode_mean_loss(const EncoderParams& params, const Episode& episode,
                         const MatchingStrategy& strategy,
                         ProxyMode proxy_mode = ProxyMode::MeanSequence);

struct EpochRecord {
  std::size_t epoch = 0;
  double learning_rate = 0.0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
};

// Everything needed to continue a run bit-identically.
struct TrainState {
  EncoderParams current;
  EncoderParams best;
  double best_val_accuracy = 0.0;
  double initial_val_accuracy = 0.0;
  std::size_t epochs_since_best = 0;
  std::size_t next_epoch = 0;
  bool stopped = false;
  std::vector<EpochRecord> history;
};

Dataset encode_dataset(const EncoderParams& params, const Dataset& ds);

// Fresh state: identity-initialized encoder, baseline validation accuracy.
TrainState initial_state(const Dataset& ds, const TrainConfig& cfg);

// Meta-val accuracy of `params` on the fixed validation episode stream.
double validation_accuracy(const Dataset& ds, const EncoderParams& params, const TrainConfig& cfg);

// Runs epochs [state.next_epoch, cfg.epochs) unless early stopping fired.
void continue_training(const Dataset& ds, const TrainConfig& cfg, TrainState& state);

struct TrainResult {
  EncoderParams params;  // best validation checkpoint
  std::vector<EpochRecord> history;
};

TrainResult train(const Dataset& ds, const TrainConfig& cfg);

}  // namespace tam
