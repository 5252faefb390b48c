#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "tam/align.hpp"
#include "tam/matrix.hpp"
#include "tam/rng.hpp"
#include "tam/sequence.hpp"

namespace tam {

struct LabeledSequence {
  FeatureSequence sequence;
  int class_id = 0;
};

// Labeled sequences grouped by class for episode sampling.
class LabeledPool {
 public:
  LabeledPool() = default;
  explicit LabeledPool(std::vector<LabeledSequence> items);

  std::span<const LabeledSequence> items() const noexcept { return items_; }
  // Sorted class ids.
  std::vector<int> class_ids() const;
  std::size_t class_count() const noexcept { return by_class_.size(); }
  const std::vector<std::size_t>& indices_of(int class_id) const;

 private:
  std::vector<LabeledSequence> items_;
  std::map<int, std::vector<std::size_t>> by_class_;
};

// n-way k-shot task. Support holds k sequences for each of n classes, query
// holds queries_per_class sequences per class; classes appear in ascending id
// order in both lists.
struct Episode {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<LabeledSequence> support;
  std::vector<LabeledSequence> query;

  // Sorted distinct class ids of the support set.
  std::vector<int> classes() const;
  // Throws InvalidArgument if composition invariants are violated.
  void validate() const;
};

Episode sample_episode(const LabeledPool& pool, std::size_t n, std::size_t k, Rng& rng,
                       std::size_t queries_per_class = 1);

enum class ProxyMode { MeanSequence, NearestExample };

struct ClassProxy {
  int class_id = 0;
  FeatureSequence proxy;
};

// MeanSequence: one proxy per class, frame-wise mean of its supports.
// NearestExample: every support sequence is its own proxy; a class's distance
// is the minimum over its proxies.
std::vector<ClassProxy> build_proxies(std::span<const LabeledSequence> support, ProxyMode mode);

struct Classification {
  int predicted = 0;
  // (class id, distance) in ascending class id order.
  std::vector<std::pair<int, double>> class_distances;
};

// Per-proxy distances.
std::vector<double> proxy_distances(const FeatureSequence& query,
                                    std::span<const ClassProxy> proxies,
                                    const MatchingStrategy& strategy);

// Nearest class; equal distances resolve to the lowest class id.
Classification classify_query(const FeatureSequence& query, std::span<const ClassProxy> proxies,
                              const MatchingStrategy& strategy);
Classification classify_distances(std::span<const double> distances,
                                  std::span<const ClassProxy> proxies);

struct LossResult {
  double loss = 0.0;
  // d loss / d distance, one per proxy. Sums to zero.
  std::vector<double> distance_gradient;
};

// -log(sum_{Z in true class} exp(-phi_Z) / sum_Z exp(-phi_Z)), shifted by the
// smallest distance. With one proxy per class this is the usual softmax
// cross-entropy over negated distances.
LossResult softmax_distance_loss(std::span<const double> distances,
                                 std::span<const ClassProxy> proxies, int true_class);

// Loss for one query. Throws NonDifferentiableStrategy for Min and hard
// DTW/TAM.
LossResult episode_loss(const FeatureSequence& query, int true_class,
                        std::span<const ClassProxy> proxies, const MatchingStrategy& strategy);

struct EvaluationOptions {
  ProxyMode proxy_mode = ProxyMode::MeanSequence;
  std::size_t queries_per_class = 1;
  unsigned threads = 1;
};

struct EpisodeRecord {
  std::size_t index = 0;
  double accuracy = 0.0;
  double loss = 0.0;
};

struct EpisodeMetrics {
  double accuracy = 0.0;
  double mean_loss = 0.0;
  // Standard error of the per-episode accuracy mean; ci95 = 1.96 * stderr.
  double stderr_accuracy = 0.0;
  double ci95 = 0.0;
  // Rows: true class slot, columns: predicted slot. Slots are positions of
  // the classes in each episode's ascending id order.
  Matrix confusion;
  std::vector<EpisodeRecord> episodes;
};

// Evaluates `episodes` independently seeded episodes (stream e derives from
// (seed, e)) and reduces them in index order, so the result is the same for
// any thread count.
EpisodeMetrics evaluate(const LabeledPool& pool, std::size_t n, std::size_t k,
                        const MatchingStrategy& strategy, std::size_t episodes,
                        std::uint64_t seed, const EvaluationOptions& options = {});

}  // namespace tam
