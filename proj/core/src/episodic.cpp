#include "tam/episodic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>

#include "tam/error.hpp"
#include "tam/parallel.hpp"

namespace tam {

LabeledPool::LabeledPool(std::vector<LabeledSequence> items) : items_(std::move(items)) {
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (items_[i].class_id < 0) {
      throw Error(ErrorCode::InvalidArgument,
                  "negative class id at item " + std::to_string(i));
    }
    by_class_[items_[i].class_id].push_back(i);
  }
}

std::vector<int> LabeledPool::class_ids() const {
  std::vector<int> ids;
  ids.reserve(by_class_.size());
  for (const auto& [id, _] : by_class_) ids.push_back(id);
  return ids;
}

const std::vector<std::size_t>& LabeledPool::indices_of(int class_id) const {
  const auto it = by_class_.find(class_id);
  if (it == by_class_.end()) {
    throw Error(ErrorCode::InvalidArgument, "unknown class id " + std::to_string(class_id));
  }
  return it->second;
}

std::vector<int> Episode::classes() const {
  std::vector<int> ids;
  for (const auto& s : support) ids.push_back(s.class_id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

void Episode::validate() const {
  const auto ids = classes();
  if (ids.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "episode support covers " +
                                                std::to_string(ids.size()) + " classes, expected " +
                                                std::to_string(n));
  }
  for (int id : ids) {
    const auto count = std::count_if(support.begin(), support.end(),
                                     [id](const LabeledSequence& s) { return s.class_id == id; });
    if (static_cast<std::size_t>(count) != k) {
      throw Error(ErrorCode::InvalidArgument,
                  "class " + std::to_string(id) + " has " + std::to_string(count) +
                      " support sequences, expected " + std::to_string(k));
    }
  }
  for (const auto& q : query) {
    if (!std::binary_search(ids.begin(), ids.end(), q.class_id)) {
      throw Error(ErrorCode::InvalidArgument,
                  "query class " + std::to_string(q.class_id) + " missing from support");
    }
  }
}

Episode sample_episode(const LabeledPool& pool, std::size_t n, std::size_t k, Rng& rng,
                       std::size_t queries_per_class) {
  if (n == 0 || k == 0 || queries_per_class == 0) {
    throw Error(ErrorCode::InvalidArgument, "n, k and queries per class must be positive");
  }
  auto ids = pool.class_ids();
  if (ids.size() < n) {
    throw Error(ErrorCode::InsufficientData, "pool has " + std::to_string(ids.size()) +
                                                 " classes, episode needs " + std::to_string(n));
  }
  const std::size_t per_class = k + queries_per_class;
  for (int id : ids) {
    if (pool.indices_of(id).size() < per_class) {
      throw Error(ErrorCode::InsufficientData,
                  "class " + std::to_string(id) + " has " +
                      std::to_string(pool.indices_of(id).size()) + " sequences, episode needs " +
                      std::to_string(per_class));
    }
  }

  // Partial Fisher-Yates: the first `count` slots become a uniform sample.
  auto draw = [&rng](auto& items, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, items.size() - 1);
      std::swap(items[i], items[pick(rng)]);
    }
    items.resize(count);
  };

  draw(ids, n);
  std::sort(ids.begin(), ids.end());

  Episode ep;
  ep.n = n;
  ep.k = k;
  for (int id : ids) {
    auto members = pool.indices_of(id);
    draw(members, per_class);
    for (std::size_t s = 0; s < k; ++s) ep.support.push_back(pool.items()[members[s]]);
    for (std::size_t q = k; q < per_class; ++q) ep.query.push_back(pool.items()[members[q]]);
  }
  return ep;
}

std::vector<ClassProxy> build_proxies(std::span<const LabeledSequence> support, ProxyMode mode) {
  std::vector<ClassProxy> proxies;
  if (mode == ProxyMode::NearestExample) {
    for (const auto& s : support) proxies.push_back({s.class_id, s.sequence});
    return proxies;
  }
  std::map<int, std::vector<const FeatureSequence*>> groups;
  for (const auto& s : support) groups[s.class_id].push_back(&s.sequence);
  for (const auto& [id, members] : groups) {
    const FeatureSequence& first = *members.front();
    Matrix mean(first.length(), first.dim(), 0.0);
    for (const FeatureSequence* m : members) {
      if (m->length() != first.length() || m->dim() != first.dim()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "support sequences of class " + std::to_string(id) + " differ in shape");
      }
      const auto src = m->frames().values();
      auto dst = mean.values();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
    const double scale = 1.0 / static_cast<double>(members.size());
    for (double& x : mean.values()) x *= scale;
    proxies.push_back({id, FeatureSequence(std::move(mean))});
  }
  return proxies;
}

std::vector<double> proxy_distances(const FeatureSequence& query,
                                    std::span<const ClassProxy> proxies,
                                    const MatchingStrategy& strategy) {
  std::vector<double> out;
  out.reserve(proxies.size());
  for (const auto& p : proxies) {
    out.push_back(match_score(cosine_distance_matrix(query, p.proxy), strategy));
  }
  return out;
}

Classification classify_distances(std::span<const double> distances,
                                  std::span<const ClassProxy> proxies) {
  if (distances.size() != proxies.size() || proxies.empty()) {
    throw Error(ErrorCode::InvalidArgument, "need one distance per proxy");
  }
  std::map<int, double> per_class;
  for (std::size_t i = 0; i < proxies.size(); ++i) {
    auto [it, inserted] = per_class.try_emplace(proxies[i].class_id, distances[i]);
    if (!inserted) it->second = std::min(it->second, distances[i]);
  }
  Classification out;
  out.class_distances.assign(per_class.begin(), per_class.end());
  double best = std::numeric_limits<double>::infinity();
  out.predicted = out.class_distances.front().first;
  for (const auto& [id, dist] : out.class_distances) {
    if (dist < best) {
      best = dist;
      out.predicted = id;
    }
  }
  return out;
}

Classification classify_query(const FeatureSequence& query, std::span<const ClassProxy> proxies,
                              const MatchingStrategy& strategy) {
  const auto d = proxy_distances(query, proxies, strategy);
  return classify_distances(d, proxies);
}

LossResult softmax_distance_loss(std::span<const double> distances,
                                 std::span<const ClassProxy> proxies, int true_class) {
  if (distances.size() != proxies.size() || proxies.empty()) {
    throw Error(ErrorCode::InvalidArgument, "need one distance per proxy");
  }
  constexpr double kInf = std::numeric_limits<double>::infinity();
  double lo_all = kInf;
  double lo_true = kInf;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    lo_all = std::min(lo_all, distances[i]);
    if (proxies[i].class_id == true_class) lo_true = std::min(lo_true, distances[i]);
  }
  if (!std::isfinite(lo_true)) {
    throw Error(ErrorCode::InvalidArgument,
                "no proxy for true class " + std::to_string(true_class));
  }
  double sum_all = 0.0;
  double sum_true = 0.0;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    sum_all += std::exp(-(distances[i] - lo_all));
    if (proxies[i].class_id == true_class) sum_true += std::exp(-(distances[i] - lo_true));
  }
  LossResult out;
  // log sum_all e^{-phi} - log sum_true e^{-phi}
  out.loss = (lo_true - lo_all) + std::log(sum_all) - std::log(sum_true);
  out.loss = std::max(out.loss, 0.0);
  out.distance_gradient.resize(distances.size());
  for (std::size_t i = 0; i < distances.size(); ++i) {
    double g = -std::exp(-(distances[i] - lo_all)) / sum_all;
    if (proxies[i].class_id == true_class) g += std::exp(-(distances[i] - lo_true)) / sum_true;
    out.distance_gradient[i] = g;
  }
  return out;
}

LossResult episode_loss(const FeatureSequence& query, int true_class,
                        std::span<const ClassProxy> proxies, const MatchingStrategy& strategy) {
  strategy.validate();
  if (!strategy.differentiable()) {
    throw Error(ErrorCode::NonDifferentiableStrategy, strategy.name() + " has no gradient");
  }
  const auto d = proxy_distances(query, proxies, strategy);
  return softmax_distance_loss(d, proxies, true_class);
}

namespace {

struct EpisodeTally {
  std::size_t correct = 0;
  std::size_t total = 0;
  double loss_sum = 0.0;
  // (true slot, predicted slot)
  std::vector<std::pair<std::size_t, std::size_t>> outcomes;
};

EpisodeTally run_episode(const LabeledPool& pool, std::size_t n, std::size_t k,
                         const MatchingStrategy& strategy, std::uint64_t seed, std::size_t index,
                         const EvaluationOptions& options) {
  Rng rng = derive_stream(seed, {index});
  const Episode ep = sample_episode(pool, n, k, rng, options.queries_per_class);
  const auto proxies = build_proxies(ep.support, options.proxy_mode);
  const auto ids = ep.classes();
  auto slot = [&ids](int id) {
    return static_cast<std::size_t>(std::lower_bound(ids.begin(), ids.end(), id) - ids.begin());
  };
  EpisodeTally tally;
  for (const auto& q : ep.query) {
    const auto d = proxy_distances(q.sequence, proxies, strategy);
    const auto cls = classify_distances(d, proxies);
    tally.loss_sum += softmax_distance_loss(d, proxies, q.class_id).loss;
    tally.correct += cls.predicted == q.class_id ? 1 : 0;
    ++tally.total;
    tally.outcomes.emplace_back(slot(q.class_id), slot(cls.predicted));
  }
  return tally;
}

}  // namespace

EpisodeMetrics evaluate(const LabeledPool& pool, std::size_t n, std::size_t k,
                        const MatchingStrategy& strategy, std::size_t episodes,
                        std::uint64_t seed, const EvaluationOptions& options) {
  strategy.validate();
  if (episodes == 0) throw Error(ErrorCode::InvalidArgument, "episode count must be positive");

  std::vector<EpisodeTally> tallies(episodes);
  parallel_for(episodes, options.threads, [&](std::size_t e) {
    tallies[e] = run_episode(pool, n, k, strategy, seed, e, options);
  });

  EpisodeMetrics m;
  m.confusion = Matrix(n, n, 0.0);
  std::size_t correct = 0;
  std::size_t total = 0;
  double loss_sum = 0.0;
  for (std::size_t e = 0; e < episodes; ++e) {
    const auto& t = tallies[e];
    correct += t.correct;
    total += t.total;
    loss_sum += t.loss_sum;
    for (const auto& [truth, pred] : t.outcomes) m.confusion(truth, pred) += 1.0;
    m.episodes.push_back({e, static_cast<double>(t.correct) / static_cast<double>(t.total),
                          t.loss_sum / static_cast<double>(t.total)});
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(total);
  m.mean_loss = loss_sum / static_cast<double>(total);
  if (episodes > 1) {
    double ss = 0.0;
    const double mean_ep =
        std::accumulate(m.episodes.begin(), m.episodes.end(), 0.0,
                        [](double s, const EpisodeRecord& r) { return s + r.accuracy; }) /
        static_cast<double>(episodes);
    for (const auto& r : m.episodes) ss += (r.accuracy - mean_ep) * (r.accuracy - mean_ep);
    const double sd = std::sqrt(ss / static_cast<double>(episodes - 1));
    m.stderr_accuracy = sd / std::sqrt(static_cast<double>(episodes));
  }
  m.ci95 = 1.96 * m.stderr_accuracy;
  return m;
}

}  // namespace tam
