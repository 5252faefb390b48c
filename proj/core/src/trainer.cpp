#include "tam/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "tam/error.hpp"
#include "tam/parallel.hpp"
#include "tam/rng.hpp"

namespace tam {
namespace {

constexpr std::uint64_t kTrainEpisodeStream = 11;
constexpr std::uint64_t kValidationStream = 12;

struct EncodedEpisode {
  std::vector<EncodedSequence> support;
  std::vector<EncodedSequence> query;
};

// Proxy p is the mean of the encoded supports listed in members[p].
struct ProxyLayout {
  std::vector<ClassProxy> proxies;
  std::vector<std::vector<std::size_t>> members;
};

ProxyLayout layout_proxies(const Episode& ep, const EncodedEpisode& enc, ProxyMode mode) {
  ProxyLayout out;
  if (mode == ProxyMode::NearestExample) {
    for (std::size_t s = 0; s < ep.support.size(); ++s) {
      out.proxies.push_back({ep.support[s].class_id, FeatureSequence(enc.support[s].output)});
      out.members.push_back({s});
    }
    return out;
  }
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t s = 0; s < ep.support.size(); ++s) groups[ep.support[s].class_id].push_back(s);
  for (const auto& [id, members] : groups) {
    const Matrix& first = enc.support[members.front()].output;
    Matrix mean(first.rows(), first.cols(), 0.0);
    for (std::size_t s : members) {
      const auto src = enc.support[s].output.values();
      auto dst = mean.values();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
    const double scale = 1.0 / static_cast<double>(members.size());
    for (double& x : mean.values()) x *= scale;
    out.proxies.push_back({id, FeatureSequence(std::move(mean))});
    out.members.push_back(members);
  }
  return out;
}

EncodedEpisode encode_episode(const EncoderParams& params, const Episode& ep) {
  EncodedEpisode enc;
  for (const auto& s : ep.support) enc.support.push_back(encode_frames(params, s.sequence));
  for (const auto& q : ep.query) enc.query.push_back(encode_frames(params, q.sequence));
  return enc;
}

void add_into(Matrix& dst, const Matrix& src, double scale = 1.0) {
  auto d = dst.values();
  const auto s = src.values();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += scale * s[i];
}

Episode training_episode(const LabeledPool& pool, const TrainConfig& cfg, std::size_t index) {
  Rng rng = derive_stream(cfg.seed, {kTrainEpisodeStream, index});
  return sample_episode(pool, cfg.n, cfg.k, rng);
}

}  // namespace

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidArgument, msg); };
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) fail("learning_rate must be >= 0");
  if (!(decay_factor > 0.0 && decay_factor <= 1.0)) fail("decay_factor must be in (0, 1]");
  if (decay_interval == 0) fail("decay_interval must be positive");
  if (accumulate == 0) fail("accumulate must be positive");
  if (n == 0 || k == 0) fail("n and k must be positive");
  if (val_episodes == 0) fail("val_episodes must be positive");
  strategy.validate();
  if (!strategy.differentiable()) {
    throw Error(ErrorCode::NonDifferentiableStrategy,
                "training needs a differentiable strategy, got " + strategy.name());
  }
}

double learning_rate_at(const TrainConfig& cfg, std::size_t epoch) {
  return cfg.learning_rate *
         std::pow(cfg.decay_factor, static_cast<double>(epoch / cfg.decay_interval));
}

EpisodeGradient episode_gradient(const EncoderParams& params, const Episode& episode,
                                 const MatchingStrategy& strategy, ProxyMode proxy_mode) {
  strategy.validate();
  if (!strategy.differentiable()) {
    throw Error(ErrorCode::NonDifferentiableStrategy, strategy.name() + " has no gradient");
  }
  if (episode.query.empty()) throw Error(ErrorCode::InvalidArgument, "episode has no queries");

  const EncodedEpisode enc = encode_episode(params, episode);
  const ProxyLayout layout = layout_proxies(episode, enc, proxy_mode);
  const double query_scale = 1.0 / static_cast<double>(episode.query.size());

  std::vector<Matrix> proxy_grad;
  for (const auto& p : layout.proxies) {
    proxy_grad.emplace_back(p.proxy.length(), p.proxy.dim(), 0.0);
  }
  EpisodeGradient out{0.0, EncoderGradient(params)};

  for (std::size_t q = 0; q < episode.query.size(); ++q) {
    const FeatureSequence query(enc.query[q].output);
    std::vector<double> distances;
    std::vector<Matrix> local;  // d phi / d D per proxy
    for (const auto& p : layout.proxies) {
      auto sg = differentiable_score(cosine_distance_matrix(query, p.proxy), strategy);
      distances.push_back(sg.score);
      local.push_back(std::move(sg.gradient));
    }
    const auto loss = softmax_distance_loss(distances, layout.proxies, episode.query[q].class_id);
    out.loss += query_scale * loss.loss;

    Matrix query_grad(query.length(), query.dim(), 0.0);
    for (std::size_t p = 0; p < layout.proxies.size(); ++p) {
      const double coef = query_scale * loss.distance_gradient[p];
      if (coef == 0.0) continue;
      Matrix upstream = std::move(local[p]);
      for (double& x : upstream.values()) x *= coef;
      auto [ga, gb] = distance_matrix_backward(query, layout.proxies[p].proxy, upstream);
      add_into(query_grad, ga);
      add_into(proxy_grad[p], gb);
    }
    encoder_backward(params, episode.query[q].sequence, enc.query[q], query_grad, out.gradient);
  }

  for (std::size_t p = 0; p < layout.proxies.size(); ++p) {
    const auto& members = layout.members[p];
    const double share = 1.0 / static_cast<double>(members.size());
    Matrix scaled = proxy_grad[p];
    for (double& x : scaled.values()) x *= share;
    for (std::size_t s : members) {
      encoder_backward(params, episode.support[s].sequence, enc.support[s], scaled, out.gradient);
    }
  }
  return out;
}

double episode_mean_loss(const EncoderParams& params, const Episode& episode,
                         const MatchingStrategy& strategy, ProxyMode proxy_mode) {
  const EncodedEpisode enc = encode_episode(params, episode);
  const ProxyLayout layout = layout_proxies(episode, enc, proxy_mode);
  double total = 0.0;
  for (std::size_t q = 0; q < episode.query.size(); ++q) {
    const auto d = proxy_distances(FeatureSequence(enc.query[q].output), layout.proxies, strategy);
    total += softmax_distance_loss(d, layout.proxies, episode.query[q].class_id).loss;
  }
  return total / static_cast<double>(episode.query.size());
}

Dataset encode_dataset(const EncoderParams& params, const Dataset& ds) {
  Dataset out;
  out.dim = params.out_dim();
  out.length = ds.length;
  out.splits = ds.splits;
  for (const auto& c : ds.classes) {
    ClassRecord rec{c.class_id, c.name, {}};
    for (const auto& v : c.videos) rec.videos.push_back(encode(params, v));
    out.classes.push_back(std::move(rec));
  }
  return out;
}

double validation_accuracy(const Dataset& ds, const EncoderParams& params, const TrainConfig& cfg) {
  const LabeledPool pool = encode_dataset(params, ds).pool(Split::MetaVal);
  const std::size_t way = std::min(cfg.n, pool.class_count());
  EvaluationOptions opts;
  opts.proxy_mode = cfg.proxy_mode;
  opts.threads = cfg.threads;
  const std::uint64_t val_seed = mix64(cfg.seed ^ kValidationStream);
  return evaluate(pool, way, cfg.k, cfg.strategy, cfg.val_episodes, val_seed, opts).accuracy;
}

TrainState initial_state(const Dataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  TrainState st;
  st.current = identity_encoder(ds.dim, cfg.out_dim == 0 ? ds.dim : cfg.out_dim, cfg.activation);
  st.best = st.current;
  st.initial_val_accuracy = validation_accuracy(ds, st.current, cfg);
  st.best_val_accuracy = st.initial_val_accuracy;
  return st;
}

void continue_training(const Dataset& ds, const TrainConfig& cfg, TrainState& state) {
  cfg.validate();
  state.current.validate();
  if (state.current.raw_dim() != ds.dim) {
    throw Error(ErrorCode::DimensionMismatch, "encoder raw dim does not match the dataset");
  }
  const LabeledPool train_pool = ds.pool(Split::MetaTrain);

  while (!state.stopped && state.next_epoch < cfg.epochs) {
    const std::size_t epoch = state.next_epoch;
    const double lr = learning_rate_at(cfg, epoch);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < cfg.episodes_per_epoch; start += cfg.accumulate) {
      const std::size_t count = std::min(cfg.accumulate, cfg.episodes_per_epoch - start);
      std::vector<EpisodeGradient> grads;
      grads.reserve(count);
      for (std::size_t i = 0; i < count; ++i) grads.push_back({0.0, EncoderGradient(state.current)});
      parallel_for(count, cfg.threads, [&](std::size_t i) {
        const Episode ep = training_episode(train_pool, cfg, start + i);
        grads[i] = episode_gradient(state.current, ep, cfg.strategy, cfg.proxy_mode);
      });
      EncoderGradient total(state.current);
      for (const auto& g : grads) {
        total += g.gradient;
        loss_sum += g.loss;
      }
      auto w = state.current.weight.values();
      const auto gw = total.weight.values();
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * gw[i];
      for (std::size_t i = 0; i < state.current.bias.size(); ++i) {
        state.current.bias[i] -= lr * total.bias[i];
      }
    }
    const double val = validation_accuracy(ds, state.current, cfg);
    state.history.push_back(
        {epoch, lr, loss_sum / static_cast<double>(std::max<std::size_t>(1, cfg.episodes_per_epoch)),
         val});
    if (val > state.best_val_accuracy) {
      state.best_val_accuracy = val;
      state.best = state.current;
      state.epochs_since_best = 0;
    } else if (cfg.patience > 0 && ++state.epochs_since_best >= cfg.patience) {
      state.stopped = true;
    }
    state.next_epoch = epoch + 1;
  }
}

TrainResult train(const Dataset& ds, const TrainConfig& cfg) {
  TrainState state = initial_state(ds, cfg);
  continue_training(ds, cfg, state);
  return {state.best, state.history};
}

}  // namespace tam
