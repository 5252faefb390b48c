#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "tam/episodic.hpp"
#include "tam/error.hpp"
#include "tam/synthetic.hpp"
#include "tam/trainer.hpp"
#include "test_support.hpp"

using namespace tam;

namespace {

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

EncoderParams random_encoder(std::size_t raw, std::size_t out, std::mt19937_64& rng,
                             Activation act = Activation::Tanh) {
  EncoderParams p;
  p.weight = tam::testing::random_grid(raw, out, rng, -1.0, 1.0);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (std::size_t j = 0; j < out; ++j) p.bias.push_back(u(rng));
  p.activation = act;
  return p;
}

Episode tiny_episode(std::size_t raw, std::size_t t, std::size_t n, std::size_t k,
                     std::mt19937_64& rng) {
  Episode ep;
  ep.n = n;
  ep.k = k;
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t s = 0; s < k; ++s)
      ep.support.push_back({tam::testing::random_sequence(t, raw, rng), static_cast<int>(c)});
    ep.query.push_back({tam::testing::random_sequence(t, raw, rng), static_cast<int>(c)});
  }
  return ep;
}

// Central differences of the episode loss over every weight and bias entry.
double max_parameter_error(EncoderParams params, const Episode& ep,
                           const MatchingStrategy& strategy, ProxyMode mode) {
  const auto analytic = episode_gradient(params, ep, strategy, mode);
  const double h = 1e-5;
  double worst = 0.0;
  auto probe = [&](double& slot, double exact) {
    const double saved = slot;
    slot = saved + h;
    const double up = episode_mean_loss(params, ep, strategy, mode);
    slot = saved - h;
    const double down = episode_mean_loss(params, ep, strategy, mode);
    slot = saved;
    worst = std::max(worst, tam::testing::relative_error(exact, (up - down) / (2 * h)));
  };
  for (std::size_t i = 0; i < params.weight.values().size(); ++i)
    probe(params.weight.values()[i], analytic.gradient.weight.values()[i]);
  for (std::size_t j = 0; j < params.bias.size(); ++j)
    probe(params.bias[j], analytic.gradient.bias[j]);
  return worst;
}

Dataset small_dataset(ConfoundMode mode, std::size_t atom_sets, std::size_t videos) {
  GeneratorConfig cfg;
  cfg.confound_mode = mode;
  cfg.atom_sets = atom_sets;
  cfg.videos_per_class = videos;
  return build_dataset(cfg);
}

}  // namespace

TEST_SUITE("encoder") {
  TEST_CASE("identity weights with identity activation copy the input") {
    std::mt19937_64 rng(1);
    const auto raw = tam::testing::random_sequence(4, 5, rng);
    const auto out = encode(identity_encoder(5, 5, Activation::Identity), raw);
    CHECK(out.frames() == raw.frames());
  }

  TEST_CASE("zero weights and bias produce degenerate frames") {
    EncoderParams p = identity_encoder(3, 2);
    p.weight = Matrix(3, 2, 0.0);
    std::mt19937_64 rng(2);
    const auto a = tam::testing::random_sequence(3, 3, rng);
    CHECK(code_of([&] { cosine_distance_matrix(encode(p, a), encode(p, a)); }) ==
          ErrorCode::DegenerateFrame);
  }

  TEST_CASE("shapes and dimension checks") {
    std::mt19937_64 rng(3);
    const auto p = random_encoder(6, 4, rng);
    const auto raw = tam::testing::random_sequence(7, 6, rng);
    const auto out = encode(p, raw);
    CHECK(out.length() == 7);
    CHECK(out.dim() == 4);
    CHECK(code_of([&] { encode(p, tam::testing::random_sequence(7, 5, rng)); }) ==
          ErrorCode::DimensionMismatch);
    CHECK(parse_activation("tanh") == Activation::Tanh);
    CHECK(activation_name(Activation::Identity) == "identity");
    CHECK(code_of([] { parse_activation("relu"); }) == ErrorCode::InvalidArgument);
  }
}

TEST_SUITE("distance_matrix_backward") {
  TEST_CASE("parallel frames have zero local gradient") {
    const auto a = FeatureSequence::from_rows({{0.6, 0.8, 0.0}});
    const auto b = FeatureSequence::from_rows({{1.2, 1.6, 0.0}});
    const auto [ga, gb] = distance_matrix_backward(a, b, Matrix(1, 1, 1.0));
    for (double x : ga.values()) CHECK(std::abs(x) < 1e-15);
    for (double x : gb.values()) CHECK(std::abs(x) < 1e-15);
  }

  TEST_CASE("zero upstream gives zero gradients") {
    std::mt19937_64 rng(4);
    const auto a = tam::testing::random_sequence(3, 4, rng);
    const auto b = tam::testing::random_sequence(3, 4, rng);
    const auto [ga, gb] = distance_matrix_backward(a, b, Matrix(3, 3, 0.0));
    for (double x : ga.values()) CHECK(x == 0.0);
    for (double x : gb.values()) CHECK(x == 0.0);
  }

  TEST_CASE("matches finite differences on random three-frame pairs") {
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 20; ++rep) {
      const auto a = tam::testing::random_sequence(3, 4, rng);
      const auto b = tam::testing::random_sequence(3, 4, rng);
      const Matrix up = tam::testing::random_grid(3, 3, rng, -1.0, 1.0);
      auto contracted = [&](const Matrix& fa, const Matrix& fb) {
        const auto d = cosine_distance_matrix(FeatureSequence(fa), FeatureSequence(fb));
        double s = 0.0;
        for (std::size_t i = 0; i < 9; ++i) s += up.values()[i] * d.entries().values()[i];
        return s;
      };
      const auto [ga, gb] = distance_matrix_backward(a, b, up);
      const Matrix fa = tam::testing::finite_difference(
          [&](const Matrix& m) { return contracted(m, b.frames()); }, a.frames(), 1e-6);
      const Matrix fb = tam::testing::finite_difference(
          [&](const Matrix& m) { return contracted(a.frames(), m); }, b.frames(), 1e-6);
      CHECK(tam::testing::max_relative_error(ga, fa) < 1e-5);
      CHECK(tam::testing::max_relative_error(gb, fb) < 1e-5);
    }
  }
}

TEST_SUITE("episode_gradient") {
  TEST_CASE("full chain matches finite differences on the tiny instance") {
    std::mt19937_64 rng(6);
    for (int rep = 0; rep < 5; ++rep) {
      const auto params = random_encoder(4, 3, rng);
      const auto ep = tiny_episode(4, 3, 2, 1, rng);
      CHECK(max_parameter_error(params, ep, MatchingStrategy::soft(MatcherKind::TAM, 0.1),
                                ProxyMode::MeanSequence) < 1e-4);
    }
  }

  TEST_CASE("other differentiable strategies and proxy modes") {
    std::mt19937_64 rng(7);
    const auto params = random_encoder(4, 3, rng);
    const auto ep = tiny_episode(4, 3, 3, 2, rng);
    for (const auto& s : {MatchingStrategy::soft(MatcherKind::TAM, 0.05),
                          MatchingStrategy::soft(MatcherKind::PlainDTW, 0.1),
                          MatchingStrategy::hard(MatcherKind::Mean),
                          MatchingStrategy::hard(MatcherKind::Diagonal)}) {
      for (auto mode : {ProxyMode::MeanSequence, ProxyMode::NearestExample}) {
        INFO(s.name());
        CHECK(max_parameter_error(params, ep, s, mode) < 1e-4);
      }
    }
  }

  TEST_CASE("loss value agrees with the episodic module") {
    std::mt19937_64 rng(8);
    const auto params = random_encoder(4, 3, rng);
    const auto ep = tiny_episode(4, 3, 3, 1, rng);
    const auto s = MatchingStrategy::soft(MatcherKind::TAM, 0.1);
    std::vector<LabeledSequence> support;
    for (const auto& item : ep.support) support.push_back({encode(params, item.sequence), item.class_id});
    const auto proxies = build_proxies(support, ProxyMode::MeanSequence);
    double total = 0.0;
    for (const auto& q : ep.query)
      total += episode_loss(encode(params, q.sequence), q.class_id, proxies, s).loss;
    CHECK(episode_gradient(params, ep, s).loss == doctest::Approx(total / 3.0).epsilon(1e-12));
  }

  TEST_CASE("equal distances give ln n at initialization") {
    // Every video is the same static clip, so all proxy distances coincide.
    const auto clip = FeatureSequence::from_rows({{1.0, 0.5}, {1.0, 0.5}, {1.0, 0.5}});
    Episode ep;
    ep.n = 5;
    ep.k = 1;
    for (int c = 0; c < 5; ++c) {
      ep.support.push_back({clip, c});
      ep.query.push_back({clip, c});
    }
    const auto r = episode_gradient(identity_encoder(2, 2), ep,
                                    MatchingStrategy::soft(MatcherKind::TAM, 0.1));
    CHECK(std::abs(r.loss - std::log(5.0)) < 1e-12);
  }

  TEST_CASE("a query that is its own proxy scores below ln n") {
    std::mt19937_64 rng(9);
    auto ep = tiny_episode(4, 4, 5, 1, rng);
    for (std::size_t c = 0; c < 5; ++c) ep.query[c].sequence = ep.support[c].sequence;
    const auto r = episode_gradient(identity_encoder(4, 4), ep,
                                    MatchingStrategy::soft(MatcherKind::TAM, 0.1));
    CHECK(r.loss < std::log(5.0));
  }

  TEST_CASE("hard alignment cannot be trained") {
    std::mt19937_64 rng(10);
    const auto ep = tiny_episode(4, 3, 2, 1, rng);
    CHECK(code_of([&] {
            episode_gradient(identity_encoder(4, 3), ep, MatchingStrategy::hard(MatcherKind::TAM));
          }) == ErrorCode::NonDifferentiableStrategy);
  }
}

TEST_SUITE("training") {
  TEST_CASE("learning-rate schedule") {
    TrainConfig cfg;
    CHECK(learning_rate_at(cfg, 0) == 0.001);
    CHECK(learning_rate_at(cfg, 29) == 0.001);
    CHECK(learning_rate_at(cfg, 30) == 0.001 * 0.1);
    CHECK(learning_rate_at(cfg, 59) == 0.001 * 0.1);
    CHECK(learning_rate_at(cfg, 60) == 0.001 * std::pow(0.1, 2.0));
    CHECK(learning_rate_at(cfg, 95) == 0.001 * std::pow(0.1, 3.0));
  }

  TEST_CASE("config validation") {
    TrainConfig cfg;
    cfg.decay_factor = 0.0;
    CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::InvalidArgument);
    cfg = TrainConfig{};
    cfg.learning_rate = -1.0;
    CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::InvalidArgument);
    cfg = TrainConfig{};
    cfg.strategy = MatchingStrategy::hard(MatcherKind::Min);
    CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::NonDifferentiableStrategy);
  }

  TEST_CASE("zero learning rate leaves parameters and history flat") {
    const auto ds = small_dataset(ConfoundMode::IndependentAtoms, 1, 4);
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    cfg.epochs = 3;
    cfg.episodes_per_epoch = 5;
    cfg.val_episodes = 20;
    const auto r = train(ds, cfg);
    CHECK(r.params == identity_encoder(ds.dim, ds.dim));
    REQUIRE(r.history.size() == 3);
    for (const auto& e : r.history) {
      CHECK(e.train_loss == r.history[0].train_loss);
      CHECK(e.val_accuracy == r.history[0].val_accuracy);
    }
  }

  TEST_CASE("same seed gives the same run; a split run resumes identically") {
    const auto ds = small_dataset(ConfoundMode::IndependentAtoms, 1, 4);
    TrainConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.epochs = 4;
    cfg.episodes_per_epoch = 6;
    cfg.val_episodes = 20;
    cfg.patience = 0;
    const auto a = train(ds, cfg);
    cfg.threads = 4;
    const auto b = train(ds, cfg);
    CHECK(a.params == b.params);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t e = 0; e < a.history.size(); ++e) {
      CHECK(a.history[e].train_loss == b.history[e].train_loss);
      CHECK(a.history[e].val_accuracy == b.history[e].val_accuracy);
    }

    auto state = initial_state(ds, cfg);
    auto first = cfg;
    first.epochs = 2;
    continue_training(ds, first, state);
    CHECK(state.next_epoch == 2);
    continue_training(ds, cfg, state);
    CHECK(state.best == a.params);
    REQUIRE(state.history.size() == a.history.size());
    for (std::size_t e = 0; e < a.history.size(); ++e)
      CHECK(state.history[e].train_loss == a.history[e].train_loss);
  }

  TEST_CASE("training loss goes down on the separation dataset") {
    const auto ds = small_dataset(ConfoundMode::PermutedAtoms, 5, 6);
    TrainConfig cfg;
    cfg.learning_rate = 0.01;
    cfg.epochs = 3;
    cfg.episodes_per_epoch = 20;
    cfg.val_episodes = 30;
    cfg.patience = 0;
    cfg.threads = 4;
    const auto r = train(ds, cfg);
    REQUIRE(r.history.size() == 3);
    CHECK(r.history[1].train_loss <= r.history[0].train_loss);
    CHECK(r.history[2].train_loss <= r.history[1].train_loss);
  }

  TEST_CASE("soft-TAM training beats mean training on the separation dataset") {
    const auto ds = small_dataset(ConfoundMode::PermutedAtoms, 5, 6);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.episodes_per_epoch = 20;
    cfg.val_episodes = 30;
    cfg.threads = 4;
    auto mean_cfg = cfg;
    mean_cfg.strategy = MatchingStrategy::hard(MatcherKind::Mean);
    const auto tam_model = train(ds, cfg);
    const auto mean_model = train(ds, mean_cfg);
    const EvaluationOptions opts{.threads = 4};
    const double tam_acc = evaluate(encode_dataset(tam_model.params, ds).pool(Split::MetaTest), 5, 1,
                                    cfg.strategy, 300, 1, opts)
                               .accuracy;
    const double mean_acc = evaluate(encode_dataset(mean_model.params, ds).pool(Split::MetaTest), 5,
                                     1, mean_cfg.strategy, 300, 1, opts)
                                .accuracy;
    CHECK(tam_acc > mean_acc);
  }
}
