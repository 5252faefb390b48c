#include "cli.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tam/align.hpp"
#include "tam/dataset.hpp"
#include "tam/error.hpp"
#include "tam/episodic.hpp"
#include "tam/io.hpp"
#include "tam/synthetic.hpp"
#include "tam/trainer.hpp"

namespace tam::cli {
namespace {

struct GlobalOptions {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string output;
};

// Flags shared by the evaluation commands.
struct EvalOptions {
  std::string dataset;
  std::size_t n = 5;
  std::size_t k = 1;
  std::size_t episodes = 1000;
  std::string split = "meta_test";
  std::string proxy = "mean";
  std::size_t queries_per_class = 1;
  std::string checkpoint;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Parse:
    case ErrorCode::InvalidArgument:
    case ErrorCode::UnsupportedVersion:
      return kExitUsage;
    case ErrorCode::Internal:
      return kExitInternal;
    default:
      return kExitDomain;
  }
}

MatchingStrategy make_strategy(const std::string& kind_text, std::optional<double> lambda) {
  const MatcherKind kind = parse_matcher_kind(kind_text);
  if (!lambda) return MatchingStrategy::hard(kind);
  if (kind != MatcherKind::TAM && kind != MatcherKind::PlainDTW) {
    throw UsageError("--lambda only applies to the dtw and tam strategies");
  }
  return MatchingStrategy::soft(kind, *lambda);
}

ProxyMode parse_proxy(const std::string& text) {
  if (text == "mean") return ProxyMode::MeanSequence;
  if (text == "nearest") return ProxyMode::NearestExample;
  throw UsageError("--proxy must be 'mean' or 'nearest'");
}

void add_eval_options(CLI::App* cmd, EvalOptions& o) {
  cmd->add_option("dataset", o.dataset, "Dataset file")->required();
  cmd->add_option("-n,--way", o.n, "Classes per episode")->check(CLI::PositiveNumber);
  cmd->add_option("-k,--shot", o.k, "Support sequences per class")->check(CLI::PositiveNumber);
  cmd->add_option("--episodes", o.episodes, "Episodes to evaluate")->check(CLI::PositiveNumber);
  cmd->add_option("--split", o.split, "meta_train, meta_val or meta_test")
      ->check(CLI::IsMember({"meta_train", "meta_val", "meta_test"}));
  cmd->add_option("--proxy", o.proxy, "k-shot proxy: mean or nearest")
      ->check(CLI::IsMember({"mean", "nearest"}));
  cmd->add_option("--queries-per-class", o.queries_per_class)->check(CLI::PositiveNumber);
  cmd->add_option("--checkpoint", o.checkpoint, "Encode frames with a trained checkpoint");
}

LabeledPool load_pool(const EvalOptions& o) {
  Dataset ds = io::read_dataset(o.dataset);
  if (!o.checkpoint.empty()) {
    const auto ck = io::read_checkpoint(o.checkpoint);
    ds = encode_dataset(ck.state.best, ds);
  }
  return ds.pool(parse_split(o.split));
}

EvaluationOptions evaluation_options(const EvalOptions& o, const GlobalOptions& g) {
  EvaluationOptions opts;
  opts.proxy_mode = parse_proxy(o.proxy);
  opts.queries_per_class = o.queries_per_class;
  opts.threads = g.threads;
  return opts;
}

std::string fixed(double x, int digits = 4) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << x;
  return ss.str();
}

// ---- align ---------------------------------------------------------------

struct AlignOptions {
  std::vector<std::string> files;
  std::string strategy = "tam";
  std::optional<double> lambda;
  bool path = false;
  bool matrix = false;
  bool normalize = false;
};

void write_grid_csv(std::ostream& out, const Matrix& m, const std::string& value_name,
                    std::ptrdiff_t col_offset) {
  io::CsvWriter csv(out, {"row", "col", value_name});
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      csv.cell(std::to_string(r))
          .cell(std::to_string(static_cast<std::ptrdiff_t>(c) + col_offset))
          .cell(m(r, c));
      csv.end_row();
    }
  }
}

void cmd_align(const AlignOptions& o, std::ostream& out) {
  const MatchingStrategy strategy = make_strategy(o.strategy, o.lambda);
  auto first = io::read_align_input(o.files.at(0));
  std::optional<DistanceMatrix> d;
  std::size_t length = 0;
  if (auto* dm = std::get_if<DistanceMatrix>(&first)) {
    if (o.files.size() != 1) throw UsageError("a distance-matrix input takes no second file");
    d = *dm;
    length = dm->query_length();
  } else {
    if (o.files.size() != 2) throw UsageError("align needs two sequence files");
    auto second = io::read_align_input(o.files[1]);
    const auto* b = std::get_if<FeatureSequence>(&second);
    if (!b) throw Error(ErrorCode::Parse, o.files[1] + ": expected a 'frames' document");
    const auto& a = std::get<FeatureSequence>(first);
    d = cosine_distance_matrix(a, *b);
    length = a.length();
  }
  if (o.path && (strategy.mode != MatchMode::Hard ||
                 (strategy.kind != MatcherKind::TAM && strategy.kind != MatcherKind::PlainDTW))) {
    throw UsageError("--path needs a hard dtw or tam strategy");
  }

  AlignmentOutcome result;
  if (strategy.requires_square() && !d->is_square()) {
    throw Error(ErrorCode::NonSquare, strategy.name() + " needs equal-length sequences");
  }
  switch (strategy.kind) {
    case MatcherKind::TAM: {
      const auto dp = pad_boundary(*d);
      result = strategy.mode == MatchMode::Soft ? soft_align_tam(dp, *strategy.lambda)
                                                : hard_align_tam(dp);
      break;
    }
    case MatcherKind::PlainDTW:
      result = strategy.mode == MatchMode::Soft ? soft_align_plain_dtw(*d, *strategy.lambda)
                                                : hard_align_plain_dtw(*d);
      break;
    default:
      result.score = match_score(*d, strategy);
  }
  if (o.normalize &&
      (strategy.kind == MatcherKind::TAM || strategy.kind == MatcherKind::PlainDTW)) {
    result.score /= static_cast<double>(length);
  }

  out << "strategy: " << strategy.name() << "\n";
  out << "score: " << io::format_double(result.score) << "\n";
  if (o.path && result.hard_path) {
    out << "path:";
    for (const auto& c : *result.hard_path) out << " (" << c.row << "," << c.col << ")";
    out << "\n";
  }
  if (o.matrix) {
    out << "\n";
    write_grid_csv(out, d->entries(), "distance", 0);
    if (result.soft_gradient) {
      out << "\n";
      // TAM gradients cover the padded grid; column -1 and T are the borders.
      write_grid_csv(out, *result.soft_gradient, "soft_gradient",
                     strategy.kind == MatcherKind::TAM ? -1 : 0);
    }
  }
}

// ---- episodes / ablate / lambda-sweep -------------------------------------

struct EpisodesOptions {
  EvalOptions eval;
  std::string strategy = "tam";
  std::optional<double> lambda;
};

void cmd_episodes(const EpisodesOptions& o, const GlobalOptions& g, std::ostream& csv_out,
                  std::ostream& summary_out) {
  const MatchingStrategy strategy = make_strategy(o.strategy, o.lambda);
  const LabeledPool pool = load_pool(o.eval);
  const auto m = evaluate(pool, o.eval.n, o.eval.k, strategy, o.eval.episodes, g.seed,
                          evaluation_options(o.eval, g));
  io::CsvWriter csv(csv_out, {"episode_index", "accuracy", "loss"});
  for (const auto& e : m.episodes) {
    csv.cell(e.index).cell(e.accuracy).cell(e.loss);
    csv.end_row();
  }
  summary_out << "summary: strategy=" << strategy.name() << " n=" << o.eval.n
              << " k=" << o.eval.k << " episodes=" << o.eval.episodes
              << " accuracy=" << fixed(m.accuracy) << " ci95=" << fixed(m.ci95)
              << " mean_loss=" << fixed(m.mean_loss) << "\n";
}

struct AblateOptions {
  EvalOptions eval;
  std::optional<double> lambda;
};

void cmd_ablate(const AblateOptions& o, const GlobalOptions& g, std::ostream& out) {
  const LabeledPool pool = load_pool(o.eval);
  const auto opts = evaluation_options(o.eval, g);
  io::CsvWriter csv(out, {"strategy", "accuracy", "stderr", "ci95", "mean_loss"});
  for (MatcherKind kind : {MatcherKind::Min, MatcherKind::Mean, MatcherKind::Diagonal,
                           MatcherKind::PlainDTW, MatcherKind::TAM}) {
    const bool alignable = kind == MatcherKind::TAM || kind == MatcherKind::PlainDTW;
    const MatchingStrategy s = alignable && o.lambda ? MatchingStrategy::soft(kind, *o.lambda)
                                                     : MatchingStrategy::hard(kind);
    // Same seed for every row: all matchers see the same episodes.
    const auto m = evaluate(pool, o.eval.n, o.eval.k, s, o.eval.episodes, g.seed, opts);
    csv.cell(s.name()).cell(m.accuracy).cell(m.stderr_accuracy).cell(m.ci95).cell(m.mean_loss);
    csv.end_row();
  }
}

struct SweepOptions {
  EvalOptions eval;
  std::vector<double> lambdas{0.01, 0.05, 0.1, 0.5, 1.0};
};

void cmd_lambda_sweep(const SweepOptions& o, const GlobalOptions& g, std::ostream& out) {
  if (o.lambdas.empty()) throw UsageError("--lambdas needs at least one value");
  for (double l : o.lambdas) {
    if (!(l > 0.0)) throw UsageError("every lambda must be positive");
  }
  const LabeledPool pool = load_pool(o.eval);
  const auto opts = evaluation_options(o.eval, g);
  io::CsvWriter csv(out, {"lambda", "accuracy", "stderr"});
  for (double l : o.lambdas) {
    const auto m = evaluate(pool, o.eval.n, o.eval.k, MatchingStrategy::soft(MatcherKind::TAM, l),
                            o.eval.episodes, g.seed, opts);
    csv.cell(l).cell(m.accuracy).cell(m.stderr_accuracy);
    csv.end_row();
  }
}

// ---- gen ------------------------------------------------------------------

struct GenOptions {
  GeneratorConfig cfg;
  std::string mode = "independent";
};

void cmd_gen(GenOptions o, const GlobalOptions& g, std::ostream& out) {
  o.cfg.seed = g.seed;
  o.cfg.confound_mode =
      o.mode == "permuted" ? ConfoundMode::PermutedAtoms : ConfoundMode::IndependentAtoms;
  out << io::dataset_to_json(build_dataset(o.cfg));
}

// ---- train ----------------------------------------------------------------

struct TrainOptions {
  std::string dataset;
  std::string checkpoint_out;
  std::string history_out;
  std::string resume;
  TrainConfig cfg;
  std::string strategy = "tam";
  double lambda = kDefaultLambda;
  std::string proxy = "mean";
  std::string activation = "tanh";
  std::size_t test_episodes = 0;
};

void write_history(std::ostream& out, const std::vector<EpochRecord>& history) {
  io::CsvWriter csv(out, {"epoch", "learning_rate", "train_loss", "val_accuracy"});
  for (const auto& h : history) {
    csv.cell(h.epoch).cell(h.learning_rate).cell(h.train_loss).cell(h.val_accuracy);
    csv.end_row();
  }
}

void cmd_train(TrainOptions o, const GlobalOptions& g, std::ostream& out) {
  const Dataset ds = io::read_dataset(o.dataset);
  io::Checkpoint ck;
  if (!o.resume.empty()) {
    ck = io::read_checkpoint(o.resume);
    // The stored run defines everything except how far to go.
    ck.config.epochs = o.cfg.epochs;
    ck.config.threads = g.threads;
  } else {
    auto& c = o.cfg;
    const MatcherKind kind = parse_matcher_kind(o.strategy);
    c.strategy = (kind == MatcherKind::TAM || kind == MatcherKind::PlainDTW)
                     ? MatchingStrategy::soft(kind, o.lambda)
                     : MatchingStrategy::hard(kind);
    c.proxy_mode = parse_proxy(o.proxy);
    c.activation = parse_activation(o.activation);
    c.seed = g.seed;
    c.threads = g.threads;
    ck.config = c;
    ck.state = initial_state(ds, c);
  }
  continue_training(ds, ck.config, ck.state);

  if (!o.checkpoint_out.empty()) io::write_checkpoint(o.checkpoint_out, ck);
  if (!o.history_out.empty()) {
    std::ostringstream hist;
    write_history(hist, ck.state.history);
    io::write_text(o.history_out, hist.str());
  } else {
    write_history(out, ck.state.history);
  }
  out << "initial_val_accuracy: " << fixed(ck.state.initial_val_accuracy) << "\n";
  out << "best_val_accuracy: " << fixed(ck.state.best_val_accuracy) << "\n";
  out << "epochs_run: " << ck.state.next_epoch << (ck.state.stopped ? " (early stop)" : "")
      << "\n";
  if (o.test_episodes > 0) {
    const auto& c = ck.config;
    EvaluationOptions opts;
    opts.proxy_mode = c.proxy_mode;
    opts.threads = g.threads;
    const auto test_acc = [&](const EncoderParams& p) {
      const LabeledPool pool = encode_dataset(p, ds).pool(Split::MetaTest);
      return evaluate(pool, c.n, c.k, c.strategy, o.test_episodes, g.seed, opts).accuracy;
    };
    const EncoderParams init =
        identity_encoder(ds.dim, c.out_dim == 0 ? ds.dim : c.out_dim, c.activation);
    out << "meta_test_accuracy_initial: " << fixed(test_acc(init)) << "\n";
    out << "meta_test_accuracy_best: " << fixed(test_acc(ck.state.best)) << "\n";
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Temporal alignment for few-shot sequence classification", "tam"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--threads", g.threads, "Worker threads for episode evaluation")
      ->check(CLI::PositiveNumber);
  app.add_option("--output", g.output, "Write the primary output to this file");

  AlignOptions align_o;
  auto* align = app.add_subcommand("align", "Align two sequences or a distance matrix");
  align->add_option("files", align_o.files, "Sequence files (two) or a distance file (one)")
      ->required()
      ->expected(1, 2);
  align->add_option("--strategy", align_o.strategy, "min, mean, diagonal, dtw or tam")
      ->check(CLI::IsMember({"min", "mean", "diagonal", "dtw", "tam"}));
  align->add_option("--lambda", align_o.lambda, "Soft-min smoothing (soft dtw/tam)")
      ->check(CLI::PositiveNumber);
  align->add_flag("--path", align_o.path, "Print the hard alignment path");
  align->add_flag("--matrix", align_o.matrix, "Emit distances (and soft gradient) as CSV");
  align->add_flag("--normalize", align_o.normalize, "Divide dtw/tam scores by T");

  EpisodesOptions ep_o;
  auto* episodes = app.add_subcommand("episodes", "Evaluate one strategy over random episodes");
  add_eval_options(episodes, ep_o.eval);
  episodes->add_option("--strategy", ep_o.strategy)
      ->check(CLI::IsMember({"min", "mean", "diagonal", "dtw", "tam"}));
  episodes->add_option("--lambda", ep_o.lambda)->check(CLI::PositiveNumber);

  AblateOptions ab_o;
  auto* ablate = app.add_subcommand("ablate", "Compare all matchers on identical episodes");
  add_eval_options(ablate, ab_o.eval);
  ablate->add_option("--lambda", ab_o.lambda, "Use soft dtw/tam with this smoothing")
      ->check(CLI::PositiveNumber);

  SweepOptions sw_o;
  auto* sweep = app.add_subcommand("lambda-sweep", "Soft TAM accuracy per smoothing value");
  add_eval_options(sweep, sw_o.eval);
  sweep->add_option("--lambdas", sw_o.lambdas, "Smoothing values")->delimiter(',');

  GenOptions gen_o;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
  gen->add_option("--classes", gen_o.cfg.num_classes)->check(CLI::PositiveNumber);
  gen->add_option("--segments", gen_o.cfg.segments);
  gen->add_option("--dim", gen_o.cfg.dim)->check(CLI::PositiveNumber);
  gen->add_option("--length", gen_o.cfg.length)->check(CLI::PositiveNumber);
  gen->add_option("--noise", gen_o.cfg.noise_sigma)->check(CLI::NonNegativeNumber);
  gen->add_option("--warp", gen_o.cfg.warp_concentration, "Duration concentration (inf: equal)");
  gen->add_option("--mode", gen_o.mode)->check(CLI::IsMember({"independent", "permuted"}));
  gen->add_option("--atom-sets", gen_o.cfg.atom_sets)->check(CLI::PositiveNumber);
  gen->add_option("--videos", gen_o.cfg.videos_per_class)->check(CLI::PositiveNumber);
  gen->add_option("--nuisance-rank", gen_o.cfg.nuisance_rank);
  gen->add_option("--nuisance-scale", gen_o.cfg.nuisance_scale)->check(CLI::NonNegativeNumber);

  TrainOptions tr_o;
  auto* trn = app.add_subcommand("train", "Train the frame encoder end to end");
  trn->add_option("dataset", tr_o.dataset)->required();
  trn->add_option("--checkpoint", tr_o.checkpoint_out, "Checkpoint file to write");
  trn->add_option("--history", tr_o.history_out, "Per-epoch history CSV");
  trn->add_option("--resume", tr_o.resume, "Continue from a checkpoint");
  trn->add_option("--epochs", tr_o.cfg.epochs);
  trn->add_option("--episodes-per-epoch", tr_o.cfg.episodes_per_epoch)->check(CLI::PositiveNumber);
  trn->add_option("--accumulate", tr_o.cfg.accumulate)->check(CLI::PositiveNumber);
  trn->add_option("--lr", tr_o.cfg.learning_rate)->check(CLI::NonNegativeNumber);
  trn->add_option("--decay", tr_o.cfg.decay_factor);
  trn->add_option("--decay-interval", tr_o.cfg.decay_interval)->check(CLI::PositiveNumber);
  trn->add_option("-n,--way", tr_o.cfg.n)->check(CLI::PositiveNumber);
  trn->add_option("-k,--shot", tr_o.cfg.k)->check(CLI::PositiveNumber);
  trn->add_option("--strategy", tr_o.strategy)
      ->check(CLI::IsMember({"mean", "diagonal", "dtw", "tam"}));
  trn->add_option("--lambda", tr_o.lambda)->check(CLI::PositiveNumber);
  trn->add_option("--proxy", tr_o.proxy)->check(CLI::IsMember({"mean", "nearest"}));
  trn->add_option("--activation", tr_o.activation)->check(CLI::IsMember({"tanh", "identity"}));
  trn->add_option("--out-dim", tr_o.cfg.out_dim);
  trn->add_option("--val-episodes", tr_o.cfg.val_episodes)->check(CLI::PositiveNumber);
  trn->add_option("--patience", tr_o.cfg.patience);
  trn->add_option("--test-episodes", tr_o.test_episodes,
                  "Also report meta-test accuracy before and after training");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();  // program name
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  std::ostringstream buffer;
  std::ostream& primary = g.output.empty() ? out : buffer;
  try {
    if (*align) {
      cmd_align(align_o, primary);
    } else if (*episodes) {
      // With --output the CSV goes to the file and the summary to stdout.
      cmd_episodes(ep_o, g, primary, g.output.empty() ? err : out);
    } else if (*ablate) {
      cmd_ablate(ab_o, g, primary);
    } else if (*sweep) {
      cmd_lambda_sweep(sw_o, g, primary);
    } else if (*gen) {
      cmd_gen(gen_o, g, primary);
    } else if (*trn) {
      cmd_train(tr_o, g, primary);
    }
    if (!g.output.empty()) io::write_text(g.output, buffer.str());
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitOk;
}

}  // namespace tam::cli
