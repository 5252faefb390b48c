#include "tam/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "tam/error.hpp"

namespace tam::io {
namespace {

using nlohmann::json;

[[noreturn]] void parse_fail(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::Parse, where + ": " + what);
}

const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) parse_fail(where, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) parse_fail(where, std::string("missing field '") + key + "'");
  return *it;
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) parse_fail(where, "expected a finite number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) parse_fail(where, "expected a finite number");
  return x;
}

std::size_t count(const json& v, const std::string& where) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    parse_fail(where, "expected a nonnegative integer");
  }
  return v.get<std::size_t>();
}

int integer(const json& v, const std::string& where) {
  if (!v.is_number_integer()) parse_fail(where, "expected an integer");
  return v.get<int>();
}

void check_version(const json& doc) {
  const auto& v = field(doc, "format_version", "document");
  if (!v.is_number_integer()) parse_fail("format_version", "expected an integer");
  if (v.get<long long>() != kFormatVersion) {
    throw Error(ErrorCode::UnsupportedVersion,
                "format_version " + std::to_string(v.get<long long>()) +
                    " is not supported (expected " + std::to_string(kFormatVersion) + ")");
  }
}

json parse_document(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, std::string("malformed JSON: ") + e.what());
  }
}

Matrix grid_from_json(const json& v, const std::string& where, std::size_t want_rows = 0,
                      std::size_t want_cols = 0) {
  if (!v.is_array() || v.empty()) parse_fail(where, "expected a nonempty array of rows");
  const std::size_t rows = v.size();
  if (want_rows && rows != want_rows) {
    parse_fail(where, "has " + std::to_string(rows) + " rows, expected " + std::to_string(want_rows));
  }
  std::size_t cols = want_cols;
  Matrix m;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string rw = where + " row " + std::to_string(r);
    const auto& row = v[r];
    if (!row.is_array()) parse_fail(rw, "expected an array");
    if (cols == 0) cols = row.size();
    if (row.size() != cols || cols == 0) {
      parse_fail(rw, "has " + std::to_string(row.size()) + " values, expected " +
                         std::to_string(cols) + " (non-rectangular)");
    }
    if (r == 0) m = Matrix(rows, cols);
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = number(row[c], rw + " column " + std::to_string(c));
  }
  return m;
}

json grid_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (double x : m.row(r)) row.push_back(x);
    rows.push_back(std::move(row));
  }
  return rows;
}

json strategy_to_json(const MatchingStrategy& s) {
  json j{{"kind", std::string(matcher_kind_name(s.kind))},
         {"mode", s.mode == MatchMode::Soft ? "soft" : "hard"}};
  if (s.lambda) j["lambda"] = *s.lambda;
  return j;
}

MatchingStrategy strategy_from_json(const json& j, const std::string& where) {
  MatchingStrategy s;
  const auto& kind = field(j, "kind", where);
  const auto& mode = field(j, "mode", where);
  if (!kind.is_string() || !mode.is_string()) parse_fail(where, "kind and mode must be strings");
  try {
    s.kind = parse_matcher_kind(kind.get<std::string>());
  } catch (const Error& e) {
    parse_fail(where + ".kind", e.what());
  }
  const auto m = mode.get<std::string>();
  if (m == "soft") {
    s.mode = MatchMode::Soft;
  } else if (m == "hard") {
    s.mode = MatchMode::Hard;
  } else {
    parse_fail(where + ".mode", "expected 'hard' or 'soft'");
  }
  if (j.contains("lambda")) s.lambda = number(j["lambda"], where + ".lambda");
  return s;
}

json encoder_to_json(const EncoderParams& p) {
  return json{{"raw_dim", p.raw_dim()},
              {"out_dim", p.out_dim()},
              {"activation", std::string(activation_name(p.activation))},
              {"weight", grid_to_json(p.weight)},
              {"bias", p.bias}};
}

EncoderParams encoder_from_json(const json& j, const std::string& where) {
  EncoderParams p;
  const std::size_t raw = count(field(j, "raw_dim", where), where + ".raw_dim");
  const std::size_t out = count(field(j, "out_dim", where), where + ".out_dim");
  const auto& act = field(j, "activation", where);
  if (!act.is_string()) parse_fail(where + ".activation", "expected a string");
  try {
    p.activation = parse_activation(act.get<std::string>());
  } catch (const Error& e) {
    parse_fail(where + ".activation", e.what());
  }
  p.weight = grid_from_json(field(j, "weight", where), where + ".weight", raw, out);
  const auto& bias = field(j, "bias", where);
  if (!bias.is_array() || bias.size() != out) {
    parse_fail(where + ".bias", "expected " + std::to_string(out) + " values");
  }
  for (std::size_t i = 0; i < out; ++i) {
    p.bias.push_back(number(bias[i], where + ".bias[" + std::to_string(i) + "]"));
  }
  return p;
}

std::vector<int> id_list(const json& v, const std::string& where) {
  if (!v.is_array()) parse_fail(where, "expected an array of class ids");
  std::vector<int> ids;
  for (std::size_t i = 0; i < v.size(); ++i) {
    ids.push_back(integer(v[i], where + "[" + std::to_string(i) + "]"));
  }
  return ids;
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string dataset_to_json(const Dataset& ds) {
  json classes = json::array();
  for (const auto& c : ds.classes) {
    json videos = json::array();
    for (const auto& v : c.videos) videos.push_back(grid_to_json(v.frames()));
    classes.push_back(json{{"class_id", c.class_id}, {"name", c.name}, {"videos", std::move(videos)}});
  }
  json doc{{"format_version", kFormatVersion},
           {"dim", ds.dim},
           {"T", ds.length},
           {"classes", std::move(classes)},
           {"splits",
            {{"meta_train", ds.splits.meta_train},
             {"meta_val", ds.splits.meta_val},
             {"meta_test", ds.splits.meta_test}}}};
  return doc.dump() + "\n";
}

Dataset dataset_from_json(std::string_view text) {
  const json doc = parse_document(text);
  check_version(doc);
  Dataset ds;
  ds.dim = count(field(doc, "dim", "document"), "dim");
  ds.length = count(field(doc, "T", "document"), "T");
  if (ds.dim == 0 || ds.length == 0) parse_fail("document", "dim and T must be positive");
  const auto& classes = field(doc, "classes", "document");
  if (!classes.is_array()) parse_fail("classes", "expected an array");
  for (std::size_t ci = 0; ci < classes.size(); ++ci) {
    const std::string where = "classes[" + std::to_string(ci) + "]";
    const auto& c = classes[ci];
    ClassRecord rec;
    rec.class_id = integer(field(c, "class_id", where), where + ".class_id");
    const auto& name = field(c, "name", where);
    if (!name.is_string()) parse_fail(where + ".name", "expected a string");
    rec.name = name.get<std::string>();
    const auto& videos = field(c, "videos", where);
    if (!videos.is_array()) parse_fail(where + ".videos", "expected an array");
    for (std::size_t vi = 0; vi < videos.size(); ++vi) {
      const std::string vw =
          "class " + std::to_string(rec.class_id) + " video " + std::to_string(vi);
      rec.videos.emplace_back(grid_from_json(videos[vi], vw, ds.length, ds.dim));
    }
    ds.classes.push_back(std::move(rec));
  }
  const auto& splits = field(doc, "splits", "document");
  ds.splits.meta_train = id_list(field(splits, "meta_train", "splits"), "splits.meta_train");
  ds.splits.meta_val = id_list(field(splits, "meta_val", "splits"), "splits.meta_val");
  ds.splits.meta_test = id_list(field(splits, "meta_test", "splits"), "splits.meta_test");
  try {
    ds.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::Parse, e.what());
  }
  return ds;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Parse, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(ErrorCode::InvalidArgument, "failed writing '" + path.string() + "'");
}

void write_dataset(const std::filesystem::path& path, const Dataset& ds) {
  write_text(path, dataset_to_json(ds));
}

Dataset read_dataset(const std::filesystem::path& path) { return dataset_from_json(read_text(path)); }

AlignInput align_input_from_json(std::string_view text) {
  const json doc = parse_document(text);
  check_version(doc);
  if (doc.contains("frames")) {
    return FeatureSequence(grid_from_json(doc["frames"], "frames"));
  }
  if (doc.contains("distances")) {
    try {
      return DistanceMatrix(grid_from_json(doc["distances"], "distances"));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Parse) throw;
      parse_fail("distances", e.what());
    }
  }
  parse_fail("document", "expected a 'frames' or 'distances' field");
}

AlignInput read_align_input(const std::filesystem::path& path) {
  return align_input_from_json(read_text(path));
}

std::string sequence_to_json(const FeatureSequence& seq) {
  return json{{"format_version", kFormatVersion}, {"frames", grid_to_json(seq.frames())}}.dump() +
         "\n";
}

std::string distances_to_json(const DistanceMatrix& d) {
  return json{{"format_version", kFormatVersion}, {"distances", grid_to_json(d.entries())}}
             .dump() +
         "\n";
}

std::string checkpoint_to_json(const Checkpoint& ck) {
  const auto& c = ck.config;
  json config{{"learning_rate", c.learning_rate},
              {"decay_factor", c.decay_factor},
              {"decay_interval", c.decay_interval},
              {"epochs", c.epochs},
              {"episodes_per_epoch", c.episodes_per_epoch},
              {"accumulate", c.accumulate},
              {"n", c.n},
              {"k", c.k},
              {"strategy", strategy_to_json(c.strategy)},
              {"proxy_mode", c.proxy_mode == ProxyMode::MeanSequence ? "mean" : "nearest"},
              {"activation", std::string(activation_name(c.activation))},
              {"out_dim", c.out_dim},
              {"val_episodes", c.val_episodes},
              {"patience", c.patience},
              {"seed", c.seed}};
  json history = json::array();
  for (const auto& h : ck.state.history) {
    history.push_back(json{{"epoch", h.epoch},
                           {"learning_rate", h.learning_rate},
                           {"train_loss", h.train_loss},
                           {"val_accuracy", h.val_accuracy}});
  }
  const auto& s = ck.state;
  json doc{{"format_version", kFormatVersion},
           {"config", std::move(config)},
           {"encoder", encoder_to_json(s.current)},
           {"best_encoder", encoder_to_json(s.best)},
           {"best_val_accuracy", s.best_val_accuracy},
           {"initial_val_accuracy", s.initial_val_accuracy},
           {"epochs_since_best", s.epochs_since_best},
           {"next_epoch", s.next_epoch},
           {"stopped", s.stopped},
           {"history", std::move(history)}};
  return doc.dump(1) + "\n";
}

Checkpoint checkpoint_from_json(std::string_view text) {
  const json doc = parse_document(text);
  check_version(doc);
  Checkpoint ck;
  const auto& cj = field(doc, "config", "document");
  auto& c = ck.config;
  c.learning_rate = number(field(cj, "learning_rate", "config"), "config.learning_rate");
  c.decay_factor = number(field(cj, "decay_factor", "config"), "config.decay_factor");
  c.decay_interval = count(field(cj, "decay_interval", "config"), "config.decay_interval");
  c.epochs = count(field(cj, "epochs", "config"), "config.epochs");
  c.episodes_per_epoch = count(field(cj, "episodes_per_epoch", "config"), "config.episodes_per_epoch");
  c.accumulate = count(field(cj, "accumulate", "config"), "config.accumulate");
  c.n = count(field(cj, "n", "config"), "config.n");
  c.k = count(field(cj, "k", "config"), "config.k");
  c.strategy = strategy_from_json(field(cj, "strategy", "config"), "config.strategy");
  const auto& pm = field(cj, "proxy_mode", "config");
  if (pm == "mean") {
    c.proxy_mode = ProxyMode::MeanSequence;
  } else if (pm == "nearest") {
    c.proxy_mode = ProxyMode::NearestExample;
  } else {
    parse_fail("config.proxy_mode", "expected 'mean' or 'nearest'");
  }
  const auto& act = field(cj, "activation", "config");
  if (!act.is_string()) parse_fail("config.activation", "expected a string");
  try {
    c.activation = parse_activation(act.get<std::string>());
  } catch (const Error& e) {
    parse_fail("config.activation", e.what());
  }
  c.out_dim = count(field(cj, "out_dim", "config"), "config.out_dim");
  c.val_episodes = count(field(cj, "val_episodes", "config"), "config.val_episodes");
  c.patience = count(field(cj, "patience", "config"), "config.patience");
  const auto& seed = field(cj, "seed", "config");
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0)) {
    parse_fail("config.seed", "expected a nonnegative integer");
  }
  c.seed = seed.get<std::uint64_t>();

  auto& s = ck.state;
  s.current = encoder_from_json(field(doc, "encoder", "document"), "encoder");
  s.best = encoder_from_json(field(doc, "best_encoder", "document"), "best_encoder");
  s.best_val_accuracy = number(field(doc, "best_val_accuracy", "document"), "best_val_accuracy");
  s.initial_val_accuracy =
      number(field(doc, "initial_val_accuracy", "document"), "initial_val_accuracy");
  s.epochs_since_best = count(field(doc, "epochs_since_best", "document"), "epochs_since_best");
  s.next_epoch = count(field(doc, "next_epoch", "document"), "next_epoch");
  const auto& stopped = field(doc, "stopped", "document");
  if (!stopped.is_boolean()) parse_fail("stopped", "expected a boolean");
  s.stopped = stopped.get<bool>();
  const auto& hist = field(doc, "history", "document");
  if (!hist.is_array()) parse_fail("history", "expected an array");
  for (std::size_t i = 0; i < hist.size(); ++i) {
    const std::string w = "history[" + std::to_string(i) + "]";
    s.history.push_back({count(field(hist[i], "epoch", w), w + ".epoch"),
                         number(field(hist[i], "learning_rate", w), w + ".learning_rate"),
                         number(field(hist[i], "train_loss", w), w + ".train_loss"),
                         number(field(hist[i], "val_accuracy", w), w + ".val_accuracy")});
  }
  return ck;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  write_text(path, checkpoint_to_json(ck));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_json(read_text(path));
}

CsvWriter::CsvWriter(std::ostream& out, const std::vector<std::string>& header)
    : out_(out), columns_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
  out_ << '\n';
}

CsvWriter& CsvWriter::cell(std::string_view text) {
  if (pending_ >= columns_) throw Error(ErrorCode::Internal, "CSV row has too many cells");
  out_ << (pending_++ ? "," : "") << text;
  return *this;
}

CsvWriter& CsvWriter::cell(double value) { return cell(format_double(value)); }

CsvWriter& CsvWriter::cell(std::size_t value) { return cell(std::to_string(value)); }

void CsvWriter::end_row() {
  if (pending_ != columns_) throw Error(ErrorCode::Internal, "CSV row has too few cells");
  out_ << '\n';
  pending_ = 0;
}

}  // namespace tam::io
