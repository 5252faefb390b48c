#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tam/dataset.hpp"
#include "tam/matrix.hpp"
#include "tam/sequence.hpp"
#include "tam/trainer.hpp"

namespace tam::io {

inline constexpr int kFormatVersion = 1;

// Shortest decimal text that parses back to the same double.
std::string format_double(double x);

// Dataset document:
//   {"format_version": 1, "dim": D, "T": T,
//    "classes": [{"class_id": c, "name": "...", "videos": [[[...] x D] x T, ...]}],
//    "splits": {"meta_train": [...], "meta_val": [...], "meta_test": [...]}}
std::string dataset_to_json(const Dataset& ds);
Dataset dataset_from_json(std::string_view text);
void write_dataset(const std::filesystem::path& path, const Dataset& ds);
Dataset read_dataset(const std::filesystem::path& path);

// Alignment input: {"format_version": 1, "frames": [[...], ...]} holds a
// feature sequence; {"format_version": 1, "distances": [[...], ...]} holds a
// precomputed distance matrix.
using AlignInput = std::variant<FeatureSequence, DistanceMatrix>;
AlignInput align_input_from_json(std::string_view text);
AlignInput read_align_input(const std::filesystem::path& path);
std::string sequence_to_json(const FeatureSequence& seq);
std::string distances_to_json(const DistanceMatrix& d);

// Checkpoint: training config plus the full resumable state.
struct Checkpoint {
  TrainConfig config;
  TrainState state;
};
std::string checkpoint_to_json(const Checkpoint& ck);
Checkpoint checkpoint_from_json(std::string_view text);
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint read_checkpoint(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

// Minimal CSV emitter: a header row, then rows of preformatted cells.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const std::vector<std::string>& header);
  CsvWriter& cell(std::string_view text);
  CsvWriter& cell(double value);
  CsvWriter& cell(std::size_t value);
  void end_row();

 private:
  std::ostream& out_;
  std::size_t columns_;
  std::size_t pending_ = 0;
};

}  // namespace tam::io
