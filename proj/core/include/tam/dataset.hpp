#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "tam/episodic.hpp"
#include "tam/sequence.hpp"

namespace tam {

struct ClassRecord {
  int class_id = 0;
  std::string name;
  std::vector<FeatureSequence> videos;
};

struct DatasetSplits {
  std::vector<int> meta_train;
  std::vector<int> meta_val;
  std::vector<int> meta_test;
};

enum class Split { MetaTrain, MetaVal, MetaTest };

Split parse_split(std::string_view text);
std::string_view split_name(Split split);

// Labeled videos sharing one frame count and one frame dimension, plus a
// partition of the class ids into meta-train / meta-val / meta-test.
struct Dataset {
  std::size_t dim = 0;
  std::size_t length = 0;
  std::vector<ClassRecord> classes;
  DatasetSplits splits;

  const std::vector<int>& split_ids(Split split) const;
  // Throws InvalidArgument naming the offending class/video on shape errors,
  // overlapping splits or split ids without a class record.
  void validate() const;
  LabeledPool pool(Split split) const;
};

}  // namespace tam
