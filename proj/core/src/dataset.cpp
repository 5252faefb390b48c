#include "tam/dataset.hpp"

#include <set>
#include <string>

#include "tam/error.hpp"

namespace tam {

Split parse_split(std::string_view text) {
  if (text == "meta_train") return Split::MetaTrain;
  if (text == "meta_val") return Split::MetaVal;
  if (text == "meta_test") return Split::MetaTest;
  throw Error(ErrorCode::InvalidArgument, "unknown split '" + std::string(text) + "'");
}

std::string_view split_name(Split split) {
  switch (split) {
    case Split::MetaTrain: return "meta_train";
    case Split::MetaVal: return "meta_val";
    case Split::MetaTest: return "meta_test";
  }
  return "unknown";
}

const std::vector<int>& Dataset::split_ids(Split split) const {
  switch (split) {
    case Split::MetaTrain: return splits.meta_train;
    case Split::MetaVal: return splits.meta_val;
    case Split::MetaTest: return splits.meta_test;
  }
  throw Error(ErrorCode::Internal, "unhandled split");
}

void Dataset::validate() const {
  std::set<int> ids;
  for (const auto& c : classes) {
    if (c.class_id < 0 || !ids.insert(c.class_id).second) {
      throw Error(ErrorCode::InvalidArgument,
                  "class " + std::to_string(c.class_id) + ": invalid or duplicate class_id");
    }
    for (std::size_t v = 0; v < c.videos.size(); ++v) {
      if (c.videos[v].length() != length || c.videos[v].dim() != dim) {
        throw Error(ErrorCode::DimensionMismatch,
                    "class " + std::to_string(c.class_id) + " video " + std::to_string(v) +
                        " is " + std::to_string(c.videos[v].length()) + "x" +
                        std::to_string(c.videos[v].dim()) + ", expected " +
                        std::to_string(length) + "x" + std::to_string(dim));
      }
    }
  }
  std::set<int> seen;
  for (Split s : {Split::MetaTrain, Split::MetaVal, Split::MetaTest}) {
    for (int id : split_ids(s)) {
      if (!ids.contains(id)) {
        throw Error(ErrorCode::InvalidArgument, std::string(split_name(s)) + " lists class " +
                                                    std::to_string(id) + " with no record");
      }
      if (!seen.insert(id).second) {
        throw Error(ErrorCode::InvalidArgument,
                    "class " + std::to_string(id) + " appears in more than one split");
      }
    }
  }
}

LabeledPool Dataset::pool(Split split) const {
  const auto& wanted = split_ids(split);
  const std::set<int> keep(wanted.begin(), wanted.end());
  std::vector<LabeledSequence> items;
  for (const auto& c : classes) {
    if (!keep.contains(c.class_id)) continue;
    for (const auto& v : c.videos) items.push_back({v, c.class_id});
  }
  return LabeledPool(std::move(items));
}

}  // namespace tam
