#include "afecnn/dataset.hpp"

#include "afecnn/errors.hpp"

namespace afecnn {

Protocol parse_protocol(std::string_view name) {
  if (name == "cross-subject") return Protocol::kCrossSubject;
  if (name == "cross-view") return Protocol::kCrossView;
  if (name == "cross-setup") return Protocol::kCrossSetup;
  throw UsageError("unknown protocol '" + std::string(name) +
                   "' (expected cross-subject, cross-view or cross-setup)");
}

std::string protocol_name(Protocol protocol) {
  switch (protocol) {
    case Protocol::kCrossSubject: return "cross-subject";
    case Protocol::kCrossView: return "cross-view";
    case Protocol::kCrossSetup: return "cross-setup";
    case Protocol::kHoldout: return "holdout";
  }
  return "unknown";
}

const std::set<int>& ntu_cross_subject_train_ids() {
  static const std::set<int> ids = {1,  2,  4,  5,  8,  9,  13, 14, 15, 16,
                                    17, 18, 19, 25, 27, 28, 31, 34, 35, 38};
  return ids;
}

DatasetSplit split_dataset(std::span<const SkeletonSequence> sequences, Protocol protocol,
                           const std::set<int>& train_subjects) {
  DatasetSplit split;
  split.protocol = protocol;
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    const SkeletonSequence& s = sequences[i];
    switch (protocol) {
      case Protocol::kCrossSubject:
        (train_subjects.contains(s.subject_id) ? split.train : split.test).push_back(i);
        break;
      case Protocol::kCrossView:
        if (s.camera_id == 1) {
          split.test.push_back(i);
        } else if (s.camera_id == 2 || s.camera_id == 3) {
          split.train.push_back(i);
        }
        break;
      case Protocol::kCrossSetup:
        (s.setup_id % 2 == 0 ? split.train : split.test).push_back(i);
        break;
      case Protocol::kHoldout:
        throw UsageError("holdout splits come from separate train/test files");
    }
  }
  return split;
}

DatasetSplit holdout_split(std::size_t train_count, std::size_t test_count) {
  DatasetSplit split;
  split.protocol = Protocol::kHoldout;
  for (std::size_t i = 0; i < train_count; ++i) split.train.push_back(i);
  for (std::size_t i = 0; i < test_count; ++i) split.test.push_back(train_count + i);
  return split;
}

}  // namespace afecnn
