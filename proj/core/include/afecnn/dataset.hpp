#pragma once

#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "afecnn/skeleton.hpp"

namespace afecnn {

enum class Protocol {
  kCrossSubject,  // training subjects from a configured id set
  kCrossView,     // camera 1 tests, cameras 2 and 3 train
  kCrossSetup,    // even setup ids train, odd ids test
  kHoldout,       // train and test supplied separately; never produced by split_dataset
};

/// Accepts "cross-subject", "cross-view", "cross-setup" (UsageError otherwise).
Protocol parse_protocol(std::string_view name);
std::string protocol_name(Protocol protocol);

/// Indices into the dataset the split was computed from.
struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  Protocol protocol = Protocol::kCrossSubject;
};

/// Official NTU RGB+D cross-subject training performers.
const std::set<int>& ntu_cross_subject_train_ids();

/// Partitions `sequences` by `protocol`. Cross-view ignores cameras other
/// than 1-3. Index order is preserved, so the result is deterministic.
DatasetSplit split_dataset(std::span<const SkeletonSequence> sequences, Protocol protocol,
                           const std::set<int>& train_subjects = ntu_cross_subject_train_ids());

/// Split of `train` followed by `test` after concatenating them.
DatasetSplit holdout_split(std::size_t train_count, std::size_t test_count);

}  // namespace afecnn
