#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace afecnn {

using Joint = std::array<float, 3>;  // x, y, z in meters
using Frame = std::vector<Joint>;

struct SkeletonSequence {
  std::vector<Frame> frames;
  int action_label = 0;
  int subject_id = 0;
  int camera_id = 0;
  int setup_id = 0;
  std::string source;  // provenance only; ignored by operator==

  std::size_t frame_count() const { return frames.size(); }
  std::size_t joint_count() const { return frames.empty() ? 0 : frames.front().size(); }

  /// Throws InputError unless every frame has the same joint count, all
  /// coordinates are finite and there are at least two frames.
  void validate() const;

  friend bool operator==(const SkeletonSequence& a, const SkeletonSequence& b) {
    return a.frames == b.frames && a.action_label == b.action_label && a.subject_id == b.subject_id &&
           a.camera_id == b.camera_id && a.setup_id == b.setup_id;
  }
};

struct Bone {
  std::size_t parent = 0;
  std::size_t child = 0;
  friend bool operator==(const Bone&, const Bone&) = default;
};

/// Rooted bone tree over J joints with its J x (J-1) incidence matrix.
class Topology {
 public:
  /// Orients undirected `edges` away from `root`. Throws TopologyError
  /// unless the edges form a spanning tree over `joint_count` joints.
  Topology(std::size_t joint_count, std::size_t root, std::span<const std::pair<std::size_t, std::size_t>> edges);

  /// 25-joint Kinect v2 layout, rooted at the spine-mid joint (index 1).
  static Topology ntu25();
  /// 15-joint humanoid used by the synthetic generator, rooted at the pelvis.
  static Topology humanoid15();

  std::size_t joint_count() const { return joint_count_; }
  std::size_t bone_count() const { return bones_.size(); }
  std::size_t root() const { return root_; }
  const std::vector<Bone>& bones() const { return bones_; }

  /// Bones ordered so every bone's parent joint is placed before its child.
  const std::vector<std::size_t>& traversal_order() const { return order_; }
  /// Bone whose child is joint j (undefined for the root).
  std::size_t bone_into(std::size_t joint) const { return bone_into_[joint]; }

  /// Row-major J x b matrix: +1 at the child joint, -1 at the parent.
  const std::vector<float>& incidence() const { return incidence_; }

  friend bool operator==(const Topology& a, const Topology& b) {
    return a.joint_count_ == b.joint_count_ && a.root_ == b.root_ && a.bones_ == b.bones_;
  }

 private:
  std::size_t joint_count_;
  std::size_t root_;
  std::vector<Bone> bones_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> bone_into_;
  std::vector<float> incidence_;
};

/// J x b incidence matrix of a bone tree (row-major).
std::vector<float> build_incidence(const Topology& topology);

/// Bone vectors of one frame: b_k = p_child - p_parent.
std::vector<Joint> bone_vectors(std::span<const Joint> joints, const Topology& topology);

/// Inverse of bone_vectors with the root pinned at `root_pos`: every joint is
/// its parent's position plus its bone, accumulated from the root outwards.
Frame reconstruct_joints(std::span<const Joint> bones, const Topology& topology, const Joint& root_pos);

/// Subtracts frame 0's `root_joint` position from every joint of every frame.
SkeletonSequence center_root(const SkeletonSequence& seq, std::size_t root_joint);

/// Linear interpolation onto `frames` uniformly spaced time positions.
/// First and last frames are copied exactly.
SkeletonSequence resample(const SkeletonSequence& seq, std::size_t frames);

/// center_root followed by resample.
SkeletonSequence preprocess(const SkeletonSequence& seq, std::size_t root_joint, std::size_t frames);

}  // namespace afecnn
