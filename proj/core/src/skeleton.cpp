#include "afecnn/skeleton.hpp"

#include <cmath>
#include <queue>
#include <string>

#include "afecnn/errors.hpp"

namespace afecnn {

void SkeletonSequence::validate() const {
  if (frames.size() < 2) {
    throw InputError("sequence needs at least 2 frames, got " + std::to_string(frames.size()));
  }
  const std::size_t joints = frames.front().size();
  if (joints == 0) throw InputError("sequence frames have no joints");
  for (std::size_t t = 0; t < frames.size(); ++t) {
    if (frames[t].size() != joints) {
      throw InputError("frame " + std::to_string(t) + " has " + std::to_string(frames[t].size()) +
                       " joints, expected " + std::to_string(joints));
    }
    for (const Joint& p : frames[t]) {
      for (float c : p) {
        if (!std::isfinite(c)) throw InputError("frame " + std::to_string(t) + " has a non-finite coordinate");
      }
    }
  }
}

Topology::Topology(std::size_t joint_count, std::size_t root,
                   std::span<const std::pair<std::size_t, std::size_t>> edges)
    : joint_count_(joint_count), root_(root) {
  if (joint_count == 0 || root >= joint_count) throw TopologyError("root joint outside the skeleton");
  if (edges.size() + 1 != joint_count) {
    throw TopologyError("a tree over " + std::to_string(joint_count) + " joints needs " +
                        std::to_string(joint_count - 1) + " bones, got " + std::to_string(edges.size()));
  }
  std::vector<std::vector<std::size_t>> incident(joint_count);
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const auto [a, b] = edges[k];
    if (a >= joint_count || b >= joint_count || a == b) {
      throw TopologyError("bone " + std::to_string(k) + " references an invalid joint");
    }
    incident[a].push_back(k);
    incident[b].push_back(k);
  }

  bones_.resize(edges.size());
  bone_into_.assign(joint_count, edges.size());
  std::vector<bool> reached(joint_count, false);
  std::queue<std::size_t> frontier;
  frontier.push(root);
  reached[root] = true;
  while (!frontier.empty()) {
    const std::size_t j = frontier.front();
    frontier.pop();
    for (std::size_t k : incident[j]) {
      const std::size_t other = edges[k].first == j ? edges[k].second : edges[k].first;
      if (reached[other]) {
        if (bone_into_[j] != k) throw TopologyError("bones contain a cycle");
        continue;
      }
      reached[other] = true;
      bones_[k] = Bone{j, other};
      bone_into_[other] = k;
      order_.push_back(k);
      frontier.push(other);
    }
  }
  for (std::size_t j = 0; j < joint_count; ++j) {
    if (!reached[j]) throw TopologyError("joint " + std::to_string(j) + " is not connected to the root");
  }
  incidence_ = build_incidence(*this);
}

Topology Topology::ntu25() {
  static const std::pair<std::size_t, std::size_t> edges[] = {
      {0, 1},   {1, 20},  {2, 20},  {3, 2},   {4, 20},  {5, 4},   {6, 5},   {7, 6},
      {8, 20},  {9, 8},   {10, 9},  {11, 10}, {12, 0},  {13, 12}, {14, 13}, {15, 14},
      {16, 0},  {17, 16}, {18, 17}, {19, 18}, {21, 7},  {22, 7},  {23, 11}, {24, 11}};
  return Topology(25, 1, edges);
}

Topology Topology::humanoid15() {
  // 0 pelvis, 1 chest, 2 head, 3-5 left arm, 6-8 right arm, 9-11 left leg, 12-14 right leg
  static const std::pair<std::size_t, std::size_t> edges[] = {
      {0, 1}, {1, 2}, {1, 3}, {3, 4}, {4, 5}, {1, 6}, {6, 7}, {7, 8},
      {0, 9}, {9, 10}, {10, 11}, {0, 12}, {12, 13}, {13, 14}};
  return Topology(15, 0, edges);
}

std::vector<float> build_incidence(const Topology& topology) {
  const std::size_t j = topology.joint_count();
  const std::size_t b = topology.bone_count();
  if (b + 1 != j || topology.traversal_order().size() != b) {
    throw TopologyError("bones do not form a spanning tree");
  }
  std::vector<float> c(j * b, 0.0f);
  for (std::size_t k = 0; k < b; ++k) {
    const Bone& bone = topology.bones()[k];
    c[bone.child * b + k] = 1.0f;
    c[bone.parent * b + k] = -1.0f;
  }
  return c;
}

std::vector<Joint> bone_vectors(std::span<const Joint> joints, const Topology& topology) {
  if (joints.size() != topology.joint_count()) {
    throw InputError("bone_vectors: frame has " + std::to_string(joints.size()) + " joints, topology " +
                     std::to_string(topology.joint_count()));
  }
  std::vector<Joint> out(topology.bone_count());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const Bone& bone = topology.bones()[k];
    for (int c = 0; c < 3; ++c) out[k][c] = joints[bone.child][c] - joints[bone.parent][c];
  }
  return out;
}

Frame reconstruct_joints(std::span<const Joint> bones, const Topology& topology, const Joint& root_pos) {
  if (bones.size() != topology.bone_count()) {
    throw InputError("reconstruct_joints: " + std::to_string(bones.size()) + " bones, topology has " +
                     std::to_string(topology.bone_count()));
  }
  Frame joints(topology.joint_count());
  joints[topology.root()] = root_pos;
  for (std::size_t k : topology.traversal_order()) {
    const Bone& bone = topology.bones()[k];
    for (int c = 0; c < 3; ++c) joints[bone.child][c] = joints[bone.parent][c] + bones[k][c];
  }
  return joints;
}

SkeletonSequence center_root(const SkeletonSequence& seq, std::size_t root_joint) {
  SkeletonSequence out = seq;
  if (seq.frames.empty()) return out;
  if (root_joint >= seq.joint_count()) throw InputError("center_root: root joint outside the skeleton");
  const Joint origin = seq.frames.front()[root_joint];
  for (Frame& frame : out.frames) {
    for (Joint& p : frame) {
      for (int c = 0; c < 3; ++c) p[c] -= origin[c];
    }
  }
  return out;
}

SkeletonSequence resample(const SkeletonSequence& seq, std::size_t frames) {
  if (seq.frames.size() < 2 || frames < 2) {
    throw InputError("resample needs at least 2 input and 2 output frames");
  }
  SkeletonSequence out = seq;
  out.frames.clear();
  out.frames.reserve(frames);
  const std::size_t last = seq.frames.size() - 1;
  for (std::size_t i = 0; i < frames; ++i) {
    const double pos = static_cast<double>(i * last) / static_cast<double>(frames - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(lo);
    if (frac == 0.0 || lo >= last) {
      out.frames.push_back(seq.frames[std::min(lo, last)]);
      continue;
    }
    const Frame& a = seq.frames[lo];
    const Frame& b = seq.frames[lo + 1];
    Frame f(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) {
      for (int c = 0; c < 3; ++c) {
        f[j][c] = static_cast<float>(a[j][c] + frac * (static_cast<double>(b[j][c]) - a[j][c]));
      }
    }
    out.frames.push_back(std::move(f));
  }
  return out;
}

SkeletonSequence preprocess(const SkeletonSequence& seq, std::size_t root_joint, std::size_t frames) {
  return resample(center_root(seq, root_joint), frames);
}

}  // namespace afecnn
