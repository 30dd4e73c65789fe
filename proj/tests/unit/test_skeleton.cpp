#include <gtest/gtest.h>

#include "afecnn/errors.hpp"
#include "afecnn/skeleton.hpp"
#include "test_support.hpp"

using namespace afecnn;

namespace {

Topology chain3() {
  const std::vector<std::pair<std::size_t, std::size_t>> edges{{0, 1}, {1, 2}};
  return Topology(3, 0, edges);
}

SkeletonSequence ramp_sequence(std::size_t frames, std::size_t joints) {
  SkeletonSequence s;
  for (std::size_t t = 0; t < frames; ++t) {
    Frame f(joints);
    for (std::size_t j = 0; j < joints; ++j) f[j] = {float(t), float(2 * t + j), float(j)};
    s.frames.push_back(f);
  }
  return s;
}

}  // namespace

TEST(Topology, ChainIncidence) {
  const Topology t = chain3();
  EXPECT_EQ(build_incidence(t), (std::vector<float>{-1, 0, 1, -1, 0, 1}));
  EXPECT_EQ(t.incidence(), build_incidence(t));
}

TEST(Topology, BuiltInLayoutsAreTrees) {
  for (const Topology& t : {Topology::ntu25(), Topology::humanoid15()}) {
    EXPECT_EQ(t.bone_count(), t.joint_count() - 1);
    const auto& c = t.incidence();
    const std::size_t b = t.bone_count();
    for (std::size_t k = 0; k < b; ++k) {
      int plus = 0, minus = 0;
      float sum = 0;
      for (std::size_t j = 0; j < t.joint_count(); ++j) {
        const float v = c[j * b + k];
        sum += v;
        plus += v == 1.0f;
        minus += v == -1.0f;
      }
      EXPECT_EQ(plus, 1);
      EXPECT_EQ(minus, 1);
      EXPECT_EQ(sum, 0.0f);
    }
  }
  EXPECT_EQ(Topology::ntu25().root(), 1u);
  EXPECT_EQ(Topology::humanoid15().root(), 0u);
}

TEST(Topology, RejectsNonTrees) {
  const std::vector<std::pair<std::size_t, std::size_t>> cycle{{0, 1}, {1, 2}, {2, 0}};
  EXPECT_THROW(Topology(3, 0, cycle), TopologyError);
  const std::vector<std::pair<std::size_t, std::size_t>> split{{0, 1}, {2, 3}, {0, 1}};
  EXPECT_THROW(Topology(4, 0, split), TopologyError);
  const std::vector<std::pair<std::size_t, std::size_t>> out_of_range{{0, 5}};
  EXPECT_THROW(Topology(2, 0, out_of_range), TopologyError);
}

TEST(Topology, TraversalVisitsParentsFirst) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Topology t = test::random_tree(12, rng);
    std::vector<bool> placed(12, false);
    placed[t.root()] = true;
    for (std::size_t k : t.traversal_order()) {
      const Bone& b = t.bones()[k];
      EXPECT_TRUE(placed[b.parent]);
      placed[b.child] = true;
    }
  }
}

TEST(Bones, ChainBoneVectors) {
  const std::vector<Joint> joints{{0, 0, 0}, {1, 0, 0}, {1, 1, 0}};
  const auto bones = bone_vectors(joints, chain3());
  EXPECT_EQ(bones[0], (Joint{1, 0, 0}));
  EXPECT_EQ(bones[1], (Joint{0, 1, 0}));
}

TEST(Bones, ZeroBonesCollapseOntoRoot) {
  const std::vector<Joint> zeros(2, Joint{0, 0, 0});
  for (const Joint& j : reconstruct_joints(zeros, chain3(), {3, 4, 5})) EXPECT_EQ(j, (Joint{3, 4, 5}));
}

TEST(Bones, RoundTripOverRandomTrees) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<float> coord(-1, 1);
  for (int trial = 0; trial < 100; ++trial) {
    const Topology t = test::random_tree(5 + trial % 21, rng);
    std::vector<Joint> joints(t.joint_count());
    for (auto& j : joints) j = {coord(rng), coord(rng), coord(rng)};
    const Frame back = reconstruct_joints(bone_vectors(joints, t), t, joints[t.root()]);
    for (std::size_t j = 0; j < joints.size(); ++j) {
      for (int c = 0; c < 3; ++c) EXPECT_NEAR(back[j][c], joints[j][c], 1e-6);
    }
  }
}

TEST(Preprocess, CenterRootRemovesOffset) {
  SkeletonSequence s = ramp_sequence(4, 3);
  const SkeletonSequence centred = center_root(s, 0);
  EXPECT_EQ(centred.frames[0][0], (Joint{0, 0, 0}));
  EXPECT_EQ(center_root(centred, 0), centred);
  SkeletonSequence shifted = centred;
  for (auto& f : shifted.frames) {
    for (auto& j : f) j = {j[0] + 1, j[1] + 2, j[2] + 3};
  }
  EXPECT_EQ(center_root(shifted, 0), centred);
}

TEST(Preprocess, ResampleSameLengthIsIdentity) {
  const SkeletonSequence s = ramp_sequence(7, 4);
  EXPECT_EQ(resample(s, 7), s);
}

TEST(Preprocess, ResampleMidpoint) {
  SkeletonSequence s;
  s.frames = {Frame{{0, 0, 0}}, Frame{{1, 1, 1}}};
  const SkeletonSequence r = resample(s, 3);
  ASSERT_EQ(r.frame_count(), 3u);
  EXPECT_EQ(r.frames[1][0], (Joint{0.5f, 0.5f, 0.5f}));
}

TEST(Preprocess, ResampleKeepsEndpointsAndMonotonicity) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> step(0.0f, 0.3f);
  for (int trial = 0; trial < 20; ++trial) {
    SkeletonSequence s;
    float x = step(rng) - 1.0f;
    const std::size_t n = 3 + trial;
    for (std::size_t t = 0; t < n; ++t) {
      x += step(rng);
      s.frames.push_back(Frame{{x, -x, 0.5f * x}});
    }
    for (std::size_t target : {2u, 5u, 64u}) {
      const SkeletonSequence r = resample(s, target);
      ASSERT_EQ(r.frame_count(), target);
      EXPECT_EQ(r.frames.front(), s.frames.front());
      EXPECT_EQ(r.frames.back(), s.frames.back());
      for (std::size_t t = 1; t < target; ++t) {
        EXPECT_GE(r.frames[t][0][0], r.frames[t - 1][0][0]);
        EXPECT_LE(r.frames[t][0][1], r.frames[t - 1][0][1]);
      }
    }
  }
}

TEST(Sequence, ValidateRejectsShortRaggedAndNonFinite) {
  SkeletonSequence s = ramp_sequence(1, 2);
  EXPECT_THROW(s.validate(), InputError);
  s = ramp_sequence(3, 2);
  s.frames[1].pop_back();
  EXPECT_THROW(s.validate(), InputError);
  s = ramp_sequence(3, 2);
  s.frames[2][1][0] = std::numeric_limits<float>::infinity();
  EXPECT_THROW(s.validate(), InputError);
  EXPECT_NO_THROW(ramp_sequence(2, 2).validate());
}
