#pragma once

// Action feature enhancement: turns a preprocessed skeleton sequence into
// four 3 x T x T images for the recognizer.
//
// Layouts: the sequence tensor is [T, J, 3]; joint and bone images before
// embedding are [3, J, T] (channel, joint, frame); embedded images are
// [3, T, T]; the attention map is [T, T].

#include <optional>

#include "afecnn/model.hpp"
#include "afecnn/skeleton.hpp"
#include "afecnn/tensor.hpp"

namespace afecnn {

template <class T>
struct EncodedBundle {
  std::array<std::optional<Tensor<T>>, kStreamCount> images;  // indexed by Stream
  std::optional<Tensor<T>> attention;                         // [T, T]; unset without MFAM
  Tensor<T> scaled_joints;                                    // M, [3, J, T]
  Tensor<T> scaled_bones;                                     // N, recovered joints [3, J, T]
  std::optional<Tensor<T>> joint_scale;                       // W, [1, J, 1]
  std::optional<Tensor<T>> bone_scale;                        // V, [1, b, 1]
};

/// [T, J, 3] tensor of a sequence; no gradient.
template <class T>
Tensor<T> sequence_tensor(const SkeletonSequence& seq);

/// [T, J, 3] -> [3, J, T].
template <class T>
Tensor<T> channel_major(const Tensor<T>& seq_tensor);

/// Per-joint scale head over each joint's flattened (T x 3) trajectory.
/// Returns {W [1, J, 1], M [3, J, T]} with M = W * X~.
template <class T>
std::pair<Tensor<T>, Tensor<T>> kjfe_scale(const Tensor<T>& seq_tensor, const ScaleHead<T>& head, T slope);

/// Bone vectors B~ = C^T X~ per frame, scaled by the per-bone head output V,
/// then recovered to joints from the original per-frame root position.
/// Returns {V [1, b, 1], N [3, J, T]}.
template <class T>
std::pair<Tensor<T>, Tensor<T>> bvfe_scale(const Tensor<T>& seq_tensor, const Topology& topology,
                                           const ScaleHead<T>& head, T slope);

/// Recovers joints [3, J, T] from bone vectors [3, b, T], anchored at the
/// per-frame root position `root_track` [3, 1, T].
template <class T>
Tensor<T> recover_joints(const Tensor<T>& bones, const Topology& topology, const Tensor<T>& root_track);

/// Differentiable root-anchored prefix sum over the bone tree with the root at
/// zero: [3, b, T] -> [3, J, T].
template <class T>
Tensor<T> bone_prefix_sum(const Tensor<T>& bones, const Topology& topology);

/// [T, J] x [3, J, T] -> [3, T, T].
template <class T>
Tensor<T> embed_to_image(const Tensor<T>& positions, const Tensor<T>& embedding);

/// softmax(Q K^T / sqrt(J)) with Q, K projected from per-frame features.
template <class T>
Tensor<T> mfam_map(const Tensor<T>& seq_tensor, const AttentionHead<T>& head, T slope);

/// image * A + image, A broadcast over channels.
template <class T>
Tensor<T> apply_attention(const Tensor<T>& image, const Tensor<T>& attention);

/// Frame-difference velocity of [3, J, T] positions, last column zero.
template <class T>
Tensor<T> joint_velocity(const Tensor<T>& positions, T dt);

/// joint_velocity followed by embed_to_image.
template <class T>
Tensor<T> jvtm(const Tensor<T>& positions, const Tensor<T>& embedding, T dt);

/// Adds te[j] to column j of every row and channel.
template <class T>
Tensor<T> temporal_embed(const Tensor<T>& image, const Tensor<T>& te);

/// Full enhancement pipeline honouring config.flags.
template <class T>
EncodedBundle<T> encode(const Tensor<T>& seq_tensor, const ModelParams<T>& params, const ModelConfig& config);

}  // namespace afecnn
