#pragma once

// Configuration and learnable parameters of the full pipeline: the feature
// enhancement heads, per-stream embeddings, the four convolutional streams
// and the classifier.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "afecnn/skeleton.hpp"
#include "afecnn/tensor.hpp"

namespace afecnn {

/// Which enhancement blocks take part. All on is the full model; all of
/// kjfe/bvfe/mfam/te off with jvtm on is the raw-coordinate baseline.
struct EnhancementFlags {
  bool kjfe = true;  // learned per-joint scaling
  bool bvfe = true;  // learned per-bone scaling with joint recovery
  bool mfam = true;  // multi-frame attention on the two position images
  bool te = true;    // learned per-column temporal embedding
  bool jvtm = true;  // velocity images; off leaves two streams

  friend bool operator==(const EnhancementFlags&, const EnhancementFlags&) = default;
};

enum Stream : std::size_t { kJointStream = 0, kBoneStream = 1, kJointVelocityStream = 2, kBoneVelocityStream = 3 };
inline constexpr std::size_t kStreamCount = 4;

const char* stream_name(std::size_t stream);

struct ModelConfig {
  explicit ModelConfig(Topology topo, std::size_t class_count = 8, std::size_t steps = 64)
      : topology(std::move(topo)), classes(class_count), time_steps(steps) {}

  Topology topology;
  std::size_t classes;
  std::size_t time_steps;
  std::array<std::size_t, 3> channels{32, 64, 128};
  std::size_t conv_padding = 1;
  std::size_t conv_stride = 2;
  std::size_t fc_hidden = 256;
  std::size_t scale_hidden = 64;
  double leaky_slope = 0.01;
  double velocity_dt = 1.0;
  EnhancementFlags flags;

  std::size_t joints() const { return topology.joint_count(); }
  std::size_t bones() const { return topology.bone_count(); }
  /// Shared width of the attention head's first layer (d = J).
  std::size_t attention_width() const { return topology.joint_count(); }
  std::size_t active_streams() const { return flags.jvtm ? 4 : 2; }
  /// Spatial extent after each conv+pool stage; throws ConfigError when a
  /// stage collapses or leaves an odd extent for pooling.
  std::vector<std::size_t> stream_extents() const;
  /// Flattened per-stream feature width.
  std::size_t stream_features() const;

  void validate() const;
};

template <class T>
struct ScaleHead {
  Tensor<T> fc1_weight, fc1_bias, fc2_weight, fc2_bias;
};

template <class T>
struct AttentionHead {
  Tensor<T> shared_weight, shared_bias;  // [d, 3J], [d]
  Tensor<T> query_weight, key_weight;    // [J, d] each
};

template <class T>
struct ConvLayer {
  Tensor<T> kernels, bias;
};

template <class T>
struct StreamCNNParams {
  std::array<ConvLayer<T>, 3> layers;
};

template <class T>
struct ClassifierParams {
  Tensor<T> fc1_weight, fc1_bias, fc2_weight, fc2_bias;
};

template <class T>
struct NamedTensor {
  std::string name;
  Tensor<T> tensor;
};

template <class T>
struct ModelParams {
  ScaleHead<T> joint_scale;
  ScaleHead<T> bone_scale;
  AttentionHead<T> attention;
  std::array<Tensor<T>, kStreamCount> embeddings;  // [T, J] per stream
  std::array<Tensor<T>, kStreamCount> temporal;    // [T] per stream
  std::array<StreamCNNParams<T>, kStreamCount> streams;
  ClassifierParams<T> classifier;

  /// Deterministic initialisation from `seed`.
  static ModelParams initialize(const ModelConfig& config, std::uint64_t seed);

  /// Every tensor with a stable name; the handles alias this object.
  std::vector<NamedTensor<T>> named() const;
  /// Tensors that the enabled blocks use, in named() order.
  std::vector<Tensor<T>> trainable(const EnhancementFlags& flags) const;
  /// Marks exactly the trainable() tensors as requiring gradients.
  void configure_gradients(const EnhancementFlags& flags);
  void zero_grad();
  std::size_t parameter_count() const;

  ModelParams clone() const;
  template <class U>
  ModelParams<U> cast() const;
};

/// Row t of a T x J embedding picks joint floor(t * J / T); identity when J == T.
template <class T>
Tensor<T> identity_like_embedding(std::size_t steps, std::size_t joints);

}  // namespace afecnn
