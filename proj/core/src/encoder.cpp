#include "afecnn/encoder.hpp"

#include <cmath>

#include "afecnn/errors.hpp"
#include "afecnn/ops.hpp"

namespace afecnn {

template <class T>
Tensor<T> sequence_tensor(const SkeletonSequence& seq) {
  const std::size_t steps = seq.frame_count(), joints = seq.joint_count();
  if (steps == 0 || joints == 0) throw InputError("sequence_tensor: empty sequence");
  std::vector<T> values;
  values.reserve(steps * joints * 3);
  for (const Frame& f : seq.frames) {
    if (f.size() != joints) throw InputError("sequence_tensor: ragged frames");
    for (const Joint& p : f) values.insert(values.end(), {T(p[0]), T(p[1]), T(p[2])});
  }
  return Tensor<T>(Shape{steps, joints, 3}, std::move(values));
}

template <class T>
Tensor<T> channel_major(const Tensor<T>& seq_tensor) {
  return ops::permute(seq_tensor, {2, 1, 0});
}

namespace {

template <class T>
Tensor<T> run_scale_head(const Tensor<T>& features, const ScaleHead<T>& head, T slope) {
  const Tensor<T> hidden = ops::leaky_relu(ops::linear(features, head.fc1_weight, head.fc1_bias), slope);
  return ops::linear(hidden, head.fc2_weight, head.fc2_bias);  // [rows, 1]
}

void check_sequence_tensor(const Shape& shape) {
  if (shape.size() != 3 || shape[2] != 3) {
    throw DimensionError("expected a [T, J, 3] sequence tensor, got " + shape_string(shape));
  }
}

}  // namespace

template <class T>
std::pair<Tensor<T>, Tensor<T>> kjfe_scale(const Tensor<T>& seq_tensor, const ScaleHead<T>& head, T slope) {
  check_sequence_tensor(seq_tensor.shape());
  const std::size_t steps = seq_tensor.extent(0), joints = seq_tensor.extent(1);
  // Each joint's trajectory, frame-major: [J, T * 3].
  const Tensor<T> features = ops::reshape(ops::permute(seq_tensor, {1, 0, 2}), {joints, steps * 3});
  const Tensor<T> w = ops::reshape(run_scale_head(features, head, slope), {1, joints, 1});
  Tensor<T> m = ops::mul(w, channel_major(seq_tensor));
  return {w, m};
}

template <class T>
Tensor<T> bone_prefix_sum(const Tensor<T>& bones, const Topology& topology) {
  if (bones.rank() != 3 || bones.extent(1) != topology.bone_count()) {
    throw DimensionError("bone_prefix_sum: bones " + shape_string(bones.shape()) + " for a topology with " +
                         std::to_string(topology.bone_count()) + " bones");
  }
  const std::size_t channels = bones.extent(0), b = bones.extent(1), steps = bones.extent(2);
  const std::size_t joints = topology.joint_count();
  Tensor<T> out(Shape{channels, joints, steps});
  auto od = out.mutable_data();
  const auto bd = bones.data();
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t k : topology.traversal_order()) {
      const Bone& bone = topology.bones()[k];
      T* child = od.data() + (c * joints + bone.child) * steps;
      const T* parent = od.data() + (c * joints + bone.parent) * steps;
      const T* vec = bd.data() + (c * b + k) * steps;
      for (std::size_t t = 0; t < steps; ++t) child[t] = parent[t] + vec[t];
    }
  }
  if (detail::should_record<T>({&bones})) {
    detail::record(out, [bones, topology, channels, b, steps, joints](std::span<const T> g) mutable {
      // Each bone receives the summed gradient of the subtree below it.
      std::vector<T> subtree(g.begin(), g.end());
      auto db = bones.grad_buffer();
      const auto& order = topology.traversal_order();
      for (std::size_t c = 0; c < channels; ++c) {
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
          const Bone& bone = topology.bones()[*it];
          T* child = subtree.data() + (c * joints + bone.child) * steps;
          T* parent = subtree.data() + (c * joints + bone.parent) * steps;
          T* dst = db.data() + (c * b + *it) * steps;
          for (std::size_t t = 0; t < steps; ++t) {
            dst[t] += child[t];
            parent[t] += child[t];
          }
        }
      }
    });
  }
  return out;
}

template <class T>
Tensor<T> recover_joints(const Tensor<T>& bones, const Topology& topology, const Tensor<T>& root_track) {
  return ops::add(bone_prefix_sum(bones, topology), root_track);
}

template <class T>
std::pair<Tensor<T>, Tensor<T>> bvfe_scale(const Tensor<T>& seq_tensor, const Topology& topology,
                                           const ScaleHead<T>& head, T slope) {
  check_sequence_tensor(seq_tensor.shape());
  const std::size_t steps = seq_tensor.extent(0), joints = seq_tensor.extent(1);
  if (joints != topology.joint_count()) {
    throw DimensionError("bvfe_scale: sequence has " + std::to_string(joints) + " joints, topology " +
                         std::to_string(topology.joint_count()));
  }
  const std::size_t b = topology.bone_count();
  const Tensor<T> x = channel_major(seq_tensor);  // [3, J, T]

  // C^T as a constant [b, J] matrix so that bones = C^T x per channel.
  Tensor<T> incidence_t(Shape{b, joints});
  {
    auto d = incidence_t.mutable_data();
    const auto& c = topology.incidence();
    for (std::size_t j = 0; j < joints; ++j) {
      for (std::size_t k = 0; k < b; ++k) d[k * joints + j] = T(c[j * b + k]);
    }
  }
  const Tensor<T> bones = ops::matmul(incidence_t, x);  // [3, b, T]
  const Tensor<T> features = ops::reshape(ops::permute(bones, {1, 2, 0}), {b, steps * 3});
  const Tensor<T> v = ops::reshape(run_scale_head(features, head, slope), {1, b, 1});
  const Tensor<T> scaled = ops::mul(v, bones);

  Tensor<T> root_track(Shape{3, 1, steps});
  {
    auto d = root_track.mutable_data();
    const auto xd = x.data();
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t t = 0; t < steps; ++t) d[c * steps + t] = xd[(c * joints + topology.root()) * steps + t];
    }
  }
  return {v, recover_joints(scaled, topology, root_track)};
}

template <class T>
Tensor<T> embed_to_image(const Tensor<T>& positions, const Tensor<T>& embedding) {
  if (positions.rank() != 3 || embedding.rank() != 2 || embedding.extent(1) != positions.extent(1) ||
      embedding.extent(0) != positions.extent(2)) {
    throw DimensionError("embed_to_image: embedding " + shape_string(embedding.shape()) + " for positions " +
                         shape_string(positions.shape()));
  }
  return ops::matmul(embedding, positions);
}

template <class T>
Tensor<T> mfam_map(const Tensor<T>& seq_tensor, const AttentionHead<T>& head, T slope) {
  check_sequence_tensor(seq_tensor.shape());
  const std::size_t steps = seq_tensor.extent(0), joints = seq_tensor.extent(1);
  const Tensor<T> frames = ops::reshape(seq_tensor, {steps, joints * 3});
  const Tensor<T> h = ops::leaky_relu(ops::linear(frames, head.shared_weight, head.shared_bias), slope);
  const Tensor<T> q = ops::matmul(h, ops::transpose(head.query_weight));  // [T, J]
  const Tensor<T> k = ops::matmul(h, ops::transpose(head.key_weight));    // [T, J]
  const T inv_sqrt_dk = T(1) / std::sqrt(static_cast<T>(q.extent(1)));
  return ops::softmax_rows(ops::scale(ops::matmul(q, ops::transpose(k)), inv_sqrt_dk));
}

template <class T>
Tensor<T> apply_attention(const Tensor<T>& image, const Tensor<T>& attention) {
  if (image.rank() != 3 || attention.rank() != 2 || image.extent(1) != attention.extent(0) ||
      image.extent(2) != attention.extent(1)) {
    throw DimensionError("apply_attention: image " + shape_string(image.shape()) + ", attention " +
                         shape_string(attention.shape()));
  }
  return ops::add(ops::mul(image, attention), image);
}

template <class T>
Tensor<T> joint_velocity(const Tensor<T>& positions, T dt) {
  return ops::time_difference(positions, dt);
}

template <class T>
Tensor<T> jvtm(const Tensor<T>& positions, const Tensor<T>& embedding, T dt) {
  return embed_to_image(joint_velocity(positions, dt), embedding);
}

template <class T>
Tensor<T> temporal_embed(const Tensor<T>& image, const Tensor<T>& te) {
  if (image.rank() != 3 || te.rank() != 1 || te.extent(0) != image.extent(2)) {
    throw DimensionError("temporal_embed: image " + shape_string(image.shape()) + ", embedding " +
                         shape_string(te.shape()));
  }
  return ops::add(image, te);
}

template <class T>
EncodedBundle<T> encode(const Tensor<T>& seq_tensor, const ModelParams<T>& params, const ModelConfig& config) {
  check_sequence_tensor(seq_tensor.shape());
  if (seq_tensor.extent(0) != config.time_steps || seq_tensor.extent(1) != config.joints()) {
    throw DimensionError("encode: sequence tensor " + shape_string(seq_tensor.shape()) + " does not match T=" +
                         std::to_string(config.time_steps) + ", J=" + std::to_string(config.joints()));
  }
  const auto& flags = config.flags;
  const T slope = static_cast<T>(config.leaky_slope);
  EncodedBundle<T> out;
  const Tensor<T> raw = channel_major(seq_tensor);

  if (flags.kjfe) {
    auto [w, m] = kjfe_scale(seq_tensor, params.joint_scale, slope);
    out.joint_scale = w;
    out.scaled_joints = m;
  } else {
    out.scaled_joints = raw;
  }
  if (flags.bvfe) {
    auto [v, n] = bvfe_scale(seq_tensor, config.topology, params.bone_scale, slope);
    out.bone_scale = v;
    out.scaled_bones = n;
  } else {
    out.scaled_bones = raw;
  }

  Tensor<T> joint_image = embed_to_image(out.scaled_joints, params.embeddings[kJointStream]);
  Tensor<T> bone_image = embed_to_image(out.scaled_bones, params.embeddings[kBoneStream]);
  if (flags.mfam) {
    out.attention = mfam_map(seq_tensor, params.attention, slope);
    joint_image = apply_attention(joint_image, *out.attention);
    bone_image = apply_attention(bone_image, *out.attention);
  }
  out.images[kJointStream] = joint_image;
  out.images[kBoneStream] = bone_image;
  if (flags.jvtm) {
    const T dt = static_cast<T>(config.velocity_dt);
    out.images[kJointVelocityStream] = jvtm(out.scaled_joints, params.embeddings[kJointVelocityStream], dt);
    out.images[kBoneVelocityStream] = jvtm(out.scaled_bones, params.embeddings[kBoneVelocityStream], dt);
  }
  if (flags.te) {
    for (std::size_t s = 0; s < kStreamCount; ++s) {
      if (out.images[s]) out.images[s] = temporal_embed(*out.images[s], params.temporal[s]);
    }
  }
  return out;
}

#define AFECNN_INSTANTIATE_ENCODER(T)                                                                        \
  template Tensor<T> sequence_tensor<T>(const SkeletonSequence&);                                            \
  template Tensor<T> channel_major(const Tensor<T>&);                                                        \
  template std::pair<Tensor<T>, Tensor<T>> kjfe_scale(const Tensor<T>&, const ScaleHead<T>&, T);             \
  template std::pair<Tensor<T>, Tensor<T>> bvfe_scale(const Tensor<T>&, const Topology&, const ScaleHead<T>&, \
                                                      T);                                                    \
  template Tensor<T> recover_joints(const Tensor<T>&, const Topology&, const Tensor<T>&);                    \
  template Tensor<T> bone_prefix_sum(const Tensor<T>&, const Topology&);                                     \
  template Tensor<T> embed_to_image(const Tensor<T>&, const Tensor<T>&);                                     \
  template Tensor<T> mfam_map(const Tensor<T>&, const AttentionHead<T>&, T);                                 \
  template Tensor<T> apply_attention(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> joint_velocity(const Tensor<T>&, T);                                                    \
  template Tensor<T> jvtm(const Tensor<T>&, const Tensor<T>&, T);                                            \
  template Tensor<T> temporal_embed(const Tensor<T>&, const Tensor<T>&);                                     \
  template EncodedBundle<T> encode(const Tensor<T>&, const ModelParams<T>&, const ModelConfig&);

AFECNN_INSTANTIATE_ENCODER(float)
AFECNN_INSTANTIATE_ENCODER(double)

#undef AFECNN_INSTANTIATE_ENCODER

}  // namespace afecnn
