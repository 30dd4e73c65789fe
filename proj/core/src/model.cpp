#include "afecnn/model.hpp"

#include <cmath>
#include <random>

#include "afecnn/errors.hpp"
#include "afecnn/ops.hpp"

namespace afecnn {

namespace {

const char* const kStreamNames[kStreamCount] = {"kjei", "bvei", "kjvi", "bvvi"};

template <class P, class F>
void visit_fields(P& p, F&& f) {
  auto head = [&](const std::string& prefix, auto& h) {
    f(prefix + ".fc1.weight", h.fc1_weight);
    f(prefix + ".fc1.bias", h.fc1_bias);
    f(prefix + ".fc2.weight", h.fc2_weight);
    f(prefix + ".fc2.bias", h.fc2_bias);
  };
  head("joint_scale", p.joint_scale);
  head("bone_scale", p.bone_scale);
  f("attention.shared.weight", p.attention.shared_weight);
  f("attention.shared.bias", p.attention.shared_bias);
  f("attention.query.weight", p.attention.query_weight);
  f("attention.key.weight", p.attention.key_weight);
  for (std::size_t s = 0; s < kStreamCount; ++s) f(std::string("embedding.") + kStreamNames[s], p.embeddings[s]);
  for (std::size_t s = 0; s < kStreamCount; ++s) f(std::string("temporal.") + kStreamNames[s], p.temporal[s]);
  for (std::size_t s = 0; s < kStreamCount; ++s) {
    for (std::size_t l = 0; l < 3; ++l) {
      const std::string prefix = std::string("stream.") + kStreamNames[s] + ".conv" + std::to_string(l + 1);
      f(prefix + ".kernels", p.streams[s].layers[l].kernels);
      f(prefix + ".bias", p.streams[s].layers[l].bias);
    }
  }
  head("classifier", p.classifier);
}

// Which named tensors the enabled blocks touch; same order as visit_fields.
template <class P>
std::vector<bool> usage_mask(const P& p, const EnhancementFlags& flags) {
  std::vector<bool> mask;
  auto stream_active = [&](std::size_t s) { return flags.jvtm || s < 2; };
  visit_fields(p, [&](const std::string& name, const auto&) {
    bool used = true;
    if (name.starts_with("joint_scale.")) {
      used = flags.kjfe;
    } else if (name.starts_with("bone_scale.")) {
      used = flags.bvfe;
    } else if (name.starts_with("attention.")) {
      used = flags.mfam;
    } else if (name.starts_with("embedding.")) {
      const bool joint_side = name.ends_with("kjei") || name.ends_with("kjvi");
      const bool velocity = name.ends_with("vi");
      used = (joint_side ? flags.kjfe : flags.bvfe) && (!velocity || flags.jvtm);
    } else if (name.starts_with("temporal.")) {
      const bool velocity = name.ends_with("vi");
      used = flags.te && (!velocity || flags.jvtm);
    } else if (name.starts_with("stream.")) {
      const bool velocity = name.find("vi.") != std::string::npos;
      used = !velocity || stream_active(2);
    }
    mask.push_back(used);
  });
  return mask;
}

template <class T>
Tensor<T> kaiming(Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
  Tensor<T> t(std::move(shape));
  for (T& v : t.mutable_data()) v = static_cast<T>(dist(rng));
  return t;
}

template <class T>
Tensor<T> small_uniform(Shape shape, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor<T> t(std::move(shape));
  for (T& v : t.mutable_data()) v = static_cast<T>(dist(rng));
  return t;
}

template <class T>
ScaleHead<T> init_scale_head(std::size_t in, std::size_t hidden, std::mt19937_64& rng) {
  ScaleHead<T> h;
  h.fc1_weight = small_uniform<T>({hidden, in}, 0.01, rng);
  h.fc1_bias = Tensor<T>(Shape{hidden});
  h.fc2_weight = small_uniform<T>({1, hidden}, 0.01, rng);
  h.fc2_bias = Tensor<T>(Shape{1}, T(1));
  return h;
}

}  // namespace

const char* stream_name(std::size_t stream) {
  static const char* const names[kStreamCount] = {"TF-KJEI", "TF-BVEI", "T-KJVI", "T-BVVI"};
  return stream < kStreamCount ? names[stream] : "unknown";
}

std::vector<std::size_t> ModelConfig::stream_extents() const {
  std::vector<std::size_t> extents;
  std::size_t s = time_steps;
  for (std::size_t l = 0; l < 3; ++l) {
    s = ops::conv_output_extent(s, 3, conv_stride, conv_padding);
    if (s == 0) throw ConfigError("convolution stage " + std::to_string(l + 1) + " has no output");
    if (s % 2 != 0) {
      throw ConfigError("convolution stage " + std::to_string(l + 1) + " leaves odd extent " +
                        std::to_string(s) + " for 2x2 pooling");
    }
    s /= 2;
    extents.push_back(s);
  }
  return extents;
}

std::size_t ModelConfig::stream_features() const {
  const std::size_t s = stream_extents().back();
  return channels[2] * s * s;
}

void ModelConfig::validate() const {
  if (classes < 1) throw ConfigError("model needs at least one class");
  if (time_steps < 2) throw ConfigError("model needs at least two time steps");
  if (!(leaky_slope > 0 && leaky_slope < 1)) throw ConfigError("leaky slope must lie in (0, 1)");
  if (!(velocity_dt > 0)) throw ConfigError("velocity dt must be positive");
  for (std::size_t c : channels) {
    if (c == 0) throw ConfigError("channel widths must be positive");
  }
  if (fc_hidden == 0 || scale_hidden == 0) throw ConfigError("hidden widths must be positive");
  stream_extents();
}

template <class T>
Tensor<T> identity_like_embedding(std::size_t steps, std::size_t joints) {
  Tensor<T> e(Shape{steps, joints});
  auto d = e.mutable_data();
  for (std::size_t t = 0; t < steps; ++t) d[t * joints + (t * joints) / steps] = T(1);
  return e;
}

template <class T>
ModelParams<T> ModelParams<T>::initialize(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  const std::size_t steps = config.time_steps;
  const std::size_t joints = config.joints();
  const std::size_t d = config.attention_width();

  ModelParams p;
  p.joint_scale = init_scale_head<T>(3 * steps, config.scale_hidden, rng);
  p.bone_scale = init_scale_head<T>(3 * steps, config.scale_hidden, rng);
  p.attention.shared_weight = kaiming<T>({d, 3 * joints}, 3 * joints, rng);
  p.attention.shared_bias = Tensor<T>(Shape{d});
  p.attention.query_weight = kaiming<T>({joints, d}, d, rng);
  p.attention.key_weight = kaiming<T>({joints, d}, d, rng);
  for (auto& e : p.embeddings) e = identity_like_embedding<T>(steps, joints);
  for (auto& te : p.temporal) te = Tensor<T>(Shape{steps});
  for (auto& stream : p.streams) {
    std::size_t in = 3;
    for (std::size_t l = 0; l < 3; ++l) {
      const std::size_t out = config.channels[l];
      stream.layers[l].kernels = kaiming<T>({out, in, 3, 3}, in * 9, rng);
      stream.layers[l].bias = Tensor<T>(Shape{out});
      in = out;
    }
  }
  const std::size_t concat = config.active_streams() * config.stream_features();
  p.classifier.fc1_weight = kaiming<T>({config.fc_hidden, concat}, concat, rng);
  p.classifier.fc1_bias = Tensor<T>(Shape{config.fc_hidden});
  p.classifier.fc2_weight = kaiming<T>({config.classes, config.fc_hidden}, config.fc_hidden, rng);
  p.classifier.fc2_bias = Tensor<T>(Shape{config.classes});
  p.configure_gradients(config.flags);
  return p;
}

template <class T>
std::vector<NamedTensor<T>> ModelParams<T>::named() const {
  std::vector<NamedTensor<T>> out;
  visit_fields(*this, [&](const std::string& name, const Tensor<T>& t) { out.push_back({name, t}); });
  return out;
}

template <class T>
std::vector<Tensor<T>> ModelParams<T>::trainable(const EnhancementFlags& flags) const {
  const auto mask = usage_mask(*this, flags);
  std::vector<Tensor<T>> out;
  std::size_t i = 0;
  visit_fields(*this, [&](const std::string&, const Tensor<T>& t) {
    if (mask[i++]) out.push_back(t);
  });
  return out;
}

template <class T>
void ModelParams<T>::configure_gradients(const EnhancementFlags& flags) {
  const auto mask = usage_mask(*this, flags);
  std::size_t i = 0;
  visit_fields(*this, [&](const std::string&, Tensor<T>& t) { t.set_requires_grad(mask[i++]); });
}

template <class T>
void ModelParams<T>::zero_grad() {
  visit_fields(*this, [](const std::string&, Tensor<T>& t) { t.zero_grad(); });
}

template <class T>
std::size_t ModelParams<T>::parameter_count() const {
  std::size_t n = 0;
  visit_fields(*this, [&](const std::string&, const Tensor<T>& t) { n += t.size(); });
  return n;
}

template <class T>
ModelParams<T> ModelParams<T>::clone() const {
  return cast<T>();
}

template <class T>
template <class U>
ModelParams<U> ModelParams<T>::cast() const {
  const auto source = named();
  ModelParams<U> out;
  std::size_t i = 0;
  visit_fields(out, [&](const std::string&, Tensor<U>& t) {
    t = source[i].tensor.template cast<U>();
    ++i;
  });
  return out;
}

template struct ModelParams<float>;
template struct ModelParams<double>;
template ModelParams<double> ModelParams<float>::cast<double>() const;
template ModelParams<float> ModelParams<double>::cast<float>() const;
template Tensor<float> identity_like_embedding<float>(std::size_t, std::size_t);
template Tensor<double> identity_like_embedding<double>(std::size_t, std::size_t);

}  // namespace afecnn
