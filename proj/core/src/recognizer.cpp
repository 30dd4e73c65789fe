#include "afecnn/recognizer.hpp"

#include <algorithm>
#include <cmath>

#include "afecnn/errors.hpp"
#include "afecnn/ops.hpp"

namespace afecnn {

template <class T>
Tensor<T> stream_forward(const Tensor<T>& image, const StreamCNNParams<T>& params, const ModelConfig& config) {
  const std::size_t steps = config.time_steps;
  if (image.shape() != Shape{3, steps, steps}) {
    throw DimensionError("stream_forward: expected image [3, " + std::to_string(steps) + ", " +
                         std::to_string(steps) + "], got " + shape_string(image.shape()));
  }
  const T slope = static_cast<T>(config.leaky_slope);
  Tensor<T> x = image;
  for (const ConvLayer<T>& layer : params.layers) {
    x = ops::conv2d(x, layer.kernels, layer.bias, config.conv_stride, config.conv_padding);
    x = ops::leaky_relu(ops::maxpool2d(x), slope);
  }
  return ops::reshape(x, {x.size()});
}

template <class T>
Tensor<T> forward(const EncodedBundle<T>& bundle, const ModelParams<T>& params, const ModelConfig& config) {
  std::vector<Tensor<T>> features;
  for (std::size_t s = 0; s < kStreamCount; ++s) {
    const bool wanted = s < config.active_streams();
    if (wanted != bundle.images[s].has_value()) {
      throw DimensionError(std::string("forward: bundle ") + (wanted ? "lacks " : "has unexpected ") +
                           stream_name(s));
    }
    if (wanted) features.push_back(stream_forward(*bundle.images[s], params.streams[s], config));
  }
  const T slope = static_cast<T>(config.leaky_slope);
  const Tensor<T> joined = ops::reshape(ops::concat(features), {1, features.size() * features.front().size()});
  const auto& c = params.classifier;
  const Tensor<T> hidden = ops::leaky_relu(ops::linear(joined, c.fc1_weight, c.fc1_bias), slope);
  const Tensor<T> logits = ops::linear(hidden, c.fc2_weight, c.fc2_bias);
  return ops::reshape(logits, {logits.size()});
}

template <class T>
Tensor<T> sequence_logits(const Tensor<T>& seq_tensor, const ModelParams<T>& params, const ModelConfig& config) {
  return forward(encode(seq_tensor, params, config), params, config);
}

namespace {

template <class T>
Prediction predict_impl(std::span<const T> logits) {
  Prediction p;
  if (logits.empty()) return p;
  const auto best = std::max_element(logits.begin(), logits.end());  // first maximum
  p.label = static_cast<int>(best - logits.begin());
  const double top = static_cast<double>(*best);
  double total = 0;
  p.probabilities.reserve(logits.size());
  for (T v : logits) {
    p.probabilities.push_back(std::exp(static_cast<double>(v) - top));
    total += p.probabilities.back();
  }
  for (double& v : p.probabilities) v /= total;
  return p;
}

}  // namespace

Prediction predict_from_logits(std::span<const float> logits) { return predict_impl(logits); }
Prediction predict_from_logits(std::span<const double> logits) { return predict_impl(logits); }

template <class T>
Prediction predict(const EncodedBundle<T>& bundle, const ModelParams<T>& params, const ModelConfig& config) {
  const Tensor<T> logits = forward(bundle, params, config);
  return predict_from_logits(logits.data());
}

FlopsReport count_flops(const ModelConfig& config) {
  config.validate();
  using u64 = std::uint64_t;
  const u64 steps = config.time_steps, joints = config.joints(), bones = config.bones();
  const u64 hs = config.scale_hidden, d = config.attention_width();
  const auto& flags = config.flags;
  FlopsReport r;
  auto add = [&](std::string name, u64 macs) { r.entries.push_back({std::move(name), macs}); };

  if (flags.kjfe) {
    add("kjfe.fc1", joints * 3 * steps * hs);
    add("kjfe.fc2", joints * hs);
  }
  if (flags.bvfe) {
    add("bvfe.bones", 3 * bones * joints * steps);
    add("bvfe.fc1", bones * 3 * steps * hs);
    add("bvfe.fc2", bones * hs);
  }
  if (flags.mfam) {
    add("mfam.shared", steps * 3 * joints * d);
    add("mfam.query", steps * d * joints);
    add("mfam.key", steps * d * joints);
    add("mfam.scores", steps * joints * steps);
  }
  for (std::size_t s = 0; s < config.active_streams(); ++s) {
    add(std::string(stream_name(s)) + ".embedding", 3 * steps * joints * steps);
  }
  for (std::size_t s = 0; s < config.active_streams(); ++s) {
    u64 extent = steps, in = 3;
    for (std::size_t l = 0; l < 3; ++l) {
      const u64 out_extent = ops::conv_output_extent(extent, 3, config.conv_stride, config.conv_padding);
      const u64 out = config.channels[l];
      add(std::string(stream_name(s)) + ".conv" + std::to_string(l + 1), out * out_extent * out_extent * in * 9);
      extent = out_extent / 2;
      in = out;
    }
  }
  const u64 concat = config.active_streams() * config.stream_features();
  add("classifier.fc1", concat * config.fc_hidden);
  add("classifier.fc2", config.fc_hidden * config.classes);

  for (const auto& e : r.entries) r.total_macs += e.macs;
  r.total_flops = 2 * r.total_macs;
  const auto params = ModelParams<float>::initialize(config, 0);
  for (const auto& t : params.trainable(flags)) r.parameters += t.size();
  return r;
}

#define AFECNN_INSTANTIATE_RECOGNIZER(T)                                                                   \
  template Tensor<T> stream_forward(const Tensor<T>&, const StreamCNNParams<T>&, const ModelConfig&);      \
  template Tensor<T> forward(const EncodedBundle<T>&, const ModelParams<T>&, const ModelConfig&);          \
  template Tensor<T> sequence_logits(const Tensor<T>&, const ModelParams<T>&, const ModelConfig&);         \
  template Prediction predict(const EncodedBundle<T>&, const ModelParams<T>&, const ModelConfig&);

AFECNN_INSTANTIATE_RECOGNIZER(float)
AFECNN_INSTANTIATE_RECOGNIZER(double)

#undef AFECNN_INSTANTIATE_RECOGNIZER

}  // namespace afecnn
