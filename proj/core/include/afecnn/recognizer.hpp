#pragma once

// Four-stream convolutional classifier over encoded images, plus a static
// operation counter.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "afecnn/encoder.hpp"
#include "afecnn/model.hpp"

namespace afecnn {

/// conv -> 2x2 max-pool -> leaky_relu, three times, flattened to [F].
template <class T>
Tensor<T> stream_forward(const Tensor<T>& image, const StreamCNNParams<T>& params, const ModelConfig& config);

/// Logits [classes] for an encoded bundle. Streams are concatenated in
/// Stream order; the bundle must hold exactly the config's active streams.
template <class T>
Tensor<T> forward(const EncodedBundle<T>& bundle, const ModelParams<T>& params, const ModelConfig& config);

/// encode followed by forward.
template <class T>
Tensor<T> sequence_logits(const Tensor<T>& seq_tensor, const ModelParams<T>& params, const ModelConfig& config);

struct Prediction {
  int label = 0;
  std::vector<double> probabilities;
};

/// argmax of softmax(logits), ties to the lowest index.
Prediction predict_from_logits(std::span<const float> logits);
Prediction predict_from_logits(std::span<const double> logits);

template <class T>
Prediction predict(const EncodedBundle<T>& bundle, const ModelParams<T>& params, const ModelConfig& config);

struct FlopsEntry {
  std::string name;
  std::uint64_t macs = 0;
};

struct FlopsReport {
  std::vector<FlopsEntry> entries;
  std::uint64_t total_macs = 0;
  std::uint64_t total_flops = 0;  // 2 x total_macs
  std::uint64_t parameters = 0;   // tensors the enabled blocks train
};

/// Multiply-accumulate count of one single-sequence forward pass. Convs
/// count C_out * H' * W' * C_in * k^2, dense layers in * out, matrix
/// products m * k * n. Elementwise work is not counted.
FlopsReport count_flops(const ModelConfig& config);

}  // namespace afecnn
