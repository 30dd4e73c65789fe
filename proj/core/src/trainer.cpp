#include "afecnn/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "afecnn/encoder.hpp"
#include "afecnn/errors.hpp"
#include "afecnn/ops.hpp"
#include "afecnn/optim.hpp"
#include "afecnn/recognizer.hpp"

namespace afecnn {

void TrainConfig::validate() const {
  if (!(lr > 0)) throw UsageError("learning rate must be positive");
  if (!(lr_decay > 0)) throw UsageError("learning-rate decay must be positive");
  if (batch_size == 0) throw UsageError("batch size must be positive");
  if (epochs == 0) throw UsageError("epoch count must be positive");
}

double TrainConfig::lr_at(std::size_t epoch) const { return epoch > decay_after ? lr * lr_decay : lr; }

namespace {

std::string number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
  return std::string(buf, r.ptr);
}

}  // namespace

std::string format_log_line(const EpochLog& entry) {
  return std::to_string(entry.epoch) + "," + number(entry.loss) + "," + number(entry.test_acc) + "," +
         number(entry.lr);
}

PreparedSet prepare(std::span<const SkeletonSequence> dataset, std::span<const std::size_t> indices,
                    const ModelConfig& config) {
  PreparedSet out;
  out.inputs.reserve(indices.size());
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= dataset.size()) throw UsageError("split index out of range");
    const SkeletonSequence& seq = dataset[i];
    if (seq.joint_count() != config.joints()) {
      throw ConfigError("sequence " + seq.source + " has " + std::to_string(seq.joint_count()) +
                        " joints; the model expects " + std::to_string(config.joints()));
    }
    if (seq.action_label < 0 || static_cast<std::size_t>(seq.action_label) >= config.classes) {
      throw ConfigError("label " + std::to_string(seq.action_label) + " does not fit a " +
                        std::to_string(config.classes) + "-class model");
    }
    out.inputs.push_back(sequence_tensor<float>(preprocess(seq, config.topology.root(), config.time_steps)));
    out.labels.push_back(seq.action_label);
  }
  return out;
}

std::size_t ConfusionMatrix::row_sum(std::size_t truth) const {
  std::size_t n = 0;
  for (std::size_t p = 0; p < classes; ++p) n += at(truth, p);
  return n;
}

std::size_t ConfusionMatrix::total() const { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }

std::size_t ConfusionMatrix::trace() const {
  std::size_t n = 0;
  for (std::size_t c = 0; c < classes; ++c) n += at(c, c);
  return n;
}

double mean_defined(std::span<const double> values) {
  double total = 0;
  std::size_t n = 0;
  for (double v : values) {
    if (!std::isnan(v)) {
      total += v;
      ++n;
    }
  }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : total / static_cast<double>(n);
}

Evaluation evaluate(const ModelParams<float>& params, const ModelConfig& config, const PreparedSet& test) {
  if (test.size() == 0) throw UsageError("evaluation needs a non-empty test set");
  Evaluation ev;
  ev.confusion = ConfusionMatrix(config.classes);
  ev.predictions.reserve(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    const Tensor<float> logits = sequence_logits(test.inputs[i], params, config);
    const int predicted = predict_from_logits(logits.data()).label;
    ev.predictions.push_back(predicted);
    ++ev.confusion.at(static_cast<std::size_t>(test.labels[i]), static_cast<std::size_t>(predicted));
  }
  ev.accuracy = static_cast<double>(ev.confusion.trace()) / static_cast<double>(ev.confusion.total());
  for (std::size_t c = 0; c < config.classes; ++c) {
    const std::size_t n = ev.confusion.row_sum(c);
    ev.per_class.push_back(n == 0 ? std::numeric_limits<double>::quiet_NaN()
                                  : static_cast<double>(ev.confusion.at(c, c)) / static_cast<double>(n));
  }
  return ev;
}

TrainResult train(const PreparedSet& train_set, const PreparedSet& test_set, const ModelConfig& model,
                  const TrainConfig& config, const std::function<void(const EpochLog&)>& on_epoch) {
  config.validate();
  if (train_set.size() == 0) throw UsageError("training split is empty");
  ModelConfig mc = model;
  mc.flags = config.flags;
  mc.validate();

  TrainResult result{ModelParams<float>::initialize(mc, config.seed), {}};
  std::vector<Tensor<float>> trainable = result.params.trainable(mc.flags);
  AdamState<float> adam = AdamState<float>::for_parameters(trainable);

  // Shuffling uses its own stream so that it does not depend on initialisation.
  std::mt19937_64 shuffle_rng(config.seed ^ 0x5348554646ULL);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const double lr = config.lr_at(epoch);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_total = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const float weight = 1.0f / static_cast<float>(stop - start);
      result.params.zero_grad();
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t i = order[k];
        Tape tape;
        const Tensor<float> logits =
            ops::reshape(sequence_logits(train_set.inputs[i], result.params, mc), {1, mc.classes});
        const int label = train_set.labels[i];
        const Tensor<float> loss = ops::cross_entropy(logits, std::span<const int>(&label, 1));
        loss_total += loss.item();
        backward(ops::scale(loss, weight));
      }
      adam_step(std::span<Tensor<float>>(trainable), adam, static_cast<float>(lr));
    }
    EpochLog entry{epoch, loss_total / static_cast<double>(order.size()),
                   test_set.size() == 0 ? std::numeric_limits<double>::quiet_NaN()
                                        : evaluate(result.params, mc, test_set).accuracy,
                   lr};
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
  result.params.zero_grad();
  return result;
}

TrainResult train(std::span<const SkeletonSequence> dataset, const DatasetSplit& split, const ModelConfig& model,
                  const TrainConfig& config, const std::function<void(const EpochLog&)>& on_epoch) {
  if (split.train.empty()) throw UsageError("training split is empty");
  return train(prepare(dataset, split.train, model), prepare(dataset, split.test, model), model, config, on_epoch);
}

std::vector<AblationVariant> default_ablation_grid() {
  // kjfe, bvfe, mfam, te, jvtm
  return {
      {"raw", {false, false, false, false, true}},
      {"+KJFE", {true, false, false, false, true}},
      {"+BVFE", {false, true, false, false, true}},
      {"+KJFE+BVFE", {true, true, false, false, true}},
      {"+MFAM", {true, true, true, false, true}},
      {"+MFAM+TE", {true, true, true, true, true}},
      {"-JVTM", {true, true, true, true, false}},
  };
}

std::vector<AblationResult> ablate(std::span<const SkeletonSequence> dataset, const ModelConfig& model,
                                   const TrainConfig& config, const std::vector<AblationVariant>& grid,
                                   const std::function<void(const std::string&)>& progress) {
  const DatasetSplit subject_split = split_dataset(dataset, Protocol::kCrossSubject);
  const DatasetSplit view_split = split_dataset(dataset, Protocol::kCrossView);
  const PreparedSet subject_train = prepare(dataset, subject_split.train, model);
  const PreparedSet subject_test = prepare(dataset, subject_split.test, model);
  const PreparedSet view_train = prepare(dataset, view_split.train, model);
  const PreparedSet view_test = prepare(dataset, view_split.test, model);

  std::vector<AblationResult> results;
  for (const AblationVariant& variant : grid) {
    TrainConfig tc = config;
    tc.flags = variant.flags;
    ModelConfig mc = model;
    mc.flags = variant.flags;
    AblationResult r{variant.name, 0, 0};
    const TrainResult by_subject = train(subject_train, PreparedSet{}, mc, tc);
    r.cross_subject = evaluate(by_subject.params, mc, subject_test).accuracy;
    const TrainResult by_view = train(view_train, PreparedSet{}, mc, tc);
    r.cross_view = evaluate(by_view.params, mc, view_test).accuracy;
    if (progress) progress(variant.name);
    results.push_back(r);
  }
  return results;
}

}  // namespace afecnn
