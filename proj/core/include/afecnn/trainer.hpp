#pragma once

// Mini-batch Adam training, evaluation and the enhancement ablation grid.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "afecnn/dataset.hpp"
#include "afecnn/model.hpp"
#include "afecnn/skeleton.hpp"

namespace afecnn {

struct TrainConfig {
  double lr = 0.001;
  double lr_decay = 0.1;
  std::size_t decay_after = 20;  // one decay, effective from epoch decay_after + 1
  std::size_t batch_size = 64;
  std::size_t epochs = 60;
  std::uint64_t seed = 1;
  EnhancementFlags flags;

  void validate() const;
  /// Learning rate of 1-based `epoch`.
  double lr_at(std::size_t epoch) const;
};

struct EpochLog {
  std::size_t epoch = 0;
  double loss = 0;      // mean per-sample training loss
  double test_acc = 0;  // NaN when there is no test set
  double lr = 0;
};

/// "epoch,loss,test_acc,lr" with round-trippable numbers.
std::string format_log_line(const EpochLog& entry);
inline constexpr const char* kLogHeader = "epoch,loss,test_acc,lr";

/// Preprocessed [T, J, 3] inputs with their labels.
struct PreparedSet {
  std::vector<Tensor<float>> inputs;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
};

/// Centres on the topology root and resamples to config.time_steps. Throws
/// ConfigError when a sequence's joint count or label does not fit.
PreparedSet prepare(std::span<const SkeletonSequence> dataset, std::span<const std::size_t> indices,
                    const ModelConfig& config);

struct ConfusionMatrix {
  std::size_t classes = 0;
  std::vector<std::size_t> counts;  // row-major, rows = true class

  explicit ConfusionMatrix(std::size_t c = 0) : classes(c), counts(c * c, 0) {}
  std::size_t& at(std::size_t truth, std::size_t predicted) { return counts[truth * classes + predicted]; }
  std::size_t at(std::size_t truth, std::size_t predicted) const { return counts[truth * classes + predicted]; }
  std::size_t row_sum(std::size_t truth) const;
  std::size_t total() const;
  std::size_t trace() const;
};

struct Evaluation {
  double accuracy = 0;
  ConfusionMatrix confusion;
  std::vector<double> per_class;  // NaN for classes without test samples
  std::vector<int> predictions;
};

/// Mean of per-class accuracies that are defined.
double mean_defined(std::span<const double> values);

/// Throws UsageError on an empty test set.
Evaluation evaluate(const ModelParams<float>& params, const ModelConfig& config, const PreparedSet& test);

struct TrainResult {
  ModelParams<float> params;
  std::vector<EpochLog> log;
};

/// Trains from a fresh initialisation seeded by config.seed. The model's
/// flags are taken from `config`. Every sample is its own tape; gradients
/// are averaged over the batch before each Adam step.
TrainResult train(const PreparedSet& train_set, const PreparedSet& test_set, const ModelConfig& model,
                  const TrainConfig& config, const std::function<void(const EpochLog&)>& on_epoch = {});

/// Convenience overload that prepares both sides of `split`.
TrainResult train(std::span<const SkeletonSequence> dataset, const DatasetSplit& split, const ModelConfig& model,
                  const TrainConfig& config, const std::function<void(const EpochLog&)>& on_epoch = {});

struct AblationVariant {
  std::string name;
  EnhancementFlags flags;
};

/// raw, +KJFE, +BVFE, +KJFE+BVFE, +MFAM, +MFAM+TE (full), full without JVTM.
std::vector<AblationVariant> default_ablation_grid();

struct AblationResult {
  std::string variant;
  double cross_subject = 0;
  double cross_view = 0;
};

/// Trains and evaluates every variant under cross-subject and cross-view
/// splits of `dataset`.
std::vector<AblationResult> ablate(std::span<const SkeletonSequence> dataset, const ModelConfig& model,
                                   const TrainConfig& config,
                                   const std::vector<AblationVariant>& grid = default_ablation_grid(),
                                   const std::function<void(const std::string&)>& progress = {});

}  // namespace afecnn
