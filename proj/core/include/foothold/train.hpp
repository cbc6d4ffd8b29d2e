#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "foothold/kinematics.hpp"
#include "foothold/labeler.hpp"
#include "foothold/net.hpp"
#include "foothold/terrain.hpp"

namespace foothold {

struct TrainingPair {
  GrayImage input;
  LabelMap labels;
};

/// Confusion counts, indexed [truth][prediction].
class Confusion {
 public:
  explicit Confusion(int classes = kClassCount);

  void add(const LabelMap& pred, const LabelMap& truth);
  void merge(const Confusion& other);

  int classes() const { return classes_; }
  std::uint64_t at(int truth, int pred) const { return counts_[static_cast<std::size_t>(truth) * classes_ + pred]; }
  std::uint64_t total() const;
  double accuracy() const;
  /// TP / (TP + FP + FN); nullopt when the class is absent from both maps.
  std::optional<double> iou(int c) const;
  /// Mean over classes with a non-empty union.
  double mean_iou() const;
  /// TP / (TP + FN); nullopt when the class never occurs in the truth.
  std::optional<double> recall(int c) const;

 private:
  int classes_;
  std::vector<std::uint64_t> counts_;
};

struct SegmentationMetrics {
  double accuracy = 0.0;
  std::vector<std::optional<double>> iou;
  double mean_iou = 0.0;
};

SegmentationMetrics metrics(const LabelMap& pred, const LabelMap& truth, int classes = kClassCount);
SegmentationMetrics metrics(const Confusion& confusion);

struct TrainConfig {
  double learning_rate = 5e-4;
  double decay = 0.98;  // multiplies the rate after every epoch
  int epochs = 30;
  int batch_size = 16;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 1;
  bool use_class_weights = true;
  bool shuffle = true;
  int threads = 1;  // per-sample gradients are reduced in sample order either way

  void validate() const;
  double rate_at(int epoch) const;
};

struct EpochMetrics {
  int epoch = 0;
  double learning_rate = 0.0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double train_miou = 0.0;
  std::optional<double> val_accuracy;
  std::optional<double> val_miou;
};

/// Trained classifier plus what inference needs to use it.
struct Model {
  NetConfig config;
  Role role = Role::front;
  std::vector<float> params;
  std::array<double, kClassCount> class_weights{};
};

struct TrainResult {
  Model model;
  std::vector<EpochMetrics> history;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

/// Adam on the weighted cross-entropy with L2 weight decay. Throws
/// std::invalid_argument for an empty training set and NumericError when the
/// loss stops being finite.
TrainResult train_network(const NetConfig& net_config, std::span<const TrainingPair> train,
                          std::span<const TrainingPair> validation, const ClassWeights& weights,
                          const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Continue from existing parameters (used by tests to step a known state).
TrainResult train_network(const NetConfig& net_config, std::vector<float> initial,
                          std::span<const TrainingPair> train, std::span<const TrainingPair> validation,
                          const ClassWeights& weights, const TrainConfig& config,
                          const EpochCallback& on_epoch = {});

LabelMap predict_labels(const Network<float>& net, std::span<const float> params, const GrayImage& input,
                        Workspace<float>& ws);

Confusion evaluate_network(const Model& model, std::span<const TrainingPair> data);

}  // namespace foothold
