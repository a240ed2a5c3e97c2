#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "pathxai/dataset.hpp"
#include "pathxai/network.hpp"

namespace pathxai {

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  double learning_rate = 0.01;
  std::size_t epochs = 30;
  std::size_t batch_size = 16;
  /// Seeds the minibatch shuffling stream.
  std::uint64_t seed = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;        // 1-based
  double train_loss = 0.0;      // mean cross-entropy over the epoch's minibatches
  double train_accuracy = 0.0;  // from the train-mode forward passes
  std::optional<double> validation_accuracy;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  [[nodiscard]] double total_seconds() const;
};

/// Minibatch SGD on mean cross-entropy with seeded shuffling. Deterministic
/// given the network, data, and config. Throws TrainingDiverged on a
/// non-finite loss and DatasetError if a class is missing.
TrainHistory train(Network& net, const LabeledSet& data, const TrainConfig& config,
                   const LabeledSet* validation = nullptr,
                   const std::function<void(const EpochRecord&)>& on_epoch = {});

/// Mean loss of `net` over `data` in the given mode, without updating anything.
double mean_loss(const Network& net, const LabeledSet& data, Mode mode = Mode::eval);

/// Index of the largest value; ties go to the lower index.
int argmax(std::span<const double> values);

struct Classification {
  int label = 0;
  std::vector<double> probabilities;
  ForwardCache cache;  // eval-mode cache; holds every conv feature map
};

/// Eval-mode inference on a single (1, c, h, w) image.
Classification classify(const Network& net, const Tensor4& image);

/// Eval-mode class predictions for a whole set, in item order.
std::vector<int> predict(const Network& net, const LabeledSet& data, std::size_t batch_size = 32);

/// (conv layer index, its rectified feature map) for every conv layer.
std::vector<std::pair<std::size_t, const Tensor4*>> conv_feature_maps(const Network& net,
                                                                     const ForwardCache& cache);

}  // namespace pathxai
