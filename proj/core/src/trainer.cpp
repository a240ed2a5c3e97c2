#include "pathxai/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "pathxai/rng.hpp"

namespace pathxai {

double TrainHistory::total_seconds() const {
  double t = 0.0;
  for (const auto& e : epochs) t += e.seconds;
  return t;
}

int argmax(std::span<const double> values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

TrainHistory train(Network& net, const LabeledSet& data, const TrainConfig& config,
                   const LabeledSet* validation,
                   const std::function<void(const EpochRecord&)>& on_epoch) {
  if (data.items.empty()) throw DatasetError("training set is empty");
  data.require_both_classes("training set");
  if (config.batch_size == 0) throw std::invalid_argument("batch size must be positive");
  if (!(config.learning_rate >= 0.0) || !std::isfinite(config.learning_rate)) {
    throw std::invalid_argument("learning rate must be finite and >= 0");
  }

  Rng shuffle_rng(config.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Gradients grads = net.zero_gradients();
  TrainHistory history;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    shuffle(order, shuffle_rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;

    for (std::size_t first = 0; first < order.size(); first += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, order.size() - first);
      const std::span<const std::size_t> idx(order.data() + first, count);
      const Tensor4 batch = batch_images(data, idx);
      const ForwardCache cache = [&] {
        try {
          return net.forward_train(batch);
        } catch (const NumericError& e) {
          throw TrainingDiverged(std::string(e.what()) + " at epoch " + std::to_string(epoch));
        }
      }();

      const Tensor4& probs = cache.probabilities();
      Tensor4 grad_logits(cache.logits().shape());
      const double inv = 1.0 / static_cast<double>(count);
      for (std::size_t k = 0; k < count; ++k) {
        const auto label = static_cast<std::size_t>(data.items[idx[k]].label);
        const auto p = probs.item(k);
        const double loss = cross_entropy(p, label);
        if (!std::isfinite(loss)) {
          std::ostringstream msg;
          msg << "non-finite loss at epoch " << epoch << ", batch starting at " << first
              << " (learning rate " << config.learning_rate << ")";
          throw TrainingDiverged(msg.str());
        }
        loss_sum += loss;
        if (argmax(p) == static_cast<int>(label)) ++correct;
        const auto g = softmax_cross_entropy_grad(p, label);
        auto dst = grad_logits.item(k);
        for (std::size_t j = 0; j < g.size(); ++j) dst[j] = g[j] * inv;
      }

      grads.zero();
      net.backward(cache, grad_logits, &grads);
      for (const auto& block : grads.blocks) {
        for (double v : block) {
          if (!std::isfinite(v)) {
            throw TrainingDiverged("non-finite gradient at epoch " + std::to_string(epoch));
          }
        }
      }
      net.apply_sgd(grads, config.learning_rate);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(data.size());
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
    if (validation != nullptr && !validation->items.empty()) {
      const auto preds = predict(net, *validation);
      std::size_t ok = 0;
      for (std::size_t i = 0; i < preds.size(); ++i) ok += preds[i] == validation->items[i].label;
      rec.validation_accuracy = static_cast<double>(ok) / static_cast<double>(preds.size());
    }
    rec.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    history.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return history;
}

double mean_loss(const Network& net, const LabeledSet& data, Mode mode) {
  if (data.items.empty()) throw DatasetError("cannot compute the loss of an empty set");
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const ForwardCache cache = net.forward(batch_images(data, idx), mode);
  double sum = 0.0;
  for (std::size_t k = 0; k < data.size(); ++k) {
    sum += cross_entropy(cache.probabilities().item(k), static_cast<std::size_t>(data.items[k].label));
  }
  return sum / static_cast<double>(data.size());
}

Classification classify(const Network& net, const Tensor4& image) {
  if (image.shape().n != 1) throw ShapeError("classify expects a single image (n = 1)");
  Classification c;
  c.cache = net.forward(image, Mode::eval);
  const auto p = c.cache.probabilities().item(0);
  c.probabilities.assign(p.begin(), p.end());
  c.label = argmax(c.probabilities);
  return c;
}

std::vector<int> predict(const Network& net, const LabeledSet& data, std::size_t batch_size) {
  if (batch_size == 0) batch_size = 1;
  std::vector<int> out;
  out.reserve(data.size());
  std::vector<std::size_t> idx;
  for (std::size_t first = 0; first < data.size(); first += batch_size) {
    const std::size_t count = std::min(batch_size, data.size() - first);
    idx.resize(count);
    std::iota(idx.begin(), idx.end(), first);
    const ForwardCache cache = net.forward(batch_images(data, idx), Mode::eval);
    for (std::size_t k = 0; k < count; ++k) out.push_back(argmax(cache.probabilities().item(k)));
  }
  return out;
}

std::vector<std::pair<std::size_t, const Tensor4*>> conv_feature_maps(const Network& net,
                                                                     const ForwardCache& cache) {
  std::vector<std::pair<std::size_t, const Tensor4*>> maps;
  for (std::size_t conv : net.conv_layers()) {
    maps.emplace_back(conv, &cache.output_of(net.feature_tap(conv)));
  }
  return maps;
}

}  // namespace pathxai
