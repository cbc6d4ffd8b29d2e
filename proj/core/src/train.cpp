#include "foothold/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "foothold/errors.hpp"
#include "foothold/random.hpp"

namespace foothold {

Confusion::Confusion(int classes)
    : classes_(classes), counts_(static_cast<std::size_t>(classes) * classes, 0) {
  if (classes < 1) throw std::invalid_argument("confusion matrix needs at least one class");
}

void Confusion::add(const LabelMap& pred, const LabelMap& truth) {
  if (pred.size != truth.size) throw std::invalid_argument("prediction and truth differ in size");
  for (std::size_t i = 0; i < truth.values.size(); ++i) {
    const int t = truth.values[i];
    const int p = pred.values[i];
    if (t >= classes_ || p >= classes_) throw std::invalid_argument("label id out of range");
    ++counts_[static_cast<std::size_t>(t) * classes_ + p];
  }
}

void Confusion::merge(const Confusion& other) {
  if (other.classes_ != classes_) throw std::invalid_argument("confusion matrices differ in class count");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

std::uint64_t Confusion::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

double Confusion::accuracy() const {
  const std::uint64_t n = total();
  if (n == 0) return 0.0;
  std::uint64_t hit = 0;
  for (int c = 0; c < classes_; ++c) hit += at(c, c);
  return static_cast<double>(hit) / static_cast<double>(n);
}

std::optional<double> Confusion::iou(int c) const {
  std::uint64_t row = 0, col = 0;
  for (int k = 0; k < classes_; ++k) {
    row += at(c, k);
    col += at(k, c);
  }
  const std::uint64_t tp = at(c, c);
  const std::uint64_t uni = row + col - tp;
  if (uni == 0) return std::nullopt;
  return static_cast<double>(tp) / static_cast<double>(uni);
}

double Confusion::mean_iou() const {
  double sum = 0.0;
  int n = 0;
  for (int c = 0; c < classes_; ++c) {
    if (const auto v = iou(c)) {
      sum += *v;
      ++n;
    }
  }
  return n ? sum / n : 0.0;
}

std::optional<double> Confusion::recall(int c) const {
  std::uint64_t row = 0;
  for (int k = 0; k < classes_; ++k) row += at(c, k);
  if (row == 0) return std::nullopt;
  return static_cast<double>(at(c, c)) / static_cast<double>(row);
}

SegmentationMetrics metrics(const Confusion& confusion) {
  SegmentationMetrics m;
  m.accuracy = confusion.accuracy();
  for (int c = 0; c < confusion.classes(); ++c) m.iou.push_back(confusion.iou(c));
  m.mean_iou = confusion.mean_iou();
  return m;
}

SegmentationMetrics metrics(const LabelMap& pred, const LabelMap& truth, int classes) {
  Confusion conf(classes);
  conf.add(pred, truth);
  return metrics(conf);
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(decay > 0.0 && decay <= 1.0)) throw std::invalid_argument("decay must lie in (0, 1]");
  if (epochs < 1) throw std::invalid_argument("epochs must be positive");
  if (batch_size < 1) throw std::invalid_argument("batch size must be positive");
  if (weight_decay < 0.0) throw std::invalid_argument("weight decay must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw std::invalid_argument("Adam betas must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw std::invalid_argument("Adam epsilon must be positive");
  if (threads < 1) throw std::invalid_argument("thread count must be positive");
}

double TrainConfig::rate_at(int epoch) const { return learning_rate * std::pow(decay, epoch); }

LabelMap predict_labels(const Network<float>& net, std::span<const float> params, const GrayImage& input,
                        Workspace<float>& ws) {
  const auto x = image_to_input<float>(input);
  net.forward(params, x, ws);
  return argmax_labels<float>(net.logits(ws), net.config().classes, net.config().input_size);
}

Confusion evaluate_network(const Model& model, std::span<const TrainingPair> data) {
  const Network<float> net(model.config);
  auto ws = net.make_workspace();
  Confusion conf(model.config.classes);
  for (const auto& pair : data) conf.add(predict_labels(net, model.params, pair.input, ws), pair.labels);
  return conf;
}

namespace {

struct SampleSlot {
  Workspace<float> ws;
  std::vector<float> grad;
  std::vector<float> dlogits;
  double loss = 0.0;
  LabelMap pred;
};

void run_sample(const Network<float>& net, std::span<const float> params, const TrainingPair& pair,
                std::span<const double> weights, double scale, SampleSlot& slot) {
  const auto x = image_to_input<float>(pair.input);
  net.forward(params, x, slot.ws);
  const auto logits = net.logits(slot.ws);
  slot.dlogits.resize(logits.size());
  slot.loss = weighted_cross_entropy<float>(logits, pair.labels, weights, slot.dlogits, scale);
  slot.pred = argmax_labels<float>(logits, net.config().classes, net.config().input_size);
  std::fill(slot.grad.begin(), slot.grad.end(), 0.0f);
  net.backward(params, slot.dlogits, slot.ws, slot.grad);
}

}  // namespace

TrainResult train_network(const NetConfig& net_config, std::span<const TrainingPair> train,
                          std::span<const TrainingPair> validation, const ClassWeights& weights,
                          const TrainConfig& config, const EpochCallback& on_epoch) {
  const Network<float> net(net_config);
  return train_network(net_config, net.initial_parameters(config.seed), train, validation, weights, config,
                       on_epoch);
}

TrainResult train_network(const NetConfig& net_config, std::vector<float> initial,
                          std::span<const TrainingPair> train, std::span<const TrainingPair> validation,
                          const ClassWeights& weights, const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (train.empty()) throw std::invalid_argument("training set is empty");
  const Network<float> net(net_config);
  if (initial.size() != net.parameter_count()) throw std::invalid_argument("initial parameters do not match the network");
  const int classes = net_config.classes;
  const std::size_t pixels = static_cast<std::size_t>(net_config.input_size) * net_config.input_size;
  for (const auto& p : train)
    if (p.input.pixels.size() != pixels || p.labels.values.size() != pixels)
      throw std::invalid_argument("training pair does not match the network input size");

  std::vector<double> w(static_cast<std::size_t>(classes), 1.0);
  if (config.use_class_weights) {
    if (classes != kClassCount) throw std::invalid_argument("class weights expect the full class set");
    std::copy(weights.weights.begin(), weights.weights.end(), w.begin());
  }

  TrainResult result;
  result.model.config = net_config;
  std::copy(weights.weights.begin(), weights.weights.end(), result.model.class_weights.begin());
  std::vector<float>& theta = initial;
  const std::size_t n_params = theta.size();
  std::vector<double> m(n_params, 0.0), v(n_params, 0.0);
  std::vector<double> g(n_params, 0.0);

  const std::size_t batch = static_cast<std::size_t>(config.batch_size);
  const int threads = std::max(1, std::min<int>(config.threads, static_cast<int>(batch)));
  std::vector<SampleSlot> slots(batch);
  for (auto& s : slots) {
    s.ws = net.make_workspace();
    s.grad.assign(n_params, 0.0f);
  }

  std::vector<std::size_t> order(train.size());
  std::uint64_t step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (config.shuffle) {
      auto rng = derive_stream(config.seed ^ 0x5EEDull, static_cast<std::uint64_t>(epoch));
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
    }
    const double lr = config.rate_at(epoch);
    Confusion train_conf(classes);
    double loss_sum = 0.0;

    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t count = std::min(batch, order.size() - start);
      const double scale = 1.0 / static_cast<double>(count);

      const auto work = [&](std::size_t first, std::size_t stride) {
        for (std::size_t k = first; k < count; k += stride)
          run_sample(net, theta, train[order[start + k]], w, scale, slots[k]);
      };
      if (threads == 1) {
        work(0, 1);
      } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(work, static_cast<std::size_t>(t), threads);
        for (auto& th : pool) th.join();
      }

      // Reduction in sample order, independent of scheduling.
      double batch_loss = 0.0;
      std::fill(g.begin(), g.end(), 0.0);
      for (std::size_t k = 0; k < count; ++k) {
        batch_loss += slots[k].loss;
        for (std::size_t i = 0; i < n_params; ++i) g[i] += slots[k].grad[i];
        train_conf.add(slots[k].pred, train[order[start + k]].labels);
      }
      batch_loss *= scale;
      double sq = 0.0;
      for (std::size_t i = 0; i < n_params; ++i) {
        sq += static_cast<double>(theta[i]) * theta[i];
        g[i] += config.weight_decay * theta[i];
      }
      batch_loss += 0.5 * config.weight_decay * sq;
      if (!std::isfinite(batch_loss)) {
        std::ostringstream msg;
        msg << "non-finite training loss at epoch " << epoch << ", batch starting at sample " << start
            << " (learning rate " << lr << ")";
        throw NumericError(msg.str());
      }
      loss_sum += batch_loss * static_cast<double>(count);

      ++step;
      const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      for (std::size_t i = 0; i < n_params; ++i) {
        m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
        v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
        const double mh = m[i] / c1;
        const double vh = v[i] / c2;
        theta[i] = static_cast<float>(theta[i] - lr * mh / (std::sqrt(vh) + config.epsilon));
      }
    }

    EpochMetrics em;
    em.epoch = epoch;
    em.learning_rate = lr;
    em.train_loss = loss_sum / static_cast<double>(train.size());
    em.train_accuracy = train_conf.accuracy();
    em.train_miou = train_conf.mean_iou();
    if (!validation.empty()) {
      Confusion vc(classes);
      for (const auto& p : validation) vc.add(predict_labels(net, theta, p.input, slots[0].ws), p.labels);
      em.val_accuracy = vc.accuracy();
      em.val_miou = vc.mean_iou();
    }
    result.history.push_back(em);
    if (on_epoch) on_epoch(em);
  }
  result.model.params = std::move(theta);
  return result;
}

}  // namespace foothold
