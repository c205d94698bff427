#pragma once
#include <functional>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "trackinspect/cnn/adam.hpp"
#include "trackinspect/cnn/data.hpp"
#include "trackinspect/cnn/model.hpp"
#include "trackinspect/dataset.hpp"

namespace trackinspect::cnn {

struct TrainConfig {
  int epochs = 10;
  int batch_size = 20;
  int steps_per_epoch = 0;    // 0 = ceil(train size / batch size)
  int validation_steps = 0;   // 0 = evaluate the whole validation set
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  bool shuffle = true;
  uint64_t seed = 1;
  bool augment = false;       // apply random flip/shift/brightness to train batches
  AugmentConfig augment_config{};
};

struct EpochStats {
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
};

struct History {
  std::vector<EpochStats> epochs;
};

inline std::string history_csv(const History& h) {
  std::ostringstream os;
  os << "epoch,train_loss,train_acc,val_loss,val_acc\n";
  os << std::setprecision(10);
  for (size_t i = 0; i < h.epochs.size(); ++i) {
    const EpochStats& e = h.epochs[i];
    os << (i + 1) << ',' << e.train_loss << ',' << e.train_acc << ',' << e.val_loss << ','
       << e.val_acc << '\n';
  }
  return os.str();
}

inline void write_history_csv(const std::string& path, const History& h) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << history_csv(h);
}

namespace detail {

// Shuffled pass over [0, n); wraps onto a freshly shuffled pass so every
// batch is full-size.
class BatchCursor {
 public:
  BatchCursor(size_t n, bool shuffle, uint64_t seed)
      : order_(n), shuffle_(shuffle), rng_(derive_seed(seed, {0x73687566ull})) {
    for (size_t i = 0; i < n; ++i) order_[i] = i;
    reshuffle();
  }

  std::vector<size_t> next(int batch) {
    std::vector<size_t> idx;
    idx.reserve(static_cast<size_t>(batch));
    while (static_cast<int>(idx.size()) < batch) {
      if (pos_ == order_.size()) {
        pos_ = 0;
        reshuffle();
      }
      idx.push_back(order_[pos_++]);
    }
    return idx;
  }

 private:
  void reshuffle() {
    if (!shuffle_ || order_.size() < 2) return;
    for (size_t i = order_.size() - 1; i > 0; --i) {
      const size_t j = static_cast<size_t>(rng_.uniform_int(0, static_cast<int64_t>(i)));
      std::swap(order_[i], order_[j]);
    }
  }

  std::vector<size_t> order_;
  size_t pos_ = 0;
  bool shuffle_;
  Rng rng_;
};

template <class T>
int correct_count(const Tensor<T>& probs, const Tensor<T>& onehot) {
  int correct = 0;
  for (int n = 0; n < probs.n; ++n) {
    int pred = 0, truth = 0;
    for (int k = 1; k < probs.c; ++k) {
      if (probs.at(n, 0, 0, k) >= probs.at(n, 0, 0, pred)) pred = k;
      if (onehot.at(n, 0, 0, k) > onehot.at(n, 0, 0, truth)) truth = k;
    }
    if (pred == truth) ++correct;
  }
  return correct;
}

}  // namespace detail

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
};

// Whole-set evaluation in eval mode, chunked to bound memory; the final
// partial chunk is included so the averages are exact.
template <class T>
EvalResult evaluate(const Model<T>& model, const LoadedDataset& ds, int batch_size = 20) {
  if (batch_size <= 0) throw std::invalid_argument("evaluate: batch size must be positive");
  const int classes = model.layers.empty() ? 2 : plan_shapes(model.input_h, model.input_w,
                                                             model.input_c, model.layers)
                                                  .back()
                                                  .c;
  double loss_sum = 0.0;
  int correct = 0;
  size_t done = 0;
  while (done < ds.size()) {
    const size_t take = std::min<size_t>(static_cast<size_t>(batch_size), ds.size() - done);
    std::vector<size_t> idx(take);
    for (size_t i = 0; i < take; ++i) idx[i] = done + i;
    const Tensor<T> x = batch_tensor<T>(ds, idx);
    const Tensor<T> y = onehot_tensor<T>(ds, idx, classes);
    const Tensor<T> p = forward(model, x, PassMode::Eval);
    loss_sum += cross_entropy(p, y) * static_cast<double>(take);
    correct += detail::correct_count(p, y);
    done += take;
  }
  return {loss_sum / static_cast<double>(ds.size()),
          static_cast<double>(correct) / static_cast<double>(ds.size())};
}

// Per-epoch callback; return false to stop after that epoch.
using EpochCallback = std::function<bool(int epoch, const EpochStats&)>;

// Mini-batch Adam training.  Train loss/accuracy are the running averages of
// the optimization passes themselves (dropout active), matching what the
// history of a typical deep-learning framework reports; validation metrics
// are computed in eval mode after each epoch.
template <class T>
History train(Model<T>& model, const LoadedDataset& train_set, const LoadedDataset& val_set,
              const TrainConfig& cfg, std::ostream* log = nullptr,
              const std::vector<uint8_t>* trainable = nullptr,
              const EpochCallback& on_epoch = nullptr) {
  if (cfg.epochs < 0) throw std::invalid_argument("train: negative epoch count");
  if (cfg.batch_size <= 0) throw std::invalid_argument("train: batch size must be positive");
  if (train_set.size() == 0) throw std::invalid_argument("train: empty training set");
  if (train_set.width != model.input_w || train_set.height != model.input_h)
    throw std::invalid_argument("train: dataset images are " + std::to_string(train_set.width) +
                                "x" + std::to_string(train_set.height) +
                                " but the model expects " + std::to_string(model.input_w) + "x" +
                                std::to_string(model.input_h));

  const int classes =
      plan_shapes(model.input_h, model.input_w, model.input_c, model.layers).back().c;
  const int steps = cfg.steps_per_epoch > 0
                        ? cfg.steps_per_epoch
                        : static_cast<int>((train_set.size() + cfg.batch_size - 1) /
                                           static_cast<size_t>(cfg.batch_size));

  AdamConfig adam{cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon};
  AdamState<T> state(model);
  detail::BatchCursor cursor(train_set.size(), cfg.shuffle, cfg.seed);
  History history;
  uint64_t global_step = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double loss_sum = 0.0;
    int correct = 0, seen = 0;
    for (int s = 0; s < steps; ++s, ++global_step) {
      const std::vector<size_t> idx = cursor.next(cfg.batch_size);
      Tensor<T> x;
      if (cfg.augment) {
        std::vector<Image> batch;
        batch.reserve(idx.size());
        for (size_t k = 0; k < idx.size(); ++k)
          batch.push_back(augment(train_set.images[idx[k]], cfg.augment_config,
                                  derive_seed(cfg.seed, {0x617567ull, global_step, k})));
        x = batch_tensor<T>(batch);
      } else {
        x = batch_tensor<T>(train_set, idx);
      }
      const Tensor<T> y = onehot_tensor<T>(train_set, idx, classes);

      ForwardTrace<T> trace;
      Tensor<T> p;
      try {
        p = forward(model, x, PassMode::Train, cfg.seed, global_step, &trace);
      } catch (const std::runtime_error& e) {
        throw std::runtime_error("training diverged at epoch " + std::to_string(epoch) +
                                 " step " + std::to_string(s) + ": " + e.what());
      }
      const double loss = cross_entropy(p, y);
      if (!std::isfinite(loss))
        throw std::runtime_error("training diverged at epoch " + std::to_string(epoch) +
                                 " step " + std::to_string(s) + ": non-finite loss");
      loss_sum += loss * cfg.batch_size;
      correct += detail::correct_count(p, y);
      seen += cfg.batch_size;

      const auto grads = backward(model, trace, y);
      adam_step(model, grads, state, adam, trainable);
    }

    EpochStats es;
    if (seen > 0) {
      es.train_loss = loss_sum / seen;
      es.train_acc = static_cast<double>(correct) / seen;
    }
    if (val_set.size() > 0) {
      if (cfg.validation_steps > 0) {
        const size_t cap = std::min<size_t>(static_cast<size_t>(cfg.validation_steps) *
                                                static_cast<size_t>(cfg.batch_size),
                                            val_set.size());
        LoadedDataset head;
        head.width = val_set.width;
        head.height = val_set.height;
        head.images.assign(val_set.images.begin(),
                           val_set.images.begin() + static_cast<long>(cap));
        head.labels.assign(val_set.labels.begin(),
                           val_set.labels.begin() + static_cast<long>(cap));
        const EvalResult r = evaluate(model, head, cfg.batch_size);
        es.val_loss = r.loss;
        es.val_acc = r.accuracy;
      } else {
        const EvalResult r = evaluate(model, val_set, cfg.batch_size);
        es.val_loss = r.loss;
        es.val_acc = r.accuracy;
      }
    }
    history.epochs.push_back(es);
    if (log)
      *log << "epoch " << epoch << "/" << cfg.epochs << "  loss " << es.train_loss << "  acc "
           << es.train_acc << "  val_loss " << es.val_loss << "  val_acc " << es.val_acc
           << std::endl;
    if (on_epoch && !on_epoch(epoch, es)) break;
  }
  return history;
}

// Reinitializes the final dense head and trains only it; every other
// parametric layer is frozen and stays bit-identical.
template <class T>
History freeze_and_retrain(Model<T>& model, const LoadedDataset& train_set,
                           const LoadedDataset& val_set, const TrainConfig& cfg,
                           std::ostream* log = nullptr, const EpochCallback& on_epoch = nullptr) {
  size_t head = model.layers.size();
  for (size_t i = model.layers.size(); i-- > 0;)
    if (model.layers[i].kind == LayerKind::Dense) {
      head = i;
      break;
    }
  if (head == model.layers.size())
    throw std::invalid_argument("freeze_and_retrain: model has no dense layer");

  // fresh head initialization
  const auto shapes = plan_shapes(model.input_h, model.input_w, model.input_c, model.layers);
  const int fan_in = head == 0 ? model.input_c : shapes[head - 1].c;
  const int units = model.layers[head].units;
  Rng rng(derive_seed(cfg.seed, {0x68656164ull}));
  const double sigma = std::sqrt(2.0 / fan_in);
  model.params[head].weights = Tensor<T>(units, 1, 1, fan_in);
  for (T& w : model.params[head].weights.v) w = static_cast<T>(rng.normal(0.0, sigma));
  model.params[head].bias.assign(static_cast<size_t>(units), T{});

  std::vector<uint8_t> trainable(model.layers.size(), 0);
  trainable[head] = 1;
  return train(model, train_set, val_set, cfg, log, &trainable, on_epoch);
}

}  // namespace trackinspect::cnn
