#pragma once

#include <chrono>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "drf/autograd/engine.hpp"
#include "drf/tasks/mnist.hpp"
#include "drf/tasks/task.hpp"
#include "drf/trainer/adam.hpp"
#include "drf/trainer/model.hpp"

namespace drf {

// In-memory task data. Multitone is generated up front from forked seed
// streams; MNIST variants are read from the IDX files on demand.
struct PreparedTask {
  TaskSpec spec;
  bool is_mnist = false;
  LabeledSequenceBatch train, test;  // multitone
  MnistData mnist;
  std::vector<std::uint32_t> perm;  // time-axis permutation (mnist variants)
  std::size_t classes = 0;

  std::size_t train_count() const {
    return is_mnist ? mnist.train.count : train.inputs.batch;
  }
  std::size_t test_count() const {
    return is_mnist ? mnist.test.count : test.inputs.batch;
  }
};

inline PreparedTask prepare_task(const RunConfig& cfg, const Rng& seed_rng,
                                 bool include_train = true) {
  PreparedTask task;
  task.spec = TaskSpec::from_config(cfg);
  if (task.spec.id == "multitone") {
    task.classes = static_cast<std::size_t>(task.spec.classes);
    Rng train_rng = seed_rng.fork(1001);
    Rng test_rng = seed_rng.fork(1002);
    if (include_train)
      task.train = gen_multitone(task.spec, cfg.train_size, train_rng);
    task.test = gen_multitone(task.spec, cfg.test_size, test_rng);
  } else {
    task.is_mnist = true;
    task.classes = 10;
    task.mnist = load_mnist(cfg.data_dir);
    const bool permuted = task.spec.id == "psmnist";
    task.perm = pixel_permutation(permuted ? task.spec.permutation_seed : 0);
  }
  return task;
}

inline LabeledSequenceBatch task_batch(const PreparedTask& task, bool train_split,
                                       const std::vector<std::size_t>& indices) {
  if (task.is_mnist) {
    const MnistSplit& split = train_split ? task.mnist.train : task.mnist.test;
    LabeledSequenceBatch out{RealSequence(indices.size(), 1, 784), {}};
    out.labels.resize(indices.size());
    for (std::size_t s = 0; s < indices.size(); ++s) {
      const auto single = mnist_batch(split, indices[s], 1, &task.perm);
      std::copy(single.inputs.v.begin(), single.inputs.v.end(),
                out.inputs.row(s, 0));
      out.labels[s] = single.labels[0];
    }
    return out;
  }
  const LabeledSequenceBatch& src = train_split ? task.train : task.test;
  LabeledSequenceBatch out{
      RealSequence(indices.size(), src.inputs.channels, src.inputs.length), {}};
  out.labels.resize(indices.size());
  for (std::size_t s = 0; s < indices.size(); ++s) {
    for (std::size_t c = 0; c < src.inputs.channels; ++c)
      std::copy(src.inputs.row(indices[s], c),
                src.inputs.row(indices[s], c) + src.inputs.length,
                out.inputs.row(s, c));
    out.labels[s] = src.labels[indices[s]];
  }
  return out;
}

template <class T>
RealSeq<T> convert_seq(const RealSequence& x) {
  if constexpr (std::is_same_v<T, double>) {
    return x;
  } else {
    RealSeq<T> out(x.batch, x.channels, x.length);
    for (std::size_t i = 0; i < x.v.size(); ++i)
      out.v[i] = static_cast<T>(x.v[i]);
    return out;
  }
}

inline double scheduled_lr(const RunConfig& cfg, std::int64_t epoch) {
  if (cfg.schedule == "cosine") {
    const double frac =
        static_cast<double>(epoch) / std::max(1, cfg.epochs);
    return cfg.lr * 0.5 * (1.0 + std::cos(3.141592653589793 * frac));
  }
  return cfg.lr;
}

template <class T>
struct StepMetrics {
  double loss = 0;
  double accuracy = 0;
  double grad_norm = 0;
  std::vector<double> spike_rates;
};

// One optimization transaction: forward, backward, clip, Adam update.
// The version bump inside adam_step invalidates kernel caches. The tape is
// caller-owned so buffers are reused across steps.
template <class T>
StepMetrics<T> train_step(Model<T>& model, EngineCache<T>& cache, Tape<T>& tape,
                          const RealSeq<T>& inputs, const std::vector<int>& labels,
                          AdamState<T>& opt, const RunConfig& cfg, double lr,
                          Mode mode = Mode::parallel) {
  const auto stats = forward_pass(model, cache, inputs, labels, mode, tape);
  auto grads = backward_pass(model, cache, tape, labels);
  StepMetrics<T> out;
  out.loss = static_cast<double>(stats.loss);
  out.accuracy = stats.accuracy;
  out.spike_rates = stats.layer_spike_rate;
  out.grad_norm = clip_global_norm(grads, cfg.clip_norm);
  adam_step(model, grads, opt, lr, cfg.beta1, cfg.beta2, cfg.eps);
  return out;
}

template <class T>
StepMetrics<T> train_step(Model<T>& model, EngineCache<T>& cache,
                          const RealSeq<T>& inputs, const std::vector<int>& labels,
                          AdamState<T>& opt, const RunConfig& cfg, double lr,
                          Mode mode = Mode::parallel) {
  Tape<T> tape;
  return train_step(model, cache, tape, inputs, labels, opt, cfg, lr, mode);
}

template <class T>
struct EvalMetrics {
  double loss = 0;
  double accuracy = 0;
  double spike_rate = 0;
  std::vector<double> layer_spike_rates;
};

template <class T>
EvalMetrics<T> evaluate(Model<T>& model, EngineCache<T>& cache,
                        const PreparedTask& task, const RunConfig& cfg,
                        Mode mode = Mode::parallel, std::size_t limit = 0) {
  const std::size_t count =
      limit > 0 ? std::min(limit, task.test_count()) : task.test_count();
  EvalMetrics<T> out;
  Tape<T> tape;
  std::size_t seen = 0;
  std::vector<double> layer_acc;
  for (std::size_t first = 0; first < count; first += cfg.batch) {
    const std::size_t bs = std::min<std::size_t>(cfg.batch, count - first);
    std::vector<std::size_t> idx(bs);
    std::iota(idx.begin(), idx.end(), first);
    const auto batch = task_batch(task, false, idx);
    const auto inputs = convert_seq<T>(batch.inputs);
    const auto stats =
        forward_pass(model, cache, inputs, batch.labels, mode, tape);
    out.loss += static_cast<double>(stats.loss) * bs;
    out.accuracy += stats.accuracy * bs;
    if (layer_acc.empty()) layer_acc.assign(stats.layer_spike_rate.size(), 0.0);
    for (std::size_t l = 0; l < stats.layer_spike_rate.size(); ++l)
      layer_acc[l] += stats.layer_spike_rate[l] * bs;
    seen += bs;
  }
  out.loss /= static_cast<double>(seen);
  out.accuracy /= static_cast<double>(seen);
  out.layer_spike_rates = layer_acc;
  for (auto& r : out.layer_spike_rates) r /= static_cast<double>(seen);
  out.spike_rate = 0;
  for (const double r : out.layer_spike_rates) out.spike_rate += r;
  if (!out.layer_spike_rates.empty())
    out.spike_rate /= static_cast<double>(out.layer_spike_rates.size());
  return out;
}

struct EpochRow {
  int epoch = 0;
  std::string split;
  double loss = 0, accuracy = 0, spike_rate = 0, wall_s = 0;
};

// Runs `epochs` additional epochs of training, returning per-epoch rows for
// both splits. Batch order is drawn from data_rng, which is checkpointed, so
// a resumed run replays the identical trajectory.
template <class T>
std::vector<EpochRow> run_training(Model<T>& model, EngineCache<T>& cache,
                                   AdamState<T>& opt, Rng& data_rng,
                                   const PreparedTask& task, const RunConfig& cfg,
                                   std::int64_t& epoch, int epochs,
                                   Mode mode = Mode::parallel) {
  std::vector<EpochRow> rows;
  Tape<T> tape;
  const std::size_t train_n = task.train_count();
  for (int e = 0; e < epochs; ++e) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::size_t> order(train_n);
    std::iota(order.begin(), order.end(), 0u);
    for (std::size_t i = train_n; i > 1; --i)
      std::swap(order[i - 1], order[data_rng.uniform_int(i)]);

    const double lr = scheduled_lr(cfg, epoch);
    double loss_sum = 0, acc_sum = 0, rate_sum = 0;
    std::size_t seen = 0, steps = 0;
    for (std::size_t first = 0; first < train_n; first += cfg.batch) {
      const std::size_t bs = std::min<std::size_t>(cfg.batch, train_n - first);
      const std::vector<std::size_t> idx(order.begin() + first,
                                         order.begin() + first + bs);
      const auto batch = task_batch(task, true, idx);
      const auto inputs = convert_seq<T>(batch.inputs);
      const auto m =
          train_step(model, cache, tape, inputs, batch.labels, opt, cfg, lr, mode);
      loss_sum += m.loss * bs;
      acc_sum += m.accuracy * bs;
      double r = 0;
      for (const double v : m.spike_rates) r += v;
      rate_sum += (m.spike_rates.empty() ? 0.0 : r / m.spike_rates.size()) * bs;
      seen += bs;
      ++steps;
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rows.push_back({static_cast<int>(epoch), "train", loss_sum / seen,
                    acc_sum / seen, rate_sum / seen, wall});
    const auto ev = evaluate(model, cache, task, cfg, mode);
    rows.push_back({static_cast<int>(epoch), "test", ev.loss, ev.accuracy,
                    ev.spike_rate, 0.0});
    ++epoch;
  }
  return rows;
}

}  // namespace drf
