#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "drf/core/config.hpp"
#include "drf/core/rng.hpp"
#include "drf/core/types.hpp"

namespace drf {

struct LabeledSequenceBatch {
  RealSequence inputs;      // (B, C, L)
  std::vector<int> labels;  // class ids in [0, K)
};

struct TaskSpec {
  std::string id = "multitone";  // multitone | smnist | psmnist
  std::size_t length = 512;
  int classes = 4;
  double noise = 0.1;
  double amplitude = 1.0;
  int train_size = 2000;
  int test_size = 500;
  std::uint64_t permutation_seed = 7919;  // 0 = identity
  double delta = 1.0;

  void validate() const {
    DRF_CHECK(length >= 16, InvalidValue, "TaskSpec: length must be >= 16");
    DRF_CHECK(classes >= 2, InvalidValue, "TaskSpec: classes must be >= 2");
    DRF_CHECK(noise >= 0.0, InvalidValue, "TaskSpec: noise must be >= 0");
  }

  static TaskSpec from_config(const RunConfig& cfg) {
    TaskSpec s;
    s.id = cfg.task;
    s.length = static_cast<std::size_t>(cfg.length);
    s.classes = cfg.classes;
    s.noise = cfg.noise;
    s.amplitude = cfg.amplitude;
    s.train_size = cfg.train_size;
    s.test_size = cfg.test_size;
    s.permutation_seed = cfg.permutation_seed;
    s.delta = cfg.delta;
    s.validate();
    return s;
  }
};

// Tone placement for the multitone task: 3 tones per class, snapped to exact
// DFT bins of the sequence length so a noiseless sample has line spectra.
// Bins are interleaved across classes, so every class spans low, mid and high
// bands and no single narrow-band filter separates them.
inline std::vector<std::vector<double>> multitone_class_tones(const TaskSpec& spec) {
  constexpr int tones_per_class = 3;
  const int total = spec.classes * tones_per_class;
  const double pi = 3.141592653589793238462643;
  std::vector<int> bins(total);
  for (int j = 0; j < total; ++j) {
    const double frac = 0.1 + 0.7 * static_cast<double>(j) / (total - 1);
    bins[j] = std::max(1, static_cast<int>(std::lround(
                              frac * static_cast<double>(spec.length) / 2.0)));
  }
  for (int j = 1; j < total; ++j)
    if (bins[j] <= bins[j - 1]) bins[j] = bins[j - 1] + 1;  // keep sets disjoint
  DRF_CHECK(bins.back() < static_cast<int>(spec.length) / 2, SpecError,
            "multitone: tone bins exceed Nyquist; raise length or drop classes");
  std::vector<std::vector<double>> tones(spec.classes);
  for (int j = 0; j < total; ++j) {
    const double omega = 2.0 * pi * bins[j] / static_cast<double>(spec.length);
    tones[j % spec.classes].push_back(omega);  // interleaved assignment
  }
  return tones;
}

// Synthetic frequency-signature classification: each sample is the sum of its
// class's three unit-amplitude tones with random phases plus Gaussian noise.
// Classes are amplitude-matched and differ only in spectral content.
// Deterministic given (spec, rng); class labels cycle so counts differ by <= 1.
inline LabeledSequenceBatch gen_multitone(const TaskSpec& spec, std::size_t count,
                                          Rng& rng) {
  spec.validate();
  DRF_CHECK(spec.amplitude > 0.0, SpecError,
            "gen_multitone: amplitude must be > 0 (degenerate spec)");
  const auto tones = multitone_class_tones(spec);
  const double two_pi = 6.283185307179586476925287;

  LabeledSequenceBatch batch{RealSequence(count, 1, spec.length), {}};
  batch.labels.resize(count);
  for (std::size_t s = 0; s < count; ++s) {
    const int label = static_cast<int>(s % spec.classes);
    batch.labels[s] = label;
    double* row = batch.inputs.row(s, 0);
    std::vector<double> phase(tones[label].size());
    for (auto& ph : phase) ph = rng.uniform(0.0, two_pi);
    for (std::size_t t = 0; t < spec.length; ++t) {
      double v = 0.0;
      for (std::size_t j = 0; j < tones[label].size(); ++j)
        v += spec.amplitude * std::sin(tones[label][j] * static_cast<double>(t) + phase[j]);
      if (spec.noise > 0.0) v += spec.noise * rng.normal();
      row[t] = v;
    }
  }
  return batch;
}

}  // namespace drf
