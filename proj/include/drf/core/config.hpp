#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace drf {

enum class Precision { f32, f64 };

// Full run configuration. One flat struct; the file format groups keys into
// sections (see parse_config for the grammar). Unknown keys are errors so
// sweep scripts fail fast on typos.
struct RunConfig {
  std::uint64_t seed = 0;
  Precision precision = Precision::f64;
  int threads = 1;  // 0 = all hardware cores

  // [time]
  double delta = 1.0;  // seconds per step

  // [model]
  int branches = 4;         // dendritic branches n
  int adaptive_window = 8;  // threshold kernel size n_a; 0 = static threshold
  std::vector<int> hidden = {48, 48};
  double v_pre = 1.0;
  bool train_alpha = false;
  bool smooth_spikes = false;

  // [surrogate]
  double surrogate_sigma = 0.5;
  double surrogate_h = 0.15;
  double surrogate_s = 6.0;

  // [task]
  std::string task = "multitone";  // multitone | smnist | psmnist
  int length = 512;
  int classes = 4;
  double noise = 0.4;
  double amplitude = 1.0;
  int train_size = 2000;
  int test_size = 500;
  std::uint64_t permutation_seed = 7919;  // 0 = identity permutation
  std::string data_dir = "data/mnist";
  std::string mirror = "https://ossci-datasets.s3.amazonaws.com/mnist/";

  // [optim]
  double lr = 3e-3;
  int epochs = 30;
  int batch = 64;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 1.0;  // 0 disables clipping
  std::string schedule = "cosine";  // constant | cosine

  // [bench]
  std::vector<int> bench_lengths = {1024, 2048, 4096};
  int bench_reps = 5;
  int bench_warmups = 2;
  int bench_batch = 4;
  int bench_neurons = 64;

  void validate() const;
};

// Parses the documented config format. Errors: MissingFile, ParseError with
// the 1-based line number, InvalidValue naming the offending key.
RunConfig load_config(const std::string& path);
RunConfig parse_config_text(const std::string& text);

// Canonical serialization: fixed section and key order, '.' decimal point.
// save(load(c)) == save(c) for every valid config.
std::string save_config(const RunConfig& cfg);
void save_config_file(const RunConfig& cfg, const std::string& path);

// Applies one "section.key=value" override (CLI --set). The key must exist.
void apply_override(RunConfig& cfg, const std::string& dotted_key,
                    const std::string& value);

}  // namespace drf
