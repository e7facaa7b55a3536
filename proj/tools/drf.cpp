// Command-line front end: train / eval / analyze / bench / inspect / fetch.
// Every run lands in a timestamped directory under --out with the resolved
// config echoed, so any artifact can be reproduced exactly.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <numeric>
#include <string>
#include <vector>

#include "drf/analysis/energy.hpp"
#include "drf/analysis/response.hpp"
#include "drf/core/csv.hpp"
#include "drf/core/threading.hpp"
#include "drf/tasks/mnist.hpp"
#include "drf/trainer/checkpoint.hpp"
#include "drf/trainer/trainer.hpp"

namespace {

using namespace drf;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::InvalidValue:
    case ErrorCode::ParseError:
    case ErrorCode::SpecError:
      return kExitConfig;
    case ErrorCode::NonFinite:
      return kExitNumeric;
    default:
      return kExitData;
  }
}

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir = "runs";
  int threads = -1;  // -1: take from config
};

RunConfig resolve_config(const CommonOpts& opts) {
  RunConfig cfg;
  if (!opts.config_path.empty()) cfg = load_config(opts.config_path);
  // Dataset root precedence: config file < DRF_DATA_DIR < explicit -s override.
  if (const char* env_root = std::getenv("DRF_DATA_DIR"))
    cfg.data_dir = env_root;
  for (const auto& kv : opts.overrides) {
    const auto eq = kv.find('=');
    DRF_CHECK(eq != std::string::npos, InvalidValue,
              "override '" + kv + "' is not key=value");
    apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

// Commands that consume a checkpoint reuse its config echo as the base and
// apply the CLI overrides on top, so the task always matches the model unless
// explicitly overridden.
RunConfig effective_config(const Checkpoint& ck, const CommonOpts& opts) {
  RunConfig cfg = ck.config;
  if (const char* env_root = std::getenv("DRF_DATA_DIR")) cfg.data_dir = env_root;
  for (const auto& kv : opts.overrides) {
    const auto eq = kv.find('=');
    DRF_CHECK(eq != std::string::npos, InvalidValue,
              "override '" + kv + "' is not key=value");
    apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

std::string make_run_dir(const std::string& base, const std::string& cmd) {
  std::filesystem::create_directories(base);
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  char stamp[32];
  std::tm tm_utc{};
  gmtime_r(&tt, &tm_utc);
  std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", &tm_utc);
  std::string dir = base + "/" + cmd + "-" + stamp;
  for (int suffix = 2; std::filesystem::exists(dir); ++suffix)
    dir = base + "/" + cmd + "-" + stamp + "-" + std::to_string(suffix);
  std::filesystem::create_directories(dir);
  return dir;
}

void apply_threads(const RunConfig& cfg, int cli_threads) {
  set_thread_count(cli_threads >= 0 ? cli_threads : cfg.threads);
}

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

// ---------------------------------------------------------------- train/eval

template <class T>
int run_train(const RunConfig& cfg, const std::string& run_dir) {
  Rng root(cfg.seed);
  const auto task = prepare_task(cfg, root);
  Rng init = root.fork(1000);
  auto model = make_model<T>(cfg, 1, task.classes,
                             static_cast<std::size_t>(cfg.length), init);
  auto opt = AdamState<T>::zeros_like(model);
  Rng data_rng = root.fork(2000);
  EngineCache<T> cache;
  std::int64_t epoch = 0;

  std::fprintf(stderr, "train: task=%s L=%d params=%zu run=%s\n",
               cfg.task.c_str(), cfg.length, model.parameter_count(),
               run_dir.c_str());

  CsvWriter metrics(run_dir + "/metrics.csv",
                    {"epoch", "split", "loss", "acc", "spike_rate", "wallclock_s"});
  for (int e = 0; e < cfg.epochs; ++e) {
    const auto rows =
        run_training(model, cache, opt, data_rng, task, cfg, epoch, 1);
    for (const auto& row : rows) {
      metrics.field(row.epoch)
          .field(row.split)
          .field(row.loss)
          .field(row.accuracy)
          .field(row.spike_rate)
          .field(row.wall_s);
      metrics.endrow();
      if (row.split == "test")
        std::fprintf(stderr, "epoch %d: test loss %.4f acc %.4f spikes %.4f\n",
                     row.epoch, row.loss, row.accuracy, row.spike_rate);
    }
    metrics.flush();
    save_checkpoint(make_checkpoint(cfg, model, opt, data_rng, epoch),
                    run_dir + "/checkpoint.bin");
  }
  return kExitOk;
}

template <class T>
int run_eval(const Checkpoint& ck, const RunConfig& cfg,
             const std::string& run_dir) {
  const RunConfig& model_cfg = ck.config;
  Rng root(model_cfg.seed);
  const auto task = prepare_task(cfg, root, /*include_train=*/false);
  Rng init = root.fork(1000);
  auto model = make_model<T>(model_cfg, 1, task.classes,
                             static_cast<std::size_t>(model_cfg.length), init);
  auto opt = AdamState<T>::zeros_like(model);
  Rng data_rng = root.fork(2000);
  restore_model(ck, model, opt, data_rng);
  EngineCache<T> cache;

  const auto ev = evaluate(model, cache, task, cfg);
  CsvWriter out(run_dir + "/eval.csv", {"split", "loss", "acc", "spike_rate"});
  out.field(std::string("test")).field(ev.loss).field(ev.accuracy).field(ev.spike_rate);
  out.endrow();
  std::printf("test loss %.6f acc %.4f spike_rate %.5f\n", ev.loss, ev.accuracy,
              ev.spike_rate);
  return kExitOk;
}

// ------------------------------------------------------------------- analyze

template <class T>
int run_analyze(const Checkpoint* ck, const RunConfig& cfg, bool init_fresh,
                int layer_idx, const std::string& run_dir) {
  Model<T> model;
  Rng root(cfg.seed);
  if (init_fresh) {
    Rng init = root.fork(1000);
    model = make_model<T>(cfg, 1, static_cast<std::size_t>(cfg.classes),
                          static_cast<std::size_t>(cfg.length), init);
  } else {
    const RunConfig& model_cfg = ck->config;
    root = Rng(model_cfg.seed);
    Rng init = root.fork(1000);
    const std::size_t classes = model_cfg.task == "multitone"
                                    ? static_cast<std::size_t>(model_cfg.classes)
                                    : 10;
    model = make_model<T>(model_cfg, 1, classes,
                          static_cast<std::size_t>(model_cfg.length), init);
    auto opt = AdamState<T>::zeros_like(model);
    Rng data_rng = root.fork(2000);
    restore_model(*ck, model, opt, data_rng);
  }
  DRF_CHECK(layer_idx >= 0 && layer_idx < static_cast<int>(model.layers.size()),
            InvalidValue, "analyze: --layer out of range");

  // Frequency response of the selected layer's bank.
  DendriticParams<double> p;
  std::vector<double> c;
  {
    const auto pd = model.dendrites(static_cast<std::size_t>(layer_idx));
    p.tau.assign(pd.tau.begin(), pd.tau.end());
    p.omega.assign(pd.omega.begin(), pd.omega.end());
    p.gamma.assign(pd.gamma.begin(), pd.gamma.end());
    const auto& cl = model.layers[static_cast<std::size_t>(layer_idx)].c;
    c.assign(cl.begin(), cl.end());
  }
  const TimeGrid grid(model.delta, static_cast<std::size_t>(cfg.length));
  const auto resp = drf_response(p, c, grid, default_omega_grid());

  CsvWriter rcsv(run_dir + "/response.csv", {"Omega", "branch_id_or_aggregate", "magnitude"});
  for (std::size_t i = 0; i < resp.branch.size(); ++i) {
    for (std::size_t j = 0; j < resp.omega_grid.size(); ++j) {
      rcsv.field(resp.omega_grid[j]).field(std::int64_t(i)).field(resp.branch[i][j]);
      rcsv.endrow();
    }
  }
  for (std::size_t j = 0; j < resp.omega_grid.size(); ++j) {
    rcsv.field(resp.omega_grid[j]).field(std::string("aggregate")).field(resp.aggregate[j]);
    rcsv.endrow();
  }

  CsvWriter bcsv(run_dir + "/bandwidth.csv", {"curve", "width", "intervals"});
  // All-negative soma weights clamp the aggregate to zero; coverage is then
  // zero by definition rather than an error for the operator surface.
  auto safe_bw = [](const FrequencyResponse& fr) {
    try {
      return measured_bandwidth(fr);
    } catch (const Error&) {
      return BandwidthResult{};
    }
  };
  const auto bw = safe_bw(resp);
  bcsv.field(std::string("aggregate")).field(bw.total_width)
      .field(std::int64_t(bw.intervals.size()));
  bcsv.endrow();
  for (std::size_t i = 0; i < resp.branch.size(); ++i) {
    FrequencyResponse single;
    single.omega_grid = resp.omega_grid;
    single.aggregate = resp.branch[i];
    single.aggregate_clamped = resp.branch[i];
    const auto sbw = safe_bw(single);
    bcsv.field("branch" + std::to_string(i)).field(sbw.total_width)
        .field(std::int64_t(sbw.intervals.size()));
    bcsv.endrow();
  }
  std::printf("aggregate -3dB coverage: %.6f rad/step over %zu intervals\n",
              bw.total_width, bw.intervals.size());

  // Energy report over the test split (skipped when task data is absent).
  try {
    Rng task_root(cfg.seed);
    const auto task = prepare_task(cfg, task_root, /*include_train=*/false);
    EngineCache<T> cache;
    const std::size_t sample =
        std::min<std::size_t>(task.test_count(), 256);
    std::vector<std::size_t> idx(sample);
    std::iota(idx.begin(), idx.end(), 0u);
    const auto batch = task_batch(task, false, idx);
    const auto inputs = convert_seq<T>(batch.inputs);
    Tape<T> tape;
    forward_pass(model, cache, inputs, batch.labels, Mode::parallel, tape);

    std::vector<LayerUsage> topology;
    const std::size_t len = inputs.length;
    // Input layer works on real values: full MACs.
    topology.push_back({"dense0", 0, 0,
                        inputs.batch * len * model.layers[0].in_width *
                            model.layers[0].out_width});
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
      const std::size_t fan_out = l + 1 < model.layers.size()
                                      ? model.layers[l + 1].out_width
                                      : model.readout.classes;
      topology.push_back({"spikes" + std::to_string(l),
                          tape.layers[l].spike_count, fan_out, 0});
    }
    SpikeStats stats;
    stats.rate = 0;
    for (std::size_t l = 0; l < model.layers.size(); ++l)
      stats.rate += static_cast<double>(tape.layers[l].spike_count) /
                    static_cast<double>(inputs.batch * model.layers[l].out_width * len);
    stats.rate /= static_cast<double>(model.layers.size());
    const auto report = energy_estimate(stats, topology);

    CsvWriter ecsv(run_dir + "/energy.csv",
                   {"layer", "ac_ops", "mac_ops", "joules"});
    for (const auto& le : report.per_layer) {
      ecsv.field(le.name).field(le.ac_ops).field(le.mac_ops).field(le.joules);
      ecsv.endrow();
    }
    std::printf("spike rate %.5f, synaptic ACs %zu, MACs %zu, energy %.4g J\n",
                report.spike_rate, report.synaptic_ops, report.mac_ops,
                report.joules);
  } catch (const Error& e) {
    std::fprintf(stderr, "analyze: energy section skipped (%s)\n", e.what());
  }
  return kExitOk;
}

// ------------------------------------------------------------------- inspect

template <class T>
int run_inspect(const Checkpoint& ck, const RunConfig& cfg, int layer_idx,
                int neuron, int sample, bool zero_input,
                const std::string& run_dir) {
  const RunConfig& model_cfg = ck.config;
  Rng root(model_cfg.seed);
  const auto task = prepare_task(cfg, root, /*include_train=*/false);
  Rng init = root.fork(1000);
  auto model = make_model<T>(model_cfg, 1, task.classes,
                             static_cast<std::size_t>(model_cfg.length), init);
  auto opt = AdamState<T>::zeros_like(model);
  Rng data_rng = root.fork(2000);
  restore_model(ck, model, opt, data_rng);
  DRF_CHECK(layer_idx >= 0 && layer_idx < static_cast<int>(model.layers.size()),
            InvalidValue, "inspect: --layer out of range");
  DRF_CHECK(neuron >= 0 &&
                neuron < static_cast<int>(model.layers[layer_idx].out_width),
            InvalidValue, "inspect: --neuron out of range");

  std::vector<std::size_t> idx = {static_cast<std::size_t>(sample)};
  auto batch = task_batch(task, false, idx);
  if (zero_input)
    std::fill(batch.inputs.v.begin(), batch.inputs.v.end(), 0.0);
  const auto inputs = convert_seq<T>(batch.inputs);

  EngineCache<T> cache;
  Tape<T> tape;
  forward_pass(model, cache, inputs, batch.labels, Mode::sequential, tape);

  const auto& lt = tape.layers[static_cast<std::size_t>(layer_idx)];
  CsvWriter trace(run_dir + "/trace.csv",
                  {"t", "branch", "re", "im", "H", "V_th", "spike"});
  const std::size_t len = inputs.length;
  for (std::size_t t = 0; t < len; ++t) {
    for (std::size_t i = 0; i < model.branches; ++i) {
      trace.field(t)
          .field(std::int64_t(i))
          .field(static_cast<double>(lt.states.re_lane(0, neuron, i)[t]))
          .field(static_cast<double>(lt.states.im_lane(0, neuron, i)[t]))
          .field(static_cast<double>(lt.h.at(0, neuron, t)))
          .field(static_cast<double>(lt.v_th.at(0, neuron, t)))
          .field(std::int64_t(lt.spikes.at(0, neuron, t) >= T(0.5) ? 1 : 0));
      trace.endrow();
    }
  }
  std::printf("trace written: layer %d neuron %d sample %d (%zu steps)\n",
              layer_idx, neuron, sample, len);
  return kExitOk;
}

// --------------------------------------------------------------------- bench

struct BenchRow {
  int length;
  std::string path;
  int threads;
  double mean_ms, std_ms;
  int reps;
};

template <class T>
void bench_one(const RunConfig& cfg, int length, int threads,
               std::vector<BenchRow>& rows) {
  RunConfig bcfg = cfg;
  bcfg.length = length;
  bcfg.hidden = {cfg.bench_neurons};
  bcfg.batch = cfg.bench_batch;
  set_thread_count(threads);

  Rng root(cfg.seed);
  Rng init = root.fork(1000);
  auto model = make_model<T>(bcfg, 1, 4, static_cast<std::size_t>(length), init);
  EngineCache<T> cache;

  RealSequence inputs64(bcfg.batch, 1, static_cast<std::size_t>(length));
  Rng data(root.fork(3).next_u64());
  for (auto& v : inputs64.v) v = data.uniform(-1, 1);
  const auto inputs = convert_seq<T>(inputs64);
  std::vector<int> labels(bcfg.batch);
  for (std::size_t b = 0; b < labels.size(); ++b)
    labels[b] = static_cast<int>(b % 4);

  auto timed = [&](const std::string& name, auto&& fn) {
    for (int w = 0; w < cfg.bench_warmups; ++w) fn();
    std::vector<double> ms(cfg.bench_reps);
    for (int r = 0; r < cfg.bench_reps; ++r) {
      const double t0 = now_ms();
      fn();
      ms[r] = now_ms() - t0;
    }
    double mean = 0;
    for (const double v : ms) mean += v;
    mean /= ms.size();
    double var = 0;
    for (const double v : ms) var += (v - mean) * (v - mean);
    const double sd = ms.size() > 1 ? std::sqrt(var / (ms.size() - 1)) : 0.0;
    rows.push_back({length, name, threads, mean, sd, cfg.bench_reps});
    std::fprintf(stderr, "bench L=%d %s threads=%d: %.3f ms (+/- %.3f)\n", length,
                 name.c_str(), threads, mean, sd);
  };

  Tape<T> tape;
  timed("seq_forward", [&] {
    forward_pass(model, cache, inputs, labels, Mode::sequential, tape);
  });
  timed("par_forward", [&] {
    forward_pass(model, cache, inputs, labels, Mode::parallel, tape);
  });
  {
    Tape<T> ptape;
    forward_pass(model, cache, inputs, labels, Mode::parallel, ptape);
    timed("par_backward", [&] { backward_pass(model, cache, ptape, labels); });
  }
  if (length <= 512) {
    timed("bptt_backward", [&] {
      bptt_reference_grad(model, cache, inputs, labels);
    });
  }
  // Full optimizer steps, parallel vs sequential execution of the same
  // transaction (forward + matching backward + clipped Adam update).
  {
    auto m2 = model;
    auto opt2 = AdamState<T>::zeros_like(m2);
    EngineCache<T> cache2;
    Tape<T> step_tape;
    timed("par_step", [&] {
      train_step(m2, cache2, step_tape, inputs, labels, opt2, bcfg, 1e-9,
                 Mode::parallel);
    });
  }
  {
    auto m2 = model;
    auto opt2 = AdamState<T>::zeros_like(m2);
    EngineCache<T> cache2;
    Tape<T> step_tape;
    timed("seq_step", [&] {
      train_step(m2, cache2, step_tape, inputs, labels, opt2, bcfg, 1e-9,
                 Mode::sequential);
    });
  }
}

template <class T>
int run_bench(const RunConfig& cfg, const std::string& run_dir) {
  std::vector<BenchRow> rows;
  std::vector<int> thread_variants = {1};
  const int many = thread_count();  // resolved from --threads / config
  if (many > 1) thread_variants.push_back(many);
  for (const int threads : thread_variants)
    for (const int length : cfg.bench_lengths) bench_one<T>(cfg, length, threads, rows);

  CsvWriter csv(run_dir + "/bench.csv",
                {"L", "path", "threads", "mean_ms", "std_ms", "reps"});
  for (const auto& row : rows) {
    csv.field(row.length)
        .field(row.path)
        .field(row.threads)
        .field(row.mean_ms)
        .field(row.std_ms)
        .field(row.reps);
    csv.endrow();
  }
  return kExitOk;
}

template <class Fn>
int dispatch_precision(const RunConfig& cfg, Fn&& fn) {
  if (cfg.precision == Precision::f32) return fn.template operator()<float>();
  return fn.template operator()<double>();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dendritic resonate-and-fire sequence modeling engine"};
  app.require_subcommand(1);

  CommonOpts common;
  std::string ck_path;
  bool init_fresh = false;
  int layer_idx = 0, neuron = 0, sample = 0;
  bool zero_input = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("-c,--config", common.config_path, "config file path");
    cmd->add_option("-s,--set", common.overrides,
                    "dotted-path override, e.g. model.branches=8");
    cmd->add_option("-o,--out", common.out_dir, "output directory root");
    cmd->add_option("-t,--threads", common.threads, "worker threads (0 = all cores)");
  };

  auto* train = app.add_subcommand("train", "train a model and write checkpoint + metrics");
  add_common(train);
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  add_common(eval);
  eval->add_option("--checkpoint", ck_path, "checkpoint path")->required();
  auto* analyze = app.add_subcommand("analyze", "frequency response, bandwidth and energy report");
  add_common(analyze);
  analyze->add_option("--checkpoint", ck_path, "checkpoint path");
  analyze->add_flag("--init", init_fresh, "analyze a fresh-initialized model instead");
  analyze->add_option("--layer", layer_idx, "layer to analyze");
  auto* bench = app.add_subcommand("bench", "runtime ladders for both execution paths");
  add_common(bench);
  auto* inspect = app.add_subcommand("inspect", "per-neuron state/threshold/spike trace CSV");
  add_common(inspect);
  inspect->add_option("--checkpoint", ck_path, "checkpoint path")->required();
  inspect->add_option("--layer", layer_idx, "layer index");
  inspect->add_option("--neuron", neuron, "neuron index");
  inspect->add_option("--sample", sample, "test sample index");
  inspect->add_flag("--zero-input", zero_input, "replace the sample with zeros");
  auto* fetch = app.add_subcommand("fetch", "download the IDX dataset files from the mirror");
  add_common(fetch);

  CLI11_PARSE(app, argc, argv);

  RunConfig cfg;
  try {
    cfg = resolve_config(common);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  apply_threads(cfg, common.threads);

  try {
    if (train->parsed()) {
      const auto dir = make_run_dir(common.out_dir, "train");
      save_config_file(cfg, dir + "/config.cfg");
      return dispatch_precision(cfg, [&]<class T>() { return run_train<T>(cfg, dir); });
    }
    if (eval->parsed()) {
      const auto ck = load_checkpoint(ck_path);
      const RunConfig eff = effective_config(ck, common);
      const auto dir = make_run_dir(common.out_dir, "eval");
      save_config_file(eff, dir + "/config.cfg");
      return dispatch_precision(eff,
                                [&]<class T>() { return run_eval<T>(ck, eff, dir); });
    }
    if (analyze->parsed()) {
      DRF_CHECK(init_fresh || !ck_path.empty(), MissingFile,
                "analyze: need --checkpoint or --init");
      if (init_fresh) {
        const auto dir = make_run_dir(common.out_dir, "analyze");
        save_config_file(cfg, dir + "/config.cfg");
        return dispatch_precision(cfg, [&]<class T>() {
          return run_analyze<T>(nullptr, cfg, true, layer_idx, dir);
        });
      }
      const auto ck = load_checkpoint(ck_path);
      const RunConfig eff = effective_config(ck, common);
      const auto dir = make_run_dir(common.out_dir, "analyze");
      save_config_file(eff, dir + "/config.cfg");
      return dispatch_precision(eff, [&]<class T>() {
        return run_analyze<T>(&ck, eff, false, layer_idx, dir);
      });
    }
    if (bench->parsed()) {
      const auto dir = make_run_dir(common.out_dir, "bench");
      save_config_file(cfg, dir + "/config.cfg");
      return dispatch_precision(cfg, [&]<class T>() { return run_bench<T>(cfg, dir); });
    }
    if (inspect->parsed()) {
      const auto ck = load_checkpoint(ck_path);
      const RunConfig eff = effective_config(ck, common);
      const auto dir = make_run_dir(common.out_dir, "inspect");
      save_config_file(eff, dir + "/config.cfg");
      return dispatch_precision(eff, [&]<class T>() {
        return run_inspect<T>(ck, eff, layer_idx, neuron, sample, zero_input, dir);
      });
    }
    if (fetch->parsed()) {
      fetch_mnist(cfg.mirror, cfg.data_dir);
      std::printf("fetched IDX files into %s\n", cfg.data_dir.c_str());
      return kExitOk;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return kExitOk;
}
