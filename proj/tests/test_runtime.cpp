#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>

#include "drf/autograd/engine.hpp"
#include "drf/tasks/task.hpp"

// Wall-clock properties of the two execution paths. Margins are wide (the
// comparisons below hold by 3-8x on a 2-core VM), but these are still timing
// tests; each measurement takes the best of three runs to shrug off
// scheduler noise.

using namespace drf;

namespace {

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

template <class Fn>
double best_of(int reps, Fn&& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const double t0 = now_ms();
    fn();
    best = std::min(best, now_ms() - t0);
  }
  return best;
}

struct Bench {
  Model<double> model;
  EngineCache<double> cache;
  RealSequence inputs;
  std::vector<int> labels;
};

Bench make_bench(std::size_t length, int neurons, int branches, int batch) {
  RunConfig cfg;
  cfg.length = static_cast<int>(length);
  cfg.hidden = {neurons};
  cfg.branches = branches;
  cfg.classes = 4;
  Rng root(1);
  Rng init = root.fork(1000);
  Bench b{make_model<double>(cfg, 1, 4, length, init),
          {},
          RealSequence(batch, 1, length),
          {}};
  Rng data(3);
  for (auto& v : b.inputs.v) v = data.uniform(-1, 1);
  b.labels.resize(batch);
  for (int i = 0; i < batch; ++i) b.labels[i] = i % 4;
  return b;
}

}  // namespace

TEST_CASE("runtime: time-parallel forward beats step-by-step at L=16384") {
  auto b = make_bench(16384, 32, 4, 2);
  Tape<double> tape;
  forward_pass(b.model, b.cache, b.inputs, b.labels, Mode::parallel, tape);
  const double par = best_of(3, [&] {
    forward_pass(b.model, b.cache, b.inputs, b.labels, Mode::parallel, tape);
  });
  forward_pass(b.model, b.cache, b.inputs, b.labels, Mode::sequential, tape);
  const double seq = best_of(3, [&] {
    forward_pass(b.model, b.cache, b.inputs, b.labels, Mode::sequential, tape);
  });
  INFO("parallel ", par, " ms vs sequential ", seq, " ms");
  CHECK(par < seq);
}

TEST_CASE("runtime: parallel backward beats the BPTT oracle at L=512") {
  auto b = make_bench(512, 32, 4, 4);
  Tape<double> tape;
  forward_pass(b.model, b.cache, b.inputs, b.labels, Mode::parallel, tape);
  const double par = best_of(3, [&] {
    backward_pass(b.model, b.cache, tape, b.labels);
  });
  bptt_reference_grad(b.model, b.cache, b.inputs, b.labels);
  const double oracle = best_of(3, [&] {
    bptt_reference_grad(b.model, b.cache, b.inputs, b.labels);
  });
  INFO("parallel backward ", par, " ms vs BPTT oracle ", oracle, " ms");
  CHECK(par < oracle);
}

TEST_CASE("runtime: scaling slopes of both paths") {
  // Parallel forward stays close to linear (O(L log L)); the sequential
  // reference is at least linear per step.
  const std::size_t lens[] = {1024, 4096, 16384};
  std::vector<double> par_ms, seq_ms;
  for (const std::size_t len : lens) {
    auto b = make_bench(len, 32, 4, 2);
    Tape<double> tape;
    forward_pass(b.model, b.cache, b.inputs, b.labels, Mode::parallel, tape);
    par_ms.push_back(best_of(3, [&] {
      forward_pass(b.model, b.cache, b.inputs, b.labels, Mode::parallel, tape);
    }));
    forward_pass(b.model, b.cache, b.inputs, b.labels, Mode::sequential, tape);
    seq_ms.push_back(best_of(3, [&] {
      forward_pass(b.model, b.cache, b.inputs, b.labels, Mode::sequential, tape);
    }));
  }
  auto slope = [&](const std::vector<double>& ms) {
    return std::log(ms.back() / ms.front()) /
           std::log(static_cast<double>(lens[2]) / lens[0]);
  };
  INFO("parallel slope ", slope(par_ms), " sequential slope ", slope(seq_ms));
  CHECK(slope(par_ms) < 1.25);
  CHECK(slope(seq_ms) >= 0.95);
}
