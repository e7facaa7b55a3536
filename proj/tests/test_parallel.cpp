#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "drf/core/rng.hpp"
#include "drf/dynamics/sequential.hpp"
#include "drf/parallel/conv.hpp"

using namespace drf;

namespace {

DendriticParams<double> random_params(Rng& rng, std::size_t n) {
  std::vector<double> tau(n), omega(n), gamma(n);
  for (std::size_t i = 0; i < n; ++i) {
    tau[i] = rng.uniform(0.5, 60.0);
    omega[i] = rng.uniform(0.0, 3.0);
    gamma[i] = rng.uniform(-1.0, 1.0);
  }
  return {tau, omega, gamma};
}

// O(L^2) causal convolution oracle in long double.
void direct_conv(const std::vector<double>& x, const double* kr, const double* ki,
                 std::size_t len, std::vector<double>& out_re,
                 std::vector<double>& out_im) {
  out_re.assign(len, 0.0);
  out_im.assign(len, 0.0);
  for (std::size_t t = 0; t < len; ++t) {
    long double ar = 0, ai = 0;
    for (std::size_t k = 0; k <= t; ++k) {
      ar += static_cast<long double>(kr[k]) * x[t - k];
      ai += static_cast<long double>(ki[k]) * x[t - k];
    }
    out_re[t] = static_cast<double>(ar);
    out_im[t] = static_cast<double>(ai);
  }
}

}  // namespace

TEST_CASE("build_kernel: lag-zero tap equals gamma") {
  Rng rng(20);
  const auto p = random_params(rng, 5);
  const TimeGrid grid(0.7, 32);
  const FftPlan<double> plan(32);
  const auto k = build_kernel(p, grid, plan);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(k.taps_re(i)[0] == p.gamma[i]);
    CHECK(k.taps_im(i)[0] == 0.0);
  }
}

TEST_CASE("build_kernel: pure decay branch is a real geometric series") {
  const DendriticParams<double> p({1.0}, {0.0}, {1.0});
  const TimeGrid grid(1.0, 16);
  const FftPlan<double> plan(16);
  const auto k = build_kernel(p, grid, plan);
  for (std::size_t j = 0; j < 16; ++j) {
    CHECK(k.taps_re(0)[j] ==
          doctest::Approx(std::exp(-static_cast<double>(j))).epsilon(1e-12));
    CHECK(k.taps_im(0)[j] == 0.0);
  }
}

TEST_CASE("build_kernel: taps match closed form to 1e-12 relative at L=32768") {
  Rng rng(21);
  const std::size_t len = 32768;
  const auto p = random_params(rng, 2);
  const TimeGrid grid(0.31, len);
  const FftPlan<double> plan(len);
  const auto k = build_kernel(p, grid, plan);
  for (std::size_t i = 0; i < 2; ++i) {
    double max_rel = 0;
    for (std::size_t j = 0; j < len; ++j) {
      const long double decay =
          std::exp(-static_cast<long double>(j) * grid.delta / p.tau[i]);
      const long double phase = static_cast<long double>(j) * grid.delta * p.omega[i];
      const long double wr = p.gamma[i] * decay * std::cos(phase);
      const long double wi = p.gamma[i] * decay * std::sin(phase);
      const long double mag = std::max(std::hypot(wr, wi), 1e-300L);
      const long double err =
          std::hypot(k.taps_re(i)[j] - wr, k.taps_im(i)[j] - wi);
      max_rel = std::max(max_rel, static_cast<double>(err / mag));
    }
    CHECK(max_rel < 1e-12);
  }
}

TEST_CASE("build_kernel: geometric tap-magnitude decay per branch") {
  Rng rng(22);
  const auto p = random_params(rng, 3);
  const TimeGrid grid(1.0, 600);
  const FftPlan<double> plan(600);
  const auto k = build_kernel(p, grid, plan);
  for (std::size_t i = 0; i < 3; ++i) {
    const double ratio_want = std::exp(-grid.delta / p.tau[i]);
    for (std::size_t j = 0; j + 1 < 600; ++j) {
      const double a = std::hypot(k.taps_re(i)[j], k.taps_im(i)[j]);
      const double b = std::hypot(k.taps_re(i)[j + 1], k.taps_im(i)[j + 1]);
      if (a > 1e-280) CHECK(b / a == doctest::Approx(ratio_want).epsilon(1e-12));
    }
  }
}

TEST_CASE("fft_causal_conv: near-impulse kernel reproduces scaled input") {
  // tau -> 0 collapses the kernel to its lag-zero tap.
  const DendriticParams<double> p({1e-6}, {0.0}, {1.0});
  const std::size_t len = 64;
  const TimeGrid grid(1.0, len);
  const FftPlan<double> plan(len);
  const auto k = build_kernel(p, grid, plan);
  Rng rng(23);
  RealSequence x(1, 1, len);
  for (auto& v : x.v) v = rng.uniform(-1, 1);
  const auto states = fft_causal_conv(x, k, plan);
  for (std::size_t t = 0; t < len; ++t) {
    CHECK(states.re_lane(0, 0, 0)[t] == doctest::Approx(x.at(0, 0, t)).epsilon(1e-9));
    CHECK(std::abs(states.im_lane(0, 0, 0)[t]) < 1e-12);
  }
}

TEST_CASE("fft_causal_conv: matches direct quadratic sum at L=257") {
  Rng rng(24);
  const std::size_t len = 257;
  const auto p = random_params(rng, 3);
  const TimeGrid grid(1.0, len);
  const FftPlan<double> plan(len);
  const auto k = build_kernel(p, grid, plan);
  RealSequence x(1, 1, len);
  for (auto& v : x.v) v = rng.uniform(-1, 1);
  const auto states = fft_causal_conv(x, k, plan);
  std::vector<double> xs(x.v.begin(), x.v.end());
  for (std::size_t i = 0; i < 3; ++i) {
    std::vector<double> rr, ri;
    direct_conv(xs, k.taps_re(i), k.taps_im(i), len, rr, ri);
    double err = 0;
    for (std::size_t t = 0; t < len; ++t) {
      err = std::max(err, std::abs(states.re_lane(0, 0, i)[t] - rr[t]));
      err = std::max(err, std::abs(states.im_lane(0, 0, i)[t] - ri[t]));
    }
    CHECK(err < 1e-9);
  }
}

TEST_CASE("fft_causal_conv: no wraparound across lengths") {
  Rng rng(25);
  for (std::size_t len : {3ul, 64ul, 257ul, 1024ul, 4097ul}) {
    const auto p = random_params(rng, 1);
    const TimeGrid grid(1.0, len);
    const FftPlan<double> plan(len);
    const auto k = build_kernel(p, grid, plan);
    RealSequence x(1, 1, len);
    for (auto& v : x.v) v = rng.uniform(-1, 1);
    const auto states = fft_causal_conv(x, k, plan);
    std::vector<double> xs(x.v.begin(), x.v.end());
    std::vector<double> rr, ri;
    direct_conv(xs, k.taps_re(0), k.taps_im(0), len, rr, ri);
    double err = 0;
    for (std::size_t t = 0; t < len; ++t) {
      err = std::max(err, std::abs(states.re_lane(0, 0, 0)[t] - rr[t]));
      err = std::max(err, std::abs(states.im_lane(0, 0, 0)[t] - ri[t]));
    }
    CHECK(err < 1e-9);
  }
}

TEST_CASE("fft_causal_conv: matches sequential charge states at L=1024") {
  Rng rng(26);
  const std::size_t len = 1024;
  const auto p = random_params(rng, 4);
  SomaParams<double> s({1, 1, 1, 1}, 1.0, {});
  const TimeGrid grid(1.0, len);
  const FftPlan<double> plan(len);
  const auto k = build_kernel(p, grid, plan);
  RealSequence x(2, 2, len);
  for (auto& v : x.v) v = rng.uniform(-1, 1);
  const auto par = fft_causal_conv(x, k, plan);
  const auto seq = drf_sequential_forward(x, p, s, grid);
  double err = 0;
  for (std::size_t i = 0; i < par.re.size(); ++i) {
    err = std::max(err, std::abs(par.re[i] - seq.states.re[i]));
    err = std::max(err, std::abs(par.im[i] - seq.states.im[i]));
  }
  CHECK(err < 1e-8);
}

TEST_CASE("causality: future input never affects past output") {
  Rng rng(27);
  const std::size_t len = 128, cut = 41;
  const auto p = random_params(rng, 2);
  const TimeGrid grid(1.0, len);
  const FftPlan<double> plan(len);
  const auto k = build_kernel(p, grid, plan);
  RealSequence a(1, 1, len), b(1, 1, len);
  for (std::size_t t = 0; t < len; ++t) {
    a.at(0, 0, t) = rng.uniform(-1, 1);
    b.at(0, 0, t) = t < cut ? a.at(0, 0, t) : rng.uniform(-1, 1);
  }
  const auto sa = fft_causal_conv(a, k, plan);
  const auto sb = fft_causal_conv(b, k, plan);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t t = 0; t < cut; ++t) {
      CHECK(sa.re_lane(0, 0, i)[t] == doctest::Approx(sb.re_lane(0, 0, i)[t]).epsilon(1e-12));
      CHECK(sa.im_lane(0, 0, i)[t] == doctest::Approx(sb.im_lane(0, 0, i)[t]).epsilon(1e-12));
    }
  }
}

TEST_CASE("parallel_threshold: all-subthreshold means no pre-spikes or spikes") {
  SomaParams<double> s({1.0}, 1.0, {0.5, 0.25});
  RealSeq<double> h(1, 1, 32);
  for (auto& v : h.v) v = 0.5;
  RealSeq<double> vth;
  SpikeTrain spikes;
  parallel_threshold(h, s, vth, spikes);
  CHECK(spikes.count() == 0);
  for (double v : vth.v) CHECK(v == 1.0);
}

TEST_CASE("parallel_threshold: single pre-spike kernel readback") {
  SomaParams<double> s({1.0}, 1.0, {0.3, 0.2, 0.1});
  const std::size_t len = 12;
  RealSeq<double> h(1, 1, len);
  for (auto& v : h.v) v = 0.0;
  h.at(0, 0, 5) = 1.5;  // one pre-spike at t=5
  RealSeq<double> vth;
  SpikeTrain spikes;
  parallel_threshold(h, s, vth, spikes);
  CHECK(vth.at(0, 0, 6) == doctest::Approx(1.3).epsilon(1e-15));
  CHECK(vth.at(0, 0, 7) == doctest::Approx(1.2).epsilon(1e-15));
  CHECK(vth.at(0, 0, 8) == doctest::Approx(1.1).epsilon(1e-15));
  for (std::size_t t = 0; t < len; ++t) {
    if (t != 6 && t != 7 && t != 8) CHECK(vth.at(0, 0, t) == 1.0);
  }
}

TEST_CASE("parallel_threshold: exact spike equality with sequential loop") {
  Rng rng(28);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n_a = rng.uniform_int(9);  // 0..8
    std::vector<double> alpha(n_a);
    for (auto& a : alpha) a = rng.uniform(0.05, 0.95);
    SomaParams<double> s({1.0}, 1.0, alpha);
    const std::size_t len = 200;
    RealSeq<double> h(1, 1, len);
    for (auto& v : h.v) v = rng.uniform(0.0, 2.0);

    RealSeq<double> vth;
    SpikeTrain spikes;
    parallel_threshold(h, s, vth, spikes);

    // Sequential loop reference.
    std::vector<std::uint8_t> pre(len);
    for (std::size_t t = 0; t < len; ++t) {
      double v = s.v_pre;
      for (std::size_t k = 1; k <= n_a && k <= t; ++k)
        v += alpha[k - 1] * pre[t - k];
      pre[t] = h.at(0, 0, t) - s.v_pre >= 0 ? 1 : 0;
      CHECK(vth.at(0, 0, t) == v);
      CHECK(spikes.at(0, 0, t) == (h.at(0, 0, t) - v >= 0 ? 1 : 0));
    }
  }
}

TEST_CASE("drf_parallel_forward: zero input emits nothing") {
  Rng rng(29);
  const auto p = random_params(rng, 4);
  SomaParams<double> s({0.5, 0.5, -0.5, 0.2}, 1.0, {0.4});
  const std::size_t len = 100;
  RealSequence x(1, 2, len);
  const TimeGrid grid(1.0, len);
  const FftPlan<double> plan(len);
  const auto out = drf_parallel_forward(x, p, s, grid, plan);
  CHECK(out.spikes.count() == 0);
}

TEST_CASE("drf_parallel_forward: spike equality with sequential at L=784") {
  Rng rng(30);
  for (int trial = 0; trial < 8; ++trial) {
    const std::size_t n = 1 + rng.uniform_int(6);
    auto p = random_params(rng, n);
    std::vector<double> c(n);
    for (auto& v : c) v = rng.uniform(-1, 1);
    SomaParams<double> s(c, 1.0, {0.5, 0.3, 0.2});
    const std::size_t len = 784;
    RealSequence x(1, 1, len);
    for (auto& v : x.v) v = rng.uniform(-2, 2);
    const TimeGrid grid(1.0, len);
    const FftPlan<double> plan(len);
    const auto par = drf_parallel_forward(x, p, s, grid, plan);
    const auto seq = drf_sequential_forward(x, p, s, grid);
    for (std::size_t i = 0; i < par.h.v.size(); ++i) {
      if (std::abs(seq.h.v[i] - seq.v_th.v[i]) > 1e-6)
        CHECK(par.spikes.v[i] == seq.spikes.v[i]);
    }
    double err = 0;
    for (std::size_t i = 0; i < par.states.re.size(); ++i)
      err = std::max(err, std::abs(par.states.re[i] - seq.states.re[i]));
    CHECK(err < 1e-8);
  }
}

TEST_CASE("precision policy: f32 states within 1e-3 of f64 sequential at L=4096") {
  Rng rng(31);
  const std::size_t len = 4096, n = 4;
  std::vector<double> tau(n), omega(n), gamma(n);
  for (std::size_t i = 0; i < n; ++i) {
    tau[i] = rng.uniform(1.0, 100.0);
    omega[i] = rng.uniform(0.0, 2.5);
    gamma[i] = rng.uniform(-0.5, 0.5);
  }
  const DendriticParams<double> p64(tau, omega, gamma);
  const DendriticParams<float> p32(
      std::vector<float>(tau.begin(), tau.end()),
      std::vector<float>(omega.begin(), omega.end()),
      std::vector<float>(gamma.begin(), gamma.end()));
  SomaParams<double> s64({1, 1, 1, 1}, 1.0, {});

  RealSequence x64(1, 1, len);
  RealSeq<float> x32(1, 1, len);
  for (std::size_t t = 0; t < len; ++t) {
    const double v = rng.uniform(-1, 1);
    x64.at(0, 0, t) = v;
    x32.at(0, 0, t) = static_cast<float>(v);
  }
  const TimeGrid grid(1.0, len);
  const FftPlan<float> plan32(len);
  const auto k32 = build_kernel(p32, grid, plan32);
  const auto st32 = fft_causal_conv(x32, k32, plan32);
  const auto seq64 = drf_sequential_forward(x64, p64, s64, grid);
  double err = 0;
  for (std::size_t i = 0; i < st32.re.size(); ++i) {
    err = std::max(err, std::abs(static_cast<double>(st32.re[i]) - seq64.states.re[i]));
    err = std::max(err, std::abs(static_cast<double>(st32.im[i]) - seq64.states.im[i]));
  }
  CHECK(err <= 1e-3);
}
