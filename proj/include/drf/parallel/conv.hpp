#pragma once

#include <cstddef>
#include <vector>

#include "drf/core/threading.hpp"
#include "drf/core/types.hpp"
#include "drf/dynamics/params.hpp"
#include "drf/parallel/kernel.hpp"

namespace drf {

// Time-parallel branch states via FFT convolution:
//   states[b,c,i,t] = sum_{k=0..t} K[i][k] * input[b,c,t-k].
// Zero padding to plan.size makes the convolution linear (strictly causal);
// equals the sequential recurrence up to floating-point noise.
template <class T>
ComplexStateSeq<T> fft_causal_conv(const RealSeq<T>& input,
                                   const ResonatorKernel<T>& kernel,
                                   const FftPlan<T>& plan) {
  DRF_CHECK(input.length == plan.signal_len, ShapeMismatch,
            "fft_causal_conv: input length does not match plan");
  DRF_CHECK(kernel.length == plan.signal_len, ShapeMismatch,
            "fft_causal_conv: kernel built for a different length");
  const std::size_t lanes = input.lanes();
  const std::size_t n = kernel.branches;
  const std::size_t len = input.length;
  const std::size_t m = plan.size;

  ComplexStateSeq<T> states(input.batch, input.channels, n, len);

  struct Scratch {
    std::vector<T> xr, xi, yr, yi;
  };
  std::vector<Scratch> scratch(thread_count());
  for (auto& s : scratch) {
    s.xr.resize(m);
    s.xi.resize(m);
    s.yr.resize(m);
    s.yi.resize(m);
  }

  parallel_for(lanes, [&](std::size_t lane, int worker) {
    auto& s = scratch[worker];
    fft_real_signal(plan, input.lane(lane), len, s.xr.data(), s.xi.data());
    const std::size_t b = lane / input.channels;
    const std::size_t c = lane % input.channels;
    for (std::size_t i = 0; i < n; ++i) {
      const T* kr = kernel.spec_re(i, m);
      const T* ki = kernel.spec_im(i, m);
      for (std::size_t j = 0; j < m; ++j) {
        s.yr[j] = kr[j] * s.xr[j] - ki[j] * s.xi[j];
        s.yi[j] = kr[j] * s.xi[j] + ki[j] * s.xr[j];
      }
      fft_inverse(plan, s.yr.data(), s.yi.data());
      std::copy(s.yr.begin(), s.yr.begin() + len, states.re_lane(b, c, i));
      std::copy(s.yi.begin(), s.yi.begin() + len, states.im_lane(b, c, i));
    }
  });
  return states;
}

// Convolutional form of the adaptive threshold. Pre-spikes are computed
// against the static base threshold, so the whole sequence is available at
// once:  P[t] = (H[t] - v_pre >= 0),
//        V_th[t] = v_pre + sum_{k=1..n_a} alpha_k * P[t-k]  (zero-padded),
//        S[t] = (H[t] - V_th[t] >= 0).
// Summation order matches the sequential step exactly, so V_th is bit-equal.
template <class T>
void parallel_threshold(const RealSeq<T>& h, const SomaParams<T>& s,
                        RealSeq<T>& v_th, SpikeTrain& spikes) {
  const std::size_t lanes = h.lanes();
  const std::size_t len = h.length;
  const std::size_t n_a = s.alpha.size();
  v_th = RealSeq<T>(h.batch, h.channels, len);
  spikes = SpikeTrain(h.batch, h.channels, len);

  std::vector<std::uint8_t> pre(len);
  for (std::size_t lane = 0; lane < lanes; ++lane) {
    const T* hrow = h.lane(lane);
    T* vrow = v_th.lane(lane);
    std::uint8_t* srow = spikes.v.data() + lane * len;
    for (std::size_t t = 0; t < len; ++t)
      pre[t] = hrow[t] - s.v_pre >= T(0) ? 1 : 0;
    for (std::size_t t = 0; t < len; ++t) {
      T v = s.v_pre;
      for (std::size_t k = 1; k <= n_a && k <= t; ++k)
        v += s.alpha[k - 1] * static_cast<T>(pre[t - k]);
      vrow[t] = v;
      srow[t] = hrow[t] - v >= T(0) ? 1 : 0;
    }
  }
}

template <class T>
struct ParallelForward {
  ComplexStateSeq<T> states;
  RealSeq<T> h;
  RealSeq<T> v_th;
  SpikeTrain spikes;
};

// Full time-parallel forward: kernel -> FFT convolution -> soma projection ->
// convolutional threshold. Matches drf_sequential_forward within
// floating-point tolerance; spike trains agree exactly away from ties.
template <class T>
ParallelForward<T> drf_parallel_forward(const RealSeq<T>& input,
                                        const DendriticParams<T>& p,
                                        const SomaParams<T>& s,
                                        const TimeGrid& grid,
                                        const FftPlan<T>& plan) {
  DRF_CHECK(s.c.size() == p.size(), ShapeMismatch,
            "drf_parallel_forward: soma weights must match branch count");
  const ResonatorKernel<T> kernel = build_kernel(p, grid, plan);
  ParallelForward<T> out;
  out.states = fft_causal_conv(input, kernel, plan);
  const std::size_t n = p.size();
  const std::size_t len = input.length;
  out.h = RealSeq<T>(input.batch, input.channels, len);
  for (std::size_t b = 0; b < input.batch; ++b) {
    for (std::size_t c = 0; c < input.channels; ++c) {
      T* hrow = out.h.row(b, c);
      for (std::size_t i = 0; i < n; ++i) {
        const T* zr = out.states.re_lane(b, c, i);
        const T ci = s.c[i];
        if (i == 0) {
          for (std::size_t t = 0; t < len; ++t) hrow[t] = ci * zr[t];
        } else {
          for (std::size_t t = 0; t < len; ++t) hrow[t] += ci * zr[t];
        }
      }
    }
  }
  parallel_threshold(out.h, s, out.v_th, out.spikes);
  return out;
}

}  // namespace drf
