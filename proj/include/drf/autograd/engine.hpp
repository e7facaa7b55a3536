#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "drf/autograd/ops.hpp"
#include "drf/autograd/surrogate.hpp"
#include "drf/core/threading.hpp"
#include "drf/core/types.hpp"
#include "drf/parallel/conv.hpp"
#include "drf/trainer/model.hpp"

namespace drf {

enum class Mode { sequential, parallel };

// Per-(version, length) caches: the transform plan, each layer's branch
// kernel bank, the fused soma kernel k_H[k] = sum_i c_i * Re K_i[k], and
// reusable work buffers. H = k_H (*) I collapses the branch convolution and
// soma projection into one real convolution per lane; branch states are only
// materialized on the verification path (fft_causal_conv), never while
// training. Buffers persist across steps so steady-state training does not
// touch the allocator.
template <class T>
struct EngineCache {
  std::size_t length = 0;
  std::uint64_t version = ~0ull;
  FftPlan<T> plan{1};

  struct LayerKernels {
    ResonatorKernel<T> bank;
    std::vector<T> fused_taps;          // (L)
    std::vector<T> fused_re, fused_im;  // spectrum (M)
  };
  std::vector<LayerKernels> layers;

  // Scratch reused across calls.
  RealSeq<T> r, grad_r, grad_h, grad_q, gs_a, gs_b;
  std::vector<std::vector<T>> work;  // per-(worker, slot) M-sized buffers

  // Slots are preallocated on the calling thread; wbuf itself must stay
  // allocation-free because workers call it concurrently.
  T* wbuf(int worker, int slot) {
    return work[static_cast<std::size_t>(worker) * 8 + slot].data();
  }

  void ensure(const Model<T>& m, std::size_t len) {
    if (length != len) plan = FftPlan<T>(len);
    const std::size_t want = static_cast<std::size_t>(thread_count()) * 8;
    if (work.size() < want) work.resize(want);
    for (auto& buf : work)
      if (buf.size() < plan.size) buf.resize(plan.size);
    if (length == len && version == m.version &&
        layers.size() == m.layers.size())
      return;
    length = len;
    version = m.version;
    const TimeGrid grid(m.delta, len);
    layers.resize(m.layers.size());
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
      auto& entry = layers[l];
      entry.bank = build_kernel(m.dendrites(l), grid, plan);
      const auto& c = m.layers[l].c;
      entry.fused_taps.assign(len, T(0));
      for (std::size_t i = 0; i < m.branches; ++i) {
        const T* kr = entry.bank.taps_re(i);
        for (std::size_t k = 0; k < len; ++k)
          entry.fused_taps[k] += c[i] * kr[k];
      }
      entry.fused_re.resize(plan.size);
      entry.fused_im.resize(plan.size);
      fft_real_signal(plan, entry.fused_taps.data(), len, entry.fused_re.data(),
                      entry.fused_im.data());
    }
  }
};

template <class T>
struct LayerTape {
  // Parallel mode works on the input-channel side: the layer-shared fused
  // kernel commutes with the dense projection, H = W * (k_H (*) x), so the
  // transforms run over C_in lanes rather than N neuron lanes.
  std::vector<T> xspec_re, xspec_im;  // (B*C_in, M) input spectra (parallel)
  RealSeq<T> filtered;                // q = k_H (*) x, (B, C_in, L) (parallel)
  RealSeq<T> current;                 // I = W*x (sequential mode)
  ComplexStateSeq<T> states;          // branch states (sequential mode)
  RealSeq<T> h, v_th;
  RealSeq<T> spikes;                  // emitted values: 0/1, or smoothed
  std::vector<std::uint8_t> pre;      // (lanes*L) pre-spike bits
  std::size_t spike_count = 0;        // hard-rule spikes (telemetry)
};

template <class T>
struct ReadoutTape {
  RealSeq<T> y;           // integrator outputs (B, K, L)
  std::vector<T> scores;  // (B*K)
  std::vector<T> probs;   // (B*K)
};

template <class T>
struct Tape {
  Mode mode = Mode::parallel;
  RealSeq<T> input;  // copy of the batch input
  std::vector<LayerTape<T>> layers;
  ReadoutTape<T> readout;
};

template <class T>
struct ForwardStats {
  T loss = T(0);
  double accuracy = 0.0;
  std::vector<double> layer_spike_rate;
  std::vector<std::size_t> layer_spike_count;
};

namespace engine_detail {

constexpr std::size_t kTimeTile = 1024;

// I = W * X over the time axis, tiled so the input tile stays cached across
// output rows. Per element the channel sum runs ascending, so results do not
// depend on the tiling or the thread count.
template <class T>
void dense_forward(const std::vector<T>& w, std::size_t out_w, std::size_t in_w,
                   const RealSeq<T>& x, RealSeq<T>& out) {
  const std::size_t len = x.length;
  const std::size_t ntiles = (len + kTimeTile - 1) / kTimeTile;
  parallel_for(x.batch * ntiles, [&](std::size_t item, int) {
    const std::size_t b = item / ntiles;
    const std::size_t t0 = (item % ntiles) * kTimeTile;
    const std::size_t span = std::min(len, t0 + kTimeTile) - t0;
    for (std::size_t nu = 0; nu < out_w; ++nu) {
      T* __restrict row = out.row(b, nu) + t0;
      const T* wrow = w.data() + nu * in_w;
      const T w0 = wrow[0];
      const T* __restrict x0 = x.row(b, 0) + t0;
      for (std::size_t t = 0; t < span; ++t) row[t] = w0 * x0[t];
      for (std::size_t c = 1; c < in_w; ++c) {
        const T wv = wrow[c];
        const T* __restrict xr = x.row(b, c) + t0;
        for (std::size_t t = 0; t < span; ++t) row[t] += wv * xr[t];
      }
    }
  });
}

// dX = W^T * dI, same tiling.
template <class T>
void dense_backward_input(const std::vector<T>& w, std::size_t out_w,
                          std::size_t in_w, const RealSeq<T>& grad_out,
                          RealSeq<T>& grad_in) {
  const std::size_t len = grad_out.length;
  const std::size_t ntiles = (len + kTimeTile - 1) / kTimeTile;
  parallel_for(grad_out.batch * ntiles, [&](std::size_t item, int) {
    const std::size_t b = item / ntiles;
    const std::size_t t0 = (item % ntiles) * kTimeTile;
    const std::size_t span = std::min(len, t0 + kTimeTile) - t0;
    for (std::size_t c = 0; c < in_w; ++c) {
      T* __restrict row = grad_in.row(b, c) + t0;
      const T w0 = w[c];
      const T* __restrict g0 = grad_out.row(b, 0) + t0;
      for (std::size_t t = 0; t < span; ++t) row[t] = w0 * g0[t];
      for (std::size_t nu = 1; nu < out_w; ++nu) {
        const T wv = w[nu * in_w + c];
        const T* __restrict grow = grad_out.row(b, nu) + t0;
        for (std::size_t t = 0; t < span; ++t) row[t] += wv * grow[t];
      }
    }
  });
}

// gW += sum_b dI_b * X_b^T. Each worker owns a block of weight rows, so the
// accumulation order over (b, tile, t) is fixed for a given shape.
template <class T>
void dense_backward_weights(const RealSeq<T>& grad_out, const RealSeq<T>& x,
                            std::size_t out_w, std::size_t in_w,
                            std::vector<T>& grad_w) {
  const std::size_t len = x.length;
  constexpr std::size_t kRowTile = 16;
  const std::size_t ntasks = (out_w + kRowTile - 1) / kRowTile;
  parallel_for(ntasks, [&](std::size_t task, int) {
    const std::size_t nu0 = task * kRowTile;
    const std::size_t nu1 = std::min(out_w, nu0 + kRowTile);
    for (std::size_t b = 0; b < x.batch; ++b) {
      for (std::size_t t0 = 0; t0 < len; t0 += kTimeTile) {
        const std::size_t span = std::min(len, t0 + kTimeTile) - t0;
        for (std::size_t nu = nu0; nu < nu1; ++nu) {
          const T* __restrict g = grad_out.row(b, nu) + t0;
          T* __restrict gw = grad_w.data() + nu * in_w;
          for (std::size_t c = 0; c < in_w; ++c) {
            const T* __restrict xr = x.row(b, c) + t0;
            T acc = T(0);
            for (std::size_t t = 0; t < span; ++t) acc += g[t] * xr[t];
            gw[c] += acc;
          }
        }
      }
    }
  });
}

// Shared threshold/spike emission over a soma-potential sequence. Pre-spikes
// are always hard (they gate the threshold only); the emitted value follows
// the hard rule, or the smoothed step in smooth-spike mode.
template <class T>
void apply_threshold(const Model<T>& m, const SomaParams<T>& soma,
                     const RealSeq<T>& h, LayerTape<T>& tape,
                     EngineCache<T>& cache) {
  const std::size_t lanes = h.lanes();
  const std::size_t len = h.length;
  const std::size_t n_a = soma.alpha.size();
  tape.v_th.ensure(h.batch, h.channels, len);
  tape.spikes.ensure(h.batch, h.channels, len);
  tape.pre.resize(lanes * len);
  std::vector<std::size_t> lane_counts(lanes, 0);
  parallel_for(lanes, [&](std::size_t lane, int worker) {
    const T* __restrict hrow = h.lane(lane);
    T* __restrict vrow = tape.v_th.lane(lane);
    T* __restrict srow = tape.spikes.lane(lane);
    std::uint8_t* __restrict pre = tape.pre.data() + lane * len;
    T* __restrict pre_t = cache.wbuf(worker, 0);
    const T v_pre = soma.v_pre;
    for (std::size_t t = 0; t < len; ++t) {
      const bool on = hrow[t] - v_pre >= T(0);
      pre[t] = on ? 1 : 0;
      pre_t[t] = on ? T(1) : T(0);
    }
    // Shifted-axpy threshold accumulation; per element the kernel taps are
    // added in ascending k, matching the per-step loop bit for bit.
    std::fill(vrow, vrow + len, v_pre);
    for (std::size_t k = 1; k <= n_a; ++k) {
      const T a = soma.alpha[k - 1];
      T* __restrict vr = vrow + k;
      const T* __restrict ps = pre_t;
      for (std::size_t t = 0; t + k < len; ++t) vr[t] += a * ps[t];
    }
    std::size_t count = 0;
    for (std::size_t t = 0; t < len; ++t) {
      const bool fired = hrow[t] - vrow[t] >= T(0);
      count += fired ? 1 : 0;
      srow[t] = fired ? T(1) : T(0);
    }
    if (m.smooth_spikes) {
      for (std::size_t t = 0; t < len; ++t)
        srow[t] = smooth_spike(hrow[t] - vrow[t], m.surrogate);
    }
    lane_counts[lane] = count;
  });
  tape.spike_count = 0;
  for (const auto c : lane_counts) tape.spike_count += c;
}

}  // namespace engine_detail

// Runs the full network forward in the requested mode, recording everything
// the matching backward rule needs. Returns loss (softmax cross-entropy over
// time-mean integrator scores), accuracy and per-layer spike telemetry.
template <class T>
ForwardStats<T> forward_pass(const Model<T>& m, EngineCache<T>& cache,
                             const RealSeq<T>& inputs,
                             const std::vector<int>& labels, Mode mode,
                             Tape<T>& tape) {
  DRF_CHECK(inputs.channels == m.input_channels, ShapeMismatch,
            "forward_pass: input channel count does not match model");
  DRF_CHECK(labels.size() == inputs.batch, ShapeMismatch,
            "forward_pass: label count does not match batch");
  const std::size_t len = inputs.length;
  const std::size_t batch = inputs.batch;
  cache.ensure(m, len);

  tape.mode = mode;
  tape.input = inputs;
  tape.layers.resize(m.layers.size());

  ForwardStats<T> stats;
  const RealSeq<T>* x = &tape.input;
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const auto& layer = m.layers[l];
    auto& lt = tape.layers[l];
    const std::size_t width = layer.out_width;

    const auto soma = m.soma(l);
    lt.h.ensure(batch, width, len);
    if (mode == Mode::parallel) {
      // Channel-side evaluation: q_c = k_H (*) x_c, then H = W * q.
      const std::size_t msize = cache.plan.size;
      const std::size_t in_lanes = batch * layer.in_width;
      lt.xspec_re.resize(in_lanes * msize);
      lt.xspec_im.resize(in_lanes * msize);
      lt.filtered.ensure(batch, layer.in_width, len);
      const auto& kern = cache.layers[l];
      parallel_for(in_lanes, [&](std::size_t lane, int worker) {
        T* sr = lt.xspec_re.data() + lane * msize;
        T* si = lt.xspec_im.data() + lane * msize;
        fft_real_signal(cache.plan, x->lane(lane), len, sr, si);
        T* __restrict yr = cache.wbuf(worker, 0);
        T* __restrict yi = cache.wbuf(worker, 1);
        const T* __restrict kr = kern.fused_re.data();
        const T* __restrict ki = kern.fused_im.data();
        for (std::size_t j = 0; j < msize; ++j) {
          yr[j] = sr[j] * kr[j] - si[j] * ki[j];
          yi[j] = sr[j] * ki[j] + si[j] * kr[j];
        }
        fft_inverse(cache.plan, yr, yi);
        std::copy(yr, yr + len, lt.filtered.lane(lane));
      });
      engine_detail::dense_forward(layer.w, width, layer.in_width, lt.filtered,
                                   lt.h);
    } else {
      // Step-by-step reference dynamics; keeps states and currents for the
      // reverse-time unroll.
      lt.current.ensure(batch, width, len);
      engine_detail::dense_forward(layer.w, width, layer.in_width, *x,
                                   lt.current);
      const auto dendrites = m.dendrites(l);
      const std::size_t n = m.branches;
      lt.states.ensure(batch, width, n, len);
      std::vector<T> er(n), ei(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto e = dendrites.transition(i, static_cast<T>(m.delta));
        er[i] = e.real();
        ei[i] = e.imag();
      }
      parallel_for(batch * width, [&](std::size_t lane, int) {
        const std::size_t b = lane / width;
        const std::size_t nu = lane % width;
        const T* in_row = lt.current.row(b, nu);
        T* hrow = lt.h.row(b, nu);
        std::vector<T> ur(n, T(0)), vi(n, T(0));
        for (std::size_t t = 0; t < len; ++t) {
          T h = T(0);
          for (std::size_t i = 0; i < n; ++i) {
            const T u = ur[i], v = vi[i];
            ur[i] = er[i] * u - ei[i] * v + dendrites.gamma[i] * in_row[t];
            vi[i] = ei[i] * u + er[i] * v;
            lt.states.re_lane(b, nu, i)[t] = ur[i];
            lt.states.im_lane(b, nu, i)[t] = vi[i];
            h += soma.c[i] * ur[i];
          }
          hrow[t] = h;
        }
      });
    }

    engine_detail::apply_threshold(m, soma, lt.h, lt, cache);
    stats.layer_spike_count.push_back(lt.spike_count);
    stats.layer_spike_rate.push_back(static_cast<double>(lt.spike_count) /
                                     static_cast<double>(batch * width * len));
    x = &lt.spikes;
  }

  // Readout: dense onto class lanes, leaky integration, time-mean scores.
  const std::size_t classes = m.readout.classes;
  auto& rt = tape.readout;
  RealSeq<T>& r = cache.r;
  r.ensure(batch, classes, len);
  engine_detail::dense_forward(m.readout.w, classes, m.readout.in_width, *x, r);
  rt.y.ensure(batch, classes, len);
  const auto decay = m.readout_decay();
  rt.scores.assign(batch * classes, T(0));
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t k = 0; k < classes; ++k) {
      const T a = decay[k];
      const T* __restrict rrow = r.row(b, k);
      T* __restrict yrow = rt.y.row(b, k);
      T acc = T(0);
      T y = T(0);
      for (std::size_t t = 0; t < len; ++t) {
        y = a * y + rrow[t];
        yrow[t] = y;
        acc += y;
      }
      rt.scores[b * classes + k] = acc / static_cast<T>(len);
    }
  }

  // Softmax cross-entropy, numerically stable.
  rt.probs.assign(batch * classes, T(0));
  T loss = T(0);
  std::size_t correct = 0;
  for (std::size_t b = 0; b < batch; ++b) {
    const T* sc = rt.scores.data() + b * classes;
    T mx = sc[0];
    std::size_t arg = 0;
    for (std::size_t k = 1; k < classes; ++k)
      if (sc[k] > mx) {
        mx = sc[k];
        arg = k;
      }
    T z = T(0);
    for (std::size_t k = 0; k < classes; ++k) z += std::exp(sc[k] - mx);
    const T logz = std::log(z) + mx;
    for (std::size_t k = 0; k < classes; ++k)
      rt.probs[b * classes + k] = std::exp(sc[k] - logz);
    loss += logz - sc[labels[b]];
    correct += (static_cast<int>(arg) == labels[b]) ? 1 : 0;
  }
  stats.loss = loss / static_cast<T>(batch);
  stats.accuracy = static_cast<double>(correct) / static_cast<double>(batch);
  DRF_CHECK(std::isfinite(static_cast<double>(stats.loss)), NonFinite,
            "forward_pass: non-finite loss");
  return stats;
}

namespace engine_detail {

// Loss + readout backward, shared by both modes. Fills dS over the last
// spike layer and accumulates readout parameter gradients.
template <class T>
void readout_backward(const Model<T>& m, EngineCache<T>& cache,
                      const Tape<T>& tape, const std::vector<int>& labels,
                      const RealSeq<T>& last_spikes, RealSeq<T>& grad_spikes,
                      GradientSet<T>& grads) {
  const std::size_t batch = last_spikes.batch;
  const std::size_t classes = m.readout.classes;
  const std::size_t len = last_spikes.length;
  const auto decay = m.readout_decay();

  RealSeq<T>& grad_r = cache.grad_r;
  grad_r.ensure(batch, classes, len);
  std::vector<T>& g_w = grads.slots[grads.slots.size() - 2];
  std::vector<T>& g_tau = grads.slots[grads.slots.size() - 1];

  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t k = 0; k < classes; ++k) {
      const T target = static_cast<int>(k) == labels[b] ? T(1) : T(0);
      const T dscore = (tape.readout.probs[b * classes + k] - target) /
                       static_cast<T>(batch);
      const T dy = dscore / static_cast<T>(len);
      const T a = decay[k];
      const T* __restrict yrow = tape.readout.y.row(b, k);
      T* __restrict grow = grad_r.row(b, k);
      T lam = T(0);
      T ga = T(0);
      for (std::size_t t = len; t-- > 0;) {
        lam = dy + a * lam;
        grow[t] = lam;
        ga += lam * (t > 0 ? yrow[t - 1] : T(0));
      }
      // a = exp(-delta/tau): da/dtau = a * delta / tau^2, then softplus chain.
      const T tau = reparam::tau_of_raw(m.readout.tau_raw[k]);
      const T dtau = ga * a * static_cast<T>(m.delta) / (tau * tau);
      g_tau[k] += dtau * reparam::dtau_draw(m.readout.tau_raw[k]);
    }
  }
  dense_backward_weights(grad_r, last_spikes, classes, m.readout.in_width, g_w);
  dense_backward_input(m.readout.w, classes, m.readout.in_width, grad_r,
                       grad_spikes);
}

}  // namespace engine_detail

// Reverse pass matching the tape's mode. Parallel tapes run the FFT adjoint
// (correlations against cached spectra); sequential tapes run explicit
// reverse-time unrolling. Both follow the same detached-threshold convention,
// so their gradients agree to floating-point accuracy.
template <class T>
GradientSet<T> backward_pass(const Model<T>& m, EngineCache<T>& cache,
                             const Tape<T>& tape, const std::vector<int>& labels) {
  auto grads = GradientSet<T>::zeros_like(const_cast<Model<T>&>(m));
  const std::size_t len = tape.input.length;
  const std::size_t batch = tape.input.batch;
  const std::size_t n = m.branches;
  const std::size_t msize = cache.plan.size;
  const TimeGrid grid(m.delta, len);

  const RealSeq<T>& last_spikes = tape.layers.back().spikes;
  RealSeq<T>* gs_in = &cache.gs_a;
  RealSeq<T>* gs_out = &cache.gs_b;
  gs_in->ensure(batch, m.layers.back().out_width, len);
  engine_detail::readout_backward(m, cache, tape, labels, last_spikes, *gs_in,
                                  grads);

  for (std::size_t l = m.layers.size(); l-- > 0;) {
    const auto& layer = m.layers[l];
    const auto& lt = tape.layers[l];
    const std::size_t width = layer.out_width;
    const std::size_t lanes = batch * width;
    const auto soma = m.soma(l);
    const auto dendrites = m.dendrites(l);

    std::vector<T>& g_w = grads.slots[6 * l + 0];
    std::vector<T>& g_tau_raw = grads.slots[6 * l + 1];
    std::vector<T>& g_omega_raw = grads.slots[6 * l + 2];
    std::vector<T>& g_gamma = grads.slots[6 * l + 3];
    std::vector<T>& g_c = grads.slots[6 * l + 4];
    std::vector<T>& g_alpha_raw = grads.slots[6 * l + 5];

    // Surrogate spike rule; V_th detached.
    RealSeq<T>& grad_h = cache.grad_h;
    grad_h.ensure(batch, width, len);
    spike_backward_into(*gs_in, lt.h, lt.v_th, m.surrogate, grad_h);

    if (m.train_alpha && m.window > 0) {
      // Straight-through path into the threshold kernel: V_th depends on
      // alpha linearly through frozen pre-spike bits.
      for (std::size_t lane = 0; lane < lanes; ++lane) {
        const T* gh = grad_h.lane(lane);
        const std::uint8_t* pre = lt.pre.data() + lane * len;
        for (std::size_t k = 1; k <= m.window; ++k) {
          T acc = T(0);
          for (std::size_t t = k; t < len; ++t)
            acc -= gh[t] * static_cast<T>(pre[t - k]);
          g_alpha_raw[k - 1] +=
              acc * reparam::dalpha_draw(layer.alpha_raw[k - 1]);
        }
      }
    }

    if (tape.mode == Mode::parallel) {
      // Dense adjoint first: dq = W^T dH, gW += dH q^T. The remaining chain
      // runs on the channel side against the cached input spectra.
      RealSeq<T>& grad_q = cache.grad_q;
      grad_q.ensure(batch, layer.in_width, len);
      engine_detail::dense_backward_input(layer.w, width, layer.in_width, grad_h,
                                          grad_q);
      engine_detail::dense_backward_weights(grad_h, lt.filtered, width,
                                            layer.in_width, g_w);

      const auto& kern = cache.layers[l];
      const std::size_t in_lanes = batch * layer.in_width;
      const int workers = thread_count();
      if (l > 0) gs_out->ensure(batch, layer.in_width, len);
      for (int w = 0; w < workers; ++w) {
        std::fill(cache.wbuf(w, 2), cache.wbuf(w, 2) + msize, T(0));
        std::fill(cache.wbuf(w, 3), cache.wbuf(w, 3) + msize, T(0));
      }
      parallel_for(in_lanes, [&](std::size_t lane, int worker) {
        T* __restrict gr = cache.wbuf(worker, 0);
        T* __restrict gi = cache.wbuf(worker, 1);
        fft_real_signal(cache.plan, grad_q.lane(lane), len, gr, gi);
        const T* __restrict isr = lt.xspec_re.data() + lane * msize;
        const T* __restrict isi = lt.xspec_im.data() + lane * msize;
        T* __restrict cr = cache.wbuf(worker, 2);
        T* __restrict ci = cache.wbuf(worker, 3);
        for (std::size_t j = 0; j < msize; ++j) {
          // correlation spectrum: G * conj(X_spec)
          cr[j] += gr[j] * isr[j] + gi[j] * isi[j];
          ci[j] += gi[j] * isr[j] - gr[j] * isi[j];
        }
        if (l > 0) {
          T* __restrict dr = cache.wbuf(worker, 4);
          T* __restrict di = cache.wbuf(worker, 5);
          const T* __restrict kr = kern.fused_re.data();
          const T* __restrict ki = kern.fused_im.data();
          for (std::size_t j = 0; j < msize; ++j) {
            // previous-layer gradient spectrum: G * conj(K_fused)
            dr[j] = gr[j] * kr[j] + gi[j] * ki[j];
            di[j] = gi[j] * kr[j] - gr[j] * ki[j];
          }
          fft_inverse(cache.plan, dr, di);
          std::copy(dr, dr + len, gs_out->lane(lane));
        }
      });
      // Fixed-order reduction over worker partials, then one inverse
      // transform: corr[k] = sum_{lanes,t} dq[t] * x[t-k]
      //                    = sum_{neurons,t} dH[t] * I[t-k].
      std::vector<T> acc_re(msize, T(0)), acc_im(msize, T(0));
      for (int w = 0; w < workers; ++w) {
        const T* cr = cache.wbuf(w, 2);
        const T* ci = cache.wbuf(w, 3);
        for (std::size_t j = 0; j < msize; ++j) {
          acc_re[j] += cr[j];
          acc_im[j] += ci[j];
        }
      }
      fft_inverse(cache.plan, acc_re.data(), acc_im.data());

      // Soma weights: dc_i = sum_k ReK_i[k] * corr[k].
      for (std::size_t i = 0; i < n; ++i) {
        const T* kr = kern.bank.taps_re(i);
        T acc = T(0);
        for (std::size_t k = 0; k < len; ++k) acc += kr[k] * acc_re[k];
        g_c[i] += acc;
      }
      // Branch parameters via the tap route: grad_tap_i[k] = c_i * corr[k].
      std::vector<T> tap_re(n * len), tap_im(n * len, T(0));
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < len; ++k)
          tap_re[i * len + k] = layer.c[i] * acc_re[k];
      const auto pg = param_backward(tap_re, tap_im, kern.bank, dendrites, grid);
      for (std::size_t i = 0; i < n; ++i) {
        g_tau_raw[i] += pg.tau[i] * reparam::dtau_draw(layer.tau_raw[i]);
        g_omega_raw[i] += pg.omega[i] * reparam::domega_draw(layer.omega_raw[i]);
        g_gamma[i] += pg.gamma[i];
      }
    } else {
      // Explicit reverse-time unrolling through the recurrence.
      RealSeq<T>& grad_current = cache.grad_q;
      grad_current.ensure(batch, width, len);
      std::vector<T> er(n), ei(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto e = dendrites.transition(i, static_cast<T>(m.delta));
        er[i] = e.real();
        ei[i] = e.imag();
      }
      const int workers = thread_count();
      struct Partial {
        std::vector<T> der, dei, dgamma, dc;
      };
      std::vector<Partial> partials(workers);
      for (auto& p : partials) {
        p.der.assign(n, T(0));
        p.dei.assign(n, T(0));
        p.dgamma.assign(n, T(0));
        p.dc.assign(n, T(0));
      }
      parallel_for(lanes, [&](std::size_t lane, int worker) {
        const std::size_t b = lane / width;
        const std::size_t nu = lane % width;
        auto& part = partials[worker];
        const T* gh = grad_h.lane(lane);
        const T* in_row = lt.current.row(b, nu);
        T* gcur = grad_current.row(b, nu);
        std::vector<T> du(n, T(0)), dv(n, T(0));
        for (std::size_t t = len; t-- > 0;) {
          const T ghv = gh[t];
          T dcur = T(0);
          for (std::size_t i = 0; i < n; ++i) {
            const T* zu = lt.states.re_lane(b, nu, i);
            const T* zv = lt.states.im_lane(b, nu, i);
            part.dc[i] += zu[t] * ghv;
            const T du_t = soma.c[i] * ghv + du[i];
            const T dv_t = dv[i];
            dcur += dendrites.gamma[i] * du_t;
            part.dgamma[i] += in_row[t] * du_t;
            const T u_prev = t > 0 ? zu[t - 1] : T(0);
            const T v_prev = t > 0 ? zv[t - 1] : T(0);
            part.der[i] += u_prev * du_t + v_prev * dv_t;
            part.dei[i] += -v_prev * du_t + u_prev * dv_t;
            du[i] = er[i] * du_t + ei[i] * dv_t;
            dv[i] = -ei[i] * du_t + er[i] * dv_t;
          }
          gcur[t] = dcur;
        }
      });
      for (std::size_t i = 0; i < n; ++i) {
        T der = T(0), dei = T(0), dgamma = T(0), dc = T(0);
        for (const auto& p : partials) {
          der += p.der[i];
          dei += p.dei[i];
          dgamma += p.dgamma[i];
          dc += p.dc[i];
        }
        const T tau = dendrites.tau[i];
        const T dscale = static_cast<T>(m.delta);
        const T dtau = (dscale / (tau * tau)) * (er[i] * der + ei[i] * dei);
        const T domega = dscale * (er[i] * dei - ei[i] * der);
        g_tau_raw[i] += dtau * reparam::dtau_draw(layer.tau_raw[i]);
        g_omega_raw[i] += domega * reparam::domega_draw(layer.omega_raw[i]);
        g_gamma[i] += dgamma;
        g_c[i] += dc;
      }

      const RealSeq<T>& x = l == 0 ? tape.input : tape.layers[l - 1].spikes;
      engine_detail::dense_backward_weights(grad_current, x, width,
                                            layer.in_width, g_w);
      if (l > 0) {
        gs_out->ensure(batch, layer.in_width, len);
        engine_detail::dense_backward_input(layer.w, width, layer.in_width,
                                            grad_current, *gs_out);
      }
    }
    std::swap(gs_in, gs_out);
  }
  grads.check_finite();
  return grads;
}

// Slow oracle: full sequential forward plus explicit reverse unrolling.
// Deliberately guarded to desk scale; the trainer's sequential mode reuses the
// same engine without the guard.
template <class T>
GradientSet<T> bptt_reference_grad(const Model<T>& m, EngineCache<T>& cache,
                                   const RealSeq<T>& inputs,
                                   const std::vector<int>& labels) {
  DRF_CHECK(inputs.length <= 512, ScaleGuard,
            "bptt_reference_grad: L = " + std::to_string(inputs.length) +
                " exceeds the 512-step oracle guard");
  Tape<T> tape;
  forward_pass(m, cache, inputs, labels, Mode::sequential, tape);
  return backward_pass(m, cache, tape, labels);
}

}  // namespace drf
