#pragma once

#include <cstddef>
#include <vector>

#include "drf/autograd/surrogate.hpp"
#include "drf/core/threading.hpp"
#include "drf/core/types.hpp"
#include "drf/parallel/conv.hpp"

namespace drf {

// Spike-rule backward: grad_h[t] = grad_out[t] * G(H[t] - V_th[t]).
// The threshold path is detached: nothing flows into alpha or the pre-spike
// history through V_th.
template <class T>
void spike_backward_into(const RealSeq<T>& grad_out, const RealSeq<T>& h,
                         const RealSeq<T>& v_th, const SurrogateSpec<T>& spec,
                         RealSeq<T>& grad_h) {
  DRF_CHECK(grad_out.size() == h.size() && h.size() == v_th.size(), TapeError,
            "spike_backward: tape is missing aligned H/V_th values");
  grad_h.ensure(h.batch, h.channels, h.length);
  // Hoisted double-Gaussian with a tail cutoff: beyond 8 lateral widths both
  // components are < 1e-14 of the peak, so those elements are zeroed without
  // evaluating the exponentials. When s^2 is integral (default s=6) the
  // central Gaussian is the lateral one raised to s^2, so one exp per element
  // plus a short multiply chain suffices (~4e-14 relative).
  constexpr double inv_sqrt_2pi = 0.3989422804014326779399461;
  const double a1 = (1.0 + spec.h) * inv_sqrt_2pi / spec.sigma;
  const double a2 = spec.h * inv_sqrt_2pi / (spec.s * spec.sigma);
  const double e1 = -0.5 / (static_cast<double>(spec.sigma) * spec.sigma);
  const double e2 = e1 / (static_cast<double>(spec.s) * spec.s);
  const double cut2 = 64.0 * static_cast<double>(spec.s) * spec.s *
                      static_cast<double>(spec.sigma) * spec.sigma;
  const double s2 = static_cast<double>(spec.s) * spec.s;
  const unsigned s2i = static_cast<unsigned>(std::lround(s2));
  const bool pow_chain = std::abs(s2 - s2i) < 1e-12 && s2i >= 2 && s2i <= 256;
  const T* __restrict hp = h.v.data();
  const T* __restrict vp = v_th.v.data();
  const T* __restrict gp = grad_out.v.data();
  T* __restrict out = grad_h.v.data();
  const std::size_t total = h.size();
  constexpr std::size_t chunk = 16384;
  parallel_for((total + chunk - 1) / chunk, [&](std::size_t ci, int) {
    const std::size_t lo = ci * chunk;
    const std::size_t hi = std::min(total, lo + chunk);
    for (std::size_t i = lo; i < hi; ++i) {
      const double x = static_cast<double>(hp[i]) - static_cast<double>(vp[i]);
      const double x2 = x * x;
      if (x2 > cut2) {
        out[i] = T(0);
        continue;
      }
      const double lateral = std::exp(x2 * e2);
      double central;
      if (pow_chain) {
        central = 1.0;
        double base = lateral;
        unsigned e = s2i;
        while (e) {
          if (e & 1u) central *= base;
          base *= base;
          e >>= 1;
        }
      } else {
        central = std::exp(x2 * e1);
      }
      out[i] = static_cast<T>(gp[i] * (a1 * central - a2 * lateral));
    }
  });
}

template <class T>
RealSeq<T> spike_backward(const RealSeq<T>& grad_out, const RealSeq<T>& h,
                          const RealSeq<T>& v_th, const SurrogateSpec<T>& spec) {
  RealSeq<T> grad_h(h.batch, h.channels, h.length);
  spike_backward_into(grad_out, h, v_th, spec, grad_h);
  return grad_h;
}

template <class T>
struct ConvBackwardResult {
  RealSeq<T> grad_input;            // (B, C, L)
  std::vector<T> grad_tap_re;       // (branches, L)
  std::vector<T> grad_tap_im;
};

// Adjoint of fft_causal_conv. Given the loss gradient with respect to the
// complex branch states g = gr + i*gi,
//   grad_input[t]   = sum_i sum_k ( gr_i[t+k]*ReK_i[k] + gi_i[t+k]*ImK_i[k] ),
//   grad_tap_i[k]   = sum_{b,c} sum_t g_i[t] * input[t-k],
// both realized as FFT correlations at O(L log L).
template <class T>
ConvBackwardResult<T> conv_backward(const ComplexStateSeq<T>& grad_states,
                                    const RealSeq<T>& input,
                                    const ResonatorKernel<T>& kernel,
                                    const FftPlan<T>& plan) {
  DRF_CHECK(grad_states.length == input.length && kernel.length == input.length,
            TapeError, "conv_backward: tape length mismatch");
  DRF_CHECK(grad_states.batch == input.batch &&
                grad_states.neurons == input.channels &&
                grad_states.branches == kernel.branches,
            TapeError, "conv_backward: tape shape mismatch");
  const std::size_t n = kernel.branches;
  const std::size_t len = input.length;
  const std::size_t m = plan.size;
  const std::size_t lanes = input.lanes();

  ConvBackwardResult<T> out;
  out.grad_input = RealSeq<T>(input.batch, input.channels, len);
  out.grad_tap_re.assign(n * len, T(0));
  out.grad_tap_im.assign(n * len, T(0));

  // Per-branch accumulated spectra of sum_lanes g_i * conj(FFT(input_lane)).
  std::vector<T> acc_re(n * m, T(0)), acc_im(n * m, T(0));

  std::vector<T> xr(m), xi(m), gr(m), gi(m), cr(m), ci(m);
  for (std::size_t lane = 0; lane < lanes; ++lane) {
    const std::size_t b = lane / input.channels;
    const std::size_t c = lane % input.channels;
    fft_real_signal(plan, input.lane(lane), len, xr.data(), xi.data());
    T* gin = out.grad_input.lane(lane);
    std::fill(gin, gin + len, T(0));
    for (std::size_t i = 0; i < n; ++i) {
      std::copy(grad_states.re_lane(b, c, i), grad_states.re_lane(b, c, i) + len,
                gr.begin());
      std::fill(gr.begin() + len, gr.end(), T(0));
      std::copy(grad_states.im_lane(b, c, i), grad_states.im_lane(b, c, i) + len,
                gi.begin());
      std::fill(gi.begin() + len, gi.end(), T(0));
      fft_forward(plan, gr.data(), gi.data());

      // grad_tap spectrum accumulation: G * conj(X).
      T* ar = acc_re.data() + i * m;
      T* ai = acc_im.data() + i * m;
      for (std::size_t j = 0; j < m; ++j) {
        ar[j] += gr[j] * xr[j] + gi[j] * xi[j];
        ai[j] += gi[j] * xr[j] - gr[j] * xi[j];
      }

      // grad_input: Re part of correlation of g with the branch kernel,
      // spectrum G * conj(K).
      const T* kr = kernel.spec_re(i, m);
      const T* ki = kernel.spec_im(i, m);
      for (std::size_t j = 0; j < m; ++j) {
        cr[j] = gr[j] * kr[j] + gi[j] * ki[j];
        ci[j] = gi[j] * kr[j] - gr[j] * ki[j];
      }
      fft_inverse(plan, cr.data(), ci.data());
      for (std::size_t t = 0; t < len; ++t) gin[t] += cr[t];
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    std::copy(acc_re.begin() + i * m, acc_re.begin() + (i + 1) * m, cr.begin());
    std::copy(acc_im.begin() + i * m, acc_im.begin() + (i + 1) * m, ci.begin());
    fft_inverse(plan, cr.data(), ci.data());
    std::copy(cr.begin(), cr.begin() + len, out.grad_tap_re.begin() + i * len);
    std::copy(ci.begin(), ci.begin() + len, out.grad_tap_im.begin() + i * len);
  }
  return out;
}

template <class T>
struct ParamGrads {
  std::vector<T> tau, omega, gamma;  // gradients on the constrained values
};

// Chain rule through the kernel taps K[k] = gamma * exp(k*delta*(-1/tau + i*omega)):
//   dK/dgamma = K/gamma,  dK/domega = i*k*delta*K,  dK/dtau = (k*delta/tau^2)*K;
// real gradients are Re(conj(dK/dtheta) * grad_tap) summed over taps.
// The gamma rule is evaluated as exp(...)=K/gamma without dividing, so it is
// well-defined when gamma crosses zero.
template <class T>
ParamGrads<T> param_backward(const std::vector<T>& grad_tap_re,
                             const std::vector<T>& grad_tap_im,
                             const ResonatorKernel<T>& kernel,
                             const DendriticParams<T>& p, const TimeGrid& grid) {
  const std::size_t n = kernel.branches;
  const std::size_t len = kernel.length;
  DRF_CHECK(grad_tap_re.size() == n * len && grad_tap_im.size() == n * len,
            TapeError, "param_backward: tap gradient shape mismatch");
  const T delta = static_cast<T>(grid.delta);
  ParamGrads<T> g;
  g.tau.assign(n, T(0));
  g.omega.assign(n, T(0));
  g.gamma.assign(n, T(0));
  for (std::size_t i = 0; i < n; ++i) {
    const T* kr = kernel.taps_re(i);
    const T* ki = kernel.taps_im(i);
    const T* gr = grad_tap_re.data() + i * len;
    const T* gi = grad_tap_im.data() + i * len;
    const T er = p.transition(i, delta).real();
    const T ei = p.transition(i, delta).imag();
    T gt = T(0), gw = T(0), gg = T(0);
    // Unit-gain taps E^k tracked alongside, renormalized like build_kernel.
    T ur = T(1), ui = T(0);
    for (std::size_t k = 0; k < len; ++k) {
      if (k % 1024 == 0) {
        const long double jj = static_cast<long double>(k);
        const long double decay =
            std::exp(-jj * static_cast<long double>(delta) /
                     static_cast<long double>(p.tau[i]));
        const long double phase = jj * static_cast<long double>(delta) *
                                  static_cast<long double>(p.omega[i]);
        ur = static_cast<T>(decay * std::cos(phase));
        ui = static_cast<T>(decay * std::sin(phase));
      }
      const T kd = static_cast<T>(k) * delta;
      // dK/dtau = (k*delta/tau^2) * K ; Re(conj(dK)*g) = (kd/tau^2)(Kr*gr + Ki*gi)
      gt += kd * (kr[k] * gr[k] + ki[k] * gi[k]);
      // dK/domega = i*kd*K = kd*(-Ki + i*Kr); Re(conj(dK)*g) = kd*(-Ki*gr + Kr*gi)
      gw += kd * (kr[k] * gi[k] - ki[k] * gr[k]);
      // dK/dgamma = E^k; Re(conj(E^k)*g)
      gg += ur * gr[k] + ui * gi[k];
      const T nur = ur * er - ui * ei;
      const T nui = ur * ei + ui * er;
      ur = nur;
      ui = nui;
    }
    g.tau[i] = gt / (p.tau[i] * p.tau[i]);
    g.omega[i] = gw;
    g.gamma[i] = gg;
  }
  return g;
}

}  // namespace drf
