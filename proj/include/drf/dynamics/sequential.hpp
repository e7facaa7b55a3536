#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "drf/core/types.hpp"
#include "drf/dynamics/params.hpp"

namespace drf {

// One Euler step of the single resonate-and-fire unit:
//   z' = exp(delta*(b + i*omega)) * z + delta * input.
inline std::complex<double> rf_step(std::complex<double> z, double input,
                                    const RfParams& p, double delta) {
  DRF_CHECK(delta > 0.0, InvalidValue, "rf_step: delta must be > 0");
  const std::complex<double> e =
      std::exp(std::complex<double>(delta * p.b, delta * p.omega));
  return e * z + delta * input;
}

// One zero-order-hold step of the dendritic bank. Branches are diagonal:
//   Z'_i = exp(delta*(-1/tau_i + i*omega_i)) * Z_i + gamma_i * input.
// zr/zi are updated in place.
template <class T>
void drf_charge_step(std::vector<T>& zr, std::vector<T>& zi, T input,
                     const DendriticParams<T>& p, T delta) {
  DRF_CHECK(delta > T(0), InvalidValue, "drf_charge_step: delta must be > 0");
  DRF_CHECK(zr.size() == p.size() && zi.size() == p.size(), ShapeMismatch,
            "drf_charge_step: state length must match branch count");
  for (std::size_t i = 0; i < p.size(); ++i) {
    const std::complex<T> e = p.transition(i, delta);
    const T ur = zr[i], vi = zi[i];
    zr[i] = e.real() * ur - e.imag() * vi + p.gamma[i] * input;
    zi[i] = e.imag() * ur + e.real() * vi;
  }
}

// Soma potential: sum_i c_i * Re(Z_i). Imaginary parts never contribute.
template <class T>
T soma_potential(const std::vector<T>& zr, const std::vector<T>& zi,
                 const SomaParams<T>& s) {
  DRF_CHECK(zr.size() == s.c.size() && zi.size() == s.c.size(), ShapeMismatch,
            "soma_potential: branch count must match weight count");
  T h = T(0);
  for (std::size_t i = 0; i < s.c.size(); ++i) h += s.c[i] * zr[i];
  return h;
}

// Adaptive threshold from the most recent pre-spike window. window[k-1] holds
// the pre-spike indicator at t-k, k = 1..n_a (zero-padded before t = n_a).
// Result is v_pre + sum_k alpha_k * window[k-1], always >= v_pre.
template <class T>
T adaptive_threshold_step(const std::vector<T>& window, const SomaParams<T>& s) {
  DRF_CHECK(window.size() == s.alpha.size(), ShapeMismatch,
            "adaptive_threshold_step: window length must match alpha length");
  T v = s.v_pre;
  for (std::size_t k = 0; k < s.alpha.size(); ++k) v += s.alpha[k] * window[k];
  return v;
}

template <class T>
struct SequentialForward {
  ComplexStateSeq<T> states;  // (B, N, n, L)
  RealSeq<T> h;               // (B, N, L) soma potential
  RealSeq<T> v_th;            // (B, N, L) threshold actually applied
  SpikeTrain spikes;          // (B, N, L)
};

// Step-by-step reference forward: charge -> soma -> adaptive threshold ->
// spike, per timestep. Membrane state is never reset after a spike; the
// rising threshold is the only activity suppression.
//
// Every neuron lane (batch, channel) runs the same branch bank; the input
// channel c drives neuron c. The spike rule is S = (H - V_th >= 0), shared
// verbatim with the parallel path. Pre-spike indicators compare the weighted
// soma potential H (not raw branch states) against v_pre — the form the
// convolutional threshold parallelizes; with non-unit branch weights the
// unweighted variant would be a different rule and is intentionally absent.
template <class T>
SequentialForward<T> drf_sequential_forward(const RealSeq<T>& input,
                                            const DendriticParams<T>& p,
                                            const SomaParams<T>& s,
                                            const TimeGrid& grid) {
  DRF_CHECK(input.length == grid.length, ShapeMismatch,
            "drf_sequential_forward: input length must match grid");
  DRF_CHECK(s.c.size() == p.size(), ShapeMismatch,
            "drf_sequential_forward: soma weights must match branch count");
  const std::size_t batch = input.batch;
  const std::size_t neurons = input.channels;
  const std::size_t n = p.size();
  const std::size_t len = grid.length;
  const std::size_t n_a = s.alpha.size();

  SequentialForward<T> out{
      ComplexStateSeq<T>(batch, neurons, n, len),
      RealSeq<T>(batch, neurons, len),
      RealSeq<T>(batch, neurons, len),
      SpikeTrain(batch, neurons, len),
  };

  // Per-branch one-step transitions, shared by every lane.
  std::vector<T> er(n), ei(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::complex<T> e = p.transition(i, static_cast<T>(grid.delta));
    er[i] = e.real();
    ei[i] = e.imag();
  }

  std::vector<T> ur(n), vi(n);
  std::vector<std::uint8_t> pre(len);  // pre-spike history of the current lane
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t nu = 0; nu < neurons; ++nu) {
      const T* x = input.row(b, nu);
      T* hrow = out.h.row(b, nu);
      T* vrow = out.v_th.row(b, nu);
      std::uint8_t* srow = out.spikes.lane(b, nu);
      std::fill(ur.begin(), ur.end(), T(0));
      std::fill(vi.begin(), vi.end(), T(0));
      for (std::size_t t = 0; t < len; ++t) {
        T h = T(0);
        for (std::size_t i = 0; i < n; ++i) {
          const T u = ur[i], v = vi[i];
          ur[i] = er[i] * u - ei[i] * v + p.gamma[i] * x[t];
          vi[i] = ei[i] * u + er[i] * v;
          out.states.re_lane(b, nu, i)[t] = ur[i];
          out.states.im_lane(b, nu, i)[t] = vi[i];
          h += s.c[i] * ur[i];
        }
        T vth = s.v_pre;
        for (std::size_t k = 1; k <= n_a && k <= t; ++k)
          vth += s.alpha[k - 1] * static_cast<T>(pre[t - k]);
        pre[t] = h - s.v_pre >= T(0) ? 1 : 0;
        hrow[t] = h;
        vrow[t] = vth;
        srow[t] = h - vth >= T(0) ? 1 : 0;
      }
    }
  }
  return out;
}

}  // namespace drf
