#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "drf/core/threading.hpp"
#include "drf/core/types.hpp"
#include "drf/dynamics/params.hpp"
#include "drf/parallel/fft.hpp"

namespace drf {

// Materialized convolution kernel of the dendritic bank:
//   K[i][k] = gamma_i * exp(k * delta * (-1/tau_i + i*omega_i)),  k = 0..L-1,
// plus the cached forward transform of each branch kernel at size M.
// |K[i][k]| decays geometrically by exp(-delta/tau_i) per tap, K[i][0] = gamma_i.
template <class T>
struct ResonatorKernel {
  std::size_t branches = 0;
  std::size_t length = 0;  // L taps per branch
  std::vector<T> tap_re, tap_im;  // (branches, L)
  std::vector<T> fft_re, fft_im;  // (branches, M)

  const T* taps_re(std::size_t i) const { return tap_re.data() + i * length; }
  const T* taps_im(std::size_t i) const { return tap_im.data() + i * length; }
  const T* spec_re(std::size_t i, std::size_t m) const { return fft_re.data() + i * m; }
  const T* spec_im(std::size_t i, std::size_t m) const { return fft_im.data() + i * m; }
};

// Builds the branch kernels by iterated multiplication with the one-step
// transition, resampling the closed form every 1024 taps to bound rounding
// drift, then caches each branch's spectrum under the given plan.
template <class T>
ResonatorKernel<T> build_kernel(const DendriticParams<T>& p, const TimeGrid& grid,
                                const FftPlan<T>& plan) {
  DRF_CHECK(plan.signal_len == grid.length, ShapeMismatch,
            "build_kernel: plan was made for a different length");
  const std::size_t n = p.size();
  const std::size_t len = grid.length;
  const std::size_t m = plan.size;
  const T delta = static_cast<T>(grid.delta);

  ResonatorKernel<T> k;
  k.branches = n;
  k.length = len;
  k.tap_re.resize(n * len);
  k.tap_im.resize(n * len);
  k.fft_re.resize(n * m);
  k.fft_im.resize(n * m);

  parallel_for(n, [&](std::size_t i, int) {
    T* kr = k.tap_re.data() + i * len;
    T* ki = k.tap_im.data() + i * len;
    const T er = p.transition(i, delta).real();
    const T ei = p.transition(i, delta).imag();
    T cr = T(1), ci = T(0);  // transition^j relative to the last resample
    for (std::size_t j = 0; j < len; ++j) {
      if (j % 1024 == 0) {
        // Closed form exp(j*delta*(-1/tau + i*omega)); the phase is reduced
        // in extended precision, since j*delta*omega in working precision
        // drifts by ~j ulps at large lags.
        const long double jj = static_cast<long double>(j);
        const long double decay =
            std::exp(-jj * static_cast<long double>(delta) /
                     static_cast<long double>(p.tau[i]));
        const long double phase =
            jj * static_cast<long double>(delta) *
            static_cast<long double>(p.omega[i]);
        cr = static_cast<T>(decay * std::cos(phase));
        ci = static_cast<T>(decay * std::sin(phase));
      }
      kr[j] = p.gamma[i] * cr;
      ki[j] = p.gamma[i] * ci;
      const T ncr = cr * er - ci * ei;
      const T nci = cr * ei + ci * er;
      cr = ncr;
      ci = nci;
    }

    T* fr = k.fft_re.data() + i * m;
    T* fi = k.fft_im.data() + i * m;
    std::copy(kr, kr + len, fr);
    std::fill(fr + len, fr + m, T(0));
    std::copy(ki, ki + len, fi);
    std::fill(fi + len, fi + m, T(0));
    fft_forward(plan, fr, fi);
  });
  return k;
}

}  // namespace drf
