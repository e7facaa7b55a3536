#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "drf/core/error.hpp"

namespace drf {

// Radix-2 transform plan for causal linear convolution of length-L signals:
// transform size M is the smallest power of two >= 2L-1 so zero padding kills
// circular wraparound. Twiddles are computed once in extended precision and
// shared read-only across workers.
template <class T>
struct FftPlan {
  std::size_t signal_len = 0;  // L
  std::size_t size = 1;        // M
  int log2_size = 0;
  std::vector<T> tw_re, tw_im;          // exp(-2*pi*i*k/M), k < M/2
  std::vector<std::uint32_t> bitrev;    // bit-reversal permutation of [0, M)

  explicit FftPlan(std::size_t signal_length) : signal_len(signal_length) {
    DRF_CHECK(signal_len >= 1, InvalidValue, "FftPlan: signal length must be >= 1");
    const std::size_t need = 2 * signal_len - 1;
    while (size < need) {
      size <<= 1;
      ++log2_size;
    }
    tw_re.resize(size / 2 + 1);
    tw_im.resize(size / 2 + 1);
    for (std::size_t k = 0; k <= size / 2; ++k) {
      const long double ang = -2.0L * 3.141592653589793238462643383279503L *
                              static_cast<long double>(k) /
                              static_cast<long double>(size);
      tw_re[k] = static_cast<T>(std::cos(ang));
      tw_im[k] = static_cast<T>(std::sin(ang));
    }
    bitrev.resize(size);
    for (std::size_t i = 0; i < size; ++i) {
      std::size_t r = 0, x = i;
      for (int b = 0; b < log2_size; ++b) {
        r = (r << 1) | (x & 1);
        x >>= 1;
      }
      bitrev[i] = static_cast<std::uint32_t>(r);
    }
  }
};

namespace detail {

// Iterative in-place radix-2 butterfly pass over split re/im arrays.
// sign = -1: forward (twiddle table as stored); sign = +1: inverse.
template <class T, int Sign>
void fft_core(const FftPlan<T>& plan, T* __restrict re, T* __restrict im) {
  const std::size_t m = plan.size;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = plan.bitrev[i];
    if (i < j) {
      std::swap(re[i], re[j]);
      std::swap(im[i], im[j]);
    }
  }
  // First stage: twiddle is 1.
  for (std::size_t k = 0; k + 1 < m; k += 2) {
    const T ar = re[k], ai = im[k];
    const T br = re[k + 1], bi = im[k + 1];
    re[k] = ar + br;
    im[k] = ai + bi;
    re[k + 1] = ar - br;
    im[k + 1] = ai - bi;
  }
  for (std::size_t len = 4; len <= m; len <<= 1) {
    const std::size_t half = len >> 1;
    const std::size_t step = m / len;
    for (std::size_t base = 0; base < m; base += len) {
      const T* wr = plan.tw_re.data();
      const T* wi = plan.tw_im.data();
      T* __restrict lo_r = re + base;
      T* __restrict lo_i = im + base;
      T* __restrict hi_r = lo_r + half;
      T* __restrict hi_i = lo_i + half;
      for (std::size_t j = 0; j < half; ++j) {
        const std::size_t tw = j * step;
        const T twr = wr[tw];
        const T twi = Sign < 0 ? wi[tw] : -wi[tw];
        const T xr = hi_r[j], xi = hi_i[j];
        const T tr = twr * xr - twi * xi;
        const T ti = twr * xi + twi * xr;
        const T ar = lo_r[j], ai = lo_i[j];
        lo_r[j] = ar + tr;
        lo_i[j] = ai + ti;
        hi_r[j] = ar - tr;
        hi_i[j] = ai - ti;
      }
    }
  }
}

}  // namespace detail

// Forward transform, in place on length-M split arrays.
template <class T>
void fft_forward(const FftPlan<T>& plan, T* re, T* im) {
  detail::fft_core<T, -1>(plan, re, im);
}

// Inverse transform including the 1/M scale.
template <class T>
void fft_inverse(const FftPlan<T>& plan, T* re, T* im) {
  detail::fft_core<T, +1>(plan, re, im);
  const T scale = T(1) / static_cast<T>(plan.size);
  for (std::size_t i = 0; i < plan.size; ++i) {
    re[i] *= scale;
    im[i] *= scale;
  }
}

// Spectrum of a real signal x (length <= M), zero padded. Writes length-M
// split arrays.
template <class T>
void fft_real_signal(const FftPlan<T>& plan, const T* x, std::size_t len, T* re,
                     T* im) {
  DRF_CHECK(len <= plan.size, ShapeMismatch, "fft_real_signal: signal too long");
  std::copy(x, x + len, re);
  std::fill(re + len, re + plan.size, T(0));
  std::fill(im, im + plan.size, T(0));
  fft_forward(plan, re, im);
}

}  // namespace drf
