#pragma once

#include <cmath>

#include "drf/core/error.hpp"

namespace drf {

// Double-Gaussian surrogate for the spike derivative:
//   G(x) = (1+h) * phi(x; sigma) - h * phi(x; s*sigma),
// phi the zero-mean Gaussian pdf. Even, integrable, G(0) > 0 for h in [0,1)
// and s > 1. The constants are repo defaults, not tuned per task.
template <class T>
struct SurrogateSpec {
  T sigma = T(0.5);
  T h = T(0.15);
  T s = T(6);

  void validate() const {
    DRF_CHECK(sigma > T(0), InvalidValue, "SurrogateSpec: sigma must be > 0");
    DRF_CHECK(h >= T(0) && h < T(1), InvalidValue, "SurrogateSpec: h must be in [0,1)");
    DRF_CHECK(s > T(1), InvalidValue, "SurrogateSpec: s must be > 1");
  }
};

namespace detail {
template <class T>
T gauss_pdf(T x, T sigma) {
  constexpr double inv_sqrt_2pi = 0.3989422804014326779399461;
  const T z = x / sigma;
  return static_cast<T>(inv_sqrt_2pi) / sigma * std::exp(T(-0.5) * z * z);
}
}  // namespace detail

template <class T>
T surrogate_grad(T x, const SurrogateSpec<T>& spec) {
  return (T(1) + spec.h) * detail::gauss_pdf(x, spec.sigma) -
         spec.h * detail::gauss_pdf(x, spec.s * spec.sigma);
}

// Smoothed step whose derivative is exactly surrogate_grad: the weighted
// difference of the two Gaussian CDFs. Rises from 0 to 1; used by the
// smoothed-network finite-difference checks and the smooth-spike mode.
template <class T>
T smooth_spike(T x, const SurrogateSpec<T>& spec) {
  constexpr double inv_sqrt2 = 0.7071067811865475244008444;
  const T a = std::erfc(-x / spec.sigma * static_cast<T>(inv_sqrt2)) / T(2);
  const T b = std::erfc(-x / (spec.s * spec.sigma) * static_cast<T>(inv_sqrt2)) / T(2);
  return (T(1) + spec.h) * a - spec.h * b;
}

}  // namespace drf
