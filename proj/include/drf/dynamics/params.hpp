#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "drf/core/error.hpp"

namespace drf {

// Single resonate-and-fire unit: damped oscillator with damping b < 0 and
// angular frequency omega > 0 (radians per second).
struct RfParams {
  double b;
  double omega;

  RfParams(double b_, double omega_) : b(b_), omega(omega_) {
    DRF_CHECK(b < 0.0, InvalidValue, "RfParams: damping b must be < 0");
    DRF_CHECK(omega > 0.0, InvalidValue, "RfParams: omega must be > 0");
  }
};

// Per-branch dendritic resonator bank: decay tau_i > 0 (seconds), oscillation
// omega_i >= 0 (radians/second), input gain gamma_i. Branches never interact.
template <class T>
struct DendriticParams {
  std::vector<T> tau;
  std::vector<T> omega;
  std::vector<T> gamma;

  DendriticParams() = default;
  DendriticParams(std::vector<T> tau_, std::vector<T> omega_, std::vector<T> gamma_)
      : tau(std::move(tau_)), omega(std::move(omega_)), gamma(std::move(gamma_)) {
    validate();
  }

  std::size_t size() const { return tau.size(); }

  void validate() const {
    DRF_CHECK(tau.size() == omega.size() && tau.size() == gamma.size(), ShapeMismatch,
              "DendriticParams: tau/omega/gamma must share length");
    DRF_CHECK(!tau.empty(), InvalidValue, "DendriticParams: need at least one branch");
    for (const T t : tau)
      DRF_CHECK(t > T(0), InvalidValue, "DendriticParams: tau must be > 0");
    for (const T w : omega)
      DRF_CHECK(w >= T(0), InvalidValue, "DendriticParams: omega must be >= 0");
  }

  // Discrete one-step transition exp(delta * (-1/tau_i + i*omega_i)).
  std::complex<T> transition(std::size_t i, T delta) const {
    const T decay = std::exp(-delta / tau[i]);
    const T phase = delta * omega[i];
    return {decay * std::cos(phase), decay * std::sin(phase)};
  }
};

// Soma: branch-importance weights c, base threshold v_pre, and the adaptive
// threshold kernel alpha (each entry in (0,1)). alpha may be empty, which
// degenerates to a static threshold.
template <class T>
struct SomaParams {
  std::vector<T> c;
  T v_pre = T(1);
  std::vector<T> alpha;

  SomaParams() = default;
  SomaParams(std::vector<T> c_, T v_pre_, std::vector<T> alpha_)
      : c(std::move(c_)), v_pre(v_pre_), alpha(std::move(alpha_)) {
    validate();
  }

  std::size_t window() const { return alpha.size(); }

  void validate() const {
    DRF_CHECK(v_pre > T(0), InvalidValue, "SomaParams: v_pre must be > 0");
    for (const T a : alpha)
      DRF_CHECK(a > T(0) && a < T(1), InvalidValue,
                "SomaParams: alpha entries must lie in (0,1)");
  }
};

// Reparameterizations that keep learnable neuron parameters valid under
// unconstrained gradient updates.
namespace reparam {

constexpr double kTauFloor = 1e-6;

template <class T>
T softplus(T x) {
  // Overflow-safe: softplus(x) = max(x,0) + log1p(exp(-|x|)).
  return std::max(x, T(0)) + std::log1p(std::exp(-std::abs(x)));
}

template <class T>
T softplus_inv(T y) {
  // Inverse on y > 0: x = y + log(1 - exp(-y)).
  return y + std::log(-std::expm1(-y));
}

template <class T>
T tau_of_raw(T raw) {
  return softplus(raw) + T(kTauFloor);
}
template <class T>
T tau_raw_of(T tau) {
  return softplus_inv(tau - T(kTauFloor));
}
template <class T>
T dtau_draw(T raw) {
  return T(1) / (T(1) + std::exp(-raw));  // sigmoid
}

template <class T>
T omega_of_raw(T raw) {
  return raw * raw;
}
template <class T>
T omega_raw_of(T omega) {
  return std::sqrt(omega);
}
template <class T>
T domega_draw(T raw) {
  return T(2) * raw;
}

template <class T>
T alpha_of_raw(T raw) {
  return T(1) / (T(1) + std::exp(-raw));
}
template <class T>
T alpha_raw_of(T alpha) {
  return std::log(alpha / (T(1) - alpha));
}
template <class T>
T dalpha_draw(T raw) {
  const T a = alpha_of_raw(raw);
  return a * (T(1) - a);
}

}  // namespace reparam
}  // namespace drf
