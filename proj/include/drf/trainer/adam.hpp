#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "drf/trainer/model.hpp"

namespace drf {

template <class T>
struct AdamState {
  std::vector<std::vector<T>> m1, m2;  // aligned with param_refs order
  std::int64_t step = 0;

  static AdamState zeros_like(Model<T>& model) {
    AdamState s;
    for (const auto& ref : param_refs(model)) {
      s.m1.emplace_back(ref.values->size(), T(0));
      s.m2.emplace_back(ref.values->size(), T(0));
    }
    return s;
  }
};

// Scales gradients in place so the global L2 norm is at most max_norm.
// max_norm <= 0 disables clipping. Returns the pre-clip norm.
template <class T>
double clip_global_norm(GradientSet<T>& grads, double max_norm) {
  long double sq = 0;
  for (const auto& slot : grads.slots)
    for (const T g : slot) sq += static_cast<long double>(g) * g;
  const double norm = std::sqrt(static_cast<double>(sq));
  if (max_norm > 0.0 && norm > max_norm) {
    const T scale = static_cast<T>(max_norm / norm);
    for (auto& slot : grads.slots)
      for (T& g : slot) g *= scale;
  }
  return norm;
}

template <class T>
void adam_step(Model<T>& model, const GradientSet<T>& grads, AdamState<T>& state,
               double lr, double beta1, double beta2, double eps) {
  state.step += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  auto refs = param_refs(model);
  for (std::size_t s = 0; s < refs.size(); ++s) {
    std::vector<T>& p = *refs[s].values;
    const std::vector<T>& g = grads.slots[s];
    std::vector<T>& m1 = state.m1[s];
    std::vector<T>& m2 = state.m2[s];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m1[i] = static_cast<T>(beta1) * m1[i] + static_cast<T>(1.0 - beta1) * g[i];
      m2[i] = static_cast<T>(beta2) * m2[i] + static_cast<T>(1.0 - beta2) * g[i] * g[i];
      const double mhat = static_cast<double>(m1[i]) / bc1;
      const double vhat = static_cast<double>(m2[i]) / bc2;
      p[i] -= static_cast<T>(lr * mhat / (std::sqrt(vhat) + eps));
    }
  }
  model.version += 1;  // invalidates kernel caches
}

}  // namespace drf
