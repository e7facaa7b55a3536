#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "drf/autograd/surrogate.hpp"
#include "drf/core/config.hpp"
#include "drf/core/rng.hpp"
#include "drf/dynamics/params.hpp"

namespace drf {

// One dense projection feeding a layer of N identical dendritic neurons.
// Branch and soma parameters are shared across the layer's neurons; neurons
// differ through their dense input rows. Constrained values (tau, omega,
// alpha) are stored in raw form and mapped on read, so every optimizer step
// lands in the valid region by construction.
template <class T>
struct DenseDrfLayer {
  std::size_t in_width = 0, out_width = 0;
  std::vector<T> w;  // (out_width, in_width) row-major
  std::vector<T> tau_raw, omega_raw, gamma, c;  // per branch
  std::vector<T> alpha_raw;                     // threshold kernel, raw
};

// Non-spiking readout: dense onto class lanes, then a learnable leaky
// integrator per class; scores are the time-mean of the integrator output.
template <class T>
struct ReadoutLayer {
  std::size_t in_width = 0, classes = 0;
  std::vector<T> w;        // (classes, in_width)
  std::vector<T> tau_raw;  // per-class integrator time constant, raw
};

template <class T>
struct Model {
  double delta = 1.0;
  std::size_t input_channels = 1;
  std::size_t branches = 4;
  std::size_t window = 8;  // adaptive threshold kernel size n_a
  T v_pre = T(1);
  bool train_alpha = false;
  bool smooth_spikes = false;
  SurrogateSpec<T> surrogate;
  std::vector<DenseDrfLayer<T>> layers;
  ReadoutLayer<T> readout;
  std::uint64_t version = 0;

  DendriticParams<T> dendrites(std::size_t l) const {
    const auto& layer = layers[l];
    const std::size_t n = branches;
    DendriticParams<T> p;
    p.tau.resize(n);
    p.omega.resize(n);
    p.gamma = layer.gamma;
    for (std::size_t i = 0; i < n; ++i) {
      p.tau[i] = reparam::tau_of_raw(layer.tau_raw[i]);
      p.omega[i] = reparam::omega_of_raw(layer.omega_raw[i]);
    }
    return p;
  }

  SomaParams<T> soma(std::size_t l) const {
    const auto& layer = layers[l];
    SomaParams<T> s;
    s.c = layer.c;
    s.v_pre = v_pre;
    s.alpha.resize(window);
    for (std::size_t k = 0; k < window; ++k)
      s.alpha[k] = reparam::alpha_of_raw(layer.alpha_raw[k]);
    return s;
  }

  // Readout integrator decay a_k = exp(-delta / tau_out_k) in (0,1).
  std::vector<T> readout_decay() const {
    std::vector<T> a(readout.classes);
    for (std::size_t k = 0; k < readout.classes; ++k)
      a[k] = std::exp(static_cast<T>(-delta) /
                      reparam::tau_of_raw(readout.tau_raw[k]));
    return a;
  }

  std::size_t parameter_count() const {
    std::size_t total = 0;
    for (const auto& l : layers)
      total += l.w.size() + l.tau_raw.size() + l.omega_raw.size() +
               l.gamma.size() + l.c.size() + l.alpha_raw.size();
    return total + readout.w.size() + readout.tau_raw.size();
  }
};

// Named view over every trainable vector, in fixed declaration order. Adam
// moments, gradients and checkpoints all align with this order.
template <class T>
struct ParamRef {
  std::string name;
  std::vector<T>* values;
};

template <class T>
std::vector<ParamRef<T>> param_refs(Model<T>& m) {
  std::vector<ParamRef<T>> refs;
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    refs.push_back({p + "w", &m.layers[l].w});
    refs.push_back({p + "tau_raw", &m.layers[l].tau_raw});
    refs.push_back({p + "omega_raw", &m.layers[l].omega_raw});
    refs.push_back({p + "gamma", &m.layers[l].gamma});
    refs.push_back({p + "c", &m.layers[l].c});
    refs.push_back({p + "alpha_raw", &m.layers[l].alpha_raw});
  }
  refs.push_back({"readout.w", &m.readout.w});
  refs.push_back({"readout.tau_raw", &m.readout.tau_raw});
  return refs;
}

template <class T>
struct GradientSet {
  std::vector<std::string> names;
  std::vector<std::vector<T>> slots;

  static GradientSet zeros_like(Model<T>& m) {
    GradientSet g;
    for (const auto& ref : param_refs(m)) {
      g.names.push_back(ref.name);
      g.slots.emplace_back(ref.values->size(), T(0));
    }
    return g;
  }

  void check_finite() const {
    for (const auto& s : slots)
      for (const T x : s)
        DRF_CHECK(std::isfinite(static_cast<double>(x)), NonFinite,
                  "GradientSet: non-finite gradient");
  }
};

// Builds a model for the given task dimensions. Draw order is fixed (per
// layer: dense weights, tau, omega, c; then readout weights), so a seed pins
// the full initialization. omega tiles [pi/(L_max*delta), 0.9*pi/delta]
// log-uniformly per layer; tau is uniform over [1, L_max*delta]; gamma starts
// at delta; c ~ U(-1/sqrt(n), 1/sqrt(n)); alpha starts at 0.5.
template <class T>
Model<T> make_model(const RunConfig& cfg, std::size_t input_channels,
                    std::size_t classes, std::size_t max_length, Rng& rng) {
  Model<T> m;
  m.delta = cfg.delta;
  m.input_channels = input_channels;
  m.branches = static_cast<std::size_t>(cfg.branches);
  m.window = cfg.adaptive_window >= 0 ? static_cast<std::size_t>(cfg.adaptive_window) : 0;
  m.v_pre = static_cast<T>(cfg.v_pre);
  m.train_alpha = cfg.train_alpha;
  m.smooth_spikes = cfg.smooth_spikes;
  m.surrogate.sigma = static_cast<T>(cfg.surrogate_sigma);
  m.surrogate.h = static_cast<T>(cfg.surrogate_h);
  m.surrogate.s = static_cast<T>(cfg.surrogate_s);
  m.surrogate.validate();

  const double pi = 3.141592653589793238462643;
  const double horizon = static_cast<double>(max_length) * cfg.delta;
  const double omega_lo = pi / horizon;
  const double omega_hi = 0.9 * pi / cfg.delta;
  const std::size_t n = m.branches;

  std::size_t in_width = input_channels;
  for (const int width : cfg.hidden) {
    DenseDrfLayer<T> layer;
    layer.in_width = in_width;
    layer.out_width = static_cast<std::size_t>(width);
    layer.w.resize(layer.out_width * layer.in_width);
    const double wscale = 1.0 / std::sqrt(static_cast<double>(layer.in_width));
    for (auto& v : layer.w) v = static_cast<T>(rng.uniform(-wscale, wscale));
    layer.tau_raw.resize(n);
    layer.omega_raw.resize(n);
    layer.gamma.assign(n, static_cast<T>(cfg.delta));
    layer.c.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      layer.tau_raw[i] = reparam::tau_raw_of(static_cast<T>(rng.uniform(1.0, horizon)));
    for (std::size_t i = 0; i < n; ++i) {
      const double w =
          std::exp(rng.uniform(std::log(omega_lo), std::log(omega_hi)));
      layer.omega_raw[i] = reparam::omega_raw_of(static_cast<T>(w));
    }
    const double cscale = 1.0 / std::sqrt(static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i)
      layer.c[i] = static_cast<T>(rng.uniform(-cscale, cscale));
    layer.alpha_raw.assign(m.window, reparam::alpha_raw_of(T(0.5)));
    in_width = layer.out_width;
    m.layers.push_back(std::move(layer));
  }

  m.readout.in_width = in_width;
  m.readout.classes = classes;
  m.readout.w.resize(classes * in_width);
  const double rscale = 1.0 / std::sqrt(static_cast<double>(in_width));
  for (auto& v : m.readout.w) v = static_cast<T>(rng.uniform(-rscale, rscale));
  m.readout.tau_raw.assign(classes, reparam::tau_raw_of(static_cast<T>(horizon / 4.0)));
  return m;
}

}  // namespace drf
