#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "drf/core/types.hpp"

namespace drf {

struct SpikeStats {
  double rate = 0.0;  // spikes / (batch * neurons * length)
  std::size_t count = 0;
  std::size_t slots = 0;
  std::vector<double> per_neuron_rate;
};

inline SpikeStats spike_stats(const SpikeTrain& spikes) {
  spikes.check_binary();
  SpikeStats out;
  out.slots = spikes.size();
  out.per_neuron_rate.assign(spikes.neurons, 0.0);
  for (std::size_t b = 0; b < spikes.batch; ++b) {
    for (std::size_t n = 0; n < spikes.neurons; ++n) {
      const std::uint8_t* lane = spikes.lane(b, n);
      std::size_t c = 0;
      for (std::size_t t = 0; t < spikes.length; ++t) c += lane[t];
      out.count += c;
      out.per_neuron_rate[n] += static_cast<double>(c);
    }
  }
  const double per_neuron_slots =
      static_cast<double>(spikes.batch) * static_cast<double>(spikes.length);
  for (auto& r : out.per_neuron_rate) r /= per_neuron_slots;
  out.rate = static_cast<double>(out.count) / static_cast<double>(out.slots);
  return out;
}

// 45nm-convention op energies; repo defaults, configurable.
struct EnergyConstants {
  double e_mac = 4.6e-12;  // joules per multiply-accumulate
  double e_ac = 0.9e-12;   // joules per accumulate
};

// Per-layer usage counts: spikes fanning into the next weight matrix cost one
// accumulate per synapse; dense work on real-valued signals costs full MACs.
struct LayerUsage {
  std::string name;
  std::size_t spike_count = 0;  // spikes emitted into this layer's fan-out
  std::size_t fan_out = 0;
  std::size_t dense_macs = 0;  // real-valued multiply-accumulates
};

struct LayerEnergy {
  std::string name;
  std::size_t ac_ops = 0;
  std::size_t mac_ops = 0;
  double joules = 0.0;
};

struct EnergyReport {
  double spike_rate = 0.0;
  std::size_t synaptic_ops = 0;  // total accumulates driven by spikes
  std::size_t mac_ops = 0;
  double joules = 0.0;
  std::vector<LayerEnergy> per_layer;
};

// E = sum_layers (spike_count * fan_out * E_AC) + (dense_macs * E_MAC).
inline EnergyReport energy_estimate(const SpikeStats& stats,
                                    const std::vector<LayerUsage>& topology,
                                    const EnergyConstants& k = {}) {
  DRF_CHECK(k.e_mac > 0.0 && k.e_ac > 0.0, InvalidValue,
            "energy_estimate: op energies must be > 0");
  EnergyReport out;
  out.spike_rate = stats.rate;
  for (const auto& layer : topology) {
    LayerEnergy e;
    e.name = layer.name;
    e.ac_ops = layer.spike_count * layer.fan_out;
    e.mac_ops = layer.dense_macs;
    e.joules = static_cast<double>(e.ac_ops) * k.e_ac +
               static_cast<double>(e.mac_ops) * k.e_mac;
    out.synaptic_ops += e.ac_ops;
    out.mac_ops += e.mac_ops;
    out.joules += e.joules;
    out.per_layer.push_back(std::move(e));
  }
  return out;
}

}  // namespace drf
