#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <utility>
#include <vector>

#include "drf/core/types.hpp"
#include "drf/dynamics/params.hpp"

namespace drf {

// Magnitude response of a single resonate-and-fire unit at digital frequency
// Omega (radians/step):  || delta / (1 - exp(delta*b + i(delta*omega - Omega))) ||.
inline double rf_response_closed_form(double b, double omega, double delta,
                                      double big_omega) {
  DRF_CHECK(b < 0.0, InvalidValue, "rf_response_closed_form: b must be < 0");
  const std::complex<double> den =
      1.0 - std::exp(std::complex<double>(delta * b, delta * omega - big_omega));
  return delta / std::abs(den);
}

struct FrequencyResponse {
  std::vector<double> omega_grid;           // radians/step, strictly increasing
  std::vector<std::vector<double>> branch;  // per-branch magnitude curves
  std::vector<double> aggregate;            // sum_i c_i * branch_i (raw)
  std::vector<double> aggregate_clamped;    // max(aggregate, 0)
};

inline std::vector<double> default_omega_grid(std::size_t points = 4096) {
  std::vector<double> g(points);
  const double pi = 3.141592653589793238462643;
  for (std::size_t i = 0; i < points; ++i)
    g[i] = pi * static_cast<double>(i) / static_cast<double>(points - 1);
  return g;
}

// Aggregate response of the dendritic bank: per-branch magnitudes with
// b = -1/tau_i, weighted by c and summed as magnitudes (not as complex
// transfer functions). The branch gain gamma_i replaces the delta numerator;
// with gamma = delta the curves reduce to rf_response_closed_form. Weighted
// magnitude sums can go negative for negative c, so a clamped copy is kept
// for bandwidth measurement alongside the raw values.
inline FrequencyResponse drf_response(const DendriticParams<double>& p,
                                      const std::vector<double>& c,
                                      const TimeGrid& grid,
                                      std::vector<double> omega_grid) {
  DRF_CHECK(c.size() == p.size(), ShapeMismatch,
            "drf_response: weights must match branch count");
  for (std::size_t i = 1; i < omega_grid.size(); ++i)
    DRF_CHECK(omega_grid[i] > omega_grid[i - 1], InvalidValue,
              "drf_response: omega grid must be strictly increasing");
  const std::size_t n = p.size();
  const std::size_t g = omega_grid.size();
  FrequencyResponse out;
  out.omega_grid = std::move(omega_grid);
  out.branch.assign(n, std::vector<double>(g, 0.0));
  out.aggregate.assign(g, 0.0);
  out.aggregate_clamped.assign(g, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double b = -1.0 / p.tau[i];
    const double gain = std::abs(p.gamma[i]) / grid.delta;
    for (std::size_t j = 0; j < g; ++j) {
      const double mag =
          gain * rf_response_closed_form(b, p.omega[i], grid.delta, out.omega_grid[j]);
      out.branch[i][j] = mag;
      out.aggregate[j] += c[i] * mag;
    }
  }
  for (std::size_t j = 0; j < g; ++j)
    out.aggregate_clamped[j] = std::max(out.aggregate[j], 0.0);
  return out;
}

struct BandwidthResult {
  std::vector<std::pair<double, double>> intervals;  // [lo, hi] in radians/step
  double total_width = 0.0;  // sum of interval widths, one grid bin per point
  double peak = 0.0;
  double level = 0.0;
};

// Coverage at the given fraction of the peak (default half-power): the union
// of grid bins where the clamped aggregate is >= level * peak. Each
// qualifying grid point contributes one bin width.
inline BandwidthResult measured_bandwidth(const FrequencyResponse& resp,
                                          double level = 0.7071067811865476) {
  DRF_CHECK(!resp.aggregate_clamped.empty(), InvalidValue,
            "measured_bandwidth: empty response");
  BandwidthResult out;
  out.level = level;
  for (const double m : resp.aggregate_clamped) out.peak = std::max(out.peak, m);
  DRF_CHECK(out.peak > 0.0, DegenerateResponse,
            "measured_bandwidth: response peak is zero");
  const double bin = resp.omega_grid.size() > 1
                         ? resp.omega_grid[1] - resp.omega_grid[0]
                         : 0.0;
  const double thresh = level * out.peak;
  std::size_t run_start = 0;
  bool in_run = false;
  for (std::size_t j = 0; j <= resp.aggregate_clamped.size(); ++j) {
    const bool on =
        j < resp.aggregate_clamped.size() && resp.aggregate_clamped[j] >= thresh;
    if (on && !in_run) {
      run_start = j;
      in_run = true;
    } else if (!on && in_run) {
      const std::size_t count = j - run_start;
      out.intervals.emplace_back(resp.omega_grid[run_start],
                                 resp.omega_grid[j - 1]);
      out.total_width += static_cast<double>(count) * bin;
      in_run = false;
    }
  }
  return out;
}

}  // namespace drf
