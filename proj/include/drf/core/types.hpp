#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "drf/core/error.hpp"

namespace drf {

// Discrete time axis: delta seconds per step, length steps.
struct TimeGrid {
  double delta = 1.0;
  std::size_t length = 1;

  TimeGrid() = default;
  TimeGrid(double delta_, std::size_t length_) : delta(delta_), length(length_) {
    DRF_CHECK(delta > 0.0, InvalidValue, "TimeGrid: delta must be > 0");
    DRF_CHECK(length >= 1, InvalidValue, "TimeGrid: length must be >= 1");
  }
};

namespace detail {

template <class T>
void check_finite(const std::vector<T>& v, const char* what) {
  for (const T x : v) {
    DRF_CHECK(std::isfinite(static_cast<double>(x)), NonFinite,
              std::string(what) + ": non-finite value rejected");
  }
}

}  // namespace detail

// Real-valued sequence batch, laid out (batch, channels, time) with time
// innermost so per-lane rows are contiguous.
template <class T>
struct RealSeq {
  std::size_t batch = 0, channels = 0, length = 0;
  std::vector<T> v;

  RealSeq() = default;
  RealSeq(std::size_t b, std::size_t c, std::size_t l)
      : batch(b), channels(c), length(l), v(b * c * l, T(0)) {
    DRF_CHECK(b >= 1 && c >= 1 && l >= 1, InvalidValue,
              "RealSeq: all dims must be >= 1");
  }
  RealSeq(std::size_t b, std::size_t c, std::size_t l, std::vector<T> data)
      : batch(b), channels(c), length(l), v(std::move(data)) {
    DRF_CHECK(b >= 1 && c >= 1 && l >= 1, InvalidValue,
              "RealSeq: all dims must be >= 1");
    DRF_CHECK(v.size() == b * c * l, ShapeMismatch, "RealSeq: data size mismatch");
    detail::check_finite(v, "RealSeq");
  }

  std::size_t size() const { return v.size(); }
  std::size_t lanes() const { return batch * channels; }

  // Reshape reusing capacity; contents are unspecified until overwritten.
  void ensure(std::size_t b, std::size_t c, std::size_t l) {
    DRF_CHECK(b >= 1 && c >= 1 && l >= 1, InvalidValue,
              "RealSeq: all dims must be >= 1");
    batch = b;
    channels = c;
    length = l;
    v.resize(b * c * l);
  }

  T* row(std::size_t b, std::size_t c) { return v.data() + (b * channels + c) * length; }
  const T* row(std::size_t b, std::size_t c) const {
    return v.data() + (b * channels + c) * length;
  }
  T* lane(std::size_t i) { return v.data() + i * length; }
  const T* lane(std::size_t i) const { return v.data() + i * length; }

  T& at(std::size_t b, std::size_t c, std::size_t t) {
    return v[(b * channels + c) * length + t];
  }
  T at(std::size_t b, std::size_t c, std::size_t t) const {
    return v[(b * channels + c) * length + t];
  }
};

// Complex branch states over time, (batch, neurons, branches, time); real and
// imaginary planes are stored separately because the spike path only ever
// reads the real part.
template <class T>
struct ComplexStateSeq {
  std::size_t batch = 0, neurons = 0, branches = 0, length = 0;
  std::vector<T> re, im;

  ComplexStateSeq() = default;
  ComplexStateSeq(std::size_t b, std::size_t n, std::size_t br, std::size_t l)
      : batch(b),
        neurons(n),
        branches(br),
        length(l),
        re(b * n * br * l, T(0)),
        im(b * n * br * l, T(0)) {
    DRF_CHECK(b >= 1 && n >= 1 && br >= 1 && l >= 1, InvalidValue,
              "ComplexStateSeq: all dims must be >= 1");
  }

  std::size_t size() const { return re.size(); }

  void ensure(std::size_t b, std::size_t n, std::size_t br, std::size_t l) {
    DRF_CHECK(b >= 1 && n >= 1 && br >= 1 && l >= 1, InvalidValue,
              "ComplexStateSeq: all dims must be >= 1");
    batch = b;
    neurons = n;
    branches = br;
    length = l;
    re.resize(b * n * br * l);
    im.resize(b * n * br * l);
  }

  std::size_t offset(std::size_t b, std::size_t n, std::size_t br) const {
    return ((b * neurons + n) * branches + br) * length;
  }
  T* re_lane(std::size_t b, std::size_t n, std::size_t br) {
    return re.data() + offset(b, n, br);
  }
  T* im_lane(std::size_t b, std::size_t n, std::size_t br) {
    return im.data() + offset(b, n, br);
  }
  const T* re_lane(std::size_t b, std::size_t n, std::size_t br) const {
    return re.data() + offset(b, n, br);
  }
  const T* im_lane(std::size_t b, std::size_t n, std::size_t br) const {
    return im.data() + offset(b, n, br);
  }

  void check_finite() const {
    detail::check_finite(re, "ComplexStateSeq.re");
    detail::check_finite(im, "ComplexStateSeq.im");
  }
};

// Strictly binary spike train, (batch, neurons, time).
struct SpikeTrain {
  std::size_t batch = 0, neurons = 0, length = 0;
  std::vector<std::uint8_t> v;

  SpikeTrain() = default;
  SpikeTrain(std::size_t b, std::size_t n, std::size_t l)
      : batch(b), neurons(n), length(l), v(b * n * l, 0) {
    DRF_CHECK(b >= 1 && n >= 1 && l >= 1, InvalidValue,
              "SpikeTrain: all dims must be >= 1");
  }

  std::size_t size() const { return v.size(); }
  std::uint8_t* lane(std::size_t b, std::size_t n) {
    return v.data() + (b * neurons + n) * length;
  }
  const std::uint8_t* lane(std::size_t b, std::size_t n) const {
    return v.data() + (b * neurons + n) * length;
  }
  std::uint8_t& at(std::size_t b, std::size_t n, std::size_t t) {
    return v[(b * neurons + n) * length + t];
  }
  std::uint8_t at(std::size_t b, std::size_t n, std::size_t t) const {
    return v[(b * neurons + n) * length + t];
  }

  void check_binary() const {
    for (const std::uint8_t s : v) {
      DRF_CHECK(s == 0 || s == 1, InvalidValue, "SpikeTrain: values must be 0/1");
    }
  }

  std::size_t count() const {
    std::size_t c = 0;
    for (const std::uint8_t s : v) c += s;
    return c;
  }
};

using RealSequence = RealSeq<double>;
using ComplexStateSequence = ComplexStateSeq<double>;

}  // namespace drf
