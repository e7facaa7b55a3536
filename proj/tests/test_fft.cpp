#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "drf/core/rng.hpp"
#include "drf/parallel/fft.hpp"

using namespace drf;

namespace {

// Quadratic-time reference transform in long double.
void naive_dft(const std::vector<double>& re, const std::vector<double>& im,
               std::vector<double>& out_re, std::vector<double>& out_im,
               bool inverse) {
  const std::size_t m = re.size();
  out_re.assign(m, 0.0);
  out_im.assign(m, 0.0);
  const long double pi = 3.141592653589793238462643383279503L;
  for (std::size_t k = 0; k < m; ++k) {
    long double ar = 0, ai = 0;
    for (std::size_t j = 0; j < m; ++j) {
      const long double ang =
          (inverse ? 2.0L : -2.0L) * pi * static_cast<long double>(k * j % m) / m;
      const long double c = std::cos(ang), s = std::sin(ang);
      ar += re[j] * c - im[j] * s;
      ai += re[j] * s + im[j] * c;
    }
    if (inverse) {
      ar /= m;
      ai /= m;
    }
    out_re[k] = static_cast<double>(ar);
    out_im[k] = static_cast<double>(ai);
  }
}

}  // namespace

TEST_CASE("plan: transform size is smallest power of two >= 2L-1") {
  CHECK(FftPlan<double>(1).size == 1);
  CHECK(FftPlan<double>(2).size == 4);
  CHECK(FftPlan<double>(3).size == 8);
  CHECK(FftPlan<double>(257).size == 1024);
  CHECK(FftPlan<double>(1024).size == 2048);
  for (std::size_t l : {5ul, 64ul, 100ul, 4097ul}) {
    const FftPlan<double> p(l);
    CHECK(p.size >= 2 * l - 1);
    CHECK((p.size & (p.size - 1)) == 0);
  }
}

TEST_CASE("fft: forward matches naive DFT up to 4096") {
  Rng rng(11);
  for (std::size_t l : {2ul, 3ul, 9ul, 65ul, 700ul, 2049ul}) {
    const FftPlan<double> plan(l);
    if (plan.size > 4096) continue;
    std::vector<double> re(plan.size), im(plan.size);
    for (auto& x : re) x = rng.uniform(-1, 1);
    for (auto& x : im) x = rng.uniform(-1, 1);
    std::vector<double> ref_re, ref_im;
    naive_dft(re, im, ref_re, ref_im, false);
    fft_forward(plan, re.data(), im.data());
    double err = 0;
    for (std::size_t i = 0; i < plan.size; ++i) {
      err = std::max(err, std::abs(re[i] - ref_re[i]));
      err = std::max(err, std::abs(im[i] - ref_im[i]));
    }
    CHECK(err < 1e-10);
  }
}

TEST_CASE("fft: size-4096 transform stays within 1e-10 of naive DFT") {
  Rng rng(12);
  const FftPlan<double> plan(2048);  // size 4096
  REQUIRE(plan.size == 4096);
  std::vector<double> re(plan.size), im(plan.size);
  for (auto& x : re) x = rng.uniform(-1, 1);
  for (auto& x : im) x = rng.uniform(-1, 1);
  std::vector<double> ref_re, ref_im;
  naive_dft(re, im, ref_re, ref_im, false);
  fft_forward(plan, re.data(), im.data());
  double err = 0;
  for (std::size_t i = 0; i < plan.size; ++i) {
    err = std::max(err, std::abs(re[i] - ref_re[i]));
    err = std::max(err, std::abs(im[i] - ref_im[i]));
  }
  CHECK(err < 1e-10);
}

TEST_CASE("fft: inverse undoes forward") {
  Rng rng(13);
  const FftPlan<double> plan(500);
  std::vector<double> re(plan.size), im(plan.size);
  for (auto& x : re) x = rng.normal();
  for (auto& x : im) x = rng.normal();
  const auto re0 = re, im0 = im;
  fft_forward(plan, re.data(), im.data());
  fft_inverse(plan, re.data(), im.data());
  double err = 0;
  for (std::size_t i = 0; i < plan.size; ++i) {
    err = std::max(err, std::abs(re[i] - re0[i]));
    err = std::max(err, std::abs(im[i] - im0[i]));
  }
  CHECK(err < 1e-12);
}

TEST_CASE("fft: impulse transforms to all-ones") {
  const FftPlan<double> plan(8);
  std::vector<double> re(plan.size, 0.0), im(plan.size, 0.0);
  re[0] = 1.0;
  fft_forward(plan, re.data(), im.data());
  for (std::size_t i = 0; i < plan.size; ++i) {
    CHECK(re[i] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(im[i]) < 1e-14);
  }
}

TEST_CASE("fft: f32 plan round-trips with float-scale error") {
  Rng rng(14);
  const FftPlan<float> plan(300);
  std::vector<float> re(plan.size), im(plan.size);
  for (auto& x : re) x = static_cast<float>(rng.uniform(-1, 1));
  for (auto& x : im) x = static_cast<float>(rng.uniform(-1, 1));
  const auto re0 = re, im0 = im;
  fft_forward(plan, re.data(), im.data());
  fft_inverse(plan, re.data(), im.data());
  float err = 0;
  for (std::size_t i = 0; i < plan.size; ++i)
    err = std::max(err, std::abs(re[i] - re0[i]) + std::abs(im[i] - im0[i]));
  CHECK(err < 1e-5f);
}
