#include "tsgan/dsp.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"

namespace tsgan::dsp {
namespace {

std::vector<double> tone(std::size_t n, double freq, double rate, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(2 * std::numbers::pi * freq * i / rate + phase);
  return x;
}

TEST(FftMagnitude, ImpulseIsFlat) {
  std::vector<double> x(8, 0.0);
  x[0] = 1.0;
  const auto s = fft_magnitude(x, 8.0);
  ASSERT_EQ(s.magnitudes.size(), 5u);
  for (double m : s.magnitudes) EXPECT_EQ(m, 1.0);
  EXPECT_EQ(s.bin_hz, 1.0);
}

TEST(FftMagnitude, SingleBinSinusoid) {
  const auto s = fft_magnitude(tone(64, 3.0, 64.0), 64.0);
  for (std::size_t k = 0; k < s.magnitudes.size(); ++k) {
    if (k == 3) {
      EXPECT_NEAR(s.magnitudes[k], 32.0, 1e-9);
    } else {
      EXPECT_LT(s.magnitudes[k], 1e-9);
    }
  }
  EXPECT_EQ(dominant_frequency(s), 3.0);
}

TEST(FftMagnitude, MatchesNaiveDftOnRandomWindow) {
  std::mt19937_64 rng(77);
  const auto x = test::random_vector(4096, rng);
  const auto fast = fft(x);
  const auto slow = test::naive_dft(x);
  double worst = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) worst = std::max(worst, std::abs(fast[k] - slow[k]));
  EXPECT_LT(worst, 1e-6);
}

TEST(FftMagnitude, RejectsNonPowerOfTwo) {
  EXPECT_THROW(fft_magnitude(std::vector<double>(100, 0.0), 1.0), ParameterError);
  EXPECT_THROW(fft_magnitude(std::vector<double>{}, 1.0), ParameterError);
}

TEST(Fft, ParsevalAndLinearity) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = test::random_vector(256, rng), b = test::random_vector(256, rng);
    const auto fa = fft(a), fb = fft(b);
    double energy = 0.0, spectral = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      energy += a[i] * a[i];
      spectral += std::norm(fa[i]);
    }
    EXPECT_NEAR(spectral / 256.0, energy, 1e-9 * energy);

    std::vector<double> sum(256);
    for (std::size_t i = 0; i < 256; ++i) sum[i] = a[i] + b[i];
    const auto fs = fft(sum);
    for (std::size_t k = 0; k < 256; ++k) EXPECT_LT(std::abs(fs[k] - (fa[k] + fb[k])), 1e-9);
  }
}

TEST(DominantFrequency, TiesGoToLowestBin) {
  Spectrum s{{9.0, 1.0, 1.0, 1.0, 1.0}, 2.0, 8};
  EXPECT_EQ(dominant_frequency(s), 2.0);
}

TEST(Lowpass, ConstantPassesWithUnitGain) {
  const auto h = design_lowpass(10.0, 256.0, 101);
  EXPECT_NEAR(std::accumulate(h.begin(), h.end(), 0.0), 1.0, 1e-12);
  const auto y = lowpass_fir(std::vector<double>(300, 2.5), 10.0, 256.0, 101);
  ASSERT_EQ(y.size(), 300u);
  for (double v : y) EXPECT_NEAR(v, 2.5, 1e-6 * 2.5);
}

TEST(Lowpass, StopbandAndPassband) {
  const double rate = 256.0, cutoff = 10.0;
  const auto h = design_lowpass(cutoff, rate, 101);
  // Designed response first, then the realised attenuation on a long tone.
  EXPECT_LE(frequency_response(h, 4 * cutoff, rate), std::pow(10.0, -30.0 / 20.0));
  EXPECT_NEAR(frequency_response(h, cutoff / 4, rate), 1.0, 0.05);

  const auto stop = tone(2048, 4 * cutoff, rate);
  const auto pass = tone(2048, cutoff / 4, rate);
  const auto ys = apply_fir(stop, h), yp = apply_fir(pass, h);
  // Interior only: edge replication is not a tone.
  EXPECT_LE(test::rms(ys, 100, 1948), test::rms(stop, 100, 1948) * std::pow(10.0, -30.0 / 20.0));
  EXPECT_NEAR(test::rms(yp, 100, 1948) / test::rms(pass, 100, 1948), 1.0, 0.05);
}

TEST(Lowpass, RejectsBadDesigns) {
  EXPECT_THROW(design_lowpass(128.0, 256.0, 101), ParameterError);
  EXPECT_THROW(design_lowpass(10.0, 256.0, 100), ParameterError);
}

TEST(Lowpass, ShiftEquivariantAwayFromEdges) {
  const double rate = 256.0;
  const auto x = tone(1024, 3.0, rate, 0.3);
  std::vector<double> shifted(1024);
  const std::size_t shift = 17;
  for (std::size_t i = 0; i < 1024; ++i) shifted[i] = i >= shift ? x[i - shift] : x[0];
  const auto yx = lowpass_fir(x, 10.0, rate), ys = lowpass_fir(shifted, 10.0, rate);
  for (std::size_t i = 200; i < 800; ++i) EXPECT_NEAR(ys[i], yx[i - shift], 1e-6);
}

TEST(Lowpass, SecondPassBarelyChangesBandlimitedSignal) {
  const double rate = 256.0;
  // Band well clear of the ~0.4% passband ripple near the transition.
  auto x = tone(1024, 1.0, rate);
  const auto b = tone(1024, 2.0, rate, 1.0);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += 0.5 * b[i];
  const auto once = lowpass_fir(x, 60.0, rate);
  const auto twice = lowpass_fir(once, 60.0, rate);
  std::vector<double> diff(1024);
  for (std::size_t i = 0; i < 1024; ++i) diff[i] = twice[i] - once[i];
  EXPECT_LT(test::rms(diff, 100, 924), 1e-3 * test::rms(once, 100, 924));
}

}  // namespace
}  // namespace tsgan::dsp
