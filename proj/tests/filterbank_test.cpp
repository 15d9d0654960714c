#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gaborwave/filterbank.hpp"
#include "test_support.hpp"

namespace gaborwave {
namespace {

// sqrt(3 ln 10 / 10) / (pi * bandwidth), evaluated independently.
constexpr double kSigmaBand01 = 2.645565990819502;
constexpr double kSigmaBand005 = 5.291131981639004;
constexpr double kMinus3dB = 0.7079457843841379;  // 10^(-3/20)

Cutoffs random_cutoffs(std::mt19937_64& rng, double min_bw = 0.02, double max_bw = 0.2) {
  std::uniform_real_distribution<double> bw(min_bw, max_bw);
  const double b = bw(rng);
  std::uniform_real_distribution<double> lo(0.01, 0.49 - b);
  const double f1 = lo(rng);
  return {f1, f1 + b};
}

TEST(CutoffsToGabor, Examples) {
  const auto p = cutoffs_to_gabor({0.1, 0.2});
  EXPECT_NEAR(p.f0, 0.15, 1e-15);
  EXPECT_NEAR(p.sigma, kSigmaBand01, 1e-12);
  EXPECT_NEAR(cutoffs_to_gabor({0.1, 0.15}).sigma, kSigmaBand005, 1e-12);
  EXPECT_NEAR(kGaborA, 0.831129068134555, 1e-14);
}

TEST(CutoffsToGabor, RejectsInvertedBand) {
  EXPECT_THROW(cutoffs_to_gabor({0.2, 0.2}), ParameterError);
  EXPECT_THROW(cutoffs_to_gabor({0.3, 0.2}), ParameterError);
}

TEST(SampleGabor, CentreTapAndConjugateSymmetry) {
  const Cutoffs c{0.1, 0.2};
  const auto s = sample_gabor(c, 129);
  ASSERT_EQ(s.taps(), 129u);
  EXPECT_NEAR(s.coeffs[s.center()].real(), 1.0 / (std::sqrt(2.0 * std::numbers::pi) * kSigmaBand01), 1e-14);
  EXPECT_EQ(s.coeffs[s.center()].imag(), 0.0);
  for (std::size_t n = 1; n <= s.center(); ++n) {
    const Complex a = s.coeffs[s.center() + n], b = s.coeffs[s.center() - n];
    EXPECT_NEAR(a.real(), b.real(), 1e-15);
    EXPECT_NEAR(a.imag(), -b.imag(), 1e-15);
  }
}

TEST(SampleGabor, SpectrumPeaksAtCentreFrequency) {
  const auto s = sample_gabor({0.1, 0.2}, 129);
  EXPECT_LE(std::abs(testing::dft_peak_frequency(s.coeffs, 1024) - 0.15), 1.0 / 1024.0);
}

TEST(SampleGabor, RejectsEvenOrTinyTapCounts) {
  EXPECT_THROW(sample_gabor({0.1, 0.2}, 128), ParameterError);
  EXPECT_THROW(sample_gabor({0.1, 0.2}, 1), ParameterError);
  EXPECT_THROW(sample_gabor_real({0.1, 0.2}, 64), ParameterError);
}

TEST(SampleGaborReal, RealPartEvenAndSymmetricSpectrum) {
  const Cutoffs c{0.1, 0.2};
  const auto g = sample_gabor(c, 129);
  const auto r = sample_gabor_real(c, 129);
  for (std::size_t i = 0; i < 129; ++i) {
    EXPECT_EQ(r.coeffs[i].real(), g.coeffs[i].real());
    EXPECT_EQ(r.coeffs[i].imag(), 0.0);
  }
  for (std::size_t n = 1; n <= r.center(); ++n) EXPECT_EQ(r.coeffs[r.center() + n], r.coeffs[r.center() - n]);
  EXPECT_NEAR(std::abs(testing::dtft(r.coeffs, 0.15)), std::abs(testing::dtft(r.coeffs, -0.15)), 1e-13);
}

TEST(SampleSinc, CentreSymmetryAndStopband) {
  const Cutoffs c{0.1, 0.2};
  const auto raw = sample_sinc(c, 129, false);
  EXPECT_NEAR(raw.coeffs[raw.center()].real(), 0.2, 1e-15);
  for (std::size_t n = 1; n <= raw.center(); ++n) {
    EXPECT_NEAR(raw.coeffs[raw.center() + n].real(), raw.coeffs[raw.center() - n].real(), 1e-15);
  }
  const auto win = sample_sinc(c, 129, true);
  const double pass = std::abs(testing::dtft(win.coeffs, 0.15));
  EXPECT_GE(20.0 * std::log10(pass / std::abs(testing::dtft(win.coeffs, 0.05))), 20.0);
  EXPECT_GE(20.0 * std::log10(pass / std::abs(testing::dtft(win.coeffs, 0.30))), 20.0);
  EXPECT_THROW(sample_sinc(c, 10, true), ParameterError);
}

TEST(GaborResponse, PeakEdgesAndMonotoneTail) {
  const Cutoffs c{0.1, 0.2};
  const std::vector<double> f{0.15, 0.1, 0.2};
  const auto g = gabor_frequency_response(c, f);
  EXPECT_DOUBLE_EQ(g[0], 1.0);
  EXPECT_NEAR(g[1], kMinus3dB, 1e-12);
  EXPECT_NEAR(g[2], kMinus3dB, 1e-12);
  const auto grid = frequency_grid(501);
  const auto resp = gabor_frequency_response(c, grid);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (grid[i - 1] >= 0.15) {
      EXPECT_LE(resp[i], resp[i - 1]);
    }
  }
}

TEST(GaborResponse, Minus3dBCalibrationForRandomCutoffs) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 100; ++i) {
    const Cutoffs c = random_cutoffs(rng, 0.001, 0.45);
    const std::vector<double> edges{c.f1, c.f2};
    const auto g = gabor_frequency_response(c, edges);
    EXPECT_NEAR(g[0], kMinus3dB, 1e-12);
    EXPECT_NEAR(g[1], kMinus3dB, 1e-12);
  }
}

TEST(Localization, AnalyticGaborValues) {
  const auto rep = localization_and_spread(sample_gabor({0.1, 0.2}, 129), 4096);
  // sigma^2 / 2 and 1 / (8 pi^2 sigma^2)
  EXPECT_NEAR(rep.v_time, 3.4995097058903863, 1e-6);
  EXPECT_NEAR(rep.v_freq, 1.8095603412635493e-3, 1e-9);
  EXPECT_NEAR(rep.e_time, 0.0, 1e-12);
  EXPECT_NEAR(rep.e_freq, 0.15, 1e-9);
  EXPECT_NEAR(rep.product / kUncertaintyBound, 1.0, 0.05);
  EXPECT_DOUBLE_EQ(rep.product, rep.v_time * rep.v_freq);
}

TEST(Localization, RealGaborCentredInTimeAndFrequency) {
  const auto rep = localization_and_spread(sample_gabor_real({0.1, 0.2}, 129), 4096);
  EXPECT_NEAR(rep.e_time, 0.0, 1e-12);
  EXPECT_NEAR(rep.e_freq, 0.0, 1e-9);
}

TEST(Localization, SincExceedsBoundAndGabor) {
  const auto gabor = localization_and_spread(sample_gabor({0.1, 0.2}, 129), 4096);
  const auto sinc = localization_and_spread(sample_sinc({0.1, 0.2}, 129, true), 4096);
  EXPECT_GT(sinc.product, kUncertaintyBound);
  EXPECT_GT(sinc.product, gabor.product);
}

TEST(Localization, Errors) {
  EXPECT_THROW(localization_and_spread(sample_gabor({0.1, 0.2}, 129), 1000), ParameterError);
  SampledFilter zero{FilterFamily::Sinc, ComplexTensor({9})};
  EXPECT_THROW(localization_and_spread(zero, 128), NumericError);
}

TEST(Localization, UncertaintyInequalityForRandomCutoffs) {
  std::mt19937_64 rng(12);
  for (auto family : {FilterFamily::Sinc, FilterFamily::GaborReal, FilterFamily::GaborComplex}) {
    for (int i = 0; i < 50; ++i) {
      const Cutoffs c = random_cutoffs(rng);
      const auto rep = localization_and_spread(sample_filter(family, c, 129), 4096);
      EXPECT_GE(rep.product, kUncertaintyBound * (1.0 - 0.05)) << to_string(family) << " " << c.f1 << " " << c.f2;
      EXPECT_GE(rep.v_time, 0.0);
      EXPECT_GE(rep.v_freq, 0.0);
    }
  }
}

TEST(Localization, GaussianOptimality) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 20; ++i) {
    // Keep the Gaussian spectrum clear of the +-0.5 wrap.
    std::uniform_real_distribution<double> bw(0.03, 0.12);
    const double b = bw(rng);
    std::uniform_real_distribution<double> centre(b, 0.5 - 2.5 * b);
    const double f0 = centre(rng);
    const Cutoffs c{f0 - b / 2, f0 + b / 2};
    const auto g = localization_and_spread(sample_gabor(c, 129), 4096);
    const auto s = localization_and_spread(sample_sinc(c, 129, true), 4096);
    EXPECT_NEAR(g.product / kUncertaintyBound, 1.0, 0.05) << c.f1 << " " << c.f2;
    EXPECT_LT(g.product, s.product);
  }
}

TEST(AnalyticSignal, NegativeFrequencyEnergyIsSmall) {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> bw(0.01, 0.06);
  for (int i = 0; i < 20; ++i) {
    const double b = bw(rng);
    std::uniform_real_distribution<double> centre(3.0 * b, 0.5 - 3.0 * b);
    const double f0 = centre(rng);
    const auto s = sample_gabor({f0 - b / 2, f0 + b / 2}, 129);
    const auto X = kernel_spectrum(s, 2048);
    double neg = 0.0, total = 0.0;
    for (std::size_t k = 0; k < X.size(); ++k) {
      total += std::norm(X[k]);
      if (bin_frequency(k, X.size()) < 0.0) neg += std::norm(X[k]);
    }
    EXPECT_LT(neg / total, 1e-3) << "f0=" << f0 << " bw=" << b;
  }
}

TEST(KernelSpectrum, MatchesDirectTransform) {
  const auto s = sample_gabor({0.05, 0.11}, 33);
  const auto X = kernel_spectrum(s, 512);
  for (std::size_t k = 0; k < 512; k += 17) {
    EXPECT_NEAR(std::abs(X[k] - testing::dtft(s.coeffs, bin_frequency(k, 512))), 0.0, 1e-12);
  }
}

TEST(SampleBank, GradientsWithRespectToRawParameters) {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> r1(0.02, 0.2), r2(0.02, 0.15);
  for (auto family : {FilterFamily::Sinc, FilterFamily::GaborReal, FilterFamily::GaborComplex}) {
    for (int trial = 0; trial < 10; ++trial) {
      ComplexTensor raw({3, 2});
      for (std::size_t i = 0; i < 3; ++i) {
        raw[2 * i] = r1(rng);
        raw[2 * i + 1] = r2(rng);
      }
      const double err = testing::op_gradient_error(
          {{raw, true}}, [family](auto& v) { return sample_bank(cutoffs_from_raw(v[0]), family, 31); },
          static_cast<std::uint64_t>(trial));
      EXPECT_LT(err, 1e-4) << to_string(family);
    }
  }
}

TEST(SampleBank, ValuesMatchDirectSampling) {
  Tape tape;
  ComplexTensor c({2, 2});
  c[0] = 0.1;
  c[1] = 0.2;
  c[2] = 0.3;
  c[3] = 0.35;
  const auto& k = value_of(sample_bank(tape.constant(c), FilterFamily::GaborComplex, 21));
  ASSERT_EQ(k.shape(), Shape({2, 1, 21}));
  const auto a = sample_gabor({0.1, 0.2}, 21);
  const auto b = sample_gabor({0.3, 0.35}, 21);
  for (std::size_t i = 0; i < 21; ++i) {
    EXPECT_EQ(k[i], a.coeffs[i]);
    EXPECT_EQ(k[21 + i], b.coeffs[i]);
  }
}

TEST(ComposeWideBand, SingleSubBandIsTheWideFilter) {
  const Cutoffs target{0.05, 0.25};
  const auto one = compose_wide_band(target, 1, 129);
  const auto g = sample_gabor(target, 129);
  for (std::size_t i = 0; i < 129; ++i) EXPECT_EQ(one.filter.coeffs[i], g.coeffs[i]);
  EXPECT_THROW(compose_wide_band(target, 0, 129), ParameterError);
}

TEST(ComposeWideBand, FlattensThePassBand) {
  const Cutoffs target{0.05, 0.25};
  const auto comp = compose_wide_band(target, 4, 129, 512);
  ASSERT_EQ(comp.sub_bands.size(), 4u);
  EXPECT_NEAR(comp.sub_bands.front().f1, 0.05, 1e-15);
  EXPECT_EQ(comp.sub_bands.back().f2, 0.25);
  for (std::size_t i = 1; i < 4; ++i) EXPECT_EQ(comp.sub_bands[i].f1, comp.sub_bands[i - 1].f2);
  const double eps = comp.grid[1] - comp.grid[0];
  const double summed = band_minimum(comp.grid, comp.summed_response, target.f1 + eps, target.f2 - eps);
  const double single = band_minimum(comp.grid, comp.single_response, target.f1 + eps, target.f2 - eps);
  // Grid oracle values: 0.78697 and 0.71511.
  EXPECT_NEAR(summed, 0.7869738862255138, 1e-9);
  EXPECT_NEAR(single, 0.7151066529800081, 1e-9);
  EXPECT_GT(summed, single);
  // Centre of the band, relative to the single filter's unit peak.
  const std::vector<double> centre{0.15};
  double at_centre = 0.0;
  for (const auto& sb : comp.sub_bands) at_centre += gabor_frequency_response(sb, centre)[0];
  EXPECT_GE(at_centre, 1.0);
  EXPECT_LE(at_centre, 4.0);
}

TEST(MelInit, SingleFilterSpansFullRange) {
  const auto c = init_cutoffs_mel(1, 16000.0);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_DOUBLE_EQ(c[0].f1, 30.0 / 16000.0);
  EXPECT_DOUBLE_EQ(c[0].f2, 0.5);
}

TEST(MelInit, ValidContiguousAndWideningBands) {
  const auto c = init_cutoffs_mel(128, 16000.0);
  ASSERT_EQ(c.size(), 128u);
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_TRUE(c[i].valid());
    if (i > 0) {
      EXPECT_EQ(c[i].f1, c[i - 1].f2);
      EXPECT_GE(c[i].bandwidth(), c[i - 1].bandwidth());
      EXPECT_GT(c[i].center(), c[i - 1].center());
    }
  }
  // Edges of a 4-filter bank at 16 kHz, from the mel formula.
  const auto four = init_cutoffs_mel(4, 16000.0);
  EXPECT_NEAR(four[1].f1 * 16000.0, 656.35058252, 1e-6);
  EXPECT_NEAR(four[2].f1 * 16000.0, 1820.11904481, 1e-6);
  EXPECT_NEAR(four[3].f1 * 16000.0, 3982.41771843, 1e-6);
}

TEST(LearnableCutoffs, ZeroRaw) {
  const auto c = learnable_cutoffs(0.0, 0.0);
  EXPECT_DOUBLE_EQ(c.f1, kMinBand);
  EXPECT_DOUBLE_EQ(c.f2, 2.0 * kMinBand);
}

TEST(LearnableCutoffs, AlwaysValidForMillionRandomPairs) {
  std::mt19937_64 rng(16);
  std::normal_distribution<double> small(0.0, 0.3);
  std::uniform_real_distribution<double> log_scale(-8.0, 6.0);
  std::bernoulli_distribution coin(0.5);
  for (int i = 0; i < 1'000'000; ++i) {
    double a, b;
    if (i % 2 == 0) {
      a = small(rng);
      b = small(rng);
    } else {
      a = (coin(rng) ? 1 : -1) * std::pow(10.0, log_scale(rng));
      b = (coin(rng) ? 1 : -1) * std::pow(10.0, log_scale(rng));
    }
    const auto c = learnable_cutoffs(a, b);
    ASSERT_TRUE(c.valid()) << a << " " << b << " -> " << c.f1 << " " << c.f2;
  }
}

TEST(LearnableCutoffs, UnitSlopeAwayFromCap) {
  for (double raw2 : {0.05, -0.05, 0.2, -0.3}) {
    const auto j = learnable_cutoffs_with_jacobian(0.1, raw2);
    EXPECT_DOUBLE_EQ(std::abs(j.df2_draw2), 1.0);
    EXPECT_DOUBLE_EQ(j.df2_draw2, raw2 > 0 ? 1.0 : -1.0);
  }
  // Near Nyquist the slope decays smoothly instead of clipping.
  const auto sat = learnable_cutoffs_with_jacobian(0.1, 0.5);
  EXPECT_GT(sat.df2_draw2, 0.0);
  EXPECT_LT(sat.df2_draw2, 1.0);
}

TEST(LearnableCutoffs, InverseReproducesCutoffs) {
  for (const auto& c : init_cutoffs_mel(40, 16000.0)) {
    const auto [r1, r2] = raw_from_cutoffs(c);
    const auto back = learnable_cutoffs(r1, r2);
    EXPECT_NEAR(back.f1, c.f1, 1e-12);
    EXPECT_NEAR(back.f2, c.f2, 1e-12);
  }
}

TEST(LearnableCutoffs, CutoffGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> r(0.01, 0.2);
  for (int trial = 0; trial < 50; ++trial) {
    ComplexTensor raw({4, 2});
    for (auto& v : raw.data()) v = (trial % 2 ? -1.0 : 1.0) * r(rng);
    EXPECT_LT(testing::op_gradient_error({{raw, true}}, [](auto& v) { return cutoffs_from_raw(v[0]); },
                                         static_cast<std::uint64_t>(trial), 1e-6),
              1e-4);
  }
}

}  // namespace
}  // namespace gaborwave
