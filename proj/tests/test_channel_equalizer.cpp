#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>

#include "ecgbal/channel_equalizer.hpp"
#include "ecgbal/error.hpp"
#include "test_helpers.hpp"

namespace ecgbal {
namespace {

EcgRecord constant_record(const std::vector<double>& levels, std::size_t length,
                          std::optional<std::size_t> label = 0) {
  std::vector<double> s;
  for (double v : levels) s.insert(s.end(), length, v);
  return EcgRecord("const", levels.size(), length, std::move(s), 500.0, label);
}

EcgRecord permute_channels(const EcgRecord& r, const std::vector<std::size_t>& perm) {
  std::vector<double> s;
  for (std::size_t c : perm) s.insert(s.end(), r.channel(c).begin(), r.channel(c).end());
  return r.with_samples(std::move(s));
}

// ---------------------------------------------------------------------------
// channel_stats

TEST(ChannelStats, IdenticalConstantChannels) {
  std::vector<EcgRecord> recs{constant_record({-1.5, -1.5, -1.5}, 10, 0),
                              constant_record({-1.5, -1.5, -1.5}, 10, 1)};
  const auto s = channel_stats(Dataset(recs, {"a", "b"}));
  for (double v : s.per_channel_rms) EXPECT_DOUBLE_EQ(v, 1.5);
  for (double v : s.per_channel_mean_power) EXPECT_DOUBLE_EQ(v, 1.5);
  for (const auto& row : s.per_class_scale) {
    ASSERT_TRUE(row);
    for (double v : *row) EXPECT_DOUBLE_EQ(v, 1.0);
  }
}

TEST(ChannelStats, LinearChannelsGiveScaleRatioTwo) {
  std::mt19937_64 rng(4);
  std::vector<EcgRecord> recs;
  for (std::size_t i = 0; i < 6; ++i) {
    EcgRecord base = testing::random_record(1, 200, rng, {}, i % 3);
    std::vector<double> s(base.samples().begin(), base.samples().end());
    for (double v : base.channel(0)) s.push_back(2.0 * v);
    recs.emplace_back("r" + std::to_string(i), 2, 200, std::move(s), 500.0, i % 3);
  }
  const auto s = channel_stats(Dataset(recs, {"a", "b", "c"}));
  for (const auto& row : s.per_class_scale) {
    ASSERT_TRUE(row);
    EXPECT_NEAR((*row)[1] / (*row)[0], 2.0, 1e-12);
  }
}

TEST(ChannelStats, SyntheticGainsMatchDirectRms) {
  SynthSpec spec;
  spec.num_classes = 3;
  spec.channels = 3;
  spec.length = 1000;
  spec.per_class_counts = {4, 3, 2};
  spec.channel_gain = {1.0, 0.1, 0.01};
  spec.noise_sd = 0.0005;
  spec.seed = 8;
  const Dataset d = generate_synthetic(spec);
  const auto s = channel_stats(d);

  // Oracle: pooled RMS straight from the arrays.
  std::vector<long double> ss(3, 0.0L);
  std::size_t n = 0;
  for (const auto& r : d.records()) {
    n += r.length();
    for (std::size_t c = 0; c < 3; ++c)
      for (double v : r.channel(c)) ss[c] += static_cast<long double>(v) * v;
  }
  for (std::size_t c = 0; c < 3; ++c) {
    const double oracle = static_cast<double>(std::sqrt(ss[c] / n));
    EXPECT_NEAR(s.per_channel_rms[c], oracle, 1e-12 * oracle);
  }
  EXPECT_NEAR(s.per_channel_rms[1] / s.per_channel_rms[0], 0.1, 0.01);
  EXPECT_NEAR(s.per_channel_rms[2] / s.per_channel_rms[0], 0.01, 0.001);
}

TEST(ChannelStats, ClassWeightedGrandMeanIsOne) {
  std::mt19937_64 rng(10);
  std::vector<EcgRecord> recs;
  const std::size_t labels[] = {0, 0, 0, 1, 2, 2};
  for (std::size_t i = 0; i < 6; ++i) {
    recs.push_back(testing::random_record(4, 64, rng, {3.0, 1.0, 0.2, 0.05 * (i + 1)}, labels[i]));
  }
  const Dataset d(recs, {"a", "b", "c", "empty"});
  const auto s = channel_stats(d);
  const auto hist = d.class_histogram();
  double weighted = 0.0;
  for (std::size_t m = 0; m < 3; ++m) {
    ASSERT_TRUE(s.per_class_scale[m]);
    const auto& row = *s.per_class_scale[m];
    weighted += static_cast<double>(hist[m]) / 6.0 * std::accumulate(row.begin(), row.end(), 0.0) / 4.0;
  }
  EXPECT_NEAR(weighted, 1.0, 1e-9);
  EXPECT_FALSE(s.per_class_scale[3]) << "empty class must stay undefined";
}

// ---------------------------------------------------------------------------
// cme_factors

TEST(CmeFactors, EqualMagnitudesGiveUniformFactors) {
  std::mt19937_64 rng(12);
  const EcgRecord r = constant_record({2.0, -2.0, 2.0, -2.0, 2.0}, 30);
  for (double k : cme_factors(r).k) EXPECT_DOUBLE_EQ(k, 0.2);
}

TEST(CmeFactors, TwoChannelReferenceValues) {
  // RMS of constant channels 1 and 2 is exactly 1 and 2.
  const auto k = cme_factors(constant_record({1.0, 2.0}, 50)).k;
  // exp(-1) / (exp(-1) + exp(-2)) evaluated at 50 digits.
  EXPECT_NEAR(k[0], 0.73105857863000487925, 1e-15);
  EXPECT_NEAR(k[1], 0.26894142136999512075, 1e-15);
}

TEST(CmeFactors, AllZeroRecordIsUniform) {
  const auto k = cme_factors(constant_record(std::vector<double>(12, 0.0), 100)).k;
  ASSERT_EQ(k.size(), 12u);
  for (double v : k) EXPECT_DOUBLE_EQ(v, 1.0 / 12.0);
}

TEST(CmeFactors, NoOverflowForHugeMagnitudes) {
  const auto k = cme_factors(constant_record({1e6, 1e6 + 1.0, 3e300}, 8)).k;
  for (double v : k) EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(k[0] + k[1] + k[2], 1.0, 1e-12);
  EXPECT_GT(k[0], k[1]);
}

TEST(CmeFactors, PropertiesOnRandomRecords) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> scale(0.01, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> scales(12);
    for (double& s : scales) s = scale(rng);
    const EcgRecord r = testing::random_record(12, 128, rng, scales);
    const auto k = cme_factors(r).k;
    double sum = 0.0;
    for (double v : k) {
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 1.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);

    std::vector<std::size_t> perm(12);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto kp = cme_factors(permute_channels(r, perm)).k;
    for (std::size_t i = 0; i < 12; ++i) EXPECT_EQ(kp[i], k[perm[i]]);

    for (std::size_t a = 0; a < 12; ++a)
      for (std::size_t b = 0; b < 12; ++b) {
        const double ga = channel_magnitude(r, a, MagnitudeStat::Rms);
        const double gb = channel_magnitude(r, b, MagnitudeStat::Rms);
        if (ga > gb + 1e-9) {
          EXPECT_LT(k[a], k[b]);
        }
      }
  }
}

TEST(CmeFactors, L2ModeDependsOnLengthRmsModeDoesNot) {
  const EcgRecord short_rec = constant_record({0.1, 0.2}, 100);
  const EcgRecord long_rec = constant_record({0.1, 0.2}, 400);
  EXPECT_NEAR(cme_factors(short_rec).k[0], cme_factors(long_rec).k[0], 1e-15);
  const double l2_short = cme_factors(short_rec, MagnitudeStat::L2Norm).k[0];
  const double l2_long = cme_factors(long_rec, MagnitudeStat::L2Norm).k[0];
  EXPECT_GT(l2_long, l2_short);
  // sqrt(100) * 0.1 = 1 and sqrt(100) * 0.2 = 2
  EXPECT_NEAR(l2_short, 0.73105857863000487925, 1e-12);
}

// ---------------------------------------------------------------------------
// scale_channels

TEST(ScaleChannels, UniformFactorScalesEveryChannel) {
  std::mt19937_64 rng(30);
  const EcgRecord r = testing::random_record(4, 50, rng, {}, 1);
  const EcgRecord out = scale_channels(r, {{0.25, 0.25, 0.25, 0.25}});
  EXPECT_EQ(out.label(), 1u);
  for (std::size_t i = 0; i < r.samples().size(); ++i) EXPECT_EQ(out.samples()[i], 0.25 * r.samples()[i]);
}

TEST(ScaleChannels, DominantFactorLeavesChannelNearlyUnchanged) {
  std::mt19937_64 rng(31);
  const EcgRecord r = testing::random_record(3, 50, rng);
  const double eps = 1e-9;
  const EcgRecord out = scale_channels(r, {{1.0 - 2 * eps, eps, eps}});
  EXPECT_NEAR(testing::rms(out.channel(0)) / testing::rms(r.channel(0)), 1.0, 1e-8);
  EXPECT_LT(testing::rms(out.channel(1)), 1e-8 * testing::rms(r.channel(1)) + 1e-300);
}

TEST(ScaleChannels, RmsRatioEqualsFactor) {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const EcgRecord r = testing::random_record(6, 200, rng);
    std::vector<double> k(6);
    for (double& v : k) v = u(rng) + 1e-3;
    const double total = std::accumulate(k.begin(), k.end(), 0.0);
    for (double& v : k) v /= total;
    const EcgRecord out = scale_channels(r, {k});
    for (std::size_t c = 0; c < 6; ++c) {
      // Oracle: elementwise reference multiply.
      for (std::size_t t = 0; t < r.length(); ++t) EXPECT_EQ(out.at(c, t), k[c] * r.at(c, t));
      EXPECT_NEAR(testing::rms(out.channel(c)) / testing::rms(r.channel(c)), k[c], 1e-12);
    }
  }
}

TEST(ScaleChannels, LengthMismatchThrows) {
  std::mt19937_64 rng(33);
  EXPECT_THROW(scale_channels(testing::random_record(3, 10, rng), {{0.5, 0.5}}), DimensionError);
}

// ---------------------------------------------------------------------------
// encode_image

TEST(EncodeImage, IdentityGridReproducesChannels) {
  std::mt19937_64 rng(40);
  const EcgRecord r = testing::random_record(5, 64, rng);
  const EncodedImage img = encode_image(r, 5, 64);
  for (std::size_t c = 0; c < 5; ++c)
    for (std::size_t t = 0; t < 64; ++t) EXPECT_EQ(img.at(c, t), r.at(c, t));
}

TEST(EncodeImage, ConstantChannelsStayConstant) {
  const EcgRecord r = constant_record({0.7, 0.7, -0.3}, 90);
  const EncodedImage img = encode_image(r, 9, 40);
  // Rows 0..4 interpolate between two 0.7 channels; row 8 is the -0.3 channel.
  for (std::size_t i = 0; i <= 4; ++i)
    for (std::size_t j = 0; j < 40; ++j) EXPECT_EQ(img.at(i, j), 0.7);
  for (std::size_t j = 0; j < 40; ++j) EXPECT_EQ(img.at(8, j), -0.3);
}

TEST(EncodeImage, PixelsStayWithinInputRange) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const EcgRecord r = testing::random_record(12, 300, rng, std::vector<double>(12, 5.0));
    const auto [lo, hi] = std::minmax_element(r.samples().begin(), r.samples().end());
    const EncodedImage img = encode_image(r, 37, 77);
    for (double p : img.pixels) {
      EXPECT_GE(p, *lo);
      EXPECT_LE(p, *hi);
    }
  }
}

std::size_t peak_bin(std::span<const double> x) {
  // Oracle: direct O(N^2) DFT magnitude, ignoring DC.
  const std::size_t n = x.size();
  std::size_t best = 1;
  double best_mag = -1.0;
  for (std::size_t k = 1; k <= n / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      acc += x[t] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * t) / static_cast<double>(n));
    }
    if (std::abs(acc) > best_mag) {
      best_mag = std::abs(acc);
      best = k;
    }
  }
  return best;
}

TEST(EncodeImage, HalvingWidthPreservesToneFrequency) {
  const std::size_t L = 1000;
  const double fs = 500.0, f0 = 12.0;
  std::vector<double> s(L);
  for (std::size_t t = 0; t < L; ++t) s[t] = std::sin(2.0 * std::numbers::pi * f0 * t / fs);
  const EcgRecord r("tone", 1, L, s, fs);
  const EncodedImage img = encode_image(r, 1, L / 2);

  const double in_hz = static_cast<double>(peak_bin(s)) * fs / L;
  const double out_fs = fs * static_cast<double>(L / 2 - 1) / static_cast<double>(L - 1);
  const double out_bin_hz = out_fs / static_cast<double>(L / 2);
  const double out_hz = static_cast<double>(peak_bin(img.pixels)) * out_bin_hz;
  EXPECT_NEAR(in_hz, f0, fs / L);
  EXPECT_LE(std::fabs(out_hz - in_hz), out_bin_hz);
}

TEST(EncodeImage, RejectsDegenerateShapes) {
  std::mt19937_64 rng(42);
  EXPECT_THROW(encode_image(testing::random_record(3, 1, rng), 3, 8), EncodeError);
  EXPECT_THROW(encode_image(testing::random_record(3, 10, rng), 2, 8), EncodeError);
}

// ---------------------------------------------------------------------------
// cme_pipeline

TEST(CmePipeline, EqualsCompositionOfStages) {
  std::mt19937_64 rng(50);
  const EcgRecord r = testing::random_record(12, 3000, rng, {}, 3);
  const PipelineConfig cfg;  // 500 / 2500 / 128 x 128
  const EncodedImage piped = cme_pipeline(r, cfg);
  const EcgRecord w = window_record(r, 500, 2500);
  const EncodedImage manual = encode_image(scale_channels(w, cme_factors(w)), 128, 128);
  EXPECT_EQ(piped.pixels, manual.pixels);
  EXPECT_EQ(piped.height, 128u);
  EXPECT_EQ(piped.width, 128u);
}

TEST(CmePipeline, DominantChannelGetsSmallestGain) {
  std::mt19937_64 rng(51);
  std::vector<double> scales(12, 0.1);
  scales[7] = 2.0;
  const EcgRecord r = testing::random_record(12, 3000, rng, scales);
  const EcgRecord w = window_record(r, 500, 2500);
  const auto k = cme_factors(w).k;
  EXPECT_EQ(std::min_element(k.begin(), k.end()) - k.begin(), 7);

  PipelineConfig cfg;
  cfg.height = 12;
  cfg.width = 2500;
  const EncodedImage img = cme_pipeline(r, cfg);
  for (std::size_t t = 0; t < 2500; t += 97) EXPECT_EQ(img.at(7, t), k[7] * w.at(7, t));
}

TEST(CmePipeline, ChannelPermutationPermutesRows) {
  std::mt19937_64 rng(52);
  std::vector<double> scales{1.0, 0.5, 0.25, 2.0, 0.1, 0.75};
  const EcgRecord r = testing::random_record(6, 3000, rng, scales);
  const std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
  PipelineConfig cfg;
  cfg.height = 6;
  cfg.width = 64;
  const EncodedImage a = cme_pipeline(r, cfg);
  const EncodedImage b = cme_pipeline(permute_channels(r, perm), cfg);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 64; ++j) EXPECT_EQ(b.at(i, j), a.at(perm[i], j));
}

// ---------------------------------------------------------------------------
// export formats

TEST(ImageExport, BinaryLayoutAndRoundTrip) {
  testing::TempDir dir("img");
  EncodedImage img{2, 3, {1.0, -2.5, 3.25, 0.0, 1e-300, -7.0}, "x"};
  write_image_bin(img, dir.path() / "x.bin");
  const std::string bytes = testing::read_text(dir.path() / "x.bin");
  ASSERT_EQ(bytes.size(), 16u + 6u * 8u);
  EXPECT_EQ(static_cast<unsigned char>(bytes[0]), 2u);
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 3u);
  for (int i = 1; i < 8; ++i) EXPECT_EQ(bytes[i], 0);
  const EncodedImage back = read_image_bin(dir.path() / "x.bin");
  EXPECT_EQ(back.height, 2u);
  EXPECT_EQ(back.width, 3u);
  EXPECT_EQ(back.pixels, img.pixels);

  write_image_csv(img, dir.path() / "x.csv");
  EXPECT_EQ(testing::read_text(dir.path() / "x.csv"), "1,-2.5,3.25\n0,1e-300,-7\n");
}

}  // namespace
}  // namespace ecgbal
