#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "pcl/core/errors.hpp"
#include "pcl/core/init.hpp"
#include "pcl/dsp/audio.hpp"
#include "support.hpp"

using namespace pcl;
using namespace pcl::dsp;
namespace tc = pcl::testing;

namespace {

Waveform tone(double hz, double seconds, double amplitude = 0.5, int rate = kTargetRate) {
  Waveform w;
  w.sample_rate = rate;
  const auto n = static_cast<std::size_t>(std::llround(seconds * rate));
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    w.samples[i] = static_cast<float>(amplitude * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / rate));
  return w;
}

Waveform white_noise(double seconds, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 0.2);
  Waveform w;
  w.samples.resize(static_cast<std::size_t>(seconds * kTargetRate));
  for (float& s : w.samples) s = static_cast<float>(g(rng));
  return w;
}

float feature(const std::array<float, kParaDim>& v, const std::string& name) {
  const auto& names = para_feature_names();
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw std::out_of_range(name);
  return v[static_cast<std::size_t>(it - names.begin())];
}

}  // namespace

TEST(Mel, FifteenSecondsGiveFixedGrid) {
  const MelSpec m = mel_spectrogram(tone(440.0, 15.0));
  EXPECT_EQ(m.values.shape(), (Shape{64, 1498}));
  EXPECT_EQ(m.n_frames, 1498);
  EXPECT_DOUBLE_EQ(m.hop_seconds, 0.01);
  EXPECT_DOUBLE_EQ(m.win_seconds, 0.025);
}

TEST(Mel, FrameCountFormula) {
  const MelConfig cfg;
  EXPECT_EQ(cfg.win_length(), 400);
  EXPECT_EQ(cfg.hop_length(), 160);
  for (std::size_t n : {400u, 401u, 559u, 560u, 16000u}) {
    Waveform w;
    w.samples.assign(n, 0.1f);
    EXPECT_EQ(mel_spectrogram(w).n_frames, 1 + (static_cast<Index>(n) - 400) / 160) << n;
  }
  Waveform short_wave;
  short_wave.samples.assign(399, 0.0f);
  EXPECT_THROW(mel_spectrogram(short_wave), InputTooShort);
}

TEST(Mel, SilenceHitsTheLogFloor) {
  Waveform w;
  w.samples.assign(16000, 0.0f);
  const MelSpec m = mel_spectrogram(w);
  const float floor = static_cast<float>(std::log(1e-10));
  for (Index i = 0; i < m.values.size(); ++i) ASSERT_FLOAT_EQ(m.values[i], floor);
}

TEST(Mel, ToneEnergyPeaksAtNearestFilter) {
  const MelConfig cfg;
  const auto centers = mel_center_frequencies(cfg);
  ASSERT_EQ(static_cast<Index>(centers.size()), cfg.n_mels);
  for (double hz : {250.0, 1000.0, 3000.0}) {
    const MelSpec m = mel_spectrogram(tone(hz, 1.0), cfg);
    const Index t = m.n_frames / 2;
    Index peak = 0;
    for (Index b = 1; b < cfg.n_mels; ++b) {
      if (m.values[b * m.n_frames + t] > m.values[peak * m.n_frames + t]) peak = b;
    }
    Index nearest = 0;
    for (Index b = 1; b < cfg.n_mels; ++b) {
      if (std::abs(centers[b] - hz) < std::abs(centers[nearest] - hz)) nearest = b;
    }
    EXPECT_LE(std::abs(peak - nearest), 1) << hz << " Hz";
  }
}

TEST(Mel, FilterbankCoversTheBand) {
  const MelConfig cfg;
  const RowMatrix<double> fb = mel_filterbank(cfg);
  ASSERT_EQ(fb.rows(), 64);
  ASSERT_EQ(fb.cols(), 257);
  EXPECT_GE(fb.minCoeff(), 0.0);
  for (Index r = 0; r < fb.rows(); ++r) EXPECT_GT(fb.row(r).sum(), 0.0) << "filter " << r;
  const double bin_hz = 16000.0 / 512.0;
  for (Index k = 0; k < fb.cols(); ++k) {
    const double f = k * bin_hz;
    if (f > 100.0 && f < 7700.0) EXPECT_GT(fb.col(k).sum(), 0.0) << f << " Hz";
    if (f < 60.0 || f > 7800.0) EXPECT_EQ(fb.col(k).sum(), 0.0) << f << " Hz";
  }
  EXPECT_NEAR(mel_to_hz(hz_to_mel(1234.5)), 1234.5, 1e-9);
  EXPECT_NEAR(hz_to_mel(1000.0), 1000.0, 0.5);
}

TEST(Mel, NormalizationGivesZeroMeanUnitVariance) {
  MelConfig cfg;
  cfg.normalize = true;
  const MelSpec m = mel_spectrogram(white_noise(1.0, 3), cfg);
  double mean = 0.0, sq = 0.0;
  for (Index i = 0; i < m.values.size(); ++i) mean += m.values[i];
  mean /= static_cast<double>(m.values.size());
  for (Index i = 0; i < m.values.size(); ++i) sq += (m.values[i] - mean) * (m.values[i] - mean);
  EXPECT_NEAR(mean, 0.0, 1e-4);
  EXPECT_NEAR(sq / static_cast<double>(m.values.size()), 1.0, 1e-3);
}

TEST(Mel, InvalidConfig) {
  MelConfig cfg;
  cfg.f_max = 9000.0;
  EXPECT_THROW(cfg.validate(), ContractError);
  cfg = MelConfig{};
  cfg.n_fft = 256;
  EXPECT_THROW(cfg.validate(), ContractError);
}

TEST(Pitch, PureTones) {
  for (double hz : {100.0, 200.0, 440.0}) {
    const Waveform w = tone(hz, 0.05);
    const PitchEstimate p = estimate_f0(std::span<const float>(w.samples.data(), 640));
    EXPECT_TRUE(p.voiced) << hz;
    EXPECT_NEAR(p.f0, hz, 0.01 * hz) << hz;
  }
}

TEST(Pitch, SilenceIsUnvoiced) {
  const std::vector<float> zeros(640, 0.0f);
  const PitchEstimate p = estimate_f0(zeros);
  EXPECT_FALSE(p.voiced);
  EXPECT_EQ(p.f0, 0.0);
}

TEST(Para, LayoutNames) {
  const auto& names = para_feature_names();
  EXPECT_EQ(names.front(), "logF0_mean");
  EXPECT_EQ(names[40], "jitter_mean");
  EXPECT_EQ(names[41], "shimmer_mean");
  EXPECT_EQ(std::set<std::string>(names.begin(), names.end()).size(), names.size());
}

TEST(Para, SteadyToneDescriptors) {
  const auto v = paralinguistic_vector(tone(200.0, 1.0));
  const double f0 = std::exp(feature(v, "logF0_mean"));
  EXPECT_GE(f0, 195.0);
  EXPECT_LE(f0, 205.0);
  EXPECT_GT(feature(v, "voicing_mean"), 0.9f);
  EXPECT_LT(feature(v, "jitter_mean"), 0.01f);
  EXPECT_LT(feature(v, "shimmer_mean"), 0.01f);
  EXPECT_NEAR(feature(v, "rms_mean"), 0.5 / std::sqrt(2.0), 0.01);
  EXPECT_NEAR(feature(v, "centroid_mean"), 200.0, 100.0);
}

TEST(Para, NoiseIsUnvoicedAndBusier) {
  const auto noise = paralinguistic_vector(white_noise(1.0, 7));
  const auto steady = paralinguistic_vector(tone(200.0, 1.0));
  EXPECT_LT(feature(noise, "voicing_mean"), 0.3f);
  EXPECT_GT(feature(noise, "zcr_mean"), feature(steady, "zcr_mean"));
  EXPECT_GT(feature(noise, "centroid_mean"), feature(steady, "centroid_mean"));
}

TEST(Para, SilenceIsZeroEnergyAndUnvoiced) {
  Waveform w;
  w.samples.assign(16000, 0.0f);
  const auto v = paralinguistic_vector(w);
  EXPECT_EQ(feature(v, "rms_mean"), 0.0f);
  EXPECT_EQ(feature(v, "voicing_mean"), 0.0f);
  for (float x : v) EXPECT_TRUE(std::isfinite(x));
}

TEST(Para, ScaleInvariantDescriptors) {
  Waveform loud = tone(150.0, 1.0, 0.8), quiet = loud;
  for (float& s : quiet.samples) s *= 0.25f;
  const auto a = paralinguistic_vector(loud), b = paralinguistic_vector(quiet);
  for (const char* name : {"logF0_mean", "voicing_mean", "zcr_mean", "centroid_mean", "rolloff85_mean", "hnr_mean"})
    EXPECT_NEAR(feature(a, name), feature(b, name), 1e-3 * (1.0 + std::abs(feature(a, name)))) << name;
  EXPECT_NEAR(feature(b, "rms_mean"), 0.25f * feature(a, "rms_mean"), 1e-5);
}

TEST(Para, TooShort) {
  Waveform w;
  w.samples.assign(1599, 0.1f);
  EXPECT_THROW(paralinguistic_vector(w), InputTooShort);
}

TEST(Wav, Pcm16ScalesBy32768) {
  tc::TempDir dir("wav");
  Waveform w;
  w.samples = {0.0f, 0.5f, -0.5f, -1.0f, 0.25f};
  write_wav_pcm16(dir.str("a.wav"), w);
  const Waveform back = read_audio(dir.str("a.wav"));
  ASSERT_EQ(back.samples.size(), w.samples.size());
  EXPECT_EQ(back.sample_rate, kTargetRate);
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    const float expected = static_cast<float>(std::lround(w.samples[i] * 32768.0)) / 32768.0f;
    EXPECT_EQ(back.samples[i], expected);
  }
}

TEST(Wav, StereoIsAveraged) {
  // Two frames of interleaved 16-bit stereo: (16384, 8192), (-16384, 16384).
  const std::vector<std::int16_t> pcm = {16384, 8192, -16384, 16384};
  std::vector<unsigned char> bytes;
  auto put = [&](std::uint32_t v, int n) {
    for (int i = 0; i < n; ++i) bytes.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
  };
  auto tag = [&](const char* t) { bytes.insert(bytes.end(), t, t + 4); };
  tag("RIFF");
  put(36 + 8, 4);
  tag("WAVE");
  tag("fmt ");
  put(16, 4);
  put(1, 2);
  put(2, 2);
  put(16000, 4);
  put(16000 * 4, 4);
  put(4, 2);
  put(16, 2);
  tag("data");
  put(8, 4);
  for (std::int16_t v : pcm) put(static_cast<std::uint16_t>(v), 2);
  const Waveform w = decode_wav(bytes);
  ASSERT_EQ(w.samples.size(), 2u);
  EXPECT_FLOAT_EQ(w.samples[0], 0.375f);
  EXPECT_FLOAT_EQ(w.samples[1], 0.0f);

  tc::TempDir dir("wav");
  write_wav_pcm16(dir.str("dup.wav"), tone(100.0, 0.01), 2);
  EXPECT_EQ(read_audio(dir.str("dup.wav")).samples.size(), 160u);
}

TEST(Wav, Float32RoundTrip) {
  tc::TempDir dir("wav");
  const Waveform w = tone(300.0, 0.1);
  write_wav_float32(dir.str("f.wav"), w);
  EXPECT_EQ(read_audio(dir.str("f.wav")).samples, w.samples);
}

TEST(Wav, MalformedBytes) {
  EXPECT_THROW(decode_wav({'R', 'I', 'F', 'F', 0, 0}), FormatError);
  std::vector<unsigned char> junk(64, 7);
  EXPECT_THROW(decode_wav(junk), FormatError);
}

TEST(Resample, RateAndLengthAndContent) {
  const Waveform src = tone(440.0, 1.0, 0.5, 48000);
  const Waveform dst = resample(src, kTargetRate);
  EXPECT_EQ(dst.sample_rate, kTargetRate);
  EXPECT_EQ(dst.samples.size(), 16000u);
  const Waveform ref = tone(440.0, 1.0);
  double err = 0.0;
  for (std::size_t i = 200; i < 15800; ++i) err = std::max(err, std::abs(static_cast<double>(dst.samples[i] - ref.samples[i])));
  EXPECT_LT(err, 0.01);

  tc::TempDir dir("wav");
  write_wav_pcm16(dir.str("hi.wav"), src);
  EXPECT_EQ(read_audio(dir.str("hi.wav")).samples.size(), 16000u);
}

TEST(PadOrTrim, ExactDuration) {
  for (double seconds : {10.0, 20.0, 15.0}) {
    const Waveform w = tone(100.0, seconds);
    const Waveform out = pad_or_trim(w);
    ASSERT_EQ(out.samples.size(), 240000u) << seconds;
    const std::size_t kept = std::min<std::size_t>(w.samples.size(), 240000);
    EXPECT_TRUE(std::equal(out.samples.begin(), out.samples.begin() + static_cast<std::ptrdiff_t>(kept), w.samples.begin()));
    EXPECT_TRUE(std::all_of(out.samples.begin() + static_cast<std::ptrdiff_t>(kept), out.samples.end(),
                            [](float s) { return s == 0.0f; }));
  }
  EXPECT_THROW(pad_or_trim(tone(100.0, 1.0, 0.5, 8000)), ContractError);
}
