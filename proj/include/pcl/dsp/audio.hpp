#pragma once

#include <array>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pcl/core/tensor.hpp"

namespace pcl::dsp {

inline constexpr int kTargetRate = 16000;

struct Waveform {
  std::vector<float> samples;
  int sample_rate = kTargetRate;

  double seconds() const { return static_cast<double>(samples.size()) / sample_rate; }
};

/// Reads a PCM WAV file (16-bit integer or 32-bit float, any channel count),
/// averages channels and resamples to 16 kHz when needed.
Waveform read_audio(const std::string& path);

/// Decodes WAV bytes without resampling; channels are averaged.
Waveform decode_wav(const std::vector<unsigned char>& bytes);

/// Writes mono 16-bit PCM. Samples are clipped to [-1, 1).
void write_wav_pcm16(const std::string& path, const Waveform& wave, int channels = 1);
void write_wav_float32(const std::string& path, const Waveform& wave);

/// Windowed-sinc sample-rate conversion. Output length is
/// round(n * target_rate / source_rate).
Waveform resample(const Waveform& wave, int target_rate);

/// Exactly `target_seconds` at 16 kHz: truncates the tail or zero-pads at
/// the end.
Waveform pad_or_trim(const Waveform& wave, double target_seconds = 15.0);

struct MelConfig {
  double win_ms = 25.0;
  double hop_ms = 10.0;
  Index n_mels = 64;
  double f_min = 60.0;
  double f_max = 7800.0;
  Index n_fft = 512;
  double log_floor = 1e-10;
  int sample_rate = kTargetRate;
  /// Per-utterance mean/variance normalization of the log-mel matrix.
  bool normalize = false;

  Index win_length() const;
  Index hop_length() const;
  void validate() const;
};

/// Log mel energies [n_mels, n_frames] with n_frames = 1 + floor((n - win) / hop).
struct MelSpec {
  TensorF values;
  Index n_frames = 0;
  double hop_seconds = 0.0;
  double win_seconds = 0.0;
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Triangular filters [n_mels, n_fft/2 + 1] on the HTK mel scale.
RowMatrix<double> mel_filterbank(const MelConfig& cfg);
/// Center frequency in Hz of every mel filter.
std::vector<double> mel_center_frequencies(const MelConfig& cfg);

MelSpec mel_spectrogram(const Waveform& wave, const MelConfig& cfg = {});

struct PitchEstimate {
  double f0 = 0.0;
  bool voiced = false;
  /// Normalized autocorrelation at the chosen lag.
  double strength = 0.0;
};

inline constexpr double kVoicingThreshold = 0.45;

/// Autocorrelation pitch search over 60-500 Hz on one frame of >= 400 samples.
PitchEstimate estimate_f0(std::span<const float> frame, int sample_rate = kTargetRate);

inline constexpr Index kParaDim = 42;

/// Names of the 42 utterance-level descriptors in vector order.
const std::array<std::string, kParaDim>& para_feature_names();

/// Utterance-level descriptor vector; see `para_feature_names` for layout.
std::array<float, kParaDim> paralinguistic_vector(const Waveform& wave);

/// CSV with header "id,<42 names>" and one row per utterance.
void write_para_csv(const std::string& path,
                    const std::vector<std::pair<std::string, std::array<float, kParaDim>>>& rows);

}  // namespace pcl::dsp
