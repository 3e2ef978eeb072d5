#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <numbers>

#include "pcl/dsp/audio.hpp"
#include "pcl/dsp/spectrum.hpp"

namespace pcl::dsp {

Index MelConfig::win_length() const { return static_cast<Index>(std::llround(win_ms * sample_rate / 1000.0)); }
Index MelConfig::hop_length() const { return static_cast<Index>(std::llround(hop_ms * sample_rate / 1000.0)); }

void MelConfig::validate() const {
  if (sample_rate <= 0 || n_mels <= 0 || win_length() <= 0 || hop_length() <= 0) {
    throw ContractError("mel config sizes must be positive");
  }
  if (!(f_min >= 0.0 && f_min < f_max && f_max <= sample_rate / 2.0)) {
    throw ContractError("mel config needs 0 <= f_min < f_max <= sample_rate / 2");
  }
  if (n_fft < win_length()) throw ContractError("n_fft must be at least the window length");
  if (!(log_floor > 0.0)) throw ContractError("log floor must be positive");
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> mel_center_frequencies(const MelConfig& cfg) {
  const double lo = hz_to_mel(cfg.f_min);
  const double hi = hz_to_mel(cfg.f_max);
  std::vector<double> centers(static_cast<std::size_t>(cfg.n_mels));
  for (Index m = 0; m < cfg.n_mels; ++m) {
    centers[static_cast<std::size_t>(m)] = mel_to_hz(lo + (hi - lo) * static_cast<double>(m + 1) / static_cast<double>(cfg.n_mels + 1));
  }
  return centers;
}

RowMatrix<double> mel_filterbank(const MelConfig& cfg) {
  cfg.validate();
  const Index bins = cfg.n_fft / 2 + 1;
  const double lo = hz_to_mel(cfg.f_min);
  const double hi = hz_to_mel(cfg.f_max);
  std::vector<double> edges(static_cast<std::size_t>(cfg.n_mels + 2));
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(cfg.n_mels + 1));
  }
  RowMatrix<double> fb = RowMatrix<double>::Zero(cfg.n_mels, bins);
  for (Index m = 0; m < cfg.n_mels; ++m) {
    const double left = edges[static_cast<std::size_t>(m)];
    const double center = edges[static_cast<std::size_t>(m + 1)];
    const double right = edges[static_cast<std::size_t>(m + 2)];
    for (Index k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * cfg.sample_rate / static_cast<double>(cfg.n_fft);
      double w = 0.0;
      if (f > left && f <= center) w = (f - left) / (center - left);
      else if (f > center && f < right) w = (right - f) / (right - center);
      fb(m, k) = w;
    }
  }
  return fb;
}

MelSpec mel_spectrogram(const Waveform& wave, const MelConfig& cfg) {
  cfg.validate();
  if (wave.sample_rate != cfg.sample_rate) throw ContractError("mel_spectrogram: waveform rate differs from config");
  const Index win = cfg.win_length();
  const Index hop = cfg.hop_length();
  const auto n = static_cast<Index>(wave.samples.size());
  if (n < win) {
    throw InputTooShort("mel spectrogram needs at least " + std::to_string(win) + " samples, got " + std::to_string(n));
  }
  const Index frames = 1 + (n - win) / hop;
  const RowMatrix<double> fb = mel_filterbank(cfg);
  const Index bins = cfg.n_fft / 2 + 1;

  MelSpec spec;
  spec.n_frames = frames;
  spec.hop_seconds = static_cast<double>(hop) / cfg.sample_rate;
  spec.win_seconds = static_cast<double>(win) / cfg.sample_rate;
  spec.values = TensorF({cfg.n_mels, frames});

  SpectrumAnalyzer analyzer(win, cfg.n_fft);
  Vector<double> power(bins);
  const double floor_log = std::log(cfg.log_floor);
  for (Index t = 0; t < frames; ++t) {
    analyzer.power(std::span<const float>(wave.samples.data() + t * hop, static_cast<std::size_t>(win)), power);
    const Vector<double> mel = fb * power;
    for (Index m = 0; m < cfg.n_mels; ++m) {
      spec.values.at(m, t) = static_cast<float>(std::max(std::log(std::max(mel(m), cfg.log_floor)), floor_log));
    }
  }
  if (cfg.normalize) {
    auto v = spec.values.vector();
    const double mu = v.cast<double>().mean();
    const double sd = std::sqrt((v.cast<double>().array() - mu).square().mean());
    v = ((v.cast<double>().array() - mu) / std::max(sd, 1e-8)).cast<float>().matrix();
  }
  return spec;
}

SpectrumAnalyzer::SpectrumAnalyzer(Index win, Index n_fft) : win_(win), n_fft_(n_fft), window_(win), buffer_(n_fft) {
  // Periodic Hann window.
  for (Index i = 0; i < win; ++i) {
    window_(i) = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(win));
  }
}

void SpectrumAnalyzer::spectrum(std::span<const float> frame, std::vector<std::complex<double>>& out) {
  buffer_.setZero();
  const Index n = std::min<Index>(static_cast<Index>(frame.size()), win_);
  for (Index i = 0; i < n; ++i) buffer_(i) = frame[static_cast<std::size_t>(i)] * window_(i);
  std::vector<double> in(buffer_.data(), buffer_.data() + n_fft_);
  std::vector<std::complex<double>> full;
  static thread_local Eigen::FFT<double> fft;
  fft.fwd(full, in);
  out.assign(full.begin(), full.begin() + n_fft_ / 2 + 1);
}

void SpectrumAnalyzer::power(std::span<const float> frame, Vector<double>& out) {
  std::vector<std::complex<double>> bins;
  spectrum(frame, bins);
  out.resize(static_cast<Index>(bins.size()));
  for (std::size_t k = 0; k < bins.size(); ++k) out(static_cast<Index>(k)) = std::norm(bins[k]);
}

}  // namespace pcl::dsp
