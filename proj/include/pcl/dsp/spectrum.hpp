#pragma once

#include <complex>
#include <span>
#include <vector>

#include "pcl/core/tensor.hpp"

namespace pcl::dsp {

/// Hann-windowed, zero-padded real FFT of fixed-length frames.
class SpectrumAnalyzer {
 public:
  SpectrumAnalyzer(Index win, Index n_fft);

  /// Bins 0..n_fft/2 of the windowed frame.
  void spectrum(std::span<const float> frame, std::vector<std::complex<double>>& out);
  /// |X_k|^2 for bins 0..n_fft/2.
  void power(std::span<const float> frame, Vector<double>& out);

  Index n_fft() const { return n_fft_; }

 private:
  Index win_;
  Index n_fft_;
  Vector<double> window_;
  Vector<double> buffer_;
};

}  // namespace pcl::dsp
