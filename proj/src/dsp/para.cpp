#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include "pcl/dsp/audio.hpp"
#include "pcl/dsp/spectrum.hpp"

namespace pcl::dsp {

namespace {

constexpr double kMinF0 = 60.0;
constexpr double kMaxF0 = 500.0;
constexpr Index kFrame = 400;  // 25 ms
constexpr Index kHop = 160;    // 10 ms
constexpr Index kFft = 512;

// Descriptor order inside the vector; each takes five functional slots.
enum Lld { kLogF0, kVoicing, kRms, kZcr, kCentroid, kRolloff, kFlux, kHnr, kLldCount };
constexpr const char* kLldNames[kLldCount] = {"logF0", "voicing", "rms", "zcr", "centroid", "rolloff85", "flux", "hnr"};
constexpr const char* kFunctionals[5] = {"mean", "std", "p20", "p50", "p80"};

double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::array<double, 5> functionals(const std::vector<double>& v) {
  if (v.empty()) return {0, 0, 0, 0, 0};
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(v.size());
  return {mean, std::sqrt(var), percentile(v, 0.2), percentile(v, 0.5), percentile(v, 0.8)};
}

double mean_relative_change(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    const double avg = 0.5 * (v[i] + v[i - 1]);
    acc += avg > 0.0 ? std::abs(v[i] - v[i - 1]) / avg : 0.0;
  }
  return acc / static_cast<double>(v.size() - 1);
}

}  // namespace

PitchEstimate estimate_f0(std::span<const float> frame, int sample_rate) {
  const auto n = static_cast<Index>(frame.size());
  const auto min_lag = static_cast<Index>(std::floor(sample_rate / kMaxF0));
  const auto max_lag = std::min<Index>(static_cast<Index>(std::ceil(sample_rate / kMinF0)), n - 2);
  PitchEstimate est;
  if (max_lag <= min_lag + 1) return est;

  std::vector<double> r(static_cast<std::size_t>(max_lag + 2), 0.0);
  for (Index lag = min_lag - 1; lag <= max_lag + 1; ++lag) {
    double xy = 0.0, xx = 0.0, yy = 0.0;
    for (Index i = 0; i + lag < n; ++i) {
      const double a = frame[static_cast<std::size_t>(i)];
      const double b = frame[static_cast<std::size_t>(i + lag)];
      xy += a * b;
      xx += a * a;
      yy += b * b;
    }
    r[static_cast<std::size_t>(lag)] = (xx > 0.0 && yy > 0.0) ? xy / std::sqrt(xx * yy) : 0.0;
  }
  double best = 0.0;
  for (Index lag = min_lag; lag <= max_lag; ++lag) best = std::max(best, r[static_cast<std::size_t>(lag)]);
  if (best <= 0.0) return est;

  // Earliest local maximum close to the global one avoids sub-octave picks.
  Index chosen = -1;
  for (Index lag = min_lag; lag <= max_lag; ++lag) {
    const double v = r[static_cast<std::size_t>(lag)];
    if (v >= 0.9 * best && v >= r[static_cast<std::size_t>(lag - 1)] && v >= r[static_cast<std::size_t>(lag + 1)]) {
      chosen = lag;
      break;
    }
  }
  if (chosen < 0) return est;
  const double left = r[static_cast<std::size_t>(chosen - 1)];
  const double mid = r[static_cast<std::size_t>(chosen)];
  const double right = r[static_cast<std::size_t>(chosen + 1)];
  const double denom = left - 2.0 * mid + right;
  const double shift = std::abs(denom) > 1e-12 ? std::clamp(0.5 * (left - right) / denom, -0.5, 0.5) : 0.0;
  est.strength = mid;
  est.f0 = sample_rate / (static_cast<double>(chosen) + shift);
  est.voiced = mid >= kVoicingThreshold;
  if (!est.voiced) est.f0 = 0.0;
  return est;
}

const std::array<std::string, kParaDim>& para_feature_names() {
  static const std::array<std::string, kParaDim> names = [] {
    std::array<std::string, kParaDim> out;
    std::size_t i = 0;
    for (const char* lld : kLldNames) {
      for (const char* fn : kFunctionals) out[i++] = std::string(lld) + "_" + fn;
    }
    out[i++] = "jitter_mean";
    out[i++] = "shimmer_mean";
    return out;
  }();
  return names;
}

std::array<float, kParaDim> paralinguistic_vector(const Waveform& wave) {
  if (wave.sample_rate != kTargetRate) throw ContractError("paralinguistic_vector expects 16 kHz input");
  const auto n = static_cast<Index>(wave.samples.size());
  if (n < kTargetRate / 10) {
    throw InputTooShort("paralinguistic descriptors need at least 100 ms, got " + std::to_string(n) + " samples");
  }
  const Index frames = 1 + (n - kFrame) / kHop;
  std::vector<double> lld[kLldCount];
  std::vector<double> periods, amplitudes;
  SpectrumAnalyzer analyzer(kFrame, kFft);
  std::vector<std::complex<double>> bins;
  std::vector<double> prev_mag;
  const double bin_hz = static_cast<double>(kTargetRate) / kFft;

  for (Index t = 0; t < frames; ++t) {
    const std::span<const float> frame(wave.samples.data() + t * kHop, static_cast<std::size_t>(kFrame));
    double energy = 0.0, peak = 0.0;
    Index crossings = 0;
    for (Index i = 0; i < kFrame; ++i) {
      const double s = frame[static_cast<std::size_t>(i)];
      energy += s * s;
      peak = std::max(peak, std::abs(s));
      if (i > 0 && ((s >= 0.0) != (frame[static_cast<std::size_t>(i - 1)] >= 0.0))) ++crossings;
    }
    lld[kRms].push_back(std::sqrt(energy / kFrame));
    lld[kZcr].push_back(static_cast<double>(crossings) / (kFrame - 1));

    analyzer.spectrum(frame, bins);
    std::vector<double> mag(bins.size());
    double mag_sum = 0.0, power_sum = 0.0, weighted = 0.0;
    for (std::size_t k = 0; k < bins.size(); ++k) {
      mag[k] = std::abs(bins[k]);
      mag_sum += mag[k];
      power_sum += mag[k] * mag[k];
      weighted += static_cast<double>(k) * bin_hz * mag[k];
    }
    lld[kCentroid].push_back(mag_sum > 0.0 ? weighted / mag_sum : 0.0);
    double rolloff = 0.0;
    if (power_sum > 0.0) {
      double cum = 0.0;
      for (std::size_t k = 0; k < bins.size(); ++k) {
        cum += mag[k] * mag[k];
        if (cum >= 0.85 * power_sum) {
          rolloff = static_cast<double>(k) * bin_hz;
          break;
        }
      }
    }
    lld[kRolloff].push_back(rolloff);
    // Flux between L1-normalized magnitude spectra of consecutive frames.
    if (mag_sum > 0.0) {
      for (double& m : mag) m /= mag_sum;
    }
    double flux = 0.0;
    if (!prev_mag.empty()) {
      for (std::size_t k = 0; k < mag.size(); ++k) flux += (mag[k] - prev_mag[k]) * (mag[k] - prev_mag[k]);
    }
    lld[kFlux].push_back(flux);
    prev_mag = std::move(mag);

    const PitchEstimate pitch = estimate_f0(frame);
    lld[kVoicing].push_back(pitch.voiced ? 1.0 : 0.0);
    if (pitch.voiced) {
      lld[kLogF0].push_back(std::log(pitch.f0));
      const double rr = std::clamp(pitch.strength, 1e-6, 1.0 - 1e-6);
      lld[kHnr].push_back(10.0 * std::log10(rr / (1.0 - rr)));
      periods.push_back(1.0 / pitch.f0);
      amplitudes.push_back(peak);
    }
  }

  std::array<float, kParaDim> out{};
  std::size_t i = 0;
  for (const auto& values : lld) {
    for (double f : functionals(values)) out[i++] = static_cast<float>(f);
  }
  out[i++] = static_cast<float>(mean_relative_change(periods));
  out[i++] = static_cast<float>(mean_relative_change(amplitudes));
  return out;
}

void write_para_csv(const std::string& path,
                    const std::vector<std::pair<std::string, std::array<float, kParaDim>>>& rows) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  os << "id";
  for (const auto& name : para_feature_names()) os << ',' << name;
  os << '\n';
  os << std::setprecision(std::numeric_limits<float>::max_digits10);
  for (const auto& [id, values] : rows) {
    os << id;
    for (float v : values) os << ',' << v;
    os << '\n';
  }
}

}  // namespace pcl::dsp
