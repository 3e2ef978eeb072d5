#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>

#include "pcl/core/binary_io.hpp"
#include "pcl/dsp/audio.hpp"

namespace pcl::dsp {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t u16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

void put_u16(std::ostream& os, std::uint16_t v) {
  const unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

void write_header(std::ostream& os, std::uint16_t format, int channels, int rate, int bits, std::uint32_t data_bytes) {
  os.write("RIFF", 4);
  io::write_u32_le(os, 36 + data_bytes);
  os.write("WAVEfmt ", 8);
  io::write_u32_le(os, 16);
  put_u16(os, format);
  put_u16(os, static_cast<std::uint16_t>(channels));
  io::write_u32_le(os, static_cast<std::uint32_t>(rate));
  io::write_u32_le(os, static_cast<std::uint32_t>(rate * channels * bits / 8));
  put_u16(os, static_cast<std::uint16_t>(channels * bits / 8));
  put_u16(os, static_cast<std::uint16_t>(bits));
  os.write("data", 4);
  io::write_u32_le(os, data_bytes);
}

}  // namespace

Waveform decode_wav(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw FormatError("not a RIFF/WAVE file");
  }
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = io::decode_u32_le(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) {
      if (std::memcmp(chunk, "data", 4) == 0) throw FormatError("data chunk runs past end of file");
      throw FormatError("chunk runs past end of file");
    }
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw FormatError("fmt chunk too small");
      const unsigned char* f = bytes.data() + body;
      format = u16(f);
      channels = u16(f + 2);
      rate = io::decode_u32_le(f + 4);
      bits = u16(f + 14);
      if (format == kFormatExtensible) {
        if (size < 26) throw FormatError("extensible fmt chunk too small");
        format = u16(f + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = size;
    }
    pos = body + size + (size & 1U);
  }
  if (!have_fmt) throw FormatError("missing fmt chunk");
  if (data == nullptr) throw FormatError("missing data chunk");
  if (channels == 0 || rate == 0) throw FormatError("fmt chunk declares zero channels or zero rate");

  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool f32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !f32) {
    throw UnsupportedError("unsupported WAV encoding (format " + std::to_string(format) + ", " + std::to_string(bits) +
                           " bits)");
  }
  const std::size_t width = bits / 8;
  const std::size_t frames = data_size / (width * channels);
  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  w.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* s = data + (i * channels + c) * width;
      if (pcm16) {
        acc += static_cast<double>(static_cast<std::int16_t>(u16(s))) / 32768.0;
      } else {
        acc += static_cast<double>(std::bit_cast<float>(io::decode_u32_le(s)));
      }
    }
    w.samples[i] = static_cast<float>(acc / channels);
  }
  return w;
}

Waveform read_audio(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open audio file '" + path + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  Waveform w;
  try {
    w = decode_wav(bytes);
  } catch (const FormatError& e) {
    throw FormatError("'" + path + "': " + e.what());
  }
  if (w.sample_rate != kTargetRate) w = resample(w, kTargetRate);
  return w;
}

void write_wav_pcm16(const std::string& path, const Waveform& wave, int channels) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  const auto bytes = static_cast<std::uint32_t>(wave.samples.size() * 2 * static_cast<std::size_t>(channels));
  write_header(os, kFormatPcm, channels, wave.sample_rate, 16, bytes);
  for (float s : wave.samples) {
    const double clipped = std::clamp(static_cast<double>(s), -1.0, 32767.0 / 32768.0);
    const auto v = static_cast<std::int16_t>(std::lround(clipped * 32768.0));
    for (int c = 0; c < channels; ++c) put_u16(os, static_cast<std::uint16_t>(v));
  }
}

void write_wav_float32(const std::string& path, const Waveform& wave) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  write_header(os, kFormatFloat, 1, wave.sample_rate, 32, static_cast<std::uint32_t>(wave.samples.size() * 4));
  io::write_f32_le(os, wave.samples);
}

Waveform resample(const Waveform& wave, int target_rate) {
  if (target_rate <= 0 || wave.sample_rate <= 0) throw ContractError("sample rates must be positive");
  if (target_rate == wave.sample_rate) return wave;
  const double ratio = static_cast<double>(target_rate) / wave.sample_rate;
  const auto n_in = static_cast<Index>(wave.samples.size());
  const auto n_out = static_cast<Index>(std::llround(static_cast<double>(n_in) * ratio));
  // Low-pass at the lower of the two Nyquist rates; Blackman window over 16 zero crossings.
  const double cutoff = std::min(1.0, ratio);
  constexpr double kZeroCrossings = 16.0;
  const double half_width = kZeroCrossings / cutoff;
  Waveform out;
  out.sample_rate = target_rate;
  out.samples.resize(static_cast<std::size_t>(n_out));
  for (Index i = 0; i < n_out; ++i) {
    const double center = static_cast<double>(i) / ratio;
    const auto lo = static_cast<Index>(std::ceil(center - half_width));
    const auto hi = static_cast<Index>(std::floor(center + half_width));
    double acc = 0.0;
    for (Index j = std::max<Index>(lo, 0); j <= std::min(hi, n_in - 1); ++j) {
      const double x = static_cast<double>(j) - center;
      const double arg = std::numbers::pi * cutoff * x;
      const double sinc = std::abs(arg) < 1e-12 ? 1.0 : std::sin(arg) / arg;
      const double u = x / half_width;  // in [-1, 1]
      const double window = 0.42 + 0.5 * std::cos(std::numbers::pi * u) + 0.08 * std::cos(2.0 * std::numbers::pi * u);
      acc += wave.samples[static_cast<std::size_t>(j)] * cutoff * sinc * window;
    }
    out.samples[static_cast<std::size_t>(i)] = static_cast<float>(acc);
  }
  return out;
}

Waveform pad_or_trim(const Waveform& wave, double target_seconds) {
  if (wave.sample_rate != kTargetRate) throw ContractError("pad_or_trim expects 16 kHz input");
  const auto target = static_cast<std::size_t>(std::llround(target_seconds * kTargetRate));
  Waveform out;
  out.sample_rate = wave.sample_rate;
  out.samples = wave.samples;
  out.samples.resize(target, 0.0f);
  return out;
}

}  // namespace pcl::dsp
