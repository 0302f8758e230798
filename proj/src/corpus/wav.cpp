// Copyright 2026 The presynth Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <cstring>

#include "presynth/binary_io.hpp"
#include "presynth/corpus.hpp"
#include "presynth/error.hpp"

namespace presynth {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xfffe;

struct WavData {
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::vector<std::int16_t> interleaved;
};

std::uint16_t le16(const char* p) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(p[0]) |
                                    (static_cast<unsigned char>(p[1]) << 8));
}
std::uint32_t le32(const char* p) {
  return static_cast<std::uint32_t>(le16(p)) | (static_cast<std::uint32_t>(le16(p + 2)) << 16);
}

WavData read_wav(const std::filesystem::path& path) {
  const std::vector<char> bytes = io::read_file(path);
  const std::string name = path.string();
  require(bytes.size() >= 12 && std::memcmp(bytes.data(), "RIFF", 4) == 0 &&
              std::memcmp(bytes.data() + 8, "WAVE", 4) == 0,
          ErrorKind::wav_format, name + ": not a RIFF/WAVE file");

  WavData wav;
  bool have_fmt = false, have_data = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = bytes.data() + pos;
    const std::size_t size = le32(id + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = std::min(size, bytes.size() - body);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      require(avail >= 16, ErrorKind::wav_format, name + ": fmt chunk too short");
      const char* f = bytes.data() + body;
      std::uint16_t format = le16(f);
      wav.channels = le16(f + 2);
      wav.sample_rate = le32(f + 4);
      const std::uint16_t bits = le16(f + 14);
      if (format == kFormatExtensible && avail >= 26) format = le16(f + 24);
      require(format == kFormatPcm, ErrorKind::sample_encoding,
              name + ": sample encoding is format tag " + std::to_string(format) + ", expected PCM");
      require(bits == 16, ErrorKind::sample_encoding,
              name + ": " + std::to_string(bits) + "-bit samples, expected 16-bit PCM");
      require(wav.channels >= 1, ErrorKind::channel_count, name + ": zero channels");
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      require(have_fmt, ErrorKind::wav_format, name + ": data chunk before fmt chunk");
      const std::size_t count = avail / 2;
      wav.interleaved.resize(count - count % wav.channels);
      for (std::size_t i = 0; i < wav.interleaved.size(); ++i)
        wav.interleaved[i] = static_cast<std::int16_t>(le16(bytes.data() + body + 2 * i));
      have_data = true;
      break;
    }
    pos = body + size + (size & 1);
  }
  require(have_fmt, ErrorKind::wav_format, name + ": missing fmt chunk");
  require(have_data, ErrorKind::wav_format, name + ": missing data chunk");
  require(wav.sample_rate == static_cast<std::uint32_t>(kSampleRate), ErrorKind::sample_rate,
          name + ": sample rate is " + std::to_string(wav.sample_rate) + " Hz, expected " +
              std::to_string(kSampleRate) + " Hz");
  return wav;
}

}  // namespace

Waveform load_wav(const std::filesystem::path& path) {
  WavData wav = read_wav(path);
  require(wav.channels == 1, ErrorKind::channel_count,
          path.string() + ": " + std::to_string(wav.channels) + " channels, expected mono");
  Waveform w;
  w.samples.resize(wav.interleaved.size());
  for (std::size_t i = 0; i < w.samples.size(); ++i) w.samples[i] = wav.interleaved[i] / 32768.0;
  return w;
}

std::vector<Waveform> load_wav_channels(const std::filesystem::path& path) {
  WavData wav = read_wav(path);
  const std::size_t frames = wav.interleaved.size() / wav.channels;
  std::vector<Waveform> out(wav.channels);
  for (std::size_t c = 0; c < wav.channels; ++c) {
    out[c].samples.resize(frames);
    for (std::size_t i = 0; i < frames; ++i)
      out[c].samples[i] = wav.interleaved[i * wav.channels + c] / 32768.0;
  }
  return out;
}

void save_wav(const std::filesystem::path& path, const Waveform& wave) {
  require(wave.sample_rate == kSampleRate, ErrorKind::sample_rate,
          "save_wav: waveform is " + std::to_string(wave.sample_rate) + " Hz");
  const auto data_bytes = static_cast<std::uint32_t>(2 * wave.size());
  io::ByteWriter w;
  w.magic("RIFF");
  w.u32(36 + data_bytes);
  w.magic("WAVE");
  w.magic("fmt ");
  w.u32(16);
  w.u32(kFormatPcm | (1u << 16));  // format tag, one channel
  w.u32(static_cast<std::uint32_t>(kSampleRate));
  w.u32(static_cast<std::uint32_t>(kSampleRate) * 2);
  w.u32(2u | (16u << 16));  // block align, bits per sample
  w.magic("data");
  w.u32(data_bytes);
  std::vector<char> bytes = w.bytes();
  bytes.reserve(bytes.size() + data_bytes);
  for (double v : wave.samples) {
    const double scaled = std::round(v * 32768.0);
    const auto s = static_cast<std::int16_t>(std::clamp(std::isfinite(scaled) ? scaled : 0.0, -32768.0, 32767.0));
    const auto u = static_cast<std::uint16_t>(s);
    bytes.push_back(static_cast<char>(u & 0xff));
    bytes.push_back(static_cast<char>(u >> 8));
  }
  io::write_file(path, bytes);
}

}  // namespace presynth
