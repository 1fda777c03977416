// Copyright 2026 The Prosody Toolkit Authors
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

// PCM WAV input/output and the AudioTrack type.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "prosody/error.hpp"

namespace prosody {

inline constexpr int kMinSampleRate = 16000;
inline constexpr int kMaxSampleRate = 48000;

/// One channel of audio for one speaker in one conversation. This is the unit
/// of per-track normalization.
struct AudioTrack {
  std::string track_id;
  std::vector<double> samples;  // amplitudes in [-1, 1]
  int sample_rate = 0;

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

enum class SampleEncoding { kPcm16, kFloat32 };

namespace detail {

inline std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

inline void put_tag(std::vector<unsigned char>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

}  // namespace detail

/// Decoded contents of a WAV file, one sample vector per channel.
struct WavData {
  int sample_rate = 0;
  std::vector<std::vector<double>> channels;
};

/// Decodes a RIFF/WAVE byte buffer holding 16-bit integer or 32-bit float
/// PCM (plain or WAVE_FORMAT_EXTENSIBLE). Anything else is rejected.
inline WavData decode_wav(std::span<const unsigned char> bytes, const std::string& name) {
  const auto fail = [&](const std::string& why) {
    return DataError(fmt::format("{}: {}", name, why));
  };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw fail("not a RIFF/WAVE file");
  }

  std::uint16_t format = 0;
  std::uint16_t num_channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t bits = 0;
  bool have_fmt = false;
  std::span<const unsigned char> data;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* hdr = bytes.data() + pos;
    const std::uint32_t size = detail::read_u32(hdr + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = bytes.size() - body;
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (size < 16 || size > avail) throw fail("truncated fmt chunk");
      const unsigned char* f = bytes.data() + body;
      format = detail::read_u16(f);
      num_channels = detail::read_u16(f + 2);
      rate = detail::read_u32(f + 4);
      bits = detail::read_u16(f + 14);
      if (format == 0xFFFE) {
        if (size < 40) throw fail("truncated WAVE_FORMAT_EXTENSIBLE header");
        format = detail::read_u16(f + 24);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      // Some writers leave the size at 0xFFFFFFFF for streamed output.
      const std::size_t n = std::min<std::size_t>(size, avail);
      data = bytes.subspan(body, n);
      have_data = true;
    }
    pos = body + size + (size & 1u);
    if (have_fmt && have_data) break;
  }
  if (!have_fmt) throw fail("missing fmt chunk");
  if (!have_data) throw fail("missing data chunk");

  SampleEncoding enc;
  if (format == 1 && bits == 16) {
    enc = SampleEncoding::kPcm16;
  } else if (format == 3 && bits == 32) {
    enc = SampleEncoding::kFloat32;
  } else {
    throw fail(fmt::format("unsupported encoding (format {}, {} bits); expected 16-bit PCM "
                           "or 32-bit float",
                           format, bits));
  }
  if (num_channels == 0) throw fail("zero channels");
  if (rate < static_cast<std::uint32_t>(kMinSampleRate) ||
      rate > static_cast<std::uint32_t>(kMaxSampleRate)) {
    throw fail(fmt::format("sample rate {} Hz outside supported range [{}, {}]", rate,
                           kMinSampleRate, kMaxSampleRate));
  }

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * num_channels;
  const std::size_t num_frames = data.size() / frame_bytes;

  WavData out;
  out.sample_rate = static_cast<int>(rate);
  out.channels.assign(num_channels, std::vector<double>(num_frames));
  for (std::size_t i = 0; i < num_frames; ++i) {
    const unsigned char* frame = data.data() + i * frame_bytes;
    for (std::size_t c = 0; c < num_channels; ++c) {
      const unsigned char* s = frame + c * bytes_per_sample;
      double v;
      if (enc == SampleEncoding::kPcm16) {
        v = static_cast<std::int16_t>(detail::read_u16(s)) / 32768.0;
      } else {
        float f;
        const std::uint32_t raw = detail::read_u32(s);
        std::memcpy(&f, &raw, sizeof f);
        v = std::clamp(static_cast<double>(f), -1.0, 1.0);
      }
      out.channels[c][i] = v;
    }
  }
  return out;
}

inline std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open {}", path.string()));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline WavData read_wav(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return decode_wav(bytes, path.string());
}

/// Reads one channel of a WAV file as an AudioTrack.
inline AudioTrack read_track(const std::filesystem::path& audio_path, int channel,
                             std::string track_id = {}) {
  WavData wav = read_wav(audio_path);
  if (channel < 0 || static_cast<std::size_t>(channel) >= wav.channels.size()) {
    throw DataError(fmt::format("{}: channel {} out of range ({} channels)",
                                audio_path.string(), channel, wav.channels.size()));
  }
  AudioTrack track;
  track.track_id = track_id.empty() ? audio_path.string() : std::move(track_id);
  track.sample_rate = wav.sample_rate;
  track.samples = std::move(wav.channels[static_cast<std::size_t>(channel)]);
  if (track.samples.empty()) {
    throw DataError(fmt::format("{}: empty audio", audio_path.string()));
  }
  return track;
}

/// Encodes channels (equal lengths) as a WAV byte buffer.
inline std::vector<unsigned char> encode_wav(const std::vector<std::vector<double>>& channels,
                                             int sample_rate,
                                             SampleEncoding enc = SampleEncoding::kPcm16) {
  const std::uint16_t num_channels = static_cast<std::uint16_t>(channels.size());
  const std::size_t num_frames = channels.empty() ? 0 : channels.front().size();
  const std::uint16_t bits = enc == SampleEncoding::kPcm16 ? 16 : 32;
  const std::uint16_t block_align = static_cast<std::uint16_t>(num_channels * bits / 8);
  const std::uint32_t data_size = static_cast<std::uint32_t>(num_frames * block_align);

  std::vector<unsigned char> out;
  out.reserve(44 + data_size);
  detail::put_tag(out, "RIFF");
  detail::put_u32(out, 36 + data_size);
  detail::put_tag(out, "WAVE");
  detail::put_tag(out, "fmt ");
  detail::put_u32(out, 16);
  detail::put_u16(out, enc == SampleEncoding::kPcm16 ? 1 : 3);
  detail::put_u16(out, num_channels);
  detail::put_u32(out, static_cast<std::uint32_t>(sample_rate));
  detail::put_u32(out, static_cast<std::uint32_t>(sample_rate) * block_align);
  detail::put_u16(out, block_align);
  detail::put_u16(out, bits);
  detail::put_tag(out, "data");
  detail::put_u32(out, data_size);
  for (std::size_t i = 0; i < num_frames; ++i) {
    for (const auto& ch : channels) {
      const double v = std::clamp(ch[i], -1.0, 1.0);
      if (enc == SampleEncoding::kPcm16) {
        const long q = std::lround(v * 32767.0);
        detail::put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
      } else {
        const float f = static_cast<float>(v);
        std::uint32_t raw;
        std::memcpy(&raw, &f, sizeof raw);
        detail::put_u32(out, raw);
      }
    }
  }
  return out;
}

inline void write_wav(const std::filesystem::path& path,
                      const std::vector<std::vector<double>>& channels, int sample_rate,
                      SampleEncoding enc = SampleEncoding::kPcm16) {
  const auto bytes = encode_wav(channels, sample_rate, enc);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write {}", path.string()));
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

}  // namespace prosody
