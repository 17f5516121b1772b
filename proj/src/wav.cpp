// Copyright 2026 The sepengine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "sepengine/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "sepengine/error.hpp"

namespace sepengine {
namespace {

void PutU32(std::vector<char>& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void PutU16(std::vector<char>& buf, std::uint16_t v) {
  buf.push_back(static_cast<char>(v & 0xff));
  buf.push_back(static_cast<char>((v >> 8) & 0xff));
}

void PutTag(std::vector<char>& buf, const char* tag) { buf.insert(buf.end(), tag, tag + 4); }

std::uint32_t GetU32(const std::vector<unsigned char>& b, std::size_t at) {
  return b[at] | (b[at + 1] << 8) | (b[at + 2] << 16) | (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

std::uint16_t GetU16(const std::vector<unsigned char>& b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

bool TagIs(const std::vector<unsigned char>& b, std::size_t at, const char* tag) {
  return std::memcmp(b.data() + at, tag, 4) == 0;
}

}  // namespace

void WriteWav(const Waveform& w, const std::filesystem::path& path) {
  if (w.sample_rate <= 0) throw ValidationError("wav: sample rate must be positive");
  const auto data_bytes = static_cast<std::uint32_t>(w.size() * 2);
  std::vector<char> buf;
  buf.reserve(44 + data_bytes);
  PutTag(buf, "RIFF");
  PutU32(buf, 36 + data_bytes);
  PutTag(buf, "WAVE");
  PutTag(buf, "fmt ");
  PutU32(buf, 16);
  PutU16(buf, 1);  // PCM
  PutU16(buf, 1);  // mono
  PutU32(buf, static_cast<std::uint32_t>(w.sample_rate));
  PutU32(buf, static_cast<std::uint32_t>(w.sample_rate) * 2);
  PutU16(buf, 2);
  PutU16(buf, 16);
  PutTag(buf, "data");
  PutU32(buf, data_bytes);
  for (double v : w.samples) {
    const double code = std::round(std::clamp(v, -1.0, 1.0) * 32768.0);
    const auto q = static_cast<std::int16_t>(std::clamp(code, -32768.0, 32767.0));
    PutU16(buf, static_cast<std::uint16_t>(q));
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Waveform ReadWav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open wav " + path.string());
  std::vector<unsigned char> b((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string where = " in " + path.string();
  if (b.size() < 12 || !TagIs(b, 0, "RIFF") || !TagIs(b, 8, "WAVE")) {
    throw ValidationError("malformed wav header" + where);
  }
  int sample_rate = 0;
  bool have_fmt = false;
  std::size_t at = 12;
  while (at + 8 <= b.size()) {
    const std::uint32_t size = GetU32(b, at + 4);
    const std::size_t body = at + 8;
    if (body + size > b.size()) throw ValidationError("truncated wav chunk" + where);
    if (TagIs(b, at, "fmt ")) {
      if (size < 16) throw ValidationError("malformed fmt chunk" + where);
      const auto format = GetU16(b, body);
      const auto channels = GetU16(b, body + 2);
      const auto bits = GetU16(b, body + 14);
      if (format != 1) throw ValidationError("unsupported wav format (not PCM)" + where);
      if (channels != 1) throw ValidationError("unsupported channel count " + std::to_string(channels) + where);
      if (bits != 16) throw ValidationError("unsupported bit depth " + std::to_string(bits) + where);
      sample_rate = static_cast<int>(GetU32(b, body + 4));
      have_fmt = true;
    } else if (TagIs(b, at, "data")) {
      if (!have_fmt) throw ValidationError("data chunk before fmt chunk" + where);
      Waveform w(std::vector<double>(size / 2), sample_rate);
      for (std::size_t i = 0; i < w.size(); ++i) {
        w.samples[i] = static_cast<std::int16_t>(GetU16(b, body + 2 * i)) / 32768.0;
      }
      return w;
    }
    at = body + size + (size & 1);
  }
  throw ValidationError("wav has no data chunk" + where);
}

}  // namespace sepengine
