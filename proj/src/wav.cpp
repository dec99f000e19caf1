#include "sfanc/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "sfanc/errors.hpp"

namespace sfanc {

namespace {

std::uint32_t rd_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t rd_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void wr_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void wr_u16(std::string& s, std::uint16_t v) {
  for (int i = 0; i < 2; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

}  // namespace

Signal read_wav_pcm16_mono_16k(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("wav: cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
  const std::size_t n = buf.size();

  if (n < 44 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
    throw DataError("wav: not a RIFF/WAVE file: " + path);

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;

  std::size_t off = 12;
  while (off + 8 <= n) {
    const std::uint32_t chunk_len = rd_u32(p + off + 4);
    const unsigned char* body = p + off + 8;
    if (off + 8 + chunk_len > n) throw DataError("wav: truncated chunk in " + path);
    if (std::memcmp(p + off, "fmt ", 4) == 0) {
      if (chunk_len < 16) throw DataError("wav: short fmt chunk in " + path);
      format = rd_u16(body);
      channels = rd_u16(body + 2);
      rate = rd_u32(body + 4);
      bits = rd_u16(body + 14);
      have_fmt = true;
    } else if (std::memcmp(p + off, "data", 4) == 0) {
      data = body;
      data_len = chunk_len;
    }
    off += 8 + chunk_len + (chunk_len & 1);
  }

  if (!have_fmt || data == nullptr) throw DataError("wav: missing fmt/data chunk in " + path);
  if (format != 1) throw DataError("wav: unsupported format tag " + std::to_string(format) + " (expected PCM) in " + path);
  if (channels != 1) throw DataError("wav: unsupported channel count " + std::to_string(channels) + " (expected mono) in " + path);
  if (rate != kPipelineRate) throw DataError("wav: unsupported sample rate " + std::to_string(rate) + " (expected 16000) in " + path);
  if (bits != 16) throw DataError("wav: unsupported bit depth " + std::to_string(bits) + " (expected 16) in " + path);

  Signal out;
  out.sample_rate = kPipelineRate;
  const std::size_t n_samples = data_len / 2;
  out.samples.resize(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const auto v = static_cast<std::int16_t>(data[2 * i] | (data[2 * i + 1] << 8));
    out.samples[i] = static_cast<double>(v) / 32768.0;
  }
  return out;
}

void write_wav_pcm16(const std::string& path, const Signal& x) {
  const std::uint32_t n = static_cast<std::uint32_t>(x.size());
  std::string s;
  s.reserve(44 + 2 * n);
  s.append("RIFF");
  wr_u32(s, 36 + 2 * n);
  s.append("WAVE");
  s.append("fmt ");
  wr_u32(s, 16);
  wr_u16(s, 1);  // PCM
  wr_u16(s, 1);  // mono
  wr_u32(s, static_cast<std::uint32_t>(x.sample_rate));
  wr_u32(s, static_cast<std::uint32_t>(x.sample_rate) * 2);
  wr_u16(s, 2);
  wr_u16(s, 16);
  s.append("data");
  wr_u32(s, 2 * n);
  for (double v : x.samples) {
    const double scaled = std::lrint(v * 32768.0);
    const auto q = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    wr_u16(s, static_cast<std::uint16_t>(q));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("wav: cannot write " + path);
  f.write(s.data(), static_cast<std::streamsize>(s.size()));
  if (!f) throw DataError("wav: write failed for " + path);
}

}  // namespace sfanc
