#pragma once

// RIFF/WAVE reading (PCM 16/24/32, IEEE float 32/64, WAVE_FORMAT_EXTENSIBLE)
// and writing (32-bit float), plus the comma-separated text matrix format:
//
//   # rows=<R> cols=<C>
//   v00,v01,...
//   ...

#include <Eigen/Dense>

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cdrfe/error.hpp"
#include "cdrfe/stft.hpp"

namespace cdrfe::io {

struct WavData {
  Signal samples;  // [frames x channels], full scale = 1.0
  double sample_rate = 0.0;
};

namespace detail {

inline std::uint32_t le_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}
inline std::uint16_t le_u16(const unsigned char* p) { return std::uint16_t(p[0] | p[1] << 8); }

inline void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xFF));
  s.push_back(static_cast<char>(v >> 8));
}

inline constexpr std::uint16_t kFormatPcm = 1;
inline constexpr std::uint16_t kFormatFloat = 3;
inline constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace detail

inline WavData parse_wav(const std::vector<unsigned char>& bytes) {
  using namespace detail;
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw IoError("not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* hdr = bytes.data() + pos;
    const std::size_t len = le_u32(hdr + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = std::min(len, bytes.size() - body);
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (avail < 16) throw IoError("truncated fmt chunk");
      const unsigned char* f = bytes.data() + body;
      format = le_u16(f);
      channels = le_u16(f + 2);
      rate = le_u32(f + 4);
      bits = le_u16(f + 14);
      if (format == kFormatExtensible) {
        if (avail < 26) throw IoError("truncated WAVE_FORMAT_EXTENSIBLE header");
        format = le_u16(f + 24);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data = bytes.data() + body;
      data_len = avail;  // tolerate streaming writers that leave the size unset
    }
    pos = body + len + (len & 1);
  }
  if (!have_fmt) throw IoError("missing fmt chunk");
  if (data == nullptr) throw IoError("missing data chunk");
  if (channels == 0) throw IoError("zero channels");

  const bool pcm = format == kFormatPcm && (bits == 16 || bits == 24 || bits == 32);
  const bool flt = format == kFormatFloat && (bits == 32 || bits == 64);
  if (!pcm && !flt)
    throw IoError("unsupported sample format (format " + std::to_string(format) + ", " + std::to_string(bits) + " bits)");

  const std::size_t bytes_per = bits / 8;
  const std::size_t frames = data_len / (bytes_per * channels);
  WavData out;
  out.sample_rate = rate;
  out.samples.resize(static_cast<Eigen::Index>(frames), channels);
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* p = data + (t * channels + c) * bytes_per;
      double v = 0.0;
      if (pcm) {
        if (bits == 16) {
          v = static_cast<std::int16_t>(le_u16(p)) / 32768.0;
        } else if (bits == 24) {
          std::int32_t s = std::int32_t(p[0]) | std::int32_t(p[1]) << 8 | std::int32_t(p[2]) << 16;
          if (s & 0x800000) s -= 0x1000000;
          v = s / 8388608.0;
        } else {
          v = static_cast<std::int32_t>(le_u32(p)) / 2147483648.0;
        }
      } else if (bits == 32) {
        const std::uint32_t u = le_u32(p);
        float fv;
        std::memcpy(&fv, &u, 4);
        v = fv;
      } else {
        const std::uint64_t u = std::uint64_t(le_u32(p)) | std::uint64_t(le_u32(p + 4)) << 32;
        double dv;
        std::memcpy(&dv, &u, 8);
        v = dv;
      }
      out.samples(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)) = v;
    }
  return out;
}

inline WavData read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return parse_wav(bytes);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

/// Serializes [frames x channels] samples as 32-bit float WAV.
inline std::string encode_wav_float(const Signal& samples, double sample_rate) {
  using namespace detail;
  const auto channels = static_cast<std::uint16_t>(samples.cols());
  const auto frames = static_cast<std::uint32_t>(samples.rows());
  const std::uint32_t data_len = frames * channels * 4u;
  const auto rate = static_cast<std::uint32_t>(std::llround(sample_rate));
  std::string s;
  s.reserve(44 + data_len);
  s += "RIFF";
  put_u32(s, 36 + data_len);
  s += "WAVEfmt ";
  put_u32(s, 16);
  put_u16(s, kFormatFloat);
  put_u16(s, channels);
  put_u32(s, rate);
  put_u32(s, rate * channels * 4u);
  put_u16(s, static_cast<std::uint16_t>(channels * 4));
  put_u16(s, 32);
  s += "data";
  put_u32(s, data_len);
  for (std::uint32_t t = 0; t < frames; ++t)
    for (std::uint16_t c = 0; c < channels; ++c) {
      const auto fv = static_cast<float>(samples(t, c));
      std::uint32_t u;
      std::memcpy(&u, &fv, 4);
      put_u32(s, u);
    }
  return s;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

inline void write_wav(const std::filesystem::path& path, const Signal& samples, double sample_rate) {
  write_file(path, encode_wav_float(samples, sample_rate));
}

/// Shortest round-trip decimal representation.
inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw IoError("number formatting failed");
  return std::string(buf.data(), end);
}

inline std::string encode_text_matrix(const Eigen::MatrixXd& m) {
  std::string s = "# rows=" + std::to_string(m.rows()) + " cols=" + std::to_string(m.cols()) + "\n";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) s += ',';
      s += format_double(m(r, c));
    }
    s += '\n';
  }
  return s;
}

inline Eigen::MatrixXd parse_text_matrix(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError("text matrix: missing header");
  long rows = -1, cols = -1;
  if (std::sscanf(line.c_str(), "# rows=%ld cols=%ld", &rows, &cols) != 2 || rows < 0 || cols < 0)
    throw IoError("text matrix: malformed header '" + line + "'");
  Eigen::MatrixXd m(rows, cols);
  for (long r = 0; r < rows; ++r) {
    if (!std::getline(in, line)) throw IoError("text matrix: expected " + std::to_string(rows) + " rows");
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (long c = 0; c < cols; ++c) {
      double v = 0.0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc()) throw IoError("text matrix: bad number in row " + std::to_string(r));
      m(r, c) = v;
      p = next;
      if (c + 1 < cols) {
        if (p == end || *p != ',') throw IoError("text matrix: row " + std::to_string(r) + " too short");
        ++p;
      }
    }
    if (p != end) throw IoError("text matrix: row " + std::to_string(r) + " too long");
  }
  return m;
}

inline void write_text_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  write_file(path, encode_text_matrix(m));
}

inline Eigen::MatrixXd read_text_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_text_matrix(ss.str());
}

}  // namespace cdrfe::io
