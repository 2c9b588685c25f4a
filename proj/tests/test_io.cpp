#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>

#include "cdrfe/io.hpp"

using namespace cdrfe;

namespace {

void put(std::vector<unsigned char>& b, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) b.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

// Minimal independent WAV writer: integer PCM of the given width.
std::vector<unsigned char> pcm_wav(const std::vector<std::vector<std::int32_t>>& frames, int bits, std::uint32_t rate,
                                   bool extensible = false) {
  const auto ch = static_cast<std::uint16_t>(frames.front().size());
  const std::uint32_t bpf = ch * bits / 8;
  const std::uint32_t data_len = bpf * static_cast<std::uint32_t>(frames.size());
  const std::uint32_t fmt_len = extensible ? 40 : 16;
  std::vector<unsigned char> b;
  for (char c : std::string("RIFF")) b.push_back(c);
  put(b, 4 + 8 + fmt_len + 8 + data_len, 4);
  for (char c : std::string("WAVEfmt ")) b.push_back(c);
  put(b, fmt_len, 4);
  put(b, extensible ? 0xFFFE : 1, 2);
  put(b, ch, 2);
  put(b, rate, 4);
  put(b, rate * bpf, 4);
  put(b, bpf, 2);
  put(b, bits, 2);
  if (extensible) {
    put(b, 22, 2);
    put(b, bits, 2);
    put(b, 0, 4);
    put(b, 1, 2);  // KSDATAFORMAT_SUBTYPE_PCM
    for (int i = 0; i < 14; ++i) b.push_back(0);
  }
  for (char c : std::string("data")) b.push_back(c);
  put(b, data_len, 4);
  for (const auto& f : frames)
    for (auto v : f) put(b, static_cast<std::uint32_t>(v), bits / 8);
  return b;
}

std::vector<unsigned char> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

}  // namespace

TEST(Wav, Pcm16) {
  const auto w = io::parse_wav(pcm_wav({{0, -32768}, {16384, 32767}}, 16, 16000));
  EXPECT_EQ(w.sample_rate, 16000.0);
  ASSERT_EQ(w.samples.rows(), 2);
  ASSERT_EQ(w.samples.cols(), 2);
  EXPECT_EQ(w.samples(0, 1), -1.0);
  EXPECT_EQ(w.samples(1, 0), 0.5);
  EXPECT_EQ(w.samples(1, 1), 32767.0 / 32768.0);
}

TEST(Wav, Pcm24And32AndExtensible) {
  const auto w24 = io::parse_wav(pcm_wav({{-8388608, 4194304, -1}}, 24, 48000));
  EXPECT_EQ(w24.samples(0, 0), -1.0);
  EXPECT_EQ(w24.samples(0, 1), 0.5);
  EXPECT_EQ(w24.samples(0, 2), -1.0 / 8388608.0);
  const auto w32 = io::parse_wav(pcm_wav({{-1073741824}}, 32, 8000));
  EXPECT_EQ(w32.samples(0, 0), -0.5);
  const auto wx = io::parse_wav(pcm_wav({{16384, -16384}}, 16, 16000, true));
  EXPECT_EQ(wx.samples(0, 1), -0.5);
}

TEST(Wav, FloatRoundTrip) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Signal x(257, 3);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
  const auto w = io::parse_wav(bytes_of(io::encode_wav_float(x, 16000.0)));
  EXPECT_EQ(w.sample_rate, 16000.0);
  ASSERT_EQ(w.samples.rows(), 257);
  for (Eigen::Index i = 0; i < x.size(); ++i) EXPECT_EQ(w.samples.data()[i], double(float(x.data()[i])));

  const auto dir = std::filesystem::temp_directory_path() / "cdrfe_io_test";
  io::write_wav(dir / "sub" / "x.wav", x, 16000.0);
  EXPECT_EQ(io::read_wav(dir / "sub" / "x.wav").samples, w.samples);
  std::filesystem::remove_all(dir);
}

TEST(Wav, MalformedInputRejected) {
  EXPECT_THROW(io::parse_wav(bytes_of("RIFF")), IoError);
  EXPECT_THROW(io::parse_wav(bytes_of(std::string("RIFF\0\0\0\0WAVE", 12))), IoError);
  auto b = pcm_wav({{1, 2}}, 16, 16000);
  b[34] = 12;  // 12-bit PCM
  EXPECT_THROW(io::parse_wav(b), IoError);
  EXPECT_THROW(io::read_wav("/nonexistent/file.wav"), IoError);
}

TEST(TextMatrix, RoundTripIsExact) {
  Eigen::MatrixXd m(3, 4);
  m << 0.1, -2.5e-300, 1e300, 3.0, 1.0 / 3.0, 0.0, -0.0, 42.0, 7e-5, 1e-9, 5.5, 123456.789;
  const auto s = io::encode_text_matrix(m);
  EXPECT_EQ(s.substr(0, 16), "# rows=3 cols=4\n");
  EXPECT_EQ(io::parse_text_matrix(s), m);
  EXPECT_EQ(io::parse_text_matrix(io::encode_text_matrix(Eigen::MatrixXd(0, 5))).cols(), 5);
}

TEST(TextMatrix, MalformedRejected) {
  EXPECT_THROW(io::parse_text_matrix(""), IoError);
  EXPECT_THROW(io::parse_text_matrix("rows=1\n1\n"), IoError);
  EXPECT_THROW(io::parse_text_matrix("# rows=2 cols=1\n1\n"), IoError);
  EXPECT_THROW(io::parse_text_matrix("# rows=1 cols=2\n1\n"), IoError);
  EXPECT_THROW(io::parse_text_matrix("# rows=1 cols=2\n1,2,3\n"), IoError);
  EXPECT_THROW(io::parse_text_matrix("# rows=1 cols=1\nabc\n"), IoError);
}
