#pragma once

// Half-overlap sine-window STFT analysis/synthesis.
//
// Frame l covers samples [l*hop, l*hop + frame_len). The analysis and synthesis
// windows are both w(k) = sin(pi (k + 0.5) / K); since w(k)^2 + w(k + K/2)^2 = 1
// the pair overlap-adds to unity at hop = K/2, so synthesize(analyze(x)) == x on
// every sample covered by two frames.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cdrfe/error.hpp"
#include "cdrfe/fft.hpp"

namespace cdrfe {

/// Time-domain multichannel audio, one column per channel.
using Signal = Eigen::MatrixXd;

enum class Window { Sine };

struct FrameParams {
  std::size_t frame_len = 1024;
  double sample_rate = 16000.0;
  Window window = Window::Sine;

  std::size_t hop() const { return frame_len / 2; }
  std::size_t num_bins() const { return frame_len / 2 + 1; }
  double bin_frequency(std::size_t bin) const {
    return static_cast<double>(bin) * sample_rate / static_cast<double>(frame_len);
  }

  void validate() const {
    detail::require(frame_len >= 2 && frame_len % 2 == 0, "frame_len must be even and >= 2");
    detail::require(std::isfinite(sample_rate) && sample_rate > 0.0, "sample_rate must be positive");
  }
};

/// Analysis (and synthesis) window of length K.
inline std::vector<double> sine_window(std::size_t frame_len) {
  std::vector<double> w(frame_len);
  const double k_len = static_cast<double>(frame_len);
  for (std::size_t k = 0; k < frame_len; ++k)
    w[k] = std::sin(std::numbers::pi * (static_cast<double>(k) + 0.5) / k_len);
  return w;
}

/// Number of frames analyze() produces for a signal of `num_samples`.
inline std::size_t frame_count(std::size_t num_samples, const FrameParams& params) {
  const std::size_t k = params.frame_len, hop = params.hop();
  if (num_samples < k) return 0;
  return 1 + (num_samples - k + hop - 1) / hop;
}

/// Half-open sample range where overlap-add is complete (covered by two frames).
inline std::pair<std::size_t, std::size_t> interior_samples(std::size_t num_frames,
                                                            const FrameParams& params) {
  if (num_frames < 2) return {0, 0};
  return {params.hop(), num_frames * params.hop()};
}

/// Complex STFT tensor x(l, f) in C^N, stored frame-major then bin then channel,
/// so the snapshot vector of one time-frequency point is contiguous.
class MultichannelSpectrum {
 public:
  MultichannelSpectrum() = default;
  MultichannelSpectrum(std::size_t num_frames, std::size_t num_channels, FrameParams params)
      : frames_(num_frames),
        bins_(params.num_bins()),
        channels_(num_channels),
        params_(params),
        data_(num_frames * bins_ * num_channels, Complex{}) {}

  std::size_t num_frames() const { return frames_; }
  std::size_t num_bins() const { return bins_; }
  std::size_t num_channels() const { return channels_; }
  const FrameParams& params() const { return params_; }

  Complex& operator()(std::size_t l, std::size_t f, std::size_t n) { return data_[index(l, f, n)]; }
  const Complex& operator()(std::size_t l, std::size_t f, std::size_t n) const {
    return data_[index(l, f, n)];
  }

  /// x(l, f): the N microphone coefficients of one time-frequency point.
  Eigen::Map<const Eigen::VectorXcd> snapshot(std::size_t l, std::size_t f) const {
    return {data_.data() + index(l, f, 0), static_cast<Eigen::Index>(channels_)};
  }
  Eigen::Map<Eigen::VectorXcd> snapshot(std::size_t l, std::size_t f) {
    return {data_.data() + index(l, f, 0), static_cast<Eigen::Index>(channels_)};
  }

  /// Single-channel spectrogram [L x F].
  Eigen::MatrixXcd channel(std::size_t n) const {
    detail::require(n < channels_, "channel index out of range");
    Eigen::MatrixXcd out(frames_, bins_);
    for (std::size_t l = 0; l < frames_; ++l)
      for (std::size_t f = 0; f < bins_; ++f) out(l, f) = (*this)(l, f, n);
    return out;
  }

  /// Copy of frames [begin, end).
  MultichannelSpectrum frames(std::size_t begin, std::size_t end) const {
    detail::require(begin <= end && end <= frames_, "frame range out of bounds");
    MultichannelSpectrum out(end - begin, channels_, params_);
    const std::size_t stride = bins_ * channels_;
    std::copy(data_.begin() + static_cast<std::ptrdiff_t>(begin * stride),
              data_.begin() + static_cast<std::ptrdiff_t>(end * stride), out.data_.begin());
    return out;
  }

  std::span<const Complex> data() const { return data_; }

 private:
  std::size_t index(std::size_t l, std::size_t f, std::size_t n) const {
    return (l * bins_ + f) * channels_ + n;
  }

  std::size_t frames_ = 0;
  std::size_t bins_ = 0;
  std::size_t channels_ = 0;
  FrameParams params_;
  std::vector<Complex> data_;
};

/// One-sided STFT of every channel. The trailing partial frame is zero-padded.
inline MultichannelSpectrum analyze(const Signal& signal, const FrameParams& params) {
  params.validate();
  const auto num_samples = static_cast<std::size_t>(signal.rows());
  const auto num_channels = static_cast<std::size_t>(signal.cols());
  detail::require(num_samples > 0 && num_channels > 0, "analyze: empty signal");
  detail::require(num_samples >= params.frame_len,
                  "analyze: signal shorter than one frame (" + std::to_string(num_samples) +
                      " < " + std::to_string(params.frame_len) + " samples)");

  const std::size_t k_len = params.frame_len, hop = params.hop(), bins = params.num_bins();
  const std::size_t num_frames = frame_count(num_samples, params);
  const auto window = sine_window(k_len);

  MultichannelSpectrum out(num_frames, num_channels, params);
  std::vector<double> frame(k_len);
  std::vector<Complex> spec(bins);
  for (std::size_t n = 0; n < num_channels; ++n) {
    for (std::size_t l = 0; l < num_frames; ++l) {
      const std::size_t start = l * hop;
      for (std::size_t k = 0; k < k_len; ++k) {
        const std::size_t t = start + k;
        frame[k] = t < num_samples ? window[k] * signal(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(n)) : 0.0;
      }
      rfft(frame, spec);
      for (std::size_t f = 0; f < bins; ++f) out(l, f, n) = spec[f];
    }
  }
  return out;
}

/// Inverse STFT of one channel [L x F] by windowed overlap-add.
/// Output length is (L - 1) * hop + frame_len.
inline Eigen::VectorXd synthesize(const Eigen::MatrixXcd& spectrum, const FrameParams& params) {
  params.validate();
  detail::require_dims(static_cast<std::size_t>(spectrum.cols()) == params.num_bins(),
                       "synthesize: spectrum has " + std::to_string(spectrum.cols()) +
                           " bins, frame_len implies " + std::to_string(params.num_bins()));
  const auto num_frames = static_cast<std::size_t>(spectrum.rows());
  const std::size_t k_len = params.frame_len, hop = params.hop(), bins = params.num_bins();
  if (num_frames == 0) return Eigen::VectorXd();

  const auto window = sine_window(k_len);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>((num_frames - 1) * hop + k_len));
  std::vector<Complex> spec(bins);
  std::vector<double> frame(k_len);
  for (std::size_t l = 0; l < num_frames; ++l) {
    for (std::size_t f = 0; f < bins; ++f) spec[f] = spectrum(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(f));
    irfft(spec, frame);
    const std::size_t start = l * hop;
    for (std::size_t k = 0; k < k_len; ++k) out(static_cast<Eigen::Index>(start + k)) += window[k] * frame[k];
  }
  return out;
}

}  // namespace cdrfe
