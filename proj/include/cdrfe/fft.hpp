#pragma once

// Thin RAII wrapper around FFTW's real-input transforms.
//
// Plans are created once per length with FFTW_ESTIMATE (deterministic plan
// choice, so results are bit-reproducible across runs) and cached process-wide.
// Plan creation is serialized; execution uses the new-array interface and is
// safe to call from several threads at once.

#include <fftw3.h>

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "cdrfe/error.hpp"

namespace cdrfe {

using Complex = std::complex<double>;

namespace detail {

struct FftwPlanDeleter {
  void operator()(fftw_plan_s* p) const { fftw_destroy_plan(p); }
};
using PlanHandle = std::unique_ptr<fftw_plan_s, FftwPlanDeleter>;

struct RealFftPlans {
  PlanHandle forward;
  PlanHandle inverse;
};

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

inline const RealFftPlans& real_fft_plans(std::size_t n) {
  static std::map<std::size_t, RealFftPlans> cache;
  std::lock_guard lock(fftw_planner_mutex());
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  const int len = static_cast<int>(n);
  std::vector<double> re(n);
  std::vector<Complex> cx(n / 2 + 1);
  auto* cx_ptr = reinterpret_cast<fftw_complex*>(cx.data());
  constexpr unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  RealFftPlans plans;
  plans.forward.reset(fftw_plan_dft_r2c_1d(len, re.data(), cx_ptr, flags));
  plans.inverse.reset(fftw_plan_dft_c2r_1d(len, cx_ptr, re.data(), flags | FFTW_DESTROY_INPUT));
  if (!plans.forward || !plans.inverse) throw Error("FFTW plan creation failed");
  return cache.emplace(n, std::move(plans)).first->second;
}

}  // namespace detail

/// Unnormalized forward DFT of a real sequence; writes n/2+1 bins.
inline void rfft(std::span<const double> in, std::span<Complex> out) {
  const std::size_t n = in.size();
  detail::require_dims(out.size() == n / 2 + 1, "rfft: output must hold n/2+1 bins");
  const auto& plans = detail::real_fft_plans(n);
  // FFTW does not write through the input pointer of an r2c transform.
  fftw_execute_dft_r2c(plans.forward.get(), const_cast<double*>(in.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

/// Inverse of rfft including the 1/n factor. Imaginary parts of the DC and
/// Nyquist bins are ignored (Hermitian completion).
inline void irfft(std::span<const Complex> in, std::span<double> out) {
  const std::size_t n = out.size();
  detail::require_dims(in.size() == n / 2 + 1, "irfft: input must hold n/2+1 bins");
  const auto& plans = detail::real_fft_plans(n);
  std::vector<Complex> scratch(in.begin(), in.end());
  fftw_execute_dft_c2r(plans.inverse.get(), reinterpret_cast<fftw_complex*>(scratch.data()), out.data());
  const double scale = 1.0 / static_cast<double>(n);
  for (double& v : out) v *= scale;
}

}  // namespace cdrfe
