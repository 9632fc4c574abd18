#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace aperture {

inline constexpr double kDefaultSampleRate = 450e3;
inline constexpr double kSweepStartHz = 100e3;
inline constexpr double kSweepEndHz = 20e3;
inline constexpr double kSweepDuration = 2.5e-3;

using Complex = std::complex<double>;

struct Signal {
  double sample_rate = kDefaultSampleRate;
  std::vector<double> samples;

  std::size_t size() const { return samples.size(); }
  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
  void validate() const;
};

/// One-sided spectrum of a real signal of length fft_length: bins
/// k = 0 .. fft_length/2 at k * sample_rate / fft_length. Negative
/// frequencies follow from Hermitian symmetry.
struct Spectrum {
  double sample_rate = kDefaultSampleRate;
  std::size_t fft_length = 0;
  std::vector<Complex> values;

  std::size_t bins() const { return values.size(); }
  double bin_spacing() const { return sample_rate / static_cast<double>(fft_length); }
  double frequency(std::size_t k) const { return static_cast<double>(k) * bin_spacing(); }
  std::vector<double> frequency_bins() const;
};

inline std::size_t one_sided_bins(std::size_t fft_length) { return fft_length / 2 + 1; }

/// X[k] = sum_n x[n] exp(-j 2 pi k n / N), k = 0..N/2.
Spectrum fft_forward(const Signal& signal);
Spectrum fft_forward(std::span<const double> samples, double sample_rate);
/// Inverse of fft_forward including the 1/N factor. The imaginary parts of
/// the DC and (even N) Nyquist bins are ignored.
Signal fft_inverse(const Spectrum& spectrum);

/// Logarithmic FM sweep from f_start to f_end over `duration`.
struct LogSweep {
  double f_start = kSweepStartHz;
  double f_end = kSweepEndHz;
  double duration = kSweepDuration;

  void validate() const;
  /// Phase in radians: 2 pi f0 T / ln(f1/f0) * (exp(t ln(f1/f0) / T) - 1).
  double phase(double t) const;
  double instantaneous_frequency(double t) const;
};

/// Samples sin(phase(n / fs)) for n < round(duration * fs). No taper.
Signal log_fm_sweep(double f_start, double f_end, double duration, double sample_rate = kDefaultSampleRate);
Signal log_fm_sweep(const LogSweep& sweep, double sample_rate = kDefaultSampleRate);

/// Multiplies every bin by exp(-j w delay) in place. Integer-sample delays
/// are exact circular shifts. For fractional delays the Nyquist bin of an
/// even-length transform is zeroed because a real sequence cannot carry a
/// fractional shift of that component.
void delay_spectrum(Spectrum& spectrum, double delay_seconds);

/// Circular delay via FFT phase ramp. Callers that need linear (non-wrapping)
/// behavior zero-pad by the largest delay first.
Signal fractional_delay(const Signal& signal, double delay_seconds);

enum class Window { Hann, Hamming, Rectangular };

Window parse_window(const std::string& name);
std::string to_string(Window window);
/// Periodic (DFT-even) window of length n.
std::vector<double> make_window(Window window, std::size_t n);

struct WelchOptions {
  std::size_t segment_length = 256;
  double overlap = 0.5;
  Window window = Window::Hann;
};

struct PsdEstimate {
  std::vector<double> frequency_bins;
  std::vector<double> power_density;  // power per hertz, one-sided
  std::size_t segment_length = 0;
  double overlap = 0.0;
  Window window = Window::Hann;

  /// Rectangle-rule integral over all bins; total signal power.
  double integrated_power() const;
};

/// Averaged windowed periodograms, one-sided, scaled by 1 / (fs * sum w^2).
/// No detrending.
PsdEstimate welch_psd(const Signal& signal, const WelchOptions& options = {});

}  // namespace aperture
