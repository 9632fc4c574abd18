#include "aperture/signals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "aperture/errors.hpp"

namespace aperture {

void Signal::validate() const {
  if (!(std::isfinite(sample_rate) && sample_rate > 0.0)) throw ValidationError("sample rate must be > 0");
  for (double x : samples) {
    if (!std::isfinite(x)) throw ValidationError("signal contains non-finite samples");
  }
}

void LogSweep::validate() const {
  if (!(f_start > 0.0 && f_end > 0.0)) throw ValidationError("sweep frequencies must be > 0");
  if (f_start == f_end) throw ValidationError("sweep start and end frequency must differ");
  if (!(duration > 0.0)) throw ValidationError("sweep duration must be > 0");
}

double LogSweep::phase(double t) const {
  const double k = std::log(f_end / f_start);
  return 2.0 * std::numbers::pi * f_start * duration / k * (std::exp(t * k / duration) - 1.0);
}

double LogSweep::instantaneous_frequency(double t) const {
  return f_start * std::exp(t * std::log(f_end / f_start) / duration);
}

Signal log_fm_sweep(const LogSweep& sweep, double sample_rate) {
  sweep.validate();
  if (!(std::isfinite(sample_rate) && sample_rate > 2.0 * std::max(sweep.f_start, sweep.f_end))) {
    throw ValidationError("sample rate " + std::to_string(sample_rate) +
                          " Hz is below the Nyquist rate of the sweep extremes");
  }
  const auto n = static_cast<std::size_t>(std::llround(sweep.duration * sample_rate));
  if (n == 0) throw ValidationError("sweep shorter than one sample");
  Signal out{sample_rate, std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    out.samples[i] = std::sin(sweep.phase(static_cast<double>(i) / sample_rate));
  }
  return out;
}

Signal log_fm_sweep(double f_start, double f_end, double duration, double sample_rate) {
  return log_fm_sweep(LogSweep{f_start, f_end, duration}, sample_rate);
}

void delay_spectrum(Spectrum& spectrum, double delay_seconds) {
  const std::size_t n = spectrum.fft_length;
  const double shift = delay_seconds * spectrum.sample_rate;  // samples
  const double rounded = std::round(shift);
  const bool integer = std::abs(shift - rounded) < 1e-9;
  const bool has_nyquist = n % 2 == 0;
  const double two_pi = 2.0 * std::numbers::pi;

  if (integer) {
    // Reduce k * shift modulo n so the twiddles are exact roots of unity.
    const auto nn = static_cast<long long>(n);
    const long long s = ((static_cast<long long>(rounded) % nn) + nn) % nn;
    for (std::size_t k = 0; k < spectrum.values.size(); ++k) {
      const long long m = (static_cast<long long>(k) * s) % nn;
      spectrum.values[k] *= std::polar(1.0, -two_pi * static_cast<double>(m) / static_cast<double>(n));
    }
    return;
  }
  for (std::size_t k = 0; k < spectrum.values.size(); ++k) {
    spectrum.values[k] *= std::polar(1.0, -two_pi * static_cast<double>(k) * shift / static_cast<double>(n));
  }
  if (has_nyquist) spectrum.values.back() = 0.0;
}

Signal fractional_delay(const Signal& signal, double delay_seconds) {
  if (signal.samples.empty()) throw ValidationError("fractional_delay: empty signal");
  if (!std::isfinite(delay_seconds) || std::abs(delay_seconds) >= signal.duration()) {
    throw ValidationError("fractional_delay: |delay| must be below the signal duration");
  }
  if (delay_seconds == 0.0) return signal;
  Spectrum spectrum = fft_forward(signal);
  delay_spectrum(spectrum, delay_seconds);
  return fft_inverse(spectrum);
}

Window parse_window(const std::string& name) {
  if (name == "hann" || name == "hanning") return Window::Hann;
  if (name == "hamming") return Window::Hamming;
  if (name == "rect" || name == "rectangular" || name == "boxcar") return Window::Rectangular;
  throw ValidationError("unknown window '" + name + "' (expected hann|hamming|rect)");
}

std::string to_string(Window window) {
  switch (window) {
    case Window::Hann: return "hann";
    case Window::Hamming: return "hamming";
    case Window::Rectangular: return "rect";
  }
  return "unknown";
}

std::vector<double> make_window(Window window, std::size_t n) {
  std::vector<double> w(n, 1.0);
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = std::cos(two_pi * static_cast<double>(i) / static_cast<double>(n));
    switch (window) {
      case Window::Hann: w[i] = 0.5 - 0.5 * c; break;
      case Window::Hamming: w[i] = 0.54 - 0.46 * c; break;
      case Window::Rectangular: break;
    }
  }
  return w;
}

double PsdEstimate::integrated_power() const {
  if (frequency_bins.size() < 2) return 0.0;
  const double df = frequency_bins[1] - frequency_bins[0];
  return std::accumulate(power_density.begin(), power_density.end(), 0.0) * df;
}

PsdEstimate welch_psd(const Signal& signal, const WelchOptions& options) {
  signal.validate();
  const std::size_t seg = options.segment_length;
  if (seg < 2) throw ValidationError("welch_psd: segment length must be >= 2");
  if (seg > signal.size()) {
    throw ValidationError("welch_psd: segment length " + std::to_string(seg) + " exceeds signal length " +
                          std::to_string(signal.size()));
  }
  if (!(options.overlap >= 0.0 && options.overlap < 1.0)) throw ValidationError("welch_psd: overlap must be in [0, 1)");

  const auto overlap = static_cast<std::size_t>(std::floor(static_cast<double>(seg) * options.overlap));
  const std::size_t hop = std::max<std::size_t>(1, seg - overlap);
  const auto window = make_window(options.window, seg);
  const double window_power = std::inner_product(window.begin(), window.end(), window.begin(), 0.0);
  const double scale = 1.0 / (signal.sample_rate * window_power);
  const std::size_t bins = one_sided_bins(seg);

  std::vector<double> acc(bins, 0.0);
  std::vector<double> buffer(seg);
  std::size_t segments = 0;
  for (std::size_t start = 0; start + seg <= signal.size(); start += hop) {
    for (std::size_t i = 0; i < seg; ++i) buffer[i] = signal.samples[start + i] * window[i];
    const Spectrum s = fft_forward(buffer, signal.sample_rate);
    for (std::size_t k = 0; k < bins; ++k) {
      const bool edge = k == 0 || (seg % 2 == 0 && k == bins - 1);
      acc[k] += std::norm(s.values[k]) * scale * (edge ? 1.0 : 2.0);
    }
    ++segments;
  }

  PsdEstimate out;
  out.segment_length = seg;
  out.overlap = options.overlap;
  out.window = options.window;
  out.frequency_bins.resize(bins);
  out.power_density.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    out.frequency_bins[k] = static_cast<double>(k) * signal.sample_rate / static_cast<double>(seg);
    out.power_density[k] = acc[k] / static_cast<double>(segments);
  }
  return out;
}

}  // namespace aperture
