#include <fftw3.h>

#include <map>
#include <mutex>

#include "aperture/errors.hpp"
#include "aperture/signals.hpp"

namespace aperture {

namespace {

// FFTW planning is not thread-safe, execution with the new-array interface
// is. Plans are created once per length under a lock and reused. All plans
// use FFTW_ESTIMATE so results do not depend on timing measurements.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [n, p] : forward_) fftw_destroy_plan(p);
    for (auto& [n, p] : inverse_) fftw_destroy_plan(p);
  }

  fftw_plan forward(std::size_t n) { return get(n, true); }
  fftw_plan inverse(std::size_t n) { return get(n, false); }

 private:
  fftw_plan get(std::size_t n, bool is_forward) {
    std::lock_guard lock(mutex_);
    auto& cache = is_forward ? forward_ : inverse_;
    if (auto it = cache.find(n); it != cache.end()) return it->second;
    auto* real = fftw_alloc_real(n);
    auto* cplx = fftw_alloc_complex(n / 2 + 1);
    const int len = static_cast<int>(n);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED | FFTW_DESTROY_INPUT;
    fftw_plan plan = is_forward ? fftw_plan_dft_r2c_1d(len, real, cplx, flags)
                                : fftw_plan_dft_c2r_1d(len, cplx, real, flags);
    fftw_free(real);
    fftw_free(cplx);
    if (plan == nullptr) throw std::runtime_error("FFTW failed to create a plan of length " + std::to_string(n));
    cache.emplace(n, plan);
    return plan;
  }

  std::mutex mutex_;
  std::map<std::size_t, fftw_plan> forward_;
  std::map<std::size_t, fftw_plan> inverse_;
};

PlanCache& plans() {
  static PlanCache cache;
  return cache;
}

}  // namespace

std::vector<double> Spectrum::frequency_bins() const {
  std::vector<double> f(values.size());
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = frequency(k);
  return f;
}

Spectrum fft_forward(std::span<const double> samples, double sample_rate) {
  if (samples.empty()) throw ValidationError("fft_forward: empty signal");
  if (!(sample_rate > 0.0)) throw ValidationError("fft_forward: sample rate must be > 0");
  const std::size_t n = samples.size();
  Spectrum out{sample_rate, n, std::vector<Complex>(one_sided_bins(n))};
  std::vector<double> in(samples.begin(), samples.end());
  fftw_execute_dft_r2c(plans().forward(n), in.data(), reinterpret_cast<fftw_complex*>(out.values.data()));
  return out;
}

Spectrum fft_forward(const Signal& signal) { return fft_forward(signal.samples, signal.sample_rate); }

Signal fft_inverse(const Spectrum& spectrum) {
  const std::size_t n = spectrum.fft_length;
  if (n == 0 || spectrum.values.size() != one_sided_bins(n)) {
    throw ValidationError("fft_inverse: spectrum has " + std::to_string(spectrum.values.size()) +
                          " bins for fft length " + std::to_string(n));
  }
  std::vector<Complex> in = spectrum.values;
  Signal out{spectrum.sample_rate, std::vector<double>(n)};
  fftw_execute_dft_c2r(plans().inverse(n), reinterpret_cast<fftw_complex*>(in.data()), out.samples.data());
  const double scale = 1.0 / static_cast<double>(n);
  for (double& x : out.samples) x *= scale;
  return out;
}

}  // namespace aperture
