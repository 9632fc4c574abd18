#include "aperture/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "aperture/errors.hpp"
#include "aperture/geometry_io.hpp"
#include "aperture/parallel.hpp"

namespace aperture {

namespace {

using nlohmann::json;

std::vector<double> unwrap(std::vector<double> phase) {
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t k = 1; k < phase.size(); ++k) {
    double d = phase[k] - phase[k - 1];
    d -= two_pi * std::round(d / two_pi);
    phase[k] = phase[k - 1] + d;
  }
  return phase;
}

std::vector<std::vector<Complex>> channel_spectra(const MultichannelRecording& rec) {
  std::vector<std::vector<Complex>> out(rec.channel_count());
  parallel_for(rec.channel_count(), [&](std::size_t c) {
    out[c] = fft_forward(rec.channels[c], rec.sample_rate).values;
  });
  return out;
}

TransferFunctionSet estimate_from_spectra(const std::vector<std::vector<Complex>>& spectra, double sample_rate,
                                          std::size_t fft_length) {
  const std::size_t bins = one_sided_bins(fft_length);
  std::vector<Complex> reference(bins, 0.0);
  for (const auto& ch : spectra) {
    for (std::size_t k = 0; k < bins; ++k) reference[k] += ch[k];
  }
  const double inv_n = 1.0 / static_cast<double>(spectra.size());
  double peak = 0.0;
  for (auto& s : reference) {
    s *= inv_n;
    peak = std::max(peak, std::abs(s));
  }
  if (!(peak > 0.0)) throw DegenerateReferenceError("boresight reference spectrum is zero at every bin");

  const double floor = kReferenceFloor * peak;
  TransferFunctionSet tfs;
  tfs.sample_rate = sample_rate;
  tfs.fft_length = fft_length;
  tfs.channels.assign(spectra.size(), std::vector<Complex>(bins, 1.0));
  for (std::size_t c = 0; c < spectra.size(); ++c) {
    for (std::size_t k = 0; k < bins; ++k) {
      if (std::abs(reference[k]) >= floor) tfs.channels[c][k] = spectra[c][k] / reference[k];
    }
  }
  return tfs;
}

}  // namespace

std::vector<double> ChannelSpectra::frequency_bins() const {
  std::vector<double> f(bins());
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = static_cast<double>(k) * sample_rate / static_cast<double>(fft_length);
  return f;
}

void ChannelSpectra::validate() const {
  if (!(sample_rate > 0.0) || fft_length == 0) throw ValidationError("spectra need a sample rate and fft length");
  if (channels.empty()) throw ValidationError("spectra set has no channels");
  for (const auto& ch : channels) {
    if (ch.size() != bins()) throw ValidationError("channel spectrum does not match the fft grid");
    for (const auto& v : ch) {
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw ValidationError("non-finite spectrum value");
    }
  }
}

BoresightAveraging parse_averaging(const std::string& name) {
  if (name == "complex") return BoresightAveraging::Complex;
  if (name == "polar" || name == "magnitude-phase") return BoresightAveraging::MagnitudePhase;
  throw ValidationError("unknown averaging mode '" + name + "' (expected complex|polar)");
}

Spectrum reference_spectrum(const MultichannelRecording& recording) {
  if (recording.channels.empty() || recording.frames() == 0) throw ValidationError("reference_spectrum: empty recording");
  recording.validate();
  const auto spectra = channel_spectra(recording);
  Spectrum out{recording.sample_rate, recording.frames(), std::vector<Complex>(spectra.front().size(), 0.0)};
  for (const auto& ch : spectra) {
    for (std::size_t k = 0; k < ch.size(); ++k) out.values[k] += ch[k];
  }
  const double inv_n = 1.0 / static_cast<double>(spectra.size());
  for (auto& v : out.values) v *= inv_n;
  return out;
}

TransferFunctionSet estimate_transfer_functions(const MultichannelRecording& boresight) {
  return estimate_transfer_functions(std::span<const MultichannelRecording>(&boresight, 1));
}

TransferFunctionSet estimate_transfer_functions(std::span<const MultichannelRecording> reps,
                                                BoresightAveraging averaging) {
  if (reps.empty()) throw ValidationError("no boresight recordings");
  const auto& first = reps.front();
  if (first.channels.empty() || first.frames() == 0) throw ValidationError("empty boresight recording");
  for (const auto& r : reps) {
    r.validate();
    if (r.channel_count() != first.channel_count() || r.frames() != first.frames() ||
        r.sample_rate != first.sample_rate) {
      throw ValidationError("boresight repetitions differ in shape or sample rate");
    }
  }
  const std::size_t n = first.frames();
  const std::size_t bins = one_sided_bins(n);
  const double inv_r = 1.0 / static_cast<double>(reps.size());

  std::vector<std::vector<Complex>> mean(first.channel_count(), std::vector<Complex>(bins, 0.0));
  if (averaging == BoresightAveraging::Complex) {
    for (const auto& r : reps) {
      const auto spectra = channel_spectra(r);
      for (std::size_t c = 0; c < spectra.size(); ++c) {
        for (std::size_t k = 0; k < bins; ++k) mean[c][k] += spectra[c][k] * inv_r;
      }
    }
  } else {
    std::vector<std::vector<double>> mag(mean.size(), std::vector<double>(bins, 0.0));
    std::vector<std::vector<double>> phase(mean.size(), std::vector<double>(bins, 0.0));
    for (const auto& r : reps) {
      const auto spectra = channel_spectra(r);
      for (std::size_t c = 0; c < spectra.size(); ++c) {
        std::vector<double> ph(bins);
        for (std::size_t k = 0; k < bins; ++k) {
          mag[c][k] += std::abs(spectra[c][k]) * inv_r;
          ph[k] = std::arg(spectra[c][k]);
        }
        ph = unwrap(std::move(ph));
        for (std::size_t k = 0; k < bins; ++k) phase[c][k] += ph[k] * inv_r;
      }
    }
    for (std::size_t c = 0; c < mean.size(); ++c) {
      for (std::size_t k = 0; k < bins; ++k) mean[c][k] = std::polar(mag[c][k], phase[c][k]);
    }
  }
  return estimate_from_spectra(mean, first.sample_rate, n);
}

CalibrationFilterSet make_calibration_filters(const TransferFunctionSet& tfs, const FilterOptions& options) {
  tfs.validate();
  CalibrationFilterSet out;
  out.sample_rate = tfs.sample_rate;
  out.fft_length = tfs.fft_length;
  out.channels.resize(tfs.channel_count());
  out.floored.resize(tfs.channel_count());
  for (std::size_t c = 0; c < tfs.channel_count(); ++c) {
    const auto& h = tfs.channels[c];
    double peak = 0.0;
    for (const auto& v : h) peak = std::max(peak, std::abs(v));
    const double floor = kReferenceFloor * peak;
    auto& filt = out.channels[c];
    auto& floored = out.floored[c];
    filt.assign(h.size(), 1.0);
    floored.assign(h.size(), false);
    for (std::size_t k = 0; k < h.size(); ++k) {
      const double mag = std::abs(h[k]);
      if (!(mag > floor) || mag == 0.0) {
        floored[k] = true;
        continue;
      }
      filt[k] = options.equalize_magnitude ? 1.0 / h[k] : std::conj(h[k] / mag);
    }
  }
  return out;
}

MultichannelRecording apply_calibration(const MultichannelRecording& recording, const CalibrationFilterSet& filters) {
  recording.validate();
  filters.validate();
  if (recording.channel_count() != filters.channel_count()) {
    throw ValidationError("recording has " + std::to_string(recording.channel_count()) + " channels, calibration has " +
                          std::to_string(filters.channel_count()));
  }
  if (recording.frames() != filters.fft_length || recording.sample_rate != filters.sample_rate) {
    throw ValidationError("recording (" + std::to_string(recording.frames()) + " frames @ " +
                          std::to_string(recording.sample_rate) + " Hz) does not match the calibration fft grid (" +
                          std::to_string(filters.fft_length) + " @ " + std::to_string(filters.sample_rate) + " Hz)");
  }
  MultichannelRecording out{recording.sample_rate, std::vector<std::vector<double>>(recording.channel_count())};
  parallel_for(recording.channel_count(), [&](std::size_t c) {
    Spectrum s = fft_forward(recording.channels[c], recording.sample_rate);
    for (std::size_t k = 0; k < s.values.size(); ++k) s.values[k] *= filters.channels[c][k];
    out.channels[c] = fft_inverse(s).samples;
  });
  return out;
}

json to_json(const TransferFunctionSet& tfs) {
  json doc;
  doc["sample_rate"] = tfs.sample_rate;
  doc["fft_length"] = tfs.fft_length;
  doc["frequency_bins"] = tfs.frequency_bins();
  json channels = json::array();
  for (std::size_t c = 0; c < tfs.channel_count(); ++c) {
    std::vector<double> re, im;
    for (const auto& v : tfs.channels[c]) {
      re.push_back(v.real());
      im.push_back(v.imag());
    }
    channels.push_back({{"index", c}, {"h_real", re}, {"h_imag", im}});
  }
  doc["channels"] = std::move(channels);
  return doc;
}

TransferFunctionSet transfer_functions_from_json(const json& doc) {
  try {
    TransferFunctionSet tfs;
    tfs.sample_rate = doc.at("sample_rate").get<double>();
    const auto bins = doc.at("frequency_bins").get<std::vector<double>>();
    tfs.fft_length = doc.contains("fft_length") ? doc["fft_length"].get<std::size_t>() : 2 * (bins.size() - 1);
    if (bins.size() != one_sided_bins(tfs.fft_length)) {
      throw ValidationError("calibration frequency_bins do not match fft_length");
    }
    for (const auto& ch : doc.at("channels")) {
      const auto re = ch.at("h_real").get<std::vector<double>>();
      const auto im = ch.at("h_imag").get<std::vector<double>>();
      if (re.size() != bins.size() || im.size() != bins.size()) {
        throw ValidationError("calibration channel length does not match frequency_bins");
      }
      std::vector<Complex> h(bins.size());
      for (std::size_t k = 0; k < h.size(); ++k) h[k] = {re[k], im[k]};
      tfs.channels.push_back(std::move(h));
    }
    tfs.validate();
    return tfs;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed calibration document: ") + e.what());
  }
}

void save_calibration(const std::filesystem::path& path, const TransferFunctionSet& tfs) {
  write_json_file(path, to_json(tfs));
}

TransferFunctionSet load_calibration(const std::filesystem::path& path) {
  return transfer_functions_from_json(read_json_file(path));
}

}  // namespace aperture
