#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "aperture/recording.hpp"
#include "aperture/signals.hpp"

namespace aperture {

/// Reference bins with |S| below this fraction of max |S| are treated as
/// out of band: H_i = 1 and H_f_i = 1 there.
inline constexpr double kReferenceFloor = 1e-6;

/// Per-channel complex spectra on one shared FFT grid. Used for both the
/// estimated baffle responses H_i and the derived filters H_f_i.
struct ChannelSpectra {
  double sample_rate = kDefaultSampleRate;
  std::size_t fft_length = 0;
  std::vector<std::vector<Complex>> channels;

  std::size_t channel_count() const { return channels.size(); }
  std::size_t bins() const { return one_sided_bins(fft_length); }
  std::vector<double> frequency_bins() const;
  void validate() const;
};

struct TransferFunctionSet : ChannelSpectra {};

struct CalibrationFilterSet : ChannelSpectra {
  /// Bins where the filter was forced to 1 (floored reference or |H_i|).
  std::vector<std::vector<bool>> floored;
};

/// How repeated boresight measurements are combined before estimation.
enum class BoresightAveraging {
  Complex,         // mean of complex spectra; needs synchronized triggers
  MagnitudePhase,  // mean magnitude and mean frequency-unwrapped phase
};

BoresightAveraging parse_averaging(const std::string& name);

/// Complex mean of the channel spectra, S(w) ~ 1/N sum_i S_Mi(w).
Spectrum reference_spectrum(const MultichannelRecording& recording);

/// H_i = S_Mi / S per bin from a boresight recording; bins where the
/// reference is below the floor get H_i = 1. Throws
/// DegenerateReferenceError when the reference vanishes everywhere.
TransferFunctionSet estimate_transfer_functions(const MultichannelRecording& boresight);
TransferFunctionSet estimate_transfer_functions(std::span<const MultichannelRecording> boresight_repetitions,
                                                BoresightAveraging averaging = BoresightAveraging::Complex);

struct FilterOptions {
  /// Off by default: the filters correct phase only. When set, the filters
  /// become 1 / H_i and also flatten the magnitude response.
  bool equalize_magnitude = false;
};

/// H_f_i = conj(H_i / |H_i|), unit magnitude. Bins with |H_i| below
/// kReferenceFloor * max_k |H_i(k)| get 1.
CalibrationFilterSet make_calibration_filters(const TransferFunctionSet& tfs, const FilterOptions& options = {});

/// Per channel: inverse FFT of (channel spectrum x H_f_i), same length.
MultichannelRecording apply_calibration(const MultichannelRecording& recording, const CalibrationFilterSet& filters);

/// Calibration file: sample_rate, fft_length, frequency_bins[] and per
/// channel h_real[] / h_imag[] holding H_i. Filters are rebuilt on load.
nlohmann::json to_json(const TransferFunctionSet& tfs);
TransferFunctionSet transfer_functions_from_json(const nlohmann::json& doc);
void save_calibration(const std::filesystem::path& path, const TransferFunctionSet& tfs);
TransferFunctionSet load_calibration(const std::filesystem::path& path);

}  // namespace aperture
