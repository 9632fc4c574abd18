#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "aperture/beamforming.hpp"
#include "aperture/calibration.hpp"
#include "aperture/geometry.hpp"
#include "aperture/recording.hpp"
#include "aperture/signals.hpp"

namespace aperture {

inline constexpr double kDefaultSourceRange = 2.0;      // m
inline constexpr double kDefaultReferenceRange = 1.0;   // m, range of unit amplitude
inline constexpr double kDefaultSnrDb = 40.0;
inline constexpr std::size_t kDefaultMaxFrames = std::size_t{1} << 22;
inline constexpr std::size_t kPaddingMargin = 256;  // samples on each side, one default Welch segment

/// Simulated measurement campaign: a point source panned over the array.
struct PanSweepConfig {
  double angle_start = -90.0;
  double angle_end = 90.0;
  double angle_step = 1.0;
  int repetitions = 10;
  double source_range = kDefaultSourceRange;
  double reference_range = kDefaultReferenceRange;
  double sample_rate = kDefaultSampleRate;
  LogSweep sweep;                 // used unless `emitted` is set
  std::optional<Signal> emitted;
  std::optional<double> snr_db = kDefaultSnrDb;  // nullopt: noise-free
  std::uint64_t seed = 0;
  std::size_t max_frames = kDefaultMaxFrames;

  void validate() const;
  std::vector<double> angles() const;
  Signal emitted_signal() const;
};

struct SimulationOptions {
  double reference_range = kDefaultReferenceRange;
  std::size_t max_frames = kDefaultMaxFrames;
};

/// Leading and trailing zero padding (samples) that contains every
/// propagation plus waveguide delay for this geometry at any source angle.
struct Padding {
  std::size_t lead = 0;
  std::size_t tail = 0;
};
Padding required_padding(const ArrayGeometry& geometry, const WaveguideModel* waveguide, double sample_rate);

/// One multichannel recording of `emitted` from a point source at
/// (range, angle, elevation 0). Time zero is the arrival of the wavefront at
/// the array origin, shifted right by the leading padding. Per channel:
/// spherical spreading reference_range / distance, propagation delay to the
/// front port, waveguide delay and attenuation, then white Gaussian noise at
/// snr_db below the quietest channel's power over the emitted duration.
MultichannelRecording simulate_recording(const ArrayGeometry& geometry, const WaveguideModel* waveguide,
                                         double source_angle_deg, double source_range, const Signal& emitted,
                                         std::optional<double> snr_db, std::mt19937_64& rng,
                                         const SimulationOptions& options = {});

struct SweepDataset {
  PanSweepConfig config;
  ArrayGeometry geometry;
  std::optional<WaveguideModel> waveguide;
  std::vector<double> angles;
  std::vector<std::vector<MultichannelRecording>> recordings;  // [angle][repetition]
  bool calibrated = false;

  std::size_t recording_count() const;
  std::optional<std::size_t> angle_index(double angle_deg) const;
  double sample_rate() const { return recordings.front().front().sample_rate; }
  void validate() const;
};

/// RNG stream for one (angle, repetition) cell; independent of scheduling.
std::mt19937_64 cell_rng(std::uint64_t seed, std::size_t angle_index, std::size_t repetition);

SweepDataset run_pan_sweep(const ArrayGeometry& geometry, const std::optional<WaveguideModel>& waveguide,
                           const PanSweepConfig& config);

struct ResponseMapOptions {
  double steer_angle = 0.0;
  double f_min = kSweepEndHz;
  double f_max = kSweepStartHz;
};

/// Measured-data analogue of a directivity map: rows are source angles,
/// columns FFT bins in [f_min, f_max]. Per angle the repetitions are
/// averaged, optionally calibrated, beamformed toward the steer angle and
/// transformed; each column is then normalized to a 0 dB peak.
DirectivityMap response_map_from_dataset(const SweepDataset& dataset, const ArrayGeometry& geometry, PortSide side,
                                         const CalibrationFilterSet* calibration,
                                         const ResponseMapOptions& options = {});

/// Welch PSD of one dataset: repetitions averaged per angle, per-channel PSDs
/// averaged over channels and then over angles.
PsdEstimate dataset_psd(const SweepDataset& dataset, const WelchOptions& options = {});
std::pair<PsdEstimate, PsdEstimate> psd_comparison(const SweepDataset& a, const SweepDataset& b,
                                                   const WelchOptions& options = {});

/// Boresight (0 degree) repetitions of a dataset.
std::vector<MultichannelRecording> boresight_recordings(const SweepDataset& dataset);

/// `angle_+040_rep_03.wav`; non-integer angles use `p` as decimal mark.
std::string recording_file_name(double angle_deg, int repetition);

inline constexpr const char* kManifestName = "manifest.json";
inline constexpr const char* kDatasetGeometryName = "geometry.json";

/// Writes WAV files, a copy of the geometry and manifest.json into `dir`.
/// Only relative file names are recorded so datasets can be moved.
void save_dataset(const std::filesystem::path& dir, const SweepDataset& dataset);
SweepDataset load_dataset(const std::filesystem::path& dir);

}  // namespace aperture
