#pragma once

#include <cstddef>
#include <vector>

#include "aperture/geometry.hpp"
#include "aperture/recording.hpp"
#include "aperture/signals.hpp"

namespace aperture {

inline constexpr double kDefaultLobeThresholdDb = -3.0;
inline constexpr double kDefaultMainLobeHalfwidthDeg = 10.0;

/// Unit vector from the array origin toward a far-field source at azimuth
/// `direction_deg` in the x-z plane (elevation 0). Boresight is +z, positive
/// angles rotate toward +x.
Vec3 arrival_direction(double direction_deg);

/// Plane-wave arrival delays tau_i = (r_i . u) / v for propagation direction
/// u = -arrival_direction, with the mean over channels removed.
std::vector<double> steering_delays(const ArrayGeometry& geometry, double direction_deg, PortSide side);

/// Angle x frequency response in dB relative to the per-frequency maximum.
/// Cells are stored row-major: response_db[a * frequency_bins.size() + f].
/// Exact nulls hold -infinity.
struct DirectivityMap {
  std::vector<double> scan_angles;     // degrees, ascending
  std::vector<double> frequency_bins;  // hertz
  std::vector<double> response_db;
  double steer_angle = 0.0;

  std::size_t angles() const { return scan_angles.size(); }
  std::size_t frequencies() const { return frequency_bins.size(); }
  double at(std::size_t angle, std::size_t freq) const { return response_db[angle * frequency_bins.size() + freq]; }
  void validate() const;
};

/// Unnormalized delay-and-sum magnitude
///   |sum_i w_i(f) exp(j w tau_i(theta))|,  w_i(f) = exp(-j w tau_i(steer)) / N,
/// row-major over (scan angle, frequency). Equals 1 at the steer direction.
std::vector<double> array_response(const ArrayGeometry& geometry, double steer_deg,
                                   const std::vector<double>& scan_angles, const std::vector<double>& frequencies,
                                   PortSide side);

/// Converts linear magnitudes to dB with each frequency column scaled to a
/// 0 dB peak. A column that is zero everywhere maps to 0 dB.
DirectivityMap normalize_map(std::vector<double> scan_angles, std::vector<double> frequencies,
                             const std::vector<double>& magnitude, double steer_deg);

DirectivityMap directivity_map(const ArrayGeometry& geometry, double steer_deg,
                               const std::vector<double>& scan_angles, const std::vector<double>& frequencies,
                               PortSide side);

/// Advances each channel by its steering delay tau_i(steer) and averages.
Signal beamform_recording(const MultichannelRecording& recording, const ArrayGeometry& geometry, double steer_deg,
                          PortSide side);

struct Lobe {
  double angle_deg = 0.0;
  double level_db = 0.0;
};

struct LobeReport {
  std::vector<double> frequency_bins;
  std::vector<std::vector<Lobe>> lobes;  // per frequency
  double threshold_db = kDefaultLobeThresholdDb;
  double main_lobe_halfwidth = kDefaultMainLobeHalfwidthDeg;

  bool grating_lobe_present(std::size_t freq) const { return !lobes[freq].empty(); }
  bool any() const;
};

/// Strict local maxima (edge cells compare against their single neighbor)
/// outside steer +- main_lobe_halfwidth with level >= threshold_db.
LobeReport find_grating_lobes(const DirectivityMap& map, double threshold_db = kDefaultLobeThresholdDb,
                              double main_lobe_halfwidth = kDefaultMainLobeHalfwidthDeg);

/// Inclusive arithmetic range start, start+step, ... <= stop (+ small slack).
std::vector<double> linear_range(double start, double stop, double step);

}  // namespace aperture
