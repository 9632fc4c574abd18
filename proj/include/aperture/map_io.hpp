#pragma once

#include <filesystem>
#include <string>

#include "aperture/beamforming.hpp"
#include "aperture/signals.hpp"

namespace aperture {

/// Shortest round-trip decimal form; infinities as `inf` / `-inf`.
std::string format_double(double value);

/// First row `angle_deg \ freq_hz,f1,f2,...`, then one row per angle.
void write_map_csv(const std::filesystem::path& path, const DirectivityMap& map);
DirectivityMap read_map_csv(const std::filesystem::path& path, double steer_angle = 0.0);

/// Heatmap with frequency on x (ascending) and angle on y (+90 at the top),
/// clamped to [floor_db, 0] dB.
void write_map_png(const std::filesystem::path& path, const DirectivityMap& map, double floor_db = -40.0);

/// `frequency_hz,power_density` for one estimate; with a second estimate the
/// columns are `frequency_hz,power_density_a,power_density_b`.
void write_psd_csv(const std::filesystem::path& path, const PsdEstimate& a, const PsdEstimate* b = nullptr);

}  // namespace aperture
