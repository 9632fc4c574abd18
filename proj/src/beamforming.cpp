#include "aperture/beamforming.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "aperture/errors.hpp"
#include "aperture/parallel.hpp"

namespace aperture {

namespace {

double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace

Vec3 arrival_direction(double direction_deg) {
  const double th = deg2rad(direction_deg);
  return {std::sin(th), 0.0, std::cos(th)};
}

std::vector<double> steering_delays(const ArrayGeometry& geometry, double direction_deg, PortSide side) {
  const Vec3 toward_source = arrival_direction(direction_deg);
  const double v = geometry.sound_speed();
  std::vector<double> tau(geometry.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < tau.size(); ++i) {
    tau[i] = -geometry.port(i, side).dot(toward_source) / v;
    mean += tau[i];
  }
  mean /= static_cast<double>(tau.size());
  for (double& t : tau) t -= mean;
  return tau;
}

void DirectivityMap::validate() const {
  if (response_db.size() != scan_angles.size() * frequency_bins.size()) {
    throw ValidationError("directivity map cell count does not match its axes");
  }
  if (!std::is_sorted(scan_angles.begin(), scan_angles.end())) {
    throw ValidationError("directivity map angles must be ascending");
  }
}

std::vector<double> array_response(const ArrayGeometry& geometry, double steer_deg,
                                   const std::vector<double>& scan_angles, const std::vector<double>& frequencies,
                                   PortSide side) {
  if (scan_angles.empty() || frequencies.empty()) throw ValidationError("directivity map needs angles and frequencies");
  const std::size_t n = geometry.size();
  const std::size_t nf = frequencies.size();
  const auto steer = steering_delays(geometry, steer_deg, side);

  // Relative delay tau_i(theta) - tau_i(steer), angle-major.
  std::vector<double> rel(scan_angles.size() * n);
  for (std::size_t a = 0; a < scan_angles.size(); ++a) {
    const auto tau = steering_delays(geometry, scan_angles[a], side);
    for (std::size_t i = 0; i < n; ++i) rel[a * n + i] = tau[i] - steer[i];
  }

  std::vector<double> magnitude(scan_angles.size() * nf);
  const double inv_n = 1.0 / static_cast<double>(n);
  parallel_for(nf, [&](std::size_t f) {
    const double omega = 2.0 * std::numbers::pi * frequencies[f];
    for (std::size_t a = 0; a < scan_angles.size(); ++a) {
      Complex sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) sum += std::polar(inv_n, omega * rel[a * n + i]);
      magnitude[a * nf + f] = std::abs(sum);
    }
  });
  return magnitude;
}

DirectivityMap normalize_map(std::vector<double> scan_angles, std::vector<double> frequencies,
                             const std::vector<double>& magnitude, double steer_deg) {
  const std::size_t na = scan_angles.size();
  const std::size_t nf = frequencies.size();
  if (magnitude.size() != na * nf) throw ValidationError("magnitude grid does not match axes");
  DirectivityMap map{std::move(scan_angles), std::move(frequencies), std::vector<double>(na * nf), steer_deg};
  for (std::size_t f = 0; f < nf; ++f) {
    double peak = 0.0;
    for (std::size_t a = 0; a < na; ++a) peak = std::max(peak, magnitude[a * nf + f]);
    for (std::size_t a = 0; a < na; ++a) {
      const double m = magnitude[a * nf + f];
      double db = 0.0;
      if (peak > 0.0) db = m > 0.0 ? 20.0 * std::log10(m / peak) : -std::numeric_limits<double>::infinity();
      map.response_db[a * nf + f] = db;
    }
  }
  map.validate();
  return map;
}

DirectivityMap directivity_map(const ArrayGeometry& geometry, double steer_deg,
                               const std::vector<double>& scan_angles, const std::vector<double>& frequencies,
                               PortSide side) {
  return normalize_map(scan_angles, frequencies, array_response(geometry, steer_deg, scan_angles, frequencies, side),
                       steer_deg);
}

Signal beamform_recording(const MultichannelRecording& recording, const ArrayGeometry& geometry, double steer_deg,
                          PortSide side) {
  recording.validate();
  if (recording.channel_count() != geometry.size()) {
    throw ValidationError("recording has " + std::to_string(recording.channel_count()) + " channels, geometry has " +
                          std::to_string(geometry.size()) + " elements");
  }
  const auto tau = steering_delays(geometry, steer_deg, side);
  // Delay-then-average done on spectra; linearity makes it identical to
  // averaging individually delayed channels.
  Spectrum acc;
  for (std::size_t c = 0; c < recording.channel_count(); ++c) {
    Spectrum s = fft_forward(recording.channels[c], recording.sample_rate);
    delay_spectrum(s, -tau[c]);
    if (c == 0) {
      acc = std::move(s);
    } else {
      for (std::size_t k = 0; k < acc.values.size(); ++k) acc.values[k] += s.values[k];
    }
  }
  const double inv = 1.0 / static_cast<double>(recording.channel_count());
  for (auto& x : acc.values) x *= inv;
  return fft_inverse(acc);
}

bool LobeReport::any() const {
  return std::any_of(lobes.begin(), lobes.end(), [](const auto& l) { return !l.empty(); });
}

LobeReport find_grating_lobes(const DirectivityMap& map, double threshold_db, double main_lobe_halfwidth) {
  if (threshold_db > 0.0) throw ValidationError("grating-lobe threshold must be <= 0 dB");
  map.validate();
  LobeReport report{map.frequency_bins, std::vector<std::vector<Lobe>>(map.frequencies()), threshold_db,
                    main_lobe_halfwidth};
  const std::size_t na = map.angles();
  if (na < 2) return report;
  for (std::size_t f = 0; f < map.frequencies(); ++f) {
    for (std::size_t a = 0; a < na; ++a) {
      if (std::abs(map.scan_angles[a] - map.steer_angle) <= main_lobe_halfwidth) continue;
      const double v = map.at(a, f);
      if (!std::isfinite(v) || v < threshold_db) continue;
      const bool above_left = a == 0 || map.at(a - 1, f) < v;
      const bool above_right = a + 1 == na || map.at(a + 1, f) < v;
      if (above_left && above_right) report.lobes[f].push_back({map.scan_angles[a], v});
    }
  }
  return report;
}

std::vector<double> linear_range(double start, double stop, double step) {
  if (!(step > 0.0)) throw ValidationError("range step must be > 0");
  if (stop < start) throw ValidationError("range end must not precede its start");
  const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k) out[k] = start + static_cast<double>(k) * step;
  return out;
}

}  // namespace aperture
