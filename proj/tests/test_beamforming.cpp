#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "aperture/beamforming.hpp"
#include "aperture/errors.hpp"

using namespace aperture;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kV = 343.0;

double deg2rad(double d) { return d * kPi / 180.0; }

// Uniform linear array along x, the pan axis.
double ula_closed_form(int n, double d, double f, double theta_deg, double steer_deg) {
  const double psi = 2.0 * kPi * f * d * (std::sin(deg2rad(theta_deg)) - std::sin(deg2rad(steer_deg))) / kV;
  const double den = n * std::sin(psi / 2.0);
  if (std::abs(den) < 1e-12) return 1.0;
  return std::abs(std::sin(n * psi / 2.0) / den);
}

bool lobe_at(const ArrayGeometry& g, double f, double steer, PortSide side = PortSide::Pcb) {
  const auto map = directivity_map(g, steer, linear_range(-90.0, 90.0, 0.5), {f}, side);
  return find_grating_lobes(map).grating_lobe_present(0);
}

}  // namespace

TEST_CASE("steering_delays") {
  const auto g = make_grid_geometry(5, 6, 3.8e-3);
  for (double t : steering_delays(g, 0.0, PortSide::Pcb)) CHECK(std::abs(t) < 1e-18);

  const auto pair = make_grid_geometry(2, 1, 0.01);
  const auto end = steering_delays(pair, 90.0, PortSide::Pcb);
  CHECK(end[0] - end[1] == doctest::Approx(0.01 / kV).epsilon(1e-12));

  // Direct dot products against u = (sin 40, 0, cos 40).
  const auto tau = steering_delays(g, 40.0, PortSide::Pcb);
  std::vector<double> ref(g.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto& p = g.elements()[i].pcb_port;
    ref[i] = -(p.x * std::sin(deg2rad(40.0)) + p.z * std::cos(deg2rad(40.0))) / kV;
    mean += ref[i] / g.size();
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(tau[i] == doctest::Approx(ref[i] - mean).epsilon(1e-12));
    sum += tau[i];
  }
  CHECK(std::abs(sum) < 1e-18);
}

TEST_CASE("directivity map of a single element is flat") {
  const auto g = make_grid_geometry(1, 1, 1e-3);
  const auto map = directivity_map(g, 0.0, linear_range(-90, 90, 5), {20e3, 60e3, 100e3}, PortSide::Pcb);
  for (double v : map.response_db) CHECK(v == 0.0);
  CHECK_FALSE(find_grating_lobes(map).any());
}

TEST_CASE("two elements one wavelength apart have lobes at endfire") {
  const double d = 0.01;
  const auto g = make_grid_geometry(2, 1, d);
  const auto angles = linear_range(-90, 90, 1);
  const auto lin = array_response(g, 0.0, angles, {kV / d}, PortSide::Pcb);
  CHECK(lin.front() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(lin.back() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(lin[90] == doctest::Approx(1.0).epsilon(1e-12));

  const auto report = find_grating_lobes(normalize_map(angles, {kV / d}, lin, 0.0));
  REQUIRE(report.lobes[0].size() == 2);
  CHECK(report.lobes[0][0].angle_deg == -90.0);
  CHECK(report.lobes[0][1].angle_deg == 90.0);
}

TEST_CASE("array_response matches the uniform linear array closed form") {
  for (int n : {2, 5, 8}) {
    const double d = 3.8e-3;
    const auto g = make_grid_geometry(n, 1, d);
    const auto angles = linear_range(-90, 90, 0.25);
    const std::vector<double> freqs{10e3, 45e3, 77e3, 100e3};
    for (double steer : {0.0, 25.0, -60.0}) {
      const auto lin = array_response(g, steer, angles, freqs, PortSide::Pcb);
      for (std::size_t a = 0; a < angles.size(); ++a)
        for (std::size_t f = 0; f < freqs.size(); ++f)
          CHECK(std::abs(lin[a * freqs.size() + f] - ula_closed_form(n, d, freqs[f], angles[a], steer)) < 1e-9);
    }
  }
}

TEST_CASE("directivity map is unchanged by translating the array") {
  const auto g = make_grid_geometry(5, 6, 3.8e-3);
  std::vector<ElementPorts> moved = g.elements();
  for (auto& e : moved) e.pcb_port = e.front_port = e.pcb_port + Vec3{0.3, -0.2, 0.05};
  const ArrayGeometry shifted(moved);
  const auto angles = linear_range(-90, 90, 2);
  const std::vector<double> freqs{30e3, 70e3};
  const auto a = array_response(g, 20.0, angles, freqs, PortSide::Pcb);
  const auto b = array_response(shifted, 20.0, angles, freqs, PortSide::Pcb);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-9);
}

TEST_CASE("normalized maps peak at 0 dB per frequency") {
  const auto g = make_grid_geometry(5, 6, 3.8e-3);
  const auto map = directivity_map(g, 30.0, linear_range(-90, 90, 1), linear_range(20e3, 100e3, 5e3), PortSide::Pcb);
  for (std::size_t f = 0; f < map.frequencies(); ++f) {
    double peak = -1e300;
    for (std::size_t a = 0; a < map.angles(); ++a) {
      peak = std::max(peak, map.at(a, f));
      CHECK(map.at(a, f) <= 0.0);
    }
    CHECK(peak == 0.0);
  }
  // Steered cell is the normalization peak at every frequency.
  for (std::size_t f = 0; f < map.frequencies(); ++f) CHECK(map.at(120, f) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("grating lobes of the 3.8 mm grid") {
  const auto g = make_grid_geometry(5, 6, 3.8e-3);
  CHECK_FALSE(lobe_at(g, 44e3, 0.0));
  CHECK(lobe_at(g, 50e3, 40.0));
  CHECK(lobe_at(g, 60e3, 40.0));
  CHECK(lobe_at(g, 95e3, 0.0));
  // Broadside at 60 kHz the alias peak sits just beyond endfire: the edge
  // level stays below -3 dB.
  CHECK_FALSE(lobe_at(g, 60e3, 0.0));
}

TEST_CASE("no grating lobes below the spatial Nyquist limit at broadside") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> spacing(1e-3, 10e-3), frac(0.05, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double d = spacing(rng);
    const auto g = make_grid_geometry(5, 6, d);
    const double f = frac(rng) * max_unaliased_frequency(d, kV) * 0.999;
    CHECK_FALSE(lobe_at(g, f, 0.0));
  }
}

TEST_CASE("1.8 mm front ports are lobe free across 20-100 kHz") {
  const auto front = apply_baffle(make_grid_geometry(5, 6, 3.8e-3), 1.8e-3, 10e-3).geometry;
  for (double steer : {0.0, 40.0}) {
    const auto map = directivity_map(front, steer, linear_range(-90, 90, 0.5), linear_range(20e3, 100e3, 1e3),
                                     PortSide::Front);
    CHECK_FALSE(find_grating_lobes(map).any());
  }
}

TEST_CASE("find_grating_lobes on synthetic maps") {
  DirectivityMap map{{-90, -60, -30, 0, 30, 60, 90}, {1.0}, {-1, -5, -20, 0, -20, -2, -4}, 0.0};
  const auto r = find_grating_lobes(map);
  REQUIRE(r.lobes[0].size() == 2);
  CHECK(r.lobes[0][0].angle_deg == -90);
  CHECK(r.lobes[0][1].angle_deg == 60);
  CHECK(find_grating_lobes(map, -1.5).lobes[0].size() == 1);
  const auto wide = find_grating_lobes(map, -3.0, 70.0);
  REQUIRE(wide.lobes[0].size() == 1);
  CHECK(wide.lobes[0][0].angle_deg == -90);

  DirectivityMap plateau{{-90, -80, 0}, {1.0}, {-1, -1, 0}, 0.0};
  CHECK_FALSE(find_grating_lobes(plateau).any());
  CHECK_THROWS_AS(find_grating_lobes(map, 1.0), ValidationError);
}

TEST_CASE("beamform_recording") {
  const auto g = make_grid_geometry(5, 6, 3.8e-3);
  const double fs = 450e3;
  Signal pulse{fs, std::vector<double>(1024)};
  for (std::size_t i = 0; i < pulse.size(); ++i) {
    const double t = (static_cast<double>(i) - 500.0) / 5.0;
    pulse.samples[i] = std::exp(-t * t) * std::cos(0.9 * t);
  }

  SUBCASE("coherent sum restores a steered plane wave") {
    const auto tau = steering_delays(g, 35.0, PortSide::Pcb);
    MultichannelRecording rec{fs, {}};
    for (double t : tau) rec.channels.push_back(fractional_delay(pulse, t).samples);
    const auto out = beamform_recording(rec, g, 35.0, PortSide::Pcb);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(std::abs(out.samples[i] - pulse.samples[i]) < 1e-9);
  }
  SUBCASE("output energy never exceeds the mean channel energy") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n01;
    MultichannelRecording rec{fs, std::vector<std::vector<double>>(g.size(), std::vector<double>(501))};
    double mean_energy = 0.0;
    for (auto& ch : rec.channels)
      for (double& x : ch) {
        x = n01(rng);
        mean_energy += x * x / g.size();
      }
    for (double steer : {-70.0, 0.0, 45.0}) {
      const auto out = beamform_recording(rec, g, steer, PortSide::Pcb);
      double e = 0.0;
      for (double x : out.samples) e += x * x;
      CHECK(e <= mean_energy * (1.0 + 1e-12));
    }
  }
  SUBCASE("channel count must match") {
    MultichannelRecording rec{fs, std::vector<std::vector<double>>(3, pulse.samples)};
    CHECK_THROWS_AS(beamform_recording(rec, g, 0.0, PortSide::Pcb), ValidationError);
  }
}

TEST_CASE("linear_range") {
  CHECK(linear_range(-90, 90, 1).size() == 181);
  CHECK(linear_range(20e3, 100e3, 1e3).size() == 81);
  CHECK(linear_range(0, 0, 1).size() == 1);
  CHECK(linear_range(-90, 90, 0.1).back() == doctest::Approx(90.0));
  CHECK_THROWS_AS(linear_range(0, 1, 0), ValidationError);
  CHECK_THROWS_AS(linear_range(1, 0, 1), ValidationError);
}
