// aperture: command-line front end for array geometry, simulation,
// calibration and directivity analysis.
//
// Exit codes: 0 success, 1 validation error, 2 I/O error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "aperture/beamforming.hpp"
#include "aperture/calibration.hpp"
#include "aperture/errors.hpp"
#include "aperture/experiment.hpp"
#include "aperture/geometry.hpp"
#include "aperture/geometry_io.hpp"
#include "aperture/map_io.hpp"
#include "aperture/recording.hpp"

namespace fs = std::filesystem;
using namespace aperture;

namespace {

void require_input(const std::string& path) {
  if (!fs::exists(path)) throw IoError("input not found: " + path);
}

void require_output_parent(const std::string& path) {
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty() && !fs::is_directory(parent)) throw IoError("output directory does not exist: " + parent.string());
}

bool is_dataset(const std::string& path) { return fs::is_directory(path); }

std::pair<int, int> parse_grid(const std::string& text) {
  int rows = 0, cols = 0;
  char sep = 0;
  if (std::sscanf(text.c_str(), "%d%c%d", &rows, &sep, &cols) != 3 || (sep != 'x' && sep != 'X')) {
    throw ValidationError("--grid expects RxC, got '" + text + "'");
  }
  return {rows, cols};
}

// ---------------------------------------------------------------- geometry

struct GeometryArgs {
  std::string grid = std::to_string(kDefaultGridRows) + "x" + std::to_string(kDefaultGridCols);
  double spacing = kDefaultPcbSpacing;
  double sound_speed = kDefaultSoundSpeed;
  std::string label;
  std::optional<double> baffle_spacing;
  double thickness = kDefaultBaffleThickness;
  double attenuation_db = 0.0;
  std::string in;
  std::string out;
};

int cmd_geometry(const GeometryArgs& a) {
  if (!a.in.empty()) require_input(a.in);
  require_output_parent(a.out);
  GeometryFile file = [&] {
    if (!a.in.empty()) return load_geometry(a.in);
    const auto [rows, cols] = parse_grid(a.grid);
    auto g = make_grid_geometry(rows, cols, a.spacing, a.sound_speed, a.label);
    if (!a.baffle_spacing) return GeometryFile{std::move(g), std::nullopt};
    auto baffled = apply_baffle(g, *a.baffle_spacing, a.thickness, a.attenuation_db);
    return GeometryFile{std::move(baffled.geometry), std::move(baffled.waveguide)};
  }();
  save_geometry(a.out, file);
  std::cout << "wrote " << a.out << " (" << file.geometry.size() << " elements"
            << (file.waveguide ? ", waveguide" : "") << ")\n";
  return 0;
}

// -------------------------------------------------------------------- fmax

int cmd_fmax(const std::string& geometry_path) {
  require_input(geometry_path);
  const auto file = load_geometry(geometry_path);
  const auto& g = file.geometry;
  if (g.size() < 2) {
    std::cout << "single element: no inter-element spacing, no spatial aliasing limit\n";
    return 0;
  }
  for (const PortSide side : {PortSide::Pcb, PortSide::Front}) {
    const double d = min_spacing(g, side);
    std::printf("%-5s min_spacing_m=%s fmax_hz=%s\n", to_string(side).c_str(), format_double(d).c_str(),
                format_double(max_unaliased_frequency(d, g.sound_speed())).c_str());
  }
  return 0;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string geometry;
  std::string out;
  bool no_waveguide = false;
  bool noise_free = false;
  PanSweepConfig config;
  double snr_db = kDefaultSnrDb;
};

int cmd_simulate(SimulateArgs a) {
  require_input(a.geometry);
  const auto file = load_geometry(a.geometry);
  a.config.snr_db = a.noise_free ? std::nullopt : std::optional<double>(a.snr_db);
  const auto waveguide = a.no_waveguide ? std::nullopt : file.waveguide;
  const auto dataset = run_pan_sweep(file.geometry, waveguide, a.config);
  save_dataset(a.out, dataset);
  std::cout << "wrote " << dataset.recording_count() << " recordings to " << a.out << "\n";
  return 0;
}

// --------------------------------------------------------------- calibrate

int cmd_calibrate(const std::string& boresight, const std::string& out, const std::string& averaging) {
  require_input(boresight);
  require_output_parent(out);
  const auto mode = parse_averaging(averaging);
  const auto reps = is_dataset(boresight) ? boresight_recordings(load_dataset(boresight))
                                          : std::vector<MultichannelRecording>{read_recording(boresight)};
  const auto tfs = estimate_transfer_functions(reps, mode);
  save_calibration(out, tfs);
  std::cout << "wrote " << out << " (" << tfs.channel_count() << " channels, " << tfs.bins() << " bins)\n";
  return 0;
}

int cmd_apply_cal(const std::string& cal, const std::string& in, const std::string& out, bool equalize) {
  require_input(cal);
  require_input(in);
  const auto filters = make_calibration_filters(load_calibration(cal), {equalize});
  if (is_dataset(in)) {
    SweepDataset ds = load_dataset(in);
    for (auto& reps : ds.recordings) {
      for (auto& rec : reps) rec = apply_calibration(rec, filters);
    }
    ds.calibrated = true;
    save_dataset(out, ds);
  } else {
    require_output_parent(out);
    write_recording(out, apply_calibration(read_recording(in), filters));
  }
  std::cout << "wrote " << out << "\n";
  return 0;
}

// ------------------------------------------------------------- directivity

struct DirectivityArgs {
  std::string geometry;
  std::string dataset;
  std::string cal;
  std::string side = "front";
  double steer = 0.0;
  double angle_start = -90.0;
  double angle_end = 90.0;
  double angle_step = 1.0;
  double f_min = kSweepEndHz;
  double f_max = kSweepStartHz;
  double f_step = 1e3;
  std::string out;
  std::string png;
  bool lobes = false;
  double threshold_db = kDefaultLobeThresholdDb;
  double halfwidth = kDefaultMainLobeHalfwidthDeg;
};

int cmd_directivity(const DirectivityArgs& a) {
  if (a.geometry.empty() == a.dataset.empty()) throw ValidationError("give exactly one of --geometry or --dataset");
  if (!a.geometry.empty()) require_input(a.geometry);
  if (!a.dataset.empty()) require_input(a.dataset);
  if (!a.cal.empty()) require_input(a.cal);
  require_output_parent(a.out);
  if (!a.png.empty()) require_output_parent(a.png);
  const PortSide side = parse_port_side(a.side);

  DirectivityMap map;
  if (!a.geometry.empty()) {
    if (!a.cal.empty()) throw ValidationError("--cal only applies to --dataset maps");
    const auto file = load_geometry(a.geometry);
    map = directivity_map(file.geometry, a.steer, linear_range(a.angle_start, a.angle_end, a.angle_step),
                          linear_range(a.f_min, a.f_max, a.f_step), side);
  } else {
    const auto ds = load_dataset(a.dataset);
    std::optional<CalibrationFilterSet> filters;
    if (!a.cal.empty()) filters = make_calibration_filters(load_calibration(a.cal));
    map = response_map_from_dataset(ds, ds.geometry, side, filters ? &*filters : nullptr,
                                    {a.steer, a.f_min, a.f_max});
  }
  write_map_csv(a.out, map);
  if (!a.png.empty()) write_map_png(a.png, map);
  if (a.lobes) {
    const auto report = find_grating_lobes(map, a.threshold_db, a.halfwidth);
    for (std::size_t f = 0; f < map.frequencies(); ++f) {
      if (!report.grating_lobe_present(f)) continue;
      std::cout << "grating lobes at " << format_double(map.frequency_bins[f]) << " Hz:";
      for (const auto& l : report.lobes[f]) std::cout << ' ' << format_double(l.angle_deg) << " deg (" << l.level_db << " dB)";
      std::cout << '\n';
    }
  }
  std::cout << "wrote " << a.out << " (" << map.angles() << " angles x " << map.frequencies() << " frequencies)\n";
  return 0;
}

// --------------------------------------------------------------------- psd

int cmd_psd(const std::string& a, const std::string& b, const std::string& out, const WelchOptions& options) {
  require_input(a);
  if (!b.empty()) require_input(b);
  require_output_parent(out);
  const auto da = load_dataset(a);
  if (b.empty()) {
    write_psd_csv(out, dataset_psd(da, options));
  } else {
    const auto [pa, pb] = psd_comparison(da, load_dataset(b), options);
    write_psd_csv(out, pa, &pb);
  }
  std::cout << "wrote " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ultrasonic MEMS array toolkit: geometry, simulation, calibration, directivity"};
  app.require_subcommand(1);

  GeometryArgs geo;
  auto* geometry = app.add_subcommand("geometry", "Write a grid geometry file (optionally baffled)");
  geometry->add_option("--grid", geo.grid, "Grid size RxC (rows along the pan axis)")->capture_default_str();
  geometry->add_option("--spacing", geo.spacing, "PCB port spacing [m]")->capture_default_str();
  geometry->add_option("--sound-speed", geo.sound_speed, "Speed of sound [m/s]")->capture_default_str();
  geometry->add_option("--label", geo.label, "Free-text label");
  geometry->add_option("--baffle-spacing", geo.baffle_spacing, "Front inlet spacing [m]; adds a waveguide block");
  geometry->add_option("--thickness", geo.thickness, "Baffle thickness [m]")->capture_default_str();
  geometry->add_option("--attenuation-db", geo.attenuation_db, "Flat waveguide attenuation [dB]")->capture_default_str();
  geometry->add_option("--in", geo.in, "Validate and rewrite an existing geometry file instead");
  geometry->add_option("--out", geo.out, "Output geometry JSON")->required();

  std::string fmax_geometry;
  auto* fmax = app.add_subcommand("fmax", "Print the grating-lobe-free frequency limit for both port sides");
  fmax->add_option("--geometry", fmax_geometry, "Geometry JSON")->required();

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate a pan sweep into a dataset directory");
  simulate->add_option("--geometry", sim.geometry, "Geometry JSON")->required();
  simulate->add_option("--out", sim.out, "Output dataset directory")->required();
  simulate->add_flag("--no-waveguide", sim.no_waveguide, "Ignore the geometry's waveguide block");
  simulate->add_option("--angle-start", sim.config.angle_start)->capture_default_str();
  simulate->add_option("--angle-end", sim.config.angle_end)->capture_default_str();
  simulate->add_option("--angle-step", sim.config.angle_step)->capture_default_str();
  simulate->add_option("--repetitions", sim.config.repetitions)->capture_default_str();
  simulate->add_option("--range", sim.config.source_range, "Source range [m]")->capture_default_str();
  simulate->add_option("--reference-range", sim.config.reference_range, "Range of unit amplitude [m]")
      ->capture_default_str();
  simulate->add_option("--sample-rate", sim.config.sample_rate)->capture_default_str();
  simulate->add_option("--f-start", sim.config.sweep.f_start, "Sweep start [Hz]")->capture_default_str();
  simulate->add_option("--f-end", sim.config.sweep.f_end, "Sweep end [Hz]")->capture_default_str();
  simulate->add_option("--duration", sim.config.sweep.duration, "Sweep duration [s]")->capture_default_str();
  simulate->add_option("--snr-db", sim.snr_db)->capture_default_str();
  simulate->add_flag("--noise-free", sim.noise_free, "Disable additive noise");
  simulate->add_option("--seed", sim.config.seed)->capture_default_str();

  std::string cal_boresight, cal_out, cal_averaging = "complex";
  auto* calibrate = app.add_subcommand("calibrate", "Estimate per-channel transfer functions from boresight data");
  calibrate->add_option("--boresight", cal_boresight, "Recording file or dataset directory")->required();
  calibrate->add_option("--out", cal_out, "Calibration JSON")->required();
  calibrate->add_option("--averaging", cal_averaging, "complex|polar")->capture_default_str();

  std::string ac_cal, ac_in, ac_out;
  bool ac_equalize = false;
  auto* apply_cal = app.add_subcommand("apply-cal", "Apply phase-only calibration filters");
  apply_cal->add_option("--cal", ac_cal, "Calibration JSON")->required();
  apply_cal->add_option("--in", ac_in, "Recording file or dataset directory")->required();
  apply_cal->add_option("--out", ac_out, "Output recording file or dataset directory")->required();
  apply_cal->add_flag("--equalize-magnitude", ac_equalize, "Also invert |H_i| (off by default)");

  DirectivityArgs dir;
  auto* directivity = app.add_subcommand("directivity", "Analytic directivity map or dataset response map as CSV");
  directivity->add_option("--geometry", dir.geometry, "Geometry JSON (analytic far-field map)");
  directivity->add_option("--dataset", dir.dataset, "Dataset directory (response map)");
  directivity->add_option("--cal", dir.cal, "Calibration JSON applied to the dataset");
  directivity->add_option("--side", dir.side, "pcb|front")->capture_default_str();
  directivity->add_option("--steer", dir.steer, "Steer angle [deg]")->capture_default_str();
  directivity->add_option("--angle-start", dir.angle_start)->capture_default_str();
  directivity->add_option("--angle-end", dir.angle_end)->capture_default_str();
  directivity->add_option("--angle-step", dir.angle_step)->capture_default_str();
  directivity->add_option("--f-min", dir.f_min)->capture_default_str();
  directivity->add_option("--f-max", dir.f_max)->capture_default_str();
  directivity->add_option("--f-step", dir.f_step, "Analytic maps only")->capture_default_str();
  directivity->add_option("--out", dir.out, "Output CSV")->required();
  directivity->add_option("--png", dir.png, "Optional heatmap PNG");
  directivity->add_flag("--lobes", dir.lobes, "Print grating lobes per frequency");
  directivity->add_option("--threshold-db", dir.threshold_db)->capture_default_str();
  directivity->add_option("--main-lobe-halfwidth", dir.halfwidth)->capture_default_str();

  std::string psd_a, psd_b, psd_out, psd_window = "hann";
  WelchOptions welch;
  auto* psd = app.add_subcommand("psd", "Welch PSD of one dataset or an overlay of two");
  psd->add_option("--a", psd_a, "Dataset directory")->required();
  psd->add_option("--b", psd_b, "Second dataset directory");
  psd->add_option("--out", psd_out, "Output CSV")->required();
  psd->add_option("--segment", welch.segment_length)->capture_default_str();
  psd->add_option("--overlap", welch.overlap)->capture_default_str();
  psd->add_option("--window", psd_window, "hann|hamming|rect")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*geometry) return cmd_geometry(geo);
    if (*fmax) return cmd_fmax(fmax_geometry);
    if (*simulate) return cmd_simulate(sim);
    if (*calibrate) return cmd_calibrate(cal_boresight, cal_out, cal_averaging);
    if (*apply_cal) return cmd_apply_cal(ac_cal, ac_in, ac_out, ac_equalize);
    if (*directivity) return cmd_directivity(dir);
    if (*psd) {
      welch.window = parse_window(psd_window);
      return cmd_psd(psd_a, psd_b, psd_out, welch);
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
