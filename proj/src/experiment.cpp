#include "aperture/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>

#include "aperture/errors.hpp"
#include "aperture/geometry_io.hpp"
#include "aperture/parallel.hpp"

namespace aperture {

namespace {

using nlohmann::json;

double max_front_radius(const ArrayGeometry& geometry) {
  double r = 0.0;
  for (const auto& e : geometry.elements()) r = std::max(r, e.front_port.norm());
  return r;
}

json config_to_json(const PanSweepConfig& c) {
  json j;
  j["angle_start"] = c.angle_start;
  j["angle_end"] = c.angle_end;
  j["angle_step"] = c.angle_step;
  j["repetitions"] = c.repetitions;
  j["source_range"] = c.source_range;
  j["reference_range"] = c.reference_range;
  j["sample_rate"] = c.sample_rate;
  j["snr_db"] = c.snr_db ? json(*c.snr_db) : json(nullptr);
  j["seed"] = c.seed;
  j["max_frames"] = c.max_frames;
  if (c.emitted) {
    j["emitted"] = {{"type", "file"}, {"file", "emitted.wav"}};
  } else {
    j["emitted"] = {{"type", "log_fm_sweep"},
                    {"f_start", c.sweep.f_start},
                    {"f_end", c.sweep.f_end},
                    {"duration", c.sweep.duration}};
  }
  return j;
}

PanSweepConfig config_from_json(const json& j, const std::filesystem::path& dir) {
  PanSweepConfig c;
  c.angle_start = j.value("angle_start", c.angle_start);
  c.angle_end = j.value("angle_end", c.angle_end);
  c.angle_step = j.value("angle_step", c.angle_step);
  c.repetitions = j.value("repetitions", c.repetitions);
  c.source_range = j.value("source_range", c.source_range);
  c.reference_range = j.value("reference_range", c.reference_range);
  c.sample_rate = j.value("sample_rate", c.sample_rate);
  c.snr_db = j.contains("snr_db") && !j["snr_db"].is_null() ? std::optional<double>(j["snr_db"].get<double>())
                                                             : std::nullopt;
  c.seed = j.value("seed", c.seed);
  c.max_frames = j.value("max_frames", c.max_frames);
  if (j.contains("emitted")) {
    const auto& e = j["emitted"];
    if (e.value("type", "") == "file") {
      const auto rec = read_recording(dir / e.at("file").get<std::string>());
      c.emitted = rec.channel(0);
    } else {
      c.sweep = {e.value("f_start", c.sweep.f_start), e.value("f_end", c.sweep.f_end),
                 e.value("duration", c.sweep.duration)};
    }
  }
  return c;
}

}  // namespace

void PanSweepConfig::validate() const {
  if (!(angle_step > 0.0)) throw ValidationError("angle_step must be > 0");
  if (angle_end < angle_start) throw ValidationError("angle_end must not precede angle_start");
  if (repetitions < 1) throw ValidationError("repetitions must be >= 1");
  if (!(source_range > 0.0)) throw ValidationError("source_range must be > 0");
  if (!(reference_range > 0.0)) throw ValidationError("reference_range must be > 0");
  if (!(sample_rate > 0.0)) throw ValidationError("sample_rate must be > 0");
  if (snr_db && !std::isfinite(*snr_db)) throw ValidationError("snr_db must be finite");
  if (emitted) {
    emitted->validate();
    if (emitted->samples.empty()) throw ValidationError("emitted signal is empty");
    if (emitted->sample_rate != sample_rate) throw ValidationError("emitted signal sample rate differs from config");
  } else {
    sweep.validate();
  }
}

std::vector<double> PanSweepConfig::angles() const { return linear_range(angle_start, angle_end, angle_step); }

Signal PanSweepConfig::emitted_signal() const { return emitted ? *emitted : log_fm_sweep(sweep, sample_rate); }

Padding required_padding(const ArrayGeometry& geometry, const WaveguideModel* waveguide, double sample_rate) {
  // |source - r| - |source| lies in [-|r|, |r|] for any source position.
  const double radius = max_front_radius(geometry);
  double longest = 0.0;
  if (waveguide) {
    for (double p : waveguide->path_lengths) longest = std::max(longest, p);
  }
  const double v = geometry.sound_speed();
  const auto samples = [&](double meters) { return static_cast<std::size_t>(std::ceil(meters / v * sample_rate)); };
  return {samples(radius) + kPaddingMargin, samples(radius + longest) + kPaddingMargin};
}

MultichannelRecording simulate_recording(const ArrayGeometry& geometry, const WaveguideModel* waveguide,
                                         double source_angle_deg, double source_range, const Signal& emitted,
                                         std::optional<double> snr_db, std::mt19937_64& rng,
                                         const SimulationOptions& options) {
  emitted.validate();
  if (emitted.samples.empty()) throw ValidationError("emitted signal is empty");
  if (!(source_range > 0.0)) throw ValidationError("source_range must be > 0");
  if (waveguide) waveguide->validate(geometry.size());

  const double fs = emitted.sample_rate;
  const Padding pad = required_padding(geometry, waveguide, fs);
  const std::size_t frames = pad.lead + emitted.size() + pad.tail;
  if (frames > options.max_frames) {
    throw ValidationError("simulated recording needs " + std::to_string(frames) + " frames, budget is " +
                          std::to_string(options.max_frames));
  }

  std::vector<double> padded(frames, 0.0);
  std::copy(emitted.samples.begin(), emitted.samples.end(), padded.begin() + static_cast<std::ptrdiff_t>(pad.lead));
  const Spectrum source = fft_forward(padded, fs);

  const Vec3 source_pos = source_range * arrival_direction(source_angle_deg);
  const double v = geometry.sound_speed();
  MultichannelRecording rec{fs, std::vector<std::vector<double>>(geometry.size())};
  for (std::size_t i = 0; i < geometry.size(); ++i) {
    const double dist = distance(source_pos, geometry.elements()[i].front_port);
    double delay = (dist - source_range) / v;
    double gain = options.reference_range / dist;
    if (waveguide) {
      delay += waveguide->path_lengths[i] / v;
      gain *= waveguide->gain(i);
    }
    Spectrum s = source;
    delay_spectrum(s, delay);
    for (auto& x : s.values) x *= gain;
    rec.channels[i] = fft_inverse(s).samples;
  }

  if (snr_db) {
    double quietest = std::numeric_limits<double>::infinity();
    for (const auto& ch : rec.channels) {
      const double energy = std::inner_product(ch.begin(), ch.end(), ch.begin(), 0.0);
      quietest = std::min(quietest, energy / static_cast<double>(emitted.size()));
    }
    const double sigma = std::sqrt(quietest / std::pow(10.0, *snr_db / 10.0));
    std::normal_distribution<double> noise(0.0, 1.0);
    for (auto& ch : rec.channels) {
      for (double& x : ch) x += sigma * noise(rng);
    }
  }
  return rec;
}

std::size_t SweepDataset::recording_count() const {
  std::size_t n = 0;
  for (const auto& reps : recordings) n += reps.size();
  return n;
}

std::optional<std::size_t> SweepDataset::angle_index(double angle_deg) const {
  for (std::size_t a = 0; a < angles.size(); ++a) {
    if (std::abs(angles[a] - angle_deg) < 1e-9) return a;
  }
  return std::nullopt;
}

void SweepDataset::validate() const {
  if (angles.empty() || recordings.size() != angles.size()) throw ValidationError("dataset angle table is inconsistent");
  if (recordings.front().empty()) throw ValidationError("dataset angle without recordings");
  const auto& ref = recordings.front().front();
  for (const auto& reps : recordings) {
    if (reps.empty()) throw ValidationError("dataset angle without recordings");
    for (const auto& r : reps) {
      if (r.sample_rate != ref.sample_rate || r.frames() != ref.frames() || r.channel_count() != ref.channel_count()) {
        throw ValidationError("dataset recordings differ in sample rate, length or channel count");
      }
    }
  }
}

std::mt19937_64 cell_rng(std::uint64_t seed, std::size_t angle_index, std::size_t repetition) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(angle_index), static_cast<std::uint32_t>(repetition)};
  return std::mt19937_64(seq);
}

SweepDataset run_pan_sweep(const ArrayGeometry& geometry, const std::optional<WaveguideModel>& waveguide,
                           const PanSweepConfig& config) {
  config.validate();
  const Signal emitted = config.emitted_signal();
  const auto angles = config.angles();
  const auto reps = static_cast<std::size_t>(config.repetitions);
  const SimulationOptions options{config.reference_range, config.max_frames};

  SweepDataset ds{config, geometry, waveguide, angles,
                  std::vector<std::vector<MultichannelRecording>>(angles.size(), std::vector<MultichannelRecording>(reps))};
  parallel_for(angles.size() * reps, [&](std::size_t cell) {
    const std::size_t a = cell / reps;
    const std::size_t r = cell % reps;
    auto rng = cell_rng(config.seed, a, r);
    ds.recordings[a][r] = simulate_recording(geometry, waveguide ? &*waveguide : nullptr, angles[a],
                                             config.source_range, emitted, config.snr_db, rng, options);
  });
  return ds;
}

DirectivityMap response_map_from_dataset(const SweepDataset& dataset, const ArrayGeometry& geometry, PortSide side,
                                         const CalibrationFilterSet* calibration, const ResponseMapOptions& options) {
  dataset.validate();
  if (dataset.recordings.front().front().channel_count() != geometry.size()) {
    throw ValidationError("dataset channel count does not match the geometry");
  }
  if (!(options.f_max >= options.f_min)) throw ValidationError("response map needs f_min <= f_max");

  const auto& first = dataset.recordings.front().front();
  const std::size_t n = first.frames();
  const double df = first.sample_rate / static_cast<double>(n);
  std::vector<std::size_t> bins;
  std::vector<double> freqs;
  for (std::size_t k = 0; k < one_sided_bins(n); ++k) {
    const double f = static_cast<double>(k) * df;
    if (f >= options.f_min && f <= options.f_max) {
      bins.push_back(k);
      freqs.push_back(f);
    }
  }
  if (bins.empty()) throw ValidationError("no FFT bins inside the requested frequency band");

  std::vector<double> magnitude(dataset.angles.size() * bins.size());
  parallel_for(dataset.angles.size(), [&](std::size_t a) {
    MultichannelRecording rec = average_recordings(dataset.recordings[a]);
    if (calibration) rec = apply_calibration(rec, *calibration);
    const Spectrum s = fft_forward(beamform_recording(rec, geometry, options.steer_angle, side));
    for (std::size_t b = 0; b < bins.size(); ++b) magnitude[a * bins.size() + b] = std::abs(s.values[bins[b]]);
  });
  return normalize_map(dataset.angles, std::move(freqs), magnitude, options.steer_angle);
}

PsdEstimate dataset_psd(const SweepDataset& dataset, const WelchOptions& options) {
  dataset.validate();
  std::vector<PsdEstimate> per_angle(dataset.angles.size());
  parallel_for(dataset.angles.size(), [&](std::size_t a) {
    const MultichannelRecording rec = average_recordings(dataset.recordings[a]);
    PsdEstimate acc;
    for (std::size_t c = 0; c < rec.channel_count(); ++c) {
      PsdEstimate p = welch_psd(rec.channel(c), options);
      if (c == 0) {
        acc = std::move(p);
      } else {
        for (std::size_t k = 0; k < acc.power_density.size(); ++k) acc.power_density[k] += p.power_density[k];
      }
    }
    for (double& x : acc.power_density) x /= static_cast<double>(rec.channel_count());
    per_angle[a] = std::move(acc);
  });
  PsdEstimate out = per_angle.front();
  for (std::size_t a = 1; a < per_angle.size(); ++a) {
    for (std::size_t k = 0; k < out.power_density.size(); ++k) out.power_density[k] += per_angle[a].power_density[k];
  }
  for (double& x : out.power_density) x /= static_cast<double>(per_angle.size());
  return out;
}

std::pair<PsdEstimate, PsdEstimate> psd_comparison(const SweepDataset& a, const SweepDataset& b,
                                                   const WelchOptions& options) {
  a.validate();
  b.validate();
  if (a.sample_rate() != b.sample_rate()) throw ValidationError("datasets have different sample rates");
  return {dataset_psd(a, options), dataset_psd(b, options)};
}

std::vector<MultichannelRecording> boresight_recordings(const SweepDataset& dataset) {
  const auto idx = dataset.angle_index(0.0);
  if (!idx) throw ValidationError("dataset has no 0 degree (boresight) recordings");
  return dataset.recordings[*idx];
}

std::string recording_file_name(double angle_deg, int repetition) {
  char angle[32];
  if (angle_deg == std::round(angle_deg)) {
    std::snprintf(angle, sizeof angle, "%+04d", static_cast<int>(std::lround(angle_deg)));
  } else {
    std::snprintf(angle, sizeof angle, "%+06.2f", angle_deg);
    std::replace(angle, angle + sizeof angle, '.', 'p');
  }
  char name[96];
  std::snprintf(name, sizeof name, "angle_%s_rep_%02d.wav", angle, repetition);
  return name;
}

void save_dataset(const std::filesystem::path& dir, const SweepDataset& dataset) {
  dataset.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  save_geometry(dir / kDatasetGeometryName, {dataset.geometry, dataset.waveguide});
  if (dataset.config.emitted) {
    write_wav(dir / "emitted.wav", {dataset.config.emitted->sample_rate, {dataset.config.emitted->samples}});
  }
  json files = json::array();
  for (std::size_t a = 0; a < dataset.angles.size(); ++a) {
    for (std::size_t r = 0; r < dataset.recordings[a].size(); ++r) {
      const std::string name = recording_file_name(dataset.angles[a], static_cast<int>(r));
      write_wav(dir / name, dataset.recordings[a][r]);
      files.push_back({{"angle", dataset.angles[a]}, {"repetition", r}, {"file", name}});
    }
  }
  json manifest;
  manifest["config"] = config_to_json(dataset.config);
  manifest["geometry_file"] = kDatasetGeometryName;
  manifest["waveguide"] = dataset.waveguide.has_value();
  manifest["seed"] = dataset.config.seed;
  manifest["calibrated"] = dataset.calibrated;
  manifest["files"] = std::move(files);
  write_json_file(dir / kManifestName, manifest);
}

SweepDataset load_dataset(const std::filesystem::path& dir) {
  const auto manifest_path = dir / kManifestName;
  if (!std::filesystem::exists(manifest_path)) throw IoError("no dataset manifest at " + manifest_path.string());
  const json manifest = read_json_file(manifest_path);
  try {
    auto geo = load_geometry(dir / manifest.value("geometry_file", std::string(kDatasetGeometryName)));
    PanSweepConfig config = config_from_json(manifest.value("config", json::object()), dir);

    std::map<double, std::map<int, std::string>> table;
    for (const auto& f : manifest.at("files")) {
      table[f.at("angle").get<double>()][f.value("repetition", 0)] = f.at("file").get<std::string>();
    }
    if (table.empty()) throw ValidationError("dataset manifest lists no files");

    SweepDataset ds{config, geo.geometry, geo.waveguide, {}, {}, manifest.value("calibrated", false)};
    if (!manifest.value("waveguide", geo.waveguide.has_value())) ds.waveguide.reset();
    for (const auto& [angle, reps] : table) {
      ds.angles.push_back(angle);
      auto& row = ds.recordings.emplace_back();
      for (const auto& [rep, file] : reps) row.push_back(read_recording(dir / file));
    }
    ds.validate();
    return ds;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed dataset manifest: ") + e.what());
  }
}

}  // namespace aperture
