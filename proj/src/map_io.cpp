#include "aperture/map_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "aperture/errors.hpp"

namespace aperture {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

double parse_double(const std::string& field) {
  if (field == "-inf") return -std::numeric_limits<double>::infinity();
  if (field == "inf") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || ptr != end) throw IoError("bad number '" + field + "' in CSV");
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

// Viridis anchors, linearly interpolated.
std::array<unsigned char, 3> colormap(double t) {
  static constexpr std::array<std::array<double, 3>, 5> anchors{{{68, 1, 84},
                                                                  {59, 82, 139},
                                                                  {33, 145, 140},
                                                                  {94, 201, 98},
                                                                  {253, 231, 37}}};
  t = std::clamp(t, 0.0, 1.0) * (anchors.size() - 1);
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(t), anchors.size() - 2);
  const double u = t - static_cast<double>(i);
  std::array<unsigned char, 3> rgb{};
  for (std::size_t c = 0; c < 3; ++c) {
    rgb[c] = static_cast<unsigned char>(std::lround(anchors[i][c] * (1.0 - u) + anchors[i + 1][c] * u));
  }
  return rgb;
}

}  // namespace

std::string format_double(double value) {
  if (std::isinf(value)) return value < 0 ? "-inf" : "inf";
  if (std::isnan(value)) return "nan";
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return {buf.data(), ptr};
}

void write_map_csv(const std::filesystem::path& path, const DirectivityMap& map) {
  map.validate();
  auto out = open_out(path);
  out << "angle_deg \\ freq_hz";
  for (double f : map.frequency_bins) out << ',' << format_double(f);
  out << '\n';
  for (std::size_t a = 0; a < map.angles(); ++a) {
    out << format_double(map.scan_angles[a]);
    for (std::size_t f = 0; f < map.frequencies(); ++f) out << ',' << format_double(map.at(a, f));
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

DirectivityMap read_map_csv(const std::filesystem::path& path, double steer_angle) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty map file");
  DirectivityMap map;
  map.steer_angle = steer_angle;
  const auto header = split(line);
  for (std::size_t i = 1; i < header.size(); ++i) map.frequency_bins.push_back(parse_double(header[i]));
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split(line);
    if (fields.size() != header.size()) throw IoError(path.string() + ": ragged map row");
    map.scan_angles.push_back(parse_double(fields[0]));
    for (std::size_t i = 1; i < fields.size(); ++i) map.response_db.push_back(parse_double(fields[i]));
  }
  map.validate();
  return map;
}

void write_map_png(const std::filesystem::path& path, const DirectivityMap& map, double floor_db) {
  map.validate();
  if (!(floor_db < 0.0)) throw ValidationError("png dB floor must be negative");
  const std::size_t width = map.frequencies();
  const std::size_t height = map.angles();
  std::vector<unsigned char> pixels(width * height * 3);
  for (std::size_t row = 0; row < height; ++row) {
    const std::size_t a = height - 1 - row;  // largest angle on top
    for (std::size_t f = 0; f < width; ++f) {
      const double db = map.at(a, f);
      const auto rgb = colormap(std::isfinite(db) ? 1.0 - db / floor_db : 0.0);
      std::copy(rgb.begin(), rgb.end(), pixels.begin() + static_cast<std::ptrdiff_t>((row * width + f) * 3));
    }
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, pixels.data(), 0, nullptr)) {
    throw IoError("cannot write png " + path.string() + ": " + image.message);
  }
}

void write_psd_csv(const std::filesystem::path& path, const PsdEstimate& a, const PsdEstimate* b) {
  if (b && b->frequency_bins != a.frequency_bins) throw ValidationError("PSD estimates use different frequency grids");
  auto out = open_out(path);
  out << (b ? "frequency_hz,power_density_a,power_density_b\n" : "frequency_hz,power_density\n");
  for (std::size_t k = 0; k < a.frequency_bins.size(); ++k) {
    out << format_double(a.frequency_bins[k]) << ',' << format_double(a.power_density[k]);
    if (b) out << ',' << format_double(b->power_density[k]);
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace aperture
