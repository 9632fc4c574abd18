#include "aperture/geometry.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <utility>

#include "aperture/errors.hpp"

namespace aperture {

namespace {

constexpr double kCoordTolerance = 1e-12;  // meters

bool near(double a, double b, double scale) { return std::abs(a - b) <= 1e-9 * scale + kCoordTolerance; }

// Sorted distinct values, merging those within tolerance.
std::vector<double> distinct_values(std::vector<double> values, double scale) {
  std::sort(values.begin(), values.end());
  std::vector<double> out;
  for (double v : values) {
    if (out.empty() || !near(out.back(), v, scale)) out.push_back(v);
  }
  return out;
}

}  // namespace

PortSide parse_port_side(const std::string& name) {
  if (name == "pcb") return PortSide::Pcb;
  if (name == "front") return PortSide::Front;
  throw ValidationError("unknown port side '" + name + "' (expected pcb|front)");
}

std::string to_string(PortSide side) { return side == PortSide::Pcb ? "pcb" : "front"; }

ArrayGeometry::ArrayGeometry(std::vector<ElementPorts> elements, double sound_speed, std::string label)
    : elements_(std::move(elements)), sound_speed_(sound_speed), label_(std::move(label)) {
  if (elements_.empty()) throw ValidationError("geometry needs at least one element");
  if (!(std::isfinite(sound_speed_) && sound_speed_ > 0.0)) {
    throw ValidationError("sound_speed must be finite and > 0");
  }
  std::set<int> indices;
  for (const auto& e : elements_) {
    if (!e.pcb_port.finite() || !e.front_port.finite()) {
      throw ValidationError("element " + std::to_string(e.index) + " has non-finite coordinates");
    }
    if (!indices.insert(e.index).second) {
      throw ValidationError("duplicate element index " + std::to_string(e.index));
    }
  }
  for (std::size_t i = 0; i < elements_.size(); ++i) {
    for (std::size_t j = i + 1; j < elements_.size(); ++j) {
      if (elements_[i].front_port == elements_[j].front_port) {
        throw ValidationError("elements " + std::to_string(elements_[i].index) + " and " +
                              std::to_string(elements_[j].index) + " share a front port");
      }
    }
  }

  // Ports must lie in parallel planes: for a z-planar pcb side every element
  // is offset by the same non-negative thickness.
  const double z0 = elements_.front().pcb_port.z;
  const bool pcb_planar = std::all_of(elements_.begin(), elements_.end(),
                                      [&](const ElementPorts& e) { return near(e.pcb_port.z, z0, 1.0); });
  if (pcb_planar) {
    const double t0 = elements_.front().front_port.z - z0;
    for (const auto& e : elements_) {
      const double t = e.front_port.z - e.pcb_port.z;
      if (t < -kCoordTolerance || !near(t, t0, 1.0)) {
        throw ValidationError("front ports must sit in a plane parallel to the pcb at thickness >= 0");
      }
    }
  }
}

std::vector<Vec3> ArrayGeometry::ports(PortSide side) const {
  std::vector<Vec3> out;
  out.reserve(elements_.size());
  for (std::size_t i = 0; i < elements_.size(); ++i) out.push_back(port(i, side));
  return out;
}

double ArrayGeometry::max_port_offset() const {
  double m = 0.0;
  for (const auto& e : elements_) m = std::max(m, distance(e.pcb_port, e.front_port));
  return m;
}

void WaveguideModel::validate(std::size_t channels) const {
  if (path_lengths.size() != channels || attenuation_db.size() != channels) {
    throw ValidationError("waveguide model has " + std::to_string(path_lengths.size()) + " path lengths and " +
                          std::to_string(attenuation_db.size()) + " attenuations for " +
                          std::to_string(channels) + " channels");
  }
  for (double p : path_lengths) {
    if (!(std::isfinite(p) && p >= 0.0)) throw ValidationError("waveguide path lengths must be finite and >= 0");
  }
  for (double a : attenuation_db) {
    if (!(std::isfinite(a) && a >= 0.0)) throw ValidationError("waveguide attenuation must be finite and >= 0 dB");
  }
}

std::vector<double> WaveguideModel::delays(double sound_speed) const {
  std::vector<double> out(path_lengths.size());
  std::transform(path_lengths.begin(), path_lengths.end(), out.begin(),
                 [&](double p) { return p / sound_speed; });
  return out;
}

ArrayGeometry make_grid_geometry(int rows, int cols, double spacing, double sound_speed, std::string label) {
  if (rows < 1 || cols < 1) throw ValidationError("grid rows and cols must be >= 1");
  if (!(std::isfinite(spacing) && spacing > 0.0)) throw ValidationError("grid spacing must be > 0");
  std::vector<ElementPorts> elements;
  elements.reserve(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
  const double x0 = 0.5 * (rows - 1);
  const double y0 = 0.5 * (cols - 1);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const Vec3 p{(r - x0) * spacing, (c - y0) * spacing, 0.0};
      elements.push_back({r * cols + c, p, p});
    }
  }
  return ArrayGeometry(std::move(elements), sound_speed, std::move(label));
}

std::optional<GridLayout> detect_grid(const ArrayGeometry& geometry) {
  const auto pcb = geometry.ports(PortSide::Pcb);
  if (pcb.size() == 1) return GridLayout{1, 1, 0.0, pcb.front()};

  double extent = 0.0;
  for (const auto& p : pcb) extent = std::max({extent, std::abs(p.x), std::abs(p.y), std::abs(p.z)});
  const double scale = std::max(extent, 1e-3);

  for (const auto& p : pcb) {
    if (!near(p.z, pcb.front().z, scale)) return std::nullopt;
  }
  std::vector<double> xs, ys;
  for (const auto& p : pcb) {
    xs.push_back(p.x);
    ys.push_back(p.y);
  }
  const auto ux = distinct_values(xs, scale);
  const auto uy = distinct_values(ys, scale);
  if (ux.size() * uy.size() != pcb.size()) return std::nullopt;

  double spacing = 0.0;
  auto check_axis = [&](const std::vector<double>& u) {
    for (std::size_t k = 1; k < u.size(); ++k) {
      const double step = u[k] - u[k - 1];
      if (spacing == 0.0) spacing = step;
      if (!near(step, spacing, scale)) return false;
    }
    return true;
  };
  if (!check_axis(ux) || !check_axis(uy)) return std::nullopt;

  // Every (x, y) combination must be occupied exactly once.
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& p : pcb) {
    auto find = [&](const std::vector<double>& u, double v) {
      return static_cast<std::size_t>(
          std::find_if(u.begin(), u.end(), [&](double w) { return near(w, v, scale); }) - u.begin());
    };
    if (!seen.insert({find(ux, p.x), find(uy, p.y)}).second) return std::nullopt;
  }

  const Vec3 center{0.5 * (ux.front() + ux.back()), 0.5 * (uy.front() + uy.back()), pcb.front().z};
  return GridLayout{static_cast<int>(ux.size()), static_cast<int>(uy.size()), spacing, center};
}

BaffledArray apply_baffle(const ArrayGeometry& geometry, double front_spacing, double thickness,
                          double attenuation_db) {
  if (!(std::isfinite(front_spacing) && front_spacing > 0.0)) throw ValidationError("front spacing must be > 0");
  if (!(std::isfinite(thickness) && thickness > 0.0)) throw ValidationError("baffle thickness must be > 0");
  if (!(std::isfinite(attenuation_db) && attenuation_db >= 0.0)) {
    throw ValidationError("attenuation must be >= 0 dB");
  }
  const auto grid = detect_grid(geometry);
  if (!grid) throw UnsupportedLayoutError("apply_baffle requires a planar rectangular grid of pcb ports");

  const double scale = grid->spacing > 0.0 ? front_spacing / grid->spacing : 1.0;
  std::vector<ElementPorts> elements = geometry.elements();
  WaveguideModel waveguide;
  for (auto& e : elements) {
    const Vec3 lateral = e.pcb_port - grid->center;
    e.front_port = grid->center + scale * lateral + Vec3{0.0, 0.0, thickness};
    waveguide.path_lengths.push_back(distance(e.pcb_port, e.front_port));
    waveguide.attenuation_db.push_back(attenuation_db);
  }
  return {ArrayGeometry(std::move(elements), geometry.sound_speed(), geometry.label()), std::move(waveguide)};
}

double min_spacing(const ArrayGeometry& geometry, PortSide side) {
  if (geometry.size() < 2) throw ValidationError("min_spacing needs at least two elements");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < geometry.size(); ++i) {
    for (std::size_t j = i + 1; j < geometry.size(); ++j) {
      best = std::min(best, distance(geometry.port(i, side), geometry.port(j, side)));
    }
  }
  return best;
}

double max_unaliased_frequency(double spacing, double sound_speed) {
  if (!(std::isfinite(spacing) && spacing > 0.0)) throw ValidationError("spacing must be > 0");
  if (!(std::isfinite(sound_speed) && sound_speed > 0.0)) throw ValidationError("sound speed must be > 0");
  return sound_speed / (2.0 * spacing);
}

}  // namespace aperture
