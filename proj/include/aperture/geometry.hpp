#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace aperture {

inline constexpr double kDefaultSoundSpeed = 343.0;  // m/s
inline constexpr double kDefaultPcbSpacing = 3.8e-3;
inline constexpr double kDefaultBaffleSpacing = 1.8e-3;
inline constexpr double kDefaultBaffleThickness = 10e-3;
inline constexpr int kDefaultGridRows = 5;
inline constexpr int kDefaultGridCols = 6;

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, const Vec3& a) { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

/// Which acoustic inlet of an element to use: the microphone port on the
/// PCB or the inlet on the front of the baffle.
enum class PortSide { Pcb, Front };

PortSide parse_port_side(const std::string& name);
std::string to_string(PortSide side);

struct ElementPorts {
  int index = 0;
  Vec3 pcb_port;
  Vec3 front_port;  // equals pcb_port when there is no baffle
};

/// Immutable element layout plus the propagation speed of the medium.
///
/// Construction validates: at least one element, unique channel indices,
/// finite coordinates, positive sound speed and distinct front ports.
class ArrayGeometry {
 public:
  explicit ArrayGeometry(std::vector<ElementPorts> elements,
                         double sound_speed = kDefaultSoundSpeed,
                         std::string label = {});

  const std::vector<ElementPorts>& elements() const { return elements_; }
  std::size_t size() const { return elements_.size(); }
  double sound_speed() const { return sound_speed_; }
  const std::string& label() const { return label_; }

  std::vector<Vec3> ports(PortSide side) const;
  const Vec3& port(std::size_t i, PortSide side) const {
    return side == PortSide::Pcb ? elements_[i].pcb_port : elements_[i].front_port;
  }

  /// Largest pcb-to-front offset; zero for an unbaffled array.
  double max_port_offset() const;

 private:
  std::vector<ElementPorts> elements_;
  double sound_speed_;
  std::string label_;
};

/// Per-channel acoustic path through the baffle, approximated as a pure
/// delay (path_length / sound_speed) plus a flat attenuation.
struct WaveguideModel {
  std::vector<double> path_lengths;    // meters
  std::vector<double> attenuation_db;  // >= 0

  void validate(std::size_t channels) const;
  std::vector<double> delays(double sound_speed) const;
  double gain(std::size_t channel) const { return std::pow(10.0, -attenuation_db[channel] / 20.0); }
};

/// Regular planar grid recovered from element coordinates.
struct GridLayout {
  int rows = 1;       // count along x
  int cols = 1;       // count along y
  double spacing = 0; // 0 for a single element
  Vec3 center;
};

/// Element (r, c) sits at x = (r - (rows-1)/2) * spacing,
/// y = (c - (cols-1)/2) * spacing, z = 0. Rows therefore run along x, which
/// is the pan (scan) axis. Channel index is r * cols + c.
ArrayGeometry make_grid_geometry(int rows, int cols, double spacing,
                                 double sound_speed = kDefaultSoundSpeed,
                                 std::string label = {});

/// Detects a rectangular grid in the z-plane of the pcb ports. Returns
/// nullopt for anything else.
std::optional<GridLayout> detect_grid(const ArrayGeometry& geometry);

struct BaffledArray {
  ArrayGeometry geometry;
  WaveguideModel waveguide;
};

/// Front ports keep the grid topology at front_spacing and sit `thickness`
/// along +z (toward the source). Path lengths use the straight-loft model.
BaffledArray apply_baffle(const ArrayGeometry& geometry, double front_spacing, double thickness,
                          double attenuation_db = 0.0);

double min_spacing(const ArrayGeometry& geometry, PortSide side);

/// Highest frequency free of grating lobes for any steering direction:
/// v / (2 d).
double max_unaliased_frequency(double spacing, double sound_speed = kDefaultSoundSpeed);

}  // namespace aperture
