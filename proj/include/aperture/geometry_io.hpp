#pragma once

#include <filesystem>
#include <optional>

#include <json.hpp>

#include "aperture/geometry.hpp"

namespace aperture {

/// Contents of a geometry file: the layout plus an optional waveguide block.
struct GeometryFile {
  ArrayGeometry geometry;
  std::optional<WaveguideModel> waveguide;
};

nlohmann::json to_json(const GeometryFile& file);
GeometryFile geometry_from_json(const nlohmann::json& doc);

/// Doubles are written in shortest round-trip form (at most 17 significant
/// digits) so load(save(g)) reproduces every coordinate bit for bit.
void save_geometry(const std::filesystem::path& path, const GeometryFile& file);
GeometryFile load_geometry(const std::filesystem::path& path);

/// Shared by every JSON file the project writes: 2-space indent, trailing
/// newline.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc);
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace aperture
