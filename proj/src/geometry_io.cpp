#include "aperture/geometry_io.hpp"

#include <fstream>

#include "aperture/errors.hpp"

namespace aperture {

namespace {

using nlohmann::json;

json vec_to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw ValidationError(std::string(what) + " must be an [x, y, z] array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

json to_json(const GeometryFile& file) {
  const auto& g = file.geometry;
  json doc;
  doc["label"] = g.label();
  doc["sound_speed"] = g.sound_speed();
  json elements = json::array();
  for (const auto& e : g.elements()) {
    elements.push_back({{"index", e.index}, {"pcb_port", vec_to_json(e.pcb_port)}, {"front_port", vec_to_json(e.front_port)}});
  }
  doc["elements"] = std::move(elements);
  if (file.waveguide) {
    doc["waveguide"] = {{"path_lengths", file.waveguide->path_lengths},
                        {"attenuation_db", file.waveguide->attenuation_db}};
  }
  return doc;
}

GeometryFile geometry_from_json(const json& doc) {
  try {
    std::vector<ElementPorts> elements;
    for (const auto& e : doc.at("elements")) {
      const Vec3 pcb = vec_from_json(e.at("pcb_port"), "pcb_port");
      const Vec3 front = e.contains("front_port") ? vec_from_json(e.at("front_port"), "front_port") : pcb;
      elements.push_back({e.at("index").get<int>(), pcb, front});
    }
    GeometryFile file{ArrayGeometry(std::move(elements), doc.value("sound_speed", kDefaultSoundSpeed),
                                    doc.value("label", std::string{})),
                      std::nullopt};
    if (doc.contains("waveguide") && !doc["waveguide"].is_null()) {
      const auto& w = doc["waveguide"];
      WaveguideModel model;
      model.path_lengths = w.at("path_lengths").get<std::vector<double>>();
      model.attenuation_db = w.contains("attenuation_db")
                                 ? w["attenuation_db"].get<std::vector<double>>()
                                 : std::vector<double>(model.path_lengths.size(), 0.0);
      model.validate(file.geometry.size());
      file.waveguide = std::move(model);
    }
    return file;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed geometry document: ") + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << doc.dump(2) << "\n";
  if (!out) throw IoError("write failed for " + path.string());
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void save_geometry(const std::filesystem::path& path, const GeometryFile& file) {
  write_json_file(path, to_json(file));
}

GeometryFile load_geometry(const std::filesystem::path& path) { return geometry_from_json(read_json_file(path)); }

}  // namespace aperture
