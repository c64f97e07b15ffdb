#pragma once

// Dataset manifest: JSON file listing structure_id, target fps, and
// file -> split assignments.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace bpmr {

struct DatasetManifest {
  struct Entry {
    std::string path;
    std::string split;  // "train" | "test"
  };

  std::string structure_id;
  int fps = 30;
  std::vector<Entry> files;

  std::vector<std::string> paths(const std::string& split) const {
    std::vector<std::string> out;
    for (const auto& e : files)
      if (e.split == split) out.push_back(e.path);
    return out;
  }
};

inline DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);
  nlohmann::json j;
  in >> j;
  DatasetManifest m;
  m.structure_id = j.at("structure_id").get<std::string>();
  m.fps = j.value("fps", 30);
  const auto base = std::filesystem::path(path).parent_path();
  for (const auto& f : j.at("files")) {
    DatasetManifest::Entry e;
    e.path = f.at("path").get<std::string>();
    e.split = f.at("split").get<std::string>();
    if (e.split != "train" && e.split != "test")
      throw std::runtime_error("manifest split must be train or test: " + e.path);
    // relative paths resolve against the manifest location
    if (!std::filesystem::path(e.path).is_absolute()) e.path = (base / e.path).string();
    if (!std::filesystem::exists(e.path))
      throw std::runtime_error("manifest file does not exist: " + e.path);
    m.files.push_back(std::move(e));
  }
  return m;
}

inline void save_manifest(const std::string& path, const DatasetManifest& m) {
  nlohmann::json j;
  j["structure_id"] = m.structure_id;
  j["fps"] = m.fps;
  j["files"] = nlohmann::json::array();
  for (const auto& e : m.files) j["files"].push_back({{"path", e.path}, {"split", e.split}});
  std::ofstream out(path);
  out << j.dump(2) << "\n";
}

}  // namespace bpmr
