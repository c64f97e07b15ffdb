#pragma once

// Versioned checkpoint archive: a JSON header (configs, skeletons, norm stats,
// tensor directory) followed by raw little-endian double blobs.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "bpmr/motion/clip.hpp"
#include "bpmr/motion/skeleton.hpp"
#include "bpmr/net/model.hpp"

namespace bpmr {

inline constexpr char kCheckpointMagic[8] = {'B', 'P', 'M', 'R', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace ckpt_detail {

inline nlohmann::json skeleton_to_json(const SkeletonDef& s) {
  nlohmann::json j;
  j["name"] = s.name;
  j["parent"] = s.parent;
  j["joint_names"] = s.joint_names;
  j["height"] = s.height;
  auto vecs = nlohmann::json::array();
  for (const Vec3& o : s.offsets) vecs.push_back({o.x, o.y, o.z});
  j["offsets"] = vecs;
  auto es = nlohmann::json::array();
  for (const Vec3& o : s.end_site_offsets) es.push_back({o.x, o.y, o.z});
  j["end_site_offsets"] = es;
  j["end_effectors"] = std::vector<int>(s.end_effectors.begin(), s.end_effectors.end());
  return j;
}

inline SkeletonDef skeleton_from_json(const nlohmann::json& j) {
  SkeletonDef s;
  s.name = j.at("name").get<std::string>();
  s.parent = j.at("parent").get<std::vector<int>>();
  s.joint_names = j.at("joint_names").get<std::vector<std::string>>();
  s.height = j.at("height").get<double>();
  for (const auto& v : j.at("offsets")) s.offsets.push_back({v[0], v[1], v[2]});
  for (const auto& v : j.at("end_site_offsets")) s.end_site_offsets.push_back({v[0], v[1], v[2]});
  for (int e : j.at("end_effectors").get<std::vector<int>>()) s.end_effectors.insert(e);
  s.validate();
  return s;
}

inline nlohmann::json partition_to_json(const BodyPartition& p) {
  nlohmann::json j;
  j["joint_count"] = p.joint_count;
  j["part_names"] = p.part_names;
  auto parts = nlohmann::json::array();
  for (const auto& part : p.parts) parts.push_back(std::vector<int>(part.begin(), part.end()));
  j["parts"] = parts;
  return j;
}

inline BodyPartition partition_from_json(const nlohmann::json& j) {
  BodyPartition p;
  p.joint_count = j.at("joint_count").get<int>();
  p.part_names = j.at("part_names").get<std::vector<std::string>>();
  for (const auto& part : j.at("parts")) {
    std::set<int> s;
    for (int v : part.get<std::vector<int>>()) s.insert(v);
    p.parts.push_back(std::move(s));
  }
  p.validate();
  return p;
}

inline nlohmann::json config_to_json(const ModelConfig& c) {
  return {{"d", c.d},
          {"h_embed", c.h_embed},
          {"h_conv", c.h_conv},
          {"h_skel", c.h_skel},
          {"h_dec", c.h_dec},
          {"conv_width", c.conv_width},
          {"attn_layers", c.attn_layers},
          {"pan_stage2", c.pan_stage2},
          {"token_self_only", c.token_self_only},
          {"disc_c1", c.disc_c1},
          {"disc_c2", c.disc_c2},
          {"disc_width", c.disc_width},
          {"disc_stride", c.disc_stride},
          {"pe_basis", c.pe_basis},
          {"token_init_std", c.token_init_std}};
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.d = j.at("d");
  c.h_embed = j.at("h_embed");
  c.h_conv = j.at("h_conv");
  c.h_skel = j.at("h_skel");
  c.h_dec = j.at("h_dec");
  c.conv_width = j.at("conv_width");
  c.attn_layers = j.at("attn_layers");
  c.pan_stage2 = j.at("pan_stage2");
  c.token_self_only = j.at("token_self_only");
  c.disc_c1 = j.at("disc_c1");
  c.disc_c2 = j.at("disc_c2");
  c.disc_width = j.at("disc_width");
  c.disc_stride = j.at("disc_stride");
  c.pe_basis = j.at("pe_basis");
  c.token_init_std = j.at("token_init_std");
  return c;
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace ckpt_detail

// Everything needed to resume or run inference for one skeletal structure.
struct StructureState {
  StructureModel model;
  SkeletonDef skeleton;  // the training skeleton of this structure
  NormStats norm;
};

// Multi-structure checkpoint with shared extra metadata (step counters etc.).
struct Checkpoint {
  std::map<std::string, StructureState> structures;
  nlohmann::json extra;  // opaque trainer state (step counter, mode, ...)
};

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  using nlohmann::json;
  json header;
  header["version"] = kCheckpointVersion;
  header["extra"] = ckpt.extra.is_null() ? json::object() : ckpt.extra;
  header["structures"] = json::object();

  std::vector<const std::vector<double>*> blobs;
  std::uint64_t offset = 0;
  for (const auto& [id, state] : ckpt.structures) {
    json s;
    s["joint_count"] = state.model.joint_count();
    s["partition"] = ckpt_detail::partition_to_json(state.model.partition());
    s["partition_hash"] = ckpt_detail::fnv1a(s["partition"].dump());
    s["config"] = ckpt_detail::config_to_json(state.model.config());
    s["skeleton"] = ckpt_detail::skeleton_to_json(state.skeleton);
    s["norm"] = {{"mean", state.norm.mean}, {"stddev", state.norm.stddev}};
    s["tensors"] = json::array();
    auto record = [&](const ParamStore& store, const char* which) {
      for (const auto& [name, t] : store.items()) {
        s["tensors"].push_back({{"name", name},
                                {"store", which},
                                {"shape", t.shape()},
                                {"offset", offset},
                                {"count", t.size()}});
        blobs.push_back(&t.data());
        offset += static_cast<std::uint64_t>(t.size());
      }
    };
    record(state.model.generator_params(), "gen");
    record(state.model.discriminator_params(), "disc");
    header["structures"][id] = std::move(s);
  }

  const std::string head = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint: " + path);
  out.write(kCheckpointMagic, 8);
  const std::uint32_t ver = kCheckpointVersion;
  out.write(reinterpret_cast<const char*>(&ver), 4);
  const std::uint64_t hlen = head.size();
  out.write(reinterpret_cast<const char*>(&hlen), 8);
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  for (const auto* blob : blobs)
    out.write(reinterpret_cast<const char*>(blob->data()),
              static_cast<std::streamsize>(blob->size() * sizeof(double)));
  if (!out) throw CheckpointError("short write on checkpoint: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  using nlohmann::json;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw CheckpointError("bad checkpoint magic: " + path);
  std::uint32_t ver = 0;
  in.read(reinterpret_cast<char*>(&ver), 4);
  if (ver != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(ver));
  std::uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), 8);
  std::string head(hlen, '\0');
  in.read(head.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw CheckpointError("truncated checkpoint header: " + path);
  const json header = json::parse(head);
  const std::streampos blob_base = in.tellg();

  Checkpoint ckpt;
  ckpt.extra = header.value("extra", json::object());
  for (const auto& [id, s] : header.at("structures").items()) {
    StructureState state;
    state.skeleton = ckpt_detail::skeleton_from_json(s.at("skeleton"));
    state.norm.mean = s.at("norm").at("mean").get<std::vector<double>>();
    state.norm.stddev = s.at("norm").at("stddev").get<std::vector<double>>();
    BodyPartition partition = ckpt_detail::partition_from_json(s.at("partition"));
    const std::uint64_t expect_hash = s.at("partition_hash").get<std::uint64_t>();
    const std::uint64_t got_hash = ckpt_detail::fnv1a(s.at("partition").dump());
    if (expect_hash != got_hash)
      throw CheckpointError("partition hash mismatch for structure " + id);
    const ModelConfig cfg = ckpt_detail::config_from_json(s.at("config"));
    state.model.rebuild(id, s.at("joint_count").get<int>(), std::move(partition), cfg);
    for (const auto& t : s.at("tensors")) {
      const std::string name = t.at("name").get<std::string>();
      const ad::Shape shape = t.at("shape").get<std::vector<int>>();
      const std::uint64_t offset = t.at("offset").get<std::uint64_t>();
      const int count = t.at("count").get<int>();
      std::vector<double> data(static_cast<size_t>(count));
      in.seekg(blob_base + static_cast<std::streamoff>(offset * sizeof(double)));
      in.read(reinterpret_cast<char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(double)));
      if (!in) throw CheckpointError("truncated tensor blob '" + name + "' in " + path);
      ad::Tensor tensor = ad::Tensor::from(shape, std::move(data), /*requires_grad=*/true);
      ParamStore& store = t.at("store").get<std::string>() == "gen"
                              ? state.model.generator_params()
                              : state.model.discriminator_params();
      store.items()[name] = tensor;
    }
    ckpt.structures.emplace(id, std::move(state));
  }
  return ckpt;
}

}  // namespace bpmr
