#pragma once

// Prepared dataset archive: localized fixed-length clips for one structure,
// with normalization and velocity statistics. JSON header + double blob.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bpmr/motion/clip.hpp"
#include "bpmr/motion/skeleton.hpp"
#include "bpmr/net/checkpoint.hpp"
#include "bpmr/parts/partition.hpp"
#include "bpmr/train/losses.hpp"

namespace bpmr {

inline constexpr char kDatasetMagic[8] = {'B', 'P', 'M', 'R', 'D', 'S', 'E', 'T'};

struct PreparedDataset {
  std::string structure_id;
  int fps = 30;
  int clip_len = 64;
  SkeletonDef skeleton;
  BodyPartition partition;
  NormStats norm;
  VelocityStats vstats;
  std::vector<std::vector<double>> train_clips;  // physical space, flattened
  std::vector<std::vector<double>> test_clips;

  std::vector<MotionClip> clips(const std::string& split) const {
    const auto& src = split == "train" ? train_clips : test_clips;
    std::vector<MotionClip> out;
    for (const auto& flat : src) out.push_back(MotionClip::unflatten(skeleton, flat, clip_len));
    return out;
  }
};

inline void save_dataset(const std::string& path, const PreparedDataset& ds) {
  nlohmann::json header;
  header["structure_id"] = ds.structure_id;
  header["fps"] = ds.fps;
  header["clip_len"] = ds.clip_len;
  header["skeleton"] = ckpt_detail::skeleton_to_json(ds.skeleton);
  header["partition"] = ckpt_detail::partition_to_json(ds.partition);
  header["norm"] = {{"mean", ds.norm.mean}, {"stddev", ds.norm.stddev}};
  header["vstats"] = {{"v_min", ds.vstats.v_min}, {"v_max", ds.vstats.v_max}};
  header["train_count"] = ds.train_clips.size();
  header["test_count"] = ds.test_clips.size();

  const std::string head = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dataset: " + path);
  out.write(kDatasetMagic, 8);
  const std::uint64_t hlen = head.size();
  out.write(reinterpret_cast<const char*>(&hlen), 8);
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  for (const auto* clips : {&ds.train_clips, &ds.test_clips})
    for (const auto& c : *clips)
      out.write(reinterpret_cast<const char*>(c.data()),
                static_cast<std::streamsize>(c.size() * sizeof(double)));
  if (!out) throw std::runtime_error("short write on dataset: " + path);
}

inline PreparedDataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kDatasetMagic, 8) != 0)
    throw std::runtime_error("bad dataset magic: " + path);
  std::uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), 8);
  std::string head(hlen, '\0');
  in.read(head.data(), static_cast<std::streamsize>(hlen));
  const nlohmann::json h = nlohmann::json::parse(head);

  PreparedDataset ds;
  ds.structure_id = h.at("structure_id").get<std::string>();
  ds.fps = h.at("fps").get<int>();
  ds.clip_len = h.at("clip_len").get<int>();
  ds.skeleton = ckpt_detail::skeleton_from_json(h.at("skeleton"));
  ds.partition = ckpt_detail::partition_from_json(h.at("partition"));
  ds.norm.mean = h.at("norm").at("mean").get<std::vector<double>>();
  ds.norm.stddev = h.at("norm").at("stddev").get<std::vector<double>>();
  ds.vstats.v_min = h.at("vstats").at("v_min").get<double>();
  ds.vstats.v_max = h.at("vstats").at("v_max").get<double>();

  const size_t clip_doubles =
      static_cast<size_t>(ds.clip_len) * (static_cast<size_t>(ds.skeleton.joint_count()) + 1) * 4;
  auto read_clips = [&](size_t count, std::vector<std::vector<double>>& dst) {
    for (size_t i = 0; i < count; ++i) {
      std::vector<double> c(clip_doubles);
      in.read(reinterpret_cast<char*>(c.data()),
              static_cast<std::streamsize>(c.size() * sizeof(double)));
      if (!in) throw std::runtime_error("truncated dataset blob: " + path);
      dst.push_back(std::move(c));
    }
  };
  read_clips(h.at("train_count").get<size_t>(), ds.train_clips);
  read_clips(h.at("test_count").get<size_t>(), ds.test_clips);
  return ds;
}

}  // namespace bpmr
