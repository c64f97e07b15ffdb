#pragma once

// Shared synthetic fixtures: tiny skeletons and procedurally generated
// walking-like motion for training and evaluation tests.

#include <cmath>
#include <random>
#include <vector>

#include "bpmr/motion/bvh.hpp"
#include "bpmr/motion/clip.hpp"
#include "bpmr/net/model.hpp"
#include "bpmr/parts/partition.hpp"
#include "bpmr/train/trainer.hpp"

namespace fixtures {

using namespace bpmr;

// 7-joint biped covering all six humanoid parts.
inline SkeletonDef biped() {
  SkeletonDef s;
  s.name = "biped";
  s.joint_names = {"Hips", "Spine", "Neck", "LeftArm", "RightArm", "LeftUpLeg", "RightUpLeg"};
  s.parent = {-1, 0, 1, 1, 1, 0, 0};
  s.offsets = {{0, 0.9, 0}, {0, 0.3, 0}, {0, 0.25, 0}, {0.2, 0, 0},
               {-0.2, 0, 0}, {0.1, -0.45, 0}, {-0.1, -0.45, 0}};
  s.end_site_offsets = {{}, {}, {0, 0.15, 0}, {0.25, 0, 0}, {-0.25, 0, 0},
                        {0, -0.45, 0}, {0, -0.45, 0}};
  s.end_effectors = {2, 3, 4, 5, 6};
  s.height = s.compute_height();
  return s;
}

// 8-joint quadruped for the common-structure (biped-quad) mode.
inline SkeletonDef quadruped() {
  SkeletonDef s;
  s.name = "quadruped";
  s.joint_names = {"Hips", "Spine", "Neck", "Tail", "FrontLeftLeg", "FrontRightLeg",
                   "BackLeftLeg", "BackRightLeg"};
  s.parent = {-1, 0, 1, 0, 1, 1, 0, 0};
  s.offsets = {{0, 0.6, 0}, {0, 0.05, 0.35}, {0, 0.15, 0.2}, {0, 0.05, -0.3},
               {0.12, -0.1, 0.05}, {-0.12, -0.1, 0.05}, {0.12, -0.1, -0.05},
               {-0.12, -0.1, -0.05}};
  s.end_site_offsets = {{}, {}, {0, 0.12, 0.08}, {0, 0, -0.2}, {0, -0.5, 0},
                        {0, -0.5, 0}, {0, -0.5, 0}, {0, -0.5, 0}};
  s.end_effectors = {2, 3, 4, 5, 6, 7};
  s.height = s.compute_height();
  return s;
}

// Procedural walking-like track: forward drift, gentle yaw sway, and
// phase-offset limb oscillation.
inline RawMotion synthetic_walk(const SkeletonDef& skel, int T, unsigned seed,
                                double speed = 0.04, double swing = 0.5) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase_dist(0.0, 2 * M_PI);
  std::vector<double> phase(static_cast<size_t>(skel.joint_count()));
  for (double& p : phase) p = phase_dist(rng);

  RawMotion raw;
  raw.skeleton = skel;
  raw.frame_time = 1.0 / 30.0;
  const double base_yaw = phase_dist(rng) * 0.25;
  Vec3 pos{0, skel.offsets[0].y, 0};
  for (int t = 0; t < T; ++t) {
    const double sway = 0.1 * std::sin(0.2 * t + phase[0]);
    const double yaw = base_yaw + sway;
    pos = pos + quat_rotate_vec(yaw_quat(yaw), {0, 0, speed});
    pos.y = skel.offsets[0].y + 0.01 * std::sin(0.4 * t);
    raw.root_positions.push_back(pos);

    std::vector<Quat> rots;
    rots.push_back(quat_mul(yaw_quat(yaw),
                            Quat::from_axis_angle({1, 0, 0}, 0.05 * std::sin(0.4 * t))));
    for (int j = 1; j < skel.joint_count(); ++j) {
      const double a = swing * std::sin(0.4 * t + phase[static_cast<size_t>(j)]);
      rots.push_back(Quat::from_axis_angle({1, 0, 0}, a));
    }
    raw.local_rotations.push_back(rots);
  }
  return raw;
}

// Structure dataset built from `n_clips` independent synthetic walks.
inline StructureData make_structure_data(const SkeletonDef& skel, const BodyPartition& partition,
                                         const std::string& id, int T, int n_clips,
                                         unsigned seed) {
  std::vector<MotionClip> clips;
  for (int i = 0; i < n_clips; ++i) {
    const RawMotion raw = synthetic_walk(skel, T, seed + static_cast<unsigned>(i) * 31u);
    clips.push_back(localize_and_clip(raw, T, 30)[0]);
  }
  StructureData data;
  data.id = id;
  data.skeleton = skel;
  data.partition = partition;
  data.norm = compute_norm_stats(clips);
  data.vstats = compute_velocity_stats(clips);
  for (const auto& c : clips) data.clips.push_back(c.flatten());
  return data;
}

inline ModelConfig tiny_model() {
  ModelConfig cfg;
  cfg.d = 8;
  cfg.h_embed = 16;
  cfg.h_conv = 4;
  cfg.h_skel = 8;
  cfg.h_dec = 16;
  cfg.conv_width = 3;
  cfg.disc_c1 = 8;
  cfg.disc_c2 = 4;
  cfg.disc_width = 3;
  return cfg;
}

inline TrainConfig tiny_train(int T, std::uint64_t seed = 5, const std::string& mode = "humanoid") {
  TrainConfig cfg;
  cfg.batch_size = 1;
  cfg.clip_len = T;
  cfg.seed = seed;
  cfg.mode = mode;
  return cfg;
}

}  // namespace fixtures
