#pragma once

// Forward kinematics and global trajectory reconstruction (plain doubles).
// The differentiable version lives in kinematics/fk_ad.hpp.

#include <vector>

#include "bpmr/kinematics/quat.hpp"
#include "bpmr/motion/clip.hpp"
#include "bpmr/motion/skeleton.hpp"

namespace bpmr {

// World joint positions, T x J.
using JointPositions = std::vector<std::vector<Vec3>>;

struct RootTrack {
  std::vector<Vec3> positions;  // T
  std::vector<double> yaw;      // T, accumulated
};

// Inverse of the localization's trajectory removal:
// yaw[t] = sum of r up to t, position deltas rotated by the previous yaw.
inline RootTrack integrate_root(const std::vector<VbarFrame>& vbar) {
  const int T = static_cast<int>(vbar.size());
  RootTrack track;
  track.positions.resize(static_cast<size_t>(T));
  track.yaw.resize(static_cast<size_t>(T));
  double phi = 0.0;
  Vec3 p{};
  for (int t = 0; t < T; ++t) {
    const VbarFrame& v = vbar[static_cast<size_t>(t)];
    if (t > 0) {
      const double prev = track.yaw[static_cast<size_t>(t - 1)];
      const Vec3 d = quat_rotate_vec(yaw_quat(prev), {v.vx, v.vy, v.vz});
      p = p + d;
    }
    phi += v.r;
    track.yaw[static_cast<size_t>(t)] = phi;
    track.positions[static_cast<size_t>(t)] = p;
  }
  return track;
}

// Batched FK over a localized clip. The root world rotation re-applies the
// integrated yaw; the root world position comes from integrate_root.
inline JointPositions fk(const MotionClip& clip) {
  const int T = clip.frames(), J = clip.joints();
  const SkeletonDef& skel = clip.skeleton;
  if (static_cast<int>(clip.Q[0].size()) != J)
    throw std::runtime_error("fk: joint count mismatch with skeleton");
  const RootTrack track = integrate_root(clip.Vbar);
  JointPositions P(static_cast<size_t>(T), std::vector<Vec3>(static_cast<size_t>(J)));
  std::vector<Quat> world(static_cast<size_t>(J));
  for (int t = 0; t < T; ++t) {
    for (int j = 0; j < J; ++j) {
      const Quat& local = clip.Q[static_cast<size_t>(t)][static_cast<size_t>(j)];
      const int par = skel.parent[static_cast<size_t>(j)];
      if (par < 0) {
        world[static_cast<size_t>(j)] =
            quat_mul(yaw_quat(track.yaw[static_cast<size_t>(t)]), local);
        P[static_cast<size_t>(t)][static_cast<size_t>(j)] = track.positions[static_cast<size_t>(t)];
      } else {
        world[static_cast<size_t>(j)] = quat_mul(world[static_cast<size_t>(par)], local);
        P[static_cast<size_t>(t)][static_cast<size_t>(j)] =
            P[static_cast<size_t>(t)][static_cast<size_t>(par)] +
            quat_rotate_vec(world[static_cast<size_t>(par)], skel.offsets[static_cast<size_t>(j)]);
      }
    }
  }
  return P;
}

}  // namespace bpmr
