#pragma once

// Facing localization, fixed-length clip windowing, and z-score statistics.

#include <vector>

#include "bpmr/kinematics/quat.hpp"
#include "bpmr/motion/bvh.hpp"
#include "bpmr/motion/skeleton.hpp"

namespace bpmr {

struct TooShort : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EmptyDataset : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Root velocity pseudo-joint entry: (vx, vy, vz, r). Linear velocity is
// expressed in the previous frame's yaw-localized frame (offset units/frame);
// r is the per-frame yaw delta (radians/frame).
struct VbarFrame {
  double vx = 0.0, vy = 0.0, vz = 0.0, r = 0.0;
};

// Facing-localized motion M = [Q, Vbar], fixed length T.
struct MotionClip {
  SkeletonDef skeleton;
  std::vector<std::vector<Quat>> Q;  // T x J, yaw removed from root entry
  std::vector<VbarFrame> Vbar;       // T
  // Absolute start state, kept so global trajectories can be rebuilt.
  Vec3 start_position{};
  double start_yaw = 0.0;

  int frames() const { return static_cast<int>(Vbar.size()); }
  int joints() const { return skeleton.joint_count(); }

  // Flat (J+1)*4 feature row per frame: J quaternions then the Vbar entry.
  std::vector<double> flatten() const {
    const int T = frames(), J = joints();
    std::vector<double> out;
    out.reserve(static_cast<size_t>(T * (J + 1) * 4));
    for (int t = 0; t < T; ++t) {
      for (int j = 0; j < J; ++j) {
        const Quat& q = Q[static_cast<size_t>(t)][static_cast<size_t>(j)];
        out.push_back(q.w);
        out.push_back(q.x);
        out.push_back(q.y);
        out.push_back(q.z);
      }
      const VbarFrame& v = Vbar[static_cast<size_t>(t)];
      out.push_back(v.vx);
      out.push_back(v.vy);
      out.push_back(v.vz);
      out.push_back(v.r);
    }
    return out;
  }

  static MotionClip unflatten(const SkeletonDef& skel, const std::vector<double>& data, int T) {
    const int J = skel.joint_count();
    if (static_cast<int>(data.size()) != T * (J + 1) * 4)
      throw std::runtime_error("unflatten: size mismatch");
    MotionClip clip;
    clip.skeleton = skel;
    clip.Q.assign(static_cast<size_t>(T), std::vector<Quat>(static_cast<size_t>(J)));
    clip.Vbar.resize(static_cast<size_t>(T));
    size_t i = 0;
    for (int t = 0; t < T; ++t) {
      for (int j = 0; j < J; ++j) {
        Quat q{data[i], data[i + 1], data[i + 2], data[i + 3]};
        i += 4;
        clip.Q[static_cast<size_t>(t)][static_cast<size_t>(j)] = quat_normalize(q);
      }
      clip.Vbar[static_cast<size_t>(t)] = {data[i], data[i + 1], data[i + 2], data[i + 3]};
      i += 4;
    }
    return clip;
  }
};

// Remove root yaw and global translation, then cut non-overlapping windows.
// Downsampling is integer-stride frame decimation to `fps`.
inline std::vector<MotionClip> localize_and_clip(const RawMotion& raw, int clip_len, int fps,
                                                 int stride_frames = -1) {
  const double src_fps = 1.0 / raw.frame_time;
  const double ratio = src_fps / fps;
  const int decim = static_cast<int>(std::round(ratio));
  if (decim < 1 || std::abs(ratio - decim) > 0.01 * ratio)
    throw std::runtime_error("fps mismatch: source " + std::to_string(src_fps) +
                             " not an integer multiple of " + std::to_string(fps));
  const int J = raw.skeleton.joint_count();
  const int T_all = (raw.frame_count() + decim - 1) / decim;
  if (T_all < clip_len)
    throw TooShort("motion has " + std::to_string(T_all) + " frames after downsampling, need " +
                   std::to_string(clip_len));

  // Localize the whole downsampled track first, then window it.
  std::vector<std::vector<Quat>> Q(static_cast<size_t>(T_all), std::vector<Quat>(static_cast<size_t>(J)));
  std::vector<VbarFrame> Vbar(static_cast<size_t>(T_all));
  std::vector<double> yaw(static_cast<size_t>(T_all));
  std::vector<Vec3> pos(static_cast<size_t>(T_all));

  double prev_yaw = 0.0;
  for (int t = 0; t < T_all; ++t) {
    const int src = t * decim;
    const auto& rots = raw.local_rotations[static_cast<size_t>(src)];
    double phi = yaw_angle(rots[0]);
    if (t > 0) phi = prev_yaw + wrap_pi(phi - prev_yaw);  // unwrap
    yaw[static_cast<size_t>(t)] = phi;
    prev_yaw = phi;
    pos[static_cast<size_t>(t)] = raw.root_positions[static_cast<size_t>(src)];
    Q[static_cast<size_t>(t)][0] = quat_mul(yaw_quat(phi).conj(), rots[0]);
    for (int j = 1; j < J; ++j) Q[static_cast<size_t>(t)][j] = rots[static_cast<size_t>(j)];
  }
  for (int t = 1; t < T_all; ++t) {
    const Vec3 d = pos[static_cast<size_t>(t)] - pos[static_cast<size_t>(t - 1)];
    const Vec3 local = quat_rotate_vec(yaw_quat(yaw[static_cast<size_t>(t - 1)]).conj(), d);
    Vbar[static_cast<size_t>(t)] = {local.x, local.y, local.z,
                                    yaw[static_cast<size_t>(t)] - yaw[static_cast<size_t>(t - 1)]};
  }

  const int stride = stride_frames > 0 ? stride_frames : clip_len;
  std::vector<MotionClip> clips;
  for (int begin = 0; begin + clip_len <= T_all; begin += stride) {
    MotionClip clip;
    clip.skeleton = raw.skeleton;
    clip.start_position = pos[static_cast<size_t>(begin)];
    clip.start_yaw = yaw[static_cast<size_t>(begin)];
    clip.Q.assign(Q.begin() + begin, Q.begin() + begin + clip_len);
    clip.Vbar.assign(Vbar.begin() + begin, Vbar.begin() + begin + clip_len);
    clip.Vbar[0] = {};  // each clip starts at its own origin
    // hemisphere consistency within the clip (root entry changed by yaw removal)
    for (int t = 1; t < clip_len; ++t) {
      Quat& q = clip.Q[static_cast<size_t>(t)][0];
      const Quat& p = clip.Q[static_cast<size_t>(t - 1)][0];
      if (p.w * q.w + p.x * q.x + p.y * q.y + p.z * q.z < 0.0) q = {-q.w, -q.x, -q.y, -q.z};
    }
    clips.push_back(std::move(clip));
  }
  return clips;
}

// Z-score statistics over (J+1) x 4 channels, std floored at 1e-5.
struct NormStats {
  std::vector<double> mean;  // (J+1)*4
  std::vector<double> stddev;

  int channels() const { return static_cast<int>(mean.size()); }
};

inline NormStats compute_norm_stats(const std::vector<MotionClip>& clips) {
  if (clips.empty()) throw EmptyDataset("compute_norm_stats: no clips");
  const int C = (clips[0].joints() + 1) * 4;
  NormStats stats;
  stats.mean.assign(static_cast<size_t>(C), 0.0);
  stats.stddev.assign(static_cast<size_t>(C), 0.0);
  long n = 0;
  for (const auto& clip : clips) {
    const auto flat = clip.flatten();
    const int T = clip.frames();
    for (int t = 0; t < T; ++t)
      for (int c = 0; c < C; ++c) stats.mean[static_cast<size_t>(c)] += flat[static_cast<size_t>(t * C + c)];
    n += T;
  }
  for (int c = 0; c < C; ++c) stats.mean[static_cast<size_t>(c)] /= static_cast<double>(n);
  for (const auto& clip : clips) {
    const auto flat = clip.flatten();
    const int T = clip.frames();
    for (int t = 0; t < T; ++t)
      for (int c = 0; c < C; ++c) {
        const double d = flat[static_cast<size_t>(t * C + c)] - stats.mean[static_cast<size_t>(c)];
        stats.stddev[static_cast<size_t>(c)] += d * d;
      }
  }
  for (int c = 0; c < C; ++c) {
    stats.stddev[static_cast<size_t>(c)] =
        std::sqrt(stats.stddev[static_cast<size_t>(c)] / static_cast<double>(n));
    if (stats.stddev[static_cast<size_t>(c)] < 1e-5) stats.stddev[static_cast<size_t>(c)] = 1e-5;
  }
  return stats;
}

inline std::vector<double> apply_norm(const std::vector<double>& flat, const NormStats& stats) {
  const int C = stats.channels();
  std::vector<double> out(flat.size());
  for (size_t i = 0; i < flat.size(); ++i) {
    const size_t c = i % static_cast<size_t>(C);
    out[i] = (flat[i] - stats.mean[c]) / stats.stddev[c];
  }
  return out;
}

inline std::vector<double> invert_norm(const std::vector<double>& flat, const NormStats& stats) {
  const int C = stats.channels();
  std::vector<double> out(flat.size());
  for (size_t i = 0; i < flat.size(); ++i) {
    const size_t c = i % static_cast<size_t>(C);
    out[i] = flat[i] * stats.stddev[c] + stats.mean[c];
  }
  return out;
}

}  // namespace bpmr
