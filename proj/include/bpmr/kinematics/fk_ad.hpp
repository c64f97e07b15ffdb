#pragma once

// Differentiable forward kinematics over a motion tensor (T, J+1, 4) in
// physical (denormalized) space. Gradients flow into rotations and Vbar so
// the kinematic loss can train the networks.

#include "bpmr/core/quat_ops.hpp"
#include "bpmr/motion/skeleton.hpp"

namespace bpmr::ad {

// Integrate the root pseudo-joint: vbar (T, 4) -> positions (T, 3), yaw (T).
inline std::pair<Tensor, Tensor> integrate_root_ad(const Tensor& vbar) {
  if (vbar.shape().size() != 2 || vbar.dim(1) != 4)
    throw ShapeMismatch("integrate_root_ad: need (T,4)");
  Tensor yaw = cumsum_rows(slice_col(vbar, 3));
  Tensor yaw_prev = shift_rows_down(yaw);
  Tensor v3 = stack_cols({slice_col(vbar, 0), slice_col(vbar, 1), slice_col(vbar, 2)});
  // rotate deltas into the canonical frame by the previous frame's yaw
  Tensor cos_p = cos_t(yaw_prev), sin_p = sin_t(yaw_prev);
  Tensor vx = slice_col(v3, 0), vy = slice_col(v3, 1), vz = slice_col(v3, 2);
  // R_y(phi): x' = cos*vx + sin*vz ; z' = -sin*vx + cos*vz
  Tensor dx = add(mul(cos_p, vx), mul(sin_p, vz));
  Tensor dz = sub(mul(cos_p, vz), mul(sin_p, vx));
  Tensor deltas = stack_cols({dx, vy, dz});
  // frame 0 contributes no translation: the trajectory starts at the origin
  const int T = vbar.dim(0);
  std::vector<double> mask(static_cast<size_t>(T * 3), 1.0);
  mask[0] = mask[1] = mask[2] = 0.0;
  Tensor pos = cumsum_rows(mul(deltas, Tensor::from({T, 3}, std::move(mask))));
  return {pos, yaw};
}

// motion: (T, J+1, 4) = J quaternion rows + the Vbar pseudo-joint (last).
// Quaternions are renormalized before use. Returns world positions (T, J, 3).
inline Tensor fk_ad(const Tensor& motion, const SkeletonDef& skel) {
  if (motion.shape().size() != 3 || motion.dim(2) != 4)
    throw ShapeMismatch("fk_ad: need (T, J+1, 4)");
  const int J = skel.joint_count();
  if (motion.dim(1) != J + 1)
    throw ShapeMismatch("fk_ad: motion joints " + std::to_string(motion.dim(1) - 1) +
                        " vs skeleton " + std::to_string(J));
  const int T = motion.dim(0);

  Tensor vbar = slice_mid(motion, J);
  auto [root_pos, yaw] = integrate_root_ad(vbar);

  std::vector<Tensor> world_rot(static_cast<size_t>(J));
  std::vector<Tensor> world_pos(static_cast<size_t>(J));
  for (int j = 0; j < J; ++j) {
    Tensor local = quat_normalize_rows(slice_mid(motion, j));
    const int par = skel.parent[static_cast<size_t>(j)];
    if (par < 0) {
      world_rot[static_cast<size_t>(j)] = quat_mul_rows(yaw_quat_rows(yaw), local);
      world_pos[static_cast<size_t>(j)] = root_pos;
    } else {
      world_rot[static_cast<size_t>(j)] =
          quat_mul_rows(world_rot[static_cast<size_t>(par)], local);
      const Vec3& off = skel.offsets[static_cast<size_t>(j)];
      std::vector<double> off_rep(static_cast<size_t>(T * 3));
      for (int t = 0; t < T; ++t) {
        off_rep[static_cast<size_t>(t * 3)] = off.x;
        off_rep[static_cast<size_t>(t * 3 + 1)] = off.y;
        off_rep[static_cast<size_t>(t * 3 + 2)] = off.z;
      }
      Tensor off_t = Tensor::from({T, 3}, std::move(off_rep));
      world_pos[static_cast<size_t>(j)] =
          add(world_pos[static_cast<size_t>(par)],
              quat_rotate_rows(world_rot[static_cast<size_t>(par)], off_t));
    }
  }

  // (T, J, 3): interleave per-joint (T,3) blocks
  std::vector<Tensor> cols;
  cols.reserve(static_cast<size_t>(J * 3));
  for (int j = 0; j < J; ++j)
    for (int c = 0; c < 3; ++c) cols.push_back(slice_col(world_pos[static_cast<size_t>(j)], c));
  return reshape(stack_cols(cols), {T, J, 3});
}

}  // namespace bpmr::ad
