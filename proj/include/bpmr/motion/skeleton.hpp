#pragma once

#include <set>
#include <string>
#include <vector>

#include "bpmr/kinematics/quat.hpp"

namespace bpmr {

struct SkeletonError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One concrete skeleton: joint hierarchy, per-joint offsets, and height.
// Immutable after construction; safe to share between threads.
struct SkeletonDef {
  std::string name;
  std::vector<int> parent;            // root has -1; parent[i] < i
  std::vector<Vec3> offsets;          // relative to parent frame
  std::vector<std::string> joint_names;
  std::set<int> end_effectors;        // joints carrying BVH End Sites
  std::vector<Vec3> end_site_offsets; // per joint; zero when absent
  double height = 0.0;                // y-extent of the identity-rotation pose

  int joint_count() const { return static_cast<int>(parent.size()); }

  int index_of(const std::string& joint) const {
    for (size_t i = 0; i < joint_names.size(); ++i)
      if (joint_names[i] == joint) return static_cast<int>(i);
    return -1;
  }

  // Joint positions with identity rotations (offsets accumulated down the tree).
  std::vector<Vec3> rest_positions() const {
    std::vector<Vec3> pos(parent.size());
    for (size_t j = 0; j < parent.size(); ++j)
      pos[j] = parent[j] < 0 ? offsets[j] : pos[static_cast<size_t>(parent[j])] + offsets[j];
    return pos;
  }

  double compute_height() const {
    const auto pos = rest_positions();
    double lo = pos.empty() ? 0.0 : pos[0].y, hi = lo;
    for (size_t j = 0; j < pos.size(); ++j) {
      lo = std::min(lo, pos[j].y);
      hi = std::max(hi, pos[j].y);
      if (end_effectors.count(static_cast<int>(j))) {
        const double tip = pos[j].y + end_site_offsets[j].y;
        lo = std::min(lo, tip);
        hi = std::max(hi, tip);
      }
    }
    return hi - lo;
  }

  void validate() const {
    const int J = joint_count();
    if (J == 0) throw SkeletonError("skeleton has no joints");
    if (static_cast<int>(offsets.size()) != J || static_cast<int>(joint_names.size()) != J)
      throw SkeletonError("skeleton field sizes disagree");
    int roots = 0;
    for (int j = 0; j < J; ++j) {
      if (parent[static_cast<size_t>(j)] == -1) {
        ++roots;
      } else if (parent[static_cast<size_t>(j)] < 0 || parent[static_cast<size_t>(j)] >= j) {
        throw SkeletonError("parent index must precede child (joint " + std::to_string(j) + ")");
      }
    }
    if (roots != 1) throw SkeletonError("skeleton must have exactly one root");
  }
};

}  // namespace bpmr
