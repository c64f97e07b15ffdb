#pragma once

// Body-part partitions, the attention mask matrix U, and the sinusoidal
// joint positional encoding.

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "bpmr/motion/skeleton.hpp"

namespace bpmr {

struct UnknownJoint : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EmptyPart : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OddDim : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Large negative logit that underflows to exactly 0 after softmax.
inline constexpr double kMaskNegInf = -1e9;

// N body parts as joint-index sets over {0..J-1} plus the root-velocity
// pseudo-joint at index J, which belongs to every part. Joints may belong to
// several parts; joints outside every part stay unencoded.
struct BodyPartition {
  int joint_count = 0;  // J (pseudo-joint index is J)
  std::vector<std::set<int>> parts;
  std::vector<std::string> part_names;

  int part_count() const { return static_cast<int>(parts.size()); }
  int vel_index() const { return joint_count; }

  bool joint_in_part(int joint, int k) const {
    return parts[static_cast<size_t>(k)].count(joint) > 0;
  }

  bool joint_encoded(int joint) const {
    for (const auto& p : parts)
      if (p.count(joint)) return true;
    return false;
  }

  // Joint indices of part k excluding the velocity pseudo-joint (offsets only).
  std::vector<int> offsets_joints(int k) const {
    std::vector<int> out;
    for (int j : parts[static_cast<size_t>(k)])
      if (j != vel_index()) out.push_back(j);
    return out;
  }

  void validate() const {
    if (parts.empty()) throw EmptyPart("partition has no parts");
    for (size_t k = 0; k < parts.size(); ++k) {
      // a part holding only the velocity pseudo-joint has no joints to encode
      bool has_joint = false;
      for (int j : parts[k]) has_joint = has_joint || j != joint_count;
      if (!has_joint) throw EmptyPart("part '" + part_names[k] + "' is empty");
      if (!parts[k].count(joint_count))
        throw EmptyPart("part '" + part_names[k] + "' is missing the velocity pseudo-joint");
      for (int j : parts[k])
        if (j < 0 || j > joint_count)
          throw UnknownJoint("part '" + part_names[k] + "' references joint index " +
                             std::to_string(j));
    }
  }
};

// Build a partition from part name -> joint-name lists for a given skeleton.
// The velocity pseudo-joint is added to every part.
inline BodyPartition make_partition(const SkeletonDef& skel,
                                    const std::vector<std::pair<std::string, std::vector<std::string>>>& spec) {
  BodyPartition p;
  p.joint_count = skel.joint_count();
  for (const auto& [name, joints] : spec) {
    std::set<int> part;
    for (const auto& jn : joints) {
      const int idx = skel.index_of(jn);
      if (idx < 0) throw UnknownJoint("joint '" + jn + "' not in skeleton '" + skel.name + "'");
      part.insert(idx);
    }
    part.insert(p.vel_index());
    p.parts.push_back(std::move(part));
    p.part_names.push_back(name);
  }
  p.validate();
  return p;
}

namespace partition_detail {

inline bool name_contains(const std::string& name, std::initializer_list<const char*> subs) {
  for (const char* s : subs)
    if (name.find(s) != std::string::npos) return true;
  return false;
}

}  // namespace partition_detail

// Humanoid preset: head, spine, left/right arm, left/right leg by joint-name
// matching (Mixamo-style names, with or without the "mixamorig:" prefix).
inline BodyPartition preset_humanoid6(const SkeletonDef& skel) {
  using partition_detail::name_contains;
  BodyPartition p;
  p.joint_count = skel.joint_count();
  p.part_names = {"head", "spine", "left_arm", "right_arm", "left_leg", "right_leg"};
  p.parts.assign(6, {});
  for (int j = 0; j < skel.joint_count(); ++j) {
    const std::string& n = skel.joint_names[static_cast<size_t>(j)];
    const bool left = name_contains(n, {"Left", "left", "L_", "l_"});
    if (name_contains(n, {"Head", "Neck"})) {
      p.parts[0].insert(j);
    } else if (name_contains(n, {"Hips", "Spine", "Chest", "Root", "Pelvis"})) {
      p.parts[1].insert(j);
    } else if (name_contains(n, {"Shoulder", "Arm", "Hand", "Elbow", "Wrist"})) {
      p.parts[left ? 2 : 3].insert(j);
    } else if (name_contains(n, {"UpLeg", "Leg", "Foot", "Toe", "Knee", "Ankle", "Hip"})) {
      p.parts[left ? 4 : 5].insert(j);
    }
  }
  for (auto& part : p.parts) part.insert(p.vel_index());
  p.validate();
  return p;
}

// Biped-quadruped preset: N=3 common parts (head, spine, legs). A biped's two
// legs and a quadruped's four legs land in the same "legs" part; arms and
// tails stay unencoded.
inline BodyPartition preset_biped_quad3(const SkeletonDef& skel) {
  using partition_detail::name_contains;
  BodyPartition p;
  p.joint_count = skel.joint_count();
  p.part_names = {"head", "spine", "legs"};
  p.parts.assign(3, {});
  for (int j = 0; j < skel.joint_count(); ++j) {
    const std::string& n = skel.joint_names[static_cast<size_t>(j)];
    if (name_contains(n, {"Head", "Neck"})) {
      p.parts[0].insert(j);
    } else if (name_contains(n, {"Hips", "Spine", "Chest", "Root", "Pelvis"})) {
      p.parts[1].insert(j);
    } else if (name_contains(n, {"UpLeg", "Leg", "Foot", "Toe", "Knee", "Ankle", "Hip"})) {
      p.parts[2].insert(j);
    }
    // arms, hands, tail: unencoded
  }
  for (auto& part : p.parts) part.insert(p.vel_index());
  p.validate();
  return p;
}

// Load a partition from a JSON config:
//   { "parts": { "<part name>": ["JointA", ...], ... } }
// or a preset by name ("humanoid6", "biped-quad3").
inline BodyPartition load_partition(const std::string& path_or_preset, const SkeletonDef& skel) {
  if (path_or_preset == "humanoid6") return preset_humanoid6(skel);
  if (path_or_preset == "biped-quad3") return preset_biped_quad3(skel);
  std::ifstream in(path_or_preset);
  if (!in) throw std::runtime_error("cannot open partition config: " + path_or_preset);
  nlohmann::json j;
  in >> j;
  std::vector<std::pair<std::string, std::vector<std::string>>> spec;
  for (const auto& [name, joints] : j.at("parts").items())
    spec.emplace_back(name, joints.get<std::vector<std::string>>());
  return make_partition(skel, spec);
}

// Attention mask over rows [tokens 0..N-1 | joints N..N+J]. Entry 0 means
// "may attend", kMaskNegInf means isolated. Symmetric by construction.
struct MaskMatrix {
  int n_tokens = 0;
  int n_joints = 0;  // J+1 including the velocity pseudo-joint
  std::vector<double> U;  // (N+J+1)^2 row-major

  int dim() const { return n_tokens + n_joints; }
  double at(int i, int j) const { return U[static_cast<size_t>(i * dim() + j)]; }
};

// token_self_only: tokens attend only to themselves among tokens (symmetry
// then forces joints to see exactly the tokens of their parts).
inline MaskMatrix build_mask(const BodyPartition& p, bool token_self_only = true) {
  const int N = p.part_count();
  const int JP = p.joint_count + 1;  // joints + vel pseudo-joint
  MaskMatrix m;
  m.n_tokens = N;
  m.n_joints = JP;
  const int D = N + JP;
  m.U.assign(static_cast<size_t>(D * D), kMaskNegInf);
  auto set_open = [&](int i, int j) {
    m.U[static_cast<size_t>(i * D + j)] = 0.0;
    m.U[static_cast<size_t>(j * D + i)] = 0.0;
  };
  for (int k = 0; k < N; ++k) {
    set_open(k, k);
    if (!token_self_only)
      for (int k2 = 0; k2 < N; ++k2) set_open(k, k2);
    for (int j = 0; j <= p.joint_count; ++j)
      if (p.joint_in_part(j, k)) set_open(k, N + j);
  }
  // joint-joint: open iff the two joints share at least one part
  for (int a = 0; a <= p.joint_count; ++a)
    for (int b = 0; b <= p.joint_count; ++b)
      for (int k = 0; k < N; ++k)
        if (p.joint_in_part(a, k) && p.joint_in_part(b, k)) {
          set_open(N + a, N + b);
          break;
        }
  return m;
}

// Sinusoidal positional encoding for joint index j, dimension d.
inline std::vector<double> positional_encoding(int j, int d, double basis = 10000.0) {
  if (d < 2 || d % 2 != 0) throw OddDim("positional_encoding: d must be even and >= 2");
  std::vector<double> pe(static_cast<size_t>(d));
  for (int i = 0; i < d / 2; ++i) {
    const double freq = std::pow(basis, 2.0 * i / d);
    pe[static_cast<size_t>(2 * i)] = std::sin(j / freq);
    pe[static_cast<size_t>(2 * i + 1)] = std::cos(j / freq);
  }
  return pe;
}

}  // namespace bpmr
