#pragma once

// Quantitative metrics: height-normalized MPJPE, foot-contact recall curves,
// and velocity-stratified clip sampling.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <random>
#include <string>
#include <vector>

#include "bpmr/kinematics/fk.hpp"
#include "bpmr/motion/clip.hpp"

namespace bpmr {

struct PairMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoContacts : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Height-normalized mean squared per-joint position error, scaled by 1e3.
// Inputs are paired localized clips on the same (target) structure.
inline double mpjpe(const std::vector<MotionClip>& retargeted,
                    const std::vector<MotionClip>& ground_truth) {
  if (retargeted.size() != ground_truth.size() || retargeted.empty())
    throw PairMismatch("mpjpe: need equally many retargeted and ground-truth clips");
  double total = 0.0;
  long count = 0;
  for (size_t i = 0; i < retargeted.size(); ++i) {
    const MotionClip& r = retargeted[i];
    const MotionClip& g = ground_truth[i];
    if (r.frames() != g.frames() || r.joints() != g.joints())
      throw PairMismatch("mpjpe: clip " + std::to_string(i) + " shapes disagree");
    const double h = g.skeleton.height;
    if (h <= 0.0) throw PairMismatch("mpjpe: target skeleton height must be positive");
    const JointPositions pr = fk(r), pg = fk(g);
    for (int t = 0; t < r.frames(); ++t)
      for (int j = 0; j < r.joints(); ++j) {
        const Vec3 d = pr[static_cast<size_t>(t)][static_cast<size_t>(j)] -
                       pg[static_cast<size_t>(t)][static_cast<size_t>(j)];
        total += (d.x * d.x + d.y * d.y + d.z * d.z) / h;
        ++count;
      }
  }
  return total / static_cast<double>(count) * 1e3;
}

// c(t; eps) = 1 iff the squared per-frame displacement of the joint is < eps,
// defined for t in [1, T-1].
inline std::vector<int> contact_frames(const std::vector<Vec3>& track, double eps) {
  std::vector<int> out;
  for (size_t t = 1; t < track.size(); ++t) {
    const Vec3 d = track[t] - track[t - 1];
    if (d.x * d.x + d.y * d.y + d.z * d.z < eps) out.push_back(static_cast<int>(t));
  }
  return out;
}

struct RecallPoint {
  double eps = 0.0;
  std::optional<double> recall;  // empty when the ground truth has no contacts
};

// R_eps over one joint track pair: fraction of ground-truth contact frames at
// which the target is also in contact.
inline RecallPoint contact_recall_point(const std::vector<Vec3>& gt, const std::vector<Vec3>& tar,
                                        double eps) {
  if (gt.size() != tar.size()) throw PairMismatch("contact_recall: track lengths disagree");
  const std::vector<int> c_gt = contact_frames(gt, eps);
  RecallPoint pt;
  pt.eps = eps;
  if (c_gt.empty()) return pt;  // undefined, not a crash
  const std::vector<int> c_tar = contact_frames(tar, eps);
  std::set<int> tar_set(c_tar.begin(), c_tar.end());
  int hits = 0;
  for (int t : c_gt) hits += tar_set.count(t) ? 1 : 0;
  pt.recall = static_cast<double>(hits) / static_cast<double>(c_gt.size());
  return pt;
}

inline std::vector<double> default_epsilons() {
  // log-spaced over [1e-5, 1e-1] squared offset-units per squared frame
  std::vector<double> eps;
  for (int i = 0; i < 20; ++i) eps.push_back(std::pow(10.0, -5.0 + 4.0 * i / 19.0));
  return eps;
}

// Joint indices whose names look like feet; explicit list overrides.
inline std::vector<int> foot_joints(const SkeletonDef& skel) {
  std::vector<int> out;
  for (int j = 0; j < skel.joint_count(); ++j) {
    const std::string& n = skel.joint_names[static_cast<size_t>(j)];
    if (n.find("Foot") != std::string::npos || n.find("Toe") != std::string::npos ||
        n.find("Ankle") != std::string::npos || n.find("foot") != std::string::npos)
      out.push_back(j);
  }
  return out;
}

// Full recall curve averaged over the listed foot joints of a clip pair.
inline std::vector<RecallPoint> contact_recall(const MotionClip& gt, const MotionClip& tar,
                                               const std::vector<double>& epsilons,
                                               std::vector<int> feet = {}) {
  if (feet.empty()) feet = foot_joints(gt.skeleton);
  if (feet.empty()) throw NoContacts("no foot joints identified; pass them explicitly");
  const JointPositions pg = fk(gt), pt = fk(tar);
  auto track = [](const JointPositions& p, int j) {
    std::vector<Vec3> out;
    for (const auto& frame : p) out.push_back(frame[static_cast<size_t>(j)]);
    return out;
  };
  std::vector<RecallPoint> curve;
  for (double eps : epsilons) {
    double sum = 0.0;
    int defined = 0;
    for (int j : feet) {
      const RecallPoint pt_j = contact_recall_point(track(pg, j), track(pt, j), eps);
      if (pt_j.recall) {
        sum += *pt_j.recall;
        ++defined;
      }
    }
    RecallPoint pt_eps;
    pt_eps.eps = eps;
    if (defined > 0) pt_eps.recall = sum / defined;
    curve.push_back(pt_eps);
  }
  return curve;
}

// Mean root speed of a clip (offset units per frame).
inline double clip_root_speed(const MotionClip& clip) {
  double s = 0.0;
  for (const VbarFrame& v : clip.Vbar) s += std::sqrt(v.vx * v.vx + v.vy * v.vy + v.vz * v.vz);
  return s / std::max(1, clip.frames());
}

// Stratified sampling over 10 equal-width root-speed bins so the drawn set is
// insensitive to the dataset's velocity distribution.
inline std::vector<MotionClip> sample_by_velocity(const std::vector<MotionClip>& dataset, int n,
                                                  std::mt19937_64& rng,
                                                  bool with_replacement = true) {
  if (dataset.empty()) throw EmptyDataset("sample_by_velocity: empty dataset");
  if (!with_replacement && n > static_cast<int>(dataset.size()))
    throw std::runtime_error("sample_by_velocity: " + std::to_string(n) +
                             " clips requested from " + std::to_string(dataset.size()) +
                             " without replacement");
  const int kBins = 10;
  std::vector<double> speed;
  for (const auto& c : dataset) speed.push_back(clip_root_speed(c));
  const double lo = *std::min_element(speed.begin(), speed.end());
  const double hi = *std::max_element(speed.begin(), speed.end());
  std::vector<std::vector<int>> bins(kBins);
  for (size_t i = 0; i < dataset.size(); ++i) {
    int b = hi > lo ? static_cast<int>((speed[i] - lo) / (hi - lo) * kBins) : 0;
    bins[static_cast<size_t>(std::clamp(b, 0, kBins - 1))].push_back(static_cast<int>(i));
  }
  std::vector<const std::vector<int>*> live;
  for (const auto& b : bins)
    if (!b.empty()) live.push_back(&b);

  std::vector<MotionClip> out;
  std::vector<bool> used(dataset.size(), false);
  int stratum = 0;
  int guard = 0;
  while (static_cast<int>(out.size()) < n && guard++ < n * 100) {
    const auto& bin = *live[static_cast<size_t>(stratum)];
    stratum = (stratum + 1) % static_cast<int>(live.size());
    std::uniform_int_distribution<int> pick(0, static_cast<int>(bin.size()) - 1);
    const int idx = bin[static_cast<size_t>(pick(rng))];
    if (!with_replacement) {
      if (used[static_cast<size_t>(idx)]) continue;
      used[static_cast<size_t>(idx)] = true;
    }
    out.push_back(dataset[static_cast<size_t>(idx)]);
  }
  return out;
}

}  // namespace bpmr
