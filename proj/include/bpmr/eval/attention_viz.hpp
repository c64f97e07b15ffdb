#pragma once

// Attention-heatmap export: first-layer softmax weights of the body-part
// tokens over joints, as raw CSV and simple PPM renderings.

#include <algorithm>
#include <fstream>
#include <string>
#include <vector>

#include "bpmr/net/model.hpp"

namespace bpmr {

// Per frame: N token rows of (J+1) joint weights, renormalized so each token
// row sums to 1 over its (unmasked) joints.
struct AttentionHeatmap {
  int joint_count = 0;  // J
  int part_count = 0;   // N
  std::vector<std::vector<std::vector<double>>> frames;  // T x N x (J+1)
};

inline AttentionHeatmap export_attention(const StructureModel& model,
                                         const ad::Tensor& clip_norm) {
  ad::NoGradGuard guard;
  const auto enc = model.encode_motion_full(clip_norm);
  const int J = model.joint_count();
  const int N = model.partition().part_count();
  const int D = N + J + 1;
  const int T = enc.first_softmax.dim(0) / D;

  AttentionHeatmap hm;
  hm.joint_count = J;
  hm.part_count = N;
  hm.frames.assign(static_cast<size_t>(T),
                   std::vector<std::vector<double>>(static_cast<size_t>(N),
                                                    std::vector<double>(static_cast<size_t>(J + 1))));
  for (int t = 0; t < T; ++t)
    for (int k = 0; k < N; ++k) {
      double total = 0.0;
      for (int j = 0; j <= J; ++j) {
        const double w = enc.first_softmax.at(t * D + k, N + j);
        hm.frames[static_cast<size_t>(t)][static_cast<size_t>(k)][static_cast<size_t>(j)] = w;
        total += w;
      }
      // token rows also attend to themselves; renormalize over the joints
      if (total > 0.0)
        for (int j = 0; j <= J; ++j)
          hm.frames[static_cast<size_t>(t)][static_cast<size_t>(k)][static_cast<size_t>(j)] /= total;
    }
  return hm;
}

// Per-joint display value: max over containing parts; the root cell overlays
// the root-rotation and root-velocity weights.
inline std::vector<std::vector<double>> heatmap_display(const AttentionHeatmap& hm,
                                                        const BodyPartition& partition) {
  const int T = static_cast<int>(hm.frames.size());
  const int J = hm.joint_count;
  std::vector<std::vector<double>> out(static_cast<size_t>(T),
                                       std::vector<double>(static_cast<size_t>(J), 0.0));
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < J; ++j) {
      double v = 0.0;
      for (int k = 0; k < hm.part_count; ++k) {
        if (!partition.joint_in_part(j, k)) continue;
        v = std::max(v, hm.frames[static_cast<size_t>(t)][static_cast<size_t>(k)][static_cast<size_t>(j)]);
        if (j == 0)  // overlay the velocity pseudo-joint onto the root cell
          v = std::max(v, hm.frames[static_cast<size_t>(t)][static_cast<size_t>(k)][static_cast<size_t>(J)]);
      }
      out[static_cast<size_t>(t)][static_cast<size_t>(j)] = v;
    }
  return out;
}

inline void write_heatmap_csv(const std::string& path, const AttentionHeatmap& hm,
                              const std::vector<std::string>& joint_names,
                              const std::vector<std::string>& part_names) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write heatmap CSV: " + path);
  out << "frame,part";
  for (const auto& n : joint_names) out << "," << n;
  out << ",<velocity>\n";
  for (size_t t = 0; t < hm.frames.size(); ++t)
    for (int k = 0; k < hm.part_count; ++k) {
      out << t << "," << part_names[static_cast<size_t>(k)];
      for (int j = 0; j <= hm.joint_count; ++j)
        out << "," << hm.frames[t][static_cast<size_t>(k)][static_cast<size_t>(j)];
      out << "\n";
    }
}

// Joints as rows, frames as columns, warm colors for high weight.
inline void render_heatmap_ppm(const std::string& path,
                               const std::vector<std::vector<double>>& display) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write heatmap image: " + path);
  const int T = static_cast<int>(display.size());
  const int J = T > 0 ? static_cast<int>(display[0].size()) : 0;
  out << "P3\n" << T << " " << J << "\n255\n";
  for (int j = 0; j < J; ++j) {
    for (int t = 0; t < T; ++t) {
      const double v = std::clamp(display[static_cast<size_t>(t)][static_cast<size_t>(j)], 0.0, 1.0);
      const int r = static_cast<int>(255 * v);
      const int g = static_cast<int>(255 * (1.0 - std::abs(v - 0.5) * 2.0));
      const int b = static_cast<int>(255 * (1.0 - v));
      out << r << " " << g << " " << b << (t + 1 == T ? "" : " ");
    }
    out << "\n";
  }
}

}  // namespace bpmr
