#pragma once

// Loss terms of the cyclic-adversarial objective.

#include <string>

#include "bpmr/core/ops.hpp"
#include "bpmr/kinematics/fk_ad.hpp"
#include "bpmr/motion/clip.hpp"
#include "bpmr/net/model.hpp"
#include "bpmr/parts/partition.hpp"

namespace bpmr {

struct DegenerateStats : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LossWeights {
  double rec = 1.0;
  double cyc = 2.5;
  double kine = 1e2;
  double adv = 1.0;
  double vel = 1e3;  // biped_quad mode only
};

// Standard least-squares convention drives real->1, fake->0 for D and
// fake->1 for G. paper_literal mirrors the printed equation instead
// (real->0, fake->1 for D).
enum class AdvConvention { standard, paper_literal };

inline AdvConvention adv_convention_from_string(const std::string& s) {
  if (s == "standard") return AdvConvention::standard;
  if (s == "paper_literal") return AdvConvention::paper_literal;
  throw std::runtime_error("unknown adv_convention: " + s);
}

// Min/max root speed (offset units per frame) over a training set.
struct VelocityStats {
  double v_min = 0.0;
  double v_max = 0.0;
};

inline VelocityStats compute_velocity_stats(const std::vector<MotionClip>& clips) {
  if (clips.empty()) throw EmptyDataset("compute_velocity_stats: no clips");
  VelocityStats st;
  st.v_min = std::numeric_limits<double>::infinity();
  st.v_max = -st.v_min;
  for (const auto& clip : clips)
    for (const VbarFrame& v : clip.Vbar) {
      const double speed = std::sqrt(v.vx * v.vx + v.vy * v.vy + v.vz * v.vz);
      st.v_min = std::min(st.v_min, speed);
      st.v_max = std::max(st.v_max, speed);
    }
  return st;
}

// Per-element weight tensor selecting the joints losses may constrain:
// 1 for encoded joints and the velocity pseudo-joint, 0 elsewhere.
inline ad::Tensor common_part_mask(const BodyPartition& p, int T) {
  const int J = p.joint_count;
  std::vector<double> w(static_cast<size_t>(T * (J + 1) * 4), 0.0);
  for (int t = 0; t < T; ++t)
    for (int j = 0; j <= J; ++j) {
      const bool keep = j == J || p.joint_encoded(j);
      if (keep)
        for (int c = 0; c < 4; ++c) w[static_cast<size_t>((t * (J + 1) + j) * 4 + c)] = 1.0;
    }
  return ad::Tensor::from({T, J + 1, 4}, std::move(w));
}

// L_rec = ||M - M_hat||^2 (mean-square convention).
inline ad::Tensor rec_loss(const ad::Tensor& M, const ad::Tensor& M_hat) {
  return ad::mse(M_hat, M);
}

inline ad::Tensor rec_loss(const ad::Tensor& M, const ad::Tensor& M_hat, const ad::Tensor& mask) {
  return ad::mse_weighted(M_hat, M, mask);
}

// L_cyc = ||H_A - H_B||^2 + ||M_A - M_bar_A||^2.
inline ad::Tensor cyc_loss(const ad::Tensor& H_A, const ad::Tensor& H_B, const ad::Tensor& M_A,
                           const ad::Tensor& M_bar_A) {
  return ad::add(ad::mse(H_B, H_A), ad::mse(M_bar_A, M_A));
}

inline ad::Tensor cyc_loss(const ad::Tensor& H_A, const ad::Tensor& H_B, const ad::Tensor& M_A,
                           const ad::Tensor& M_bar_A, const ad::Tensor& mask) {
  return ad::add(ad::mse(H_B, H_A), ad::mse_weighted(M_bar_A, M_A, mask));
}

// L_kine = ||FK(M) - FK(M_bar)||^2 + ||FK(M) - FK(M_hat)||^2, physical space.
// An optional per-joint weight row (J values) restricts to common parts.
inline ad::Tensor kine_loss(const ad::Tensor& M_phys, const ad::Tensor& M_bar_phys,
                            const ad::Tensor& M_hat_phys, const SkeletonDef& skel,
                            const std::vector<double>* joint_weight = nullptr) {
  using namespace ad;
  Tensor P = fk_ad(M_phys, skel);
  Tensor P_bar = fk_ad(M_bar_phys, skel);
  Tensor P_hat = fk_ad(M_hat_phys, skel);
  if (joint_weight == nullptr) return add(mse(P, P_bar), mse(P, P_hat));
  const int T = P.dim(0), J = P.dim(1);
  std::vector<double> w(static_cast<size_t>(T * J * 3));
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < J; ++j)
      for (int c = 0; c < 3; ++c)
        w[static_cast<size_t>((t * J + j) * 3 + c)] = (*joint_weight)[static_cast<size_t>(j)];
  Tensor wt = Tensor::from({T, J, 3}, std::move(w));
  return add(mse_weighted(P, P_bar, wt), mse_weighted(P, P_hat, wt));
}

// Direction-preserving range-normalized velocity feature:
// f(V) = (V / ||V||) * ((||V|| - v_min) / (v_max - v_min)),
// with the zero vector when ||V|| < 1e-6.
inline ad::Tensor velocity_feature(const ad::Tensor& V, const VelocityStats& st) {
  using namespace ad;
  if (V.shape().size() != 2 || V.dim(1) != 3)
    throw ShapeMismatch("velocity_feature: need (T, 3), got " + shape_str(V.shape()));
  if (!(st.v_max > st.v_min))
    throw DegenerateStats("velocity stats have v_max == v_min (" + std::to_string(st.v_max) + ")");
  const int T = V.dim(0);
  Tensor r = sqrt_t(add_scalar(rowsum(mul(V, V)), 1e-18));  // (T, 1)
  // rows below the speed floor contribute a zero direction (constant mask)
  std::vector<double> m(static_cast<size_t>(T * 3));
  for (int t = 0; t < T; ++t) {
    const double speed = r.at(t, 0);
    for (int c = 0; c < 3; ++c) m[static_cast<size_t>(t * 3 + c)] = speed < 1e-6 ? 0.0 : 1.0;
  }
  Tensor mask = Tensor::from({T, 3}, std::move(m));
  Tensor dir = mul(div(V, broadcast_col(r, 3)), mask);
  Tensor mag = scale(add_scalar(r, -st.v_min), 1.0 / (st.v_max - st.v_min));
  return mul(dir, broadcast_col(mag, 3));
}

// L_vel: per-frame squared-norm mismatch of the two velocity features,
// averaged over frames.
inline ad::Tensor vel_loss(const ad::Tensor& V_s, const ad::Tensor& V_t, const VelocityStats& st_s,
                           const VelocityStats& st_t) {
  using namespace ad;
  Tensor diff = sub(velocity_feature(V_s, st_s), velocity_feature(V_t, st_t));
  return scale(mean(mul(diff, diff)), 3.0);  // mean over frames of the 3-axis squared norm
}

// LSGAN pair. `fake_d` must be the detached fake batch (no generator graph).
struct AdvPair {
  ad::Tensor loss_d;
  ad::Tensor loss_g;
};

inline AdvPair adv_losses(const StructureModel& disc_owner, const std::vector<ad::Tensor>& real,
                          const std::vector<ad::Tensor>& fake,
                          AdvConvention conv = AdvConvention::standard) {
  using namespace ad;
  if (real.empty() || fake.empty()) throw std::runtime_error("adv_losses: empty batch");
  const double real_target = conv == AdvConvention::standard ? 1.0 : 0.0;
  std::vector<Tensor> d_terms, g_terms;
  for (const auto& m : real) {
    Tensor s = disc_owner.discriminate(m);
    Tensor d = add_scalar(s, -real_target);
    d_terms.push_back(mul(d, d));
  }
  for (const auto& m : fake) {
    Tensor s_detached = disc_owner.discriminate(m.detach());
    Tensor dd = add_scalar(s_detached, -(1.0 - real_target));
    d_terms.push_back(mul(dd, dd));

    Tensor s = disc_owner.discriminate(m);
    Tensor dg = add_scalar(s, -real_target);
    g_terms.push_back(mul(dg, dg));
  }
  auto avg = [](const std::vector<Tensor>& terms, double denom) {
    Tensor acc = terms[0];
    for (size_t i = 1; i < terms.size(); ++i) acc = add(acc, terms[i]);
    return scale(acc, 1.0 / denom);
  };
  AdvPair out;
  // loss_d = mean((D(real)-rt)^2) + mean((D(fake)-ft)^2): both halves average
  // over their own batch sizes
  std::vector<Tensor> real_terms(d_terms.begin(), d_terms.begin() + static_cast<long>(real.size()));
  std::vector<Tensor> fake_terms(d_terms.begin() + static_cast<long>(real.size()), d_terms.end());
  out.loss_d = add(avg(real_terms, static_cast<double>(real.size())),
                   avg(fake_terms, static_cast<double>(fake.size())));
  out.loss_g = avg(g_terms, static_cast<double>(fake.size()));
  return out;
}

}  // namespace bpmr
