#pragma once

// Unsupervised cyclic-adversarial training loop over two skeletal structures.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "bpmr/net/checkpoint.hpp"
#include "bpmr/net/model.hpp"
#include "bpmr/train/adam.hpp"
#include "bpmr/train/losses.hpp"

namespace bpmr {

struct NonFiniteLoss : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PartitionMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  int batch_size = 128;
  int epochs = 1000;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  int clip_len = 64;  // T
  int fps = 30;
  int gd_ratio = 1;  // discriminator steps per generator step
  std::uint64_t seed = 0;
  std::string mode = "humanoid";  // "humanoid" | "biped_quad"
  AdvConvention adv_convention = AdvConvention::standard;
  LossWeights weights;

  bool biped_quad() const { return mode == "biped_quad"; }
};

// One structure's dataset plus everything needed to build its model.
struct StructureData {
  std::string id;
  SkeletonDef skeleton;
  BodyPartition partition;
  NormStats norm;
  VelocityStats vstats;
  std::vector<std::vector<double>> clips;  // physical-space flattened (T*(J+1)*4)
};

struct LossReport {
  double rec = 0.0;
  double cyc = 0.0;
  double kine = 0.0;
  double adv_g = 0.0;
  double vel = 0.0;
  double total_g = 0.0;
  double disc = 0.0;

  bool finite() const {
    for (double v : {rec, cyc, kine, adv_g, vel, total_g, disc})
      if (!std::isfinite(v)) return false;
    return true;
  }
};

class Trainer {
 public:
  Trainer(StructureData a, StructureData b, ModelConfig mcfg, TrainConfig tcfg)
      : a_(std::move(a)), b_(std::move(b)), tcfg_(tcfg), rng_(tcfg.seed) {
    if (a_.partition.part_count() != b_.partition.part_count())
      throw PartitionMismatch("structures share the latent space only with equal part counts: " +
                              std::to_string(a_.partition.part_count()) + " vs " +
                              std::to_string(b_.partition.part_count()));
    model_a_ = StructureModel(a_.id, a_.skeleton.joint_count(), a_.partition, mcfg, tcfg.seed + 1);
    model_b_ = StructureModel(b_.id, b_.skeleton.joint_count(), b_.partition, mcfg, tcfg.seed + 2);
    init_optimizers();
  }

  // Resume from a checkpoint produced by to_checkpoint().
  Trainer(StructureData a, StructureData b, TrainConfig tcfg, const Checkpoint& ckpt)
      : a_(std::move(a)), b_(std::move(b)), tcfg_(tcfg), rng_(tcfg.seed) {
    model_a_ = ckpt.structures.at(a_.id).model;
    model_b_ = ckpt.structures.at(b_.id).model;
    step_ = ckpt.extra.value("step", 0L);
    init_optimizers();
    // replay the sampling stream so a resumed run continues deterministically
    rng_.discard(static_cast<unsigned long long>(ckpt.extra.value("rng_draws", 0UL)));
  }

  StructureModel& model(const std::string& id) {
    if (id == a_.id) return model_a_;
    if (id == b_.id) return model_b_;
    throw std::runtime_error("unknown structure: " + id);
  }
  const StructureData& data(const std::string& id) const {
    if (id == a_.id) return a_;
    if (id == b_.id) return b_;
    throw std::runtime_error("unknown structure: " + id);
  }
  const std::string& id_a() const { return a_.id; }
  const std::string& id_b() const { return b_.id; }
  long step_count() const { return step_; }
  long gen_steps() const { return adam_g_.step_count(); }
  long disc_steps() const { return adam_d_.step_count(); }

  // One alternating G/D step over fresh batches in both directions.
  LossReport train_step() {
    const int batch = effective_batch();
    std::vector<int> idx_a = sample_indices(a_, batch);
    std::vector<int> idx_b = sample_indices(b_, batch);

    model_a_.generator_params().zero_grad();
    model_b_.generator_params().zero_grad();
    model_a_.discriminator_params().zero_grad();
    model_b_.discriminator_params().zero_grad();

    LossReport report;
    ad::Tensor total_g = ad::Tensor::zeros({1});
    ad::Tensor total_d = ad::Tensor::zeros({1});
    run_direction(a_, model_a_, idx_a, b_, model_b_, idx_b, report, total_g, total_d);
    run_direction(b_, model_b_, idx_b, a_, model_a_, idx_a, report, total_g, total_d);
    report.rec /= 2;
    report.cyc /= 2;
    report.kine /= 2;
    report.adv_g /= 2;
    report.vel /= 2;
    report.disc /= 2;
    total_g = ad::scale(total_g, 0.5);
    total_d = ad::scale(total_d, 0.5);
    report.total_g = total_g.item();

    if (!report.finite())
      throw NonFiniteLoss("non-finite loss at step " + std::to_string(step_) + ": rec=" +
                          std::to_string(report.rec) + " cyc=" + std::to_string(report.cyc) +
                          " kine=" + std::to_string(report.kine) + " adv=" +
                          std::to_string(report.adv_g) + " vel=" + std::to_string(report.vel) +
                          " disc=" + std::to_string(report.disc));

    total_g.backward();
    adam_g_.step();
    for (int r = 0; r < tcfg_.gd_ratio; ++r) {
      if (r > 0) {
        // extra D iterations re-evaluate on the same batch
        model_a_.discriminator_params().zero_grad();
        model_b_.discriminator_params().zero_grad();
        ad::Tensor td = ad::Tensor::zeros({1});
        LossReport scratch;
        accumulate_disc_only(a_, model_a_, idx_a, b_, model_b_, idx_b, scratch, td);
        td.backward();
      } else {
        total_d.backward();
      }
      adam_d_.step();
    }
    ++step_;
    return report;
  }

  // Retarget one physical-space clip of `source_id` onto the other structure.
  MotionClip retarget(const MotionClip& clip, const std::string& source_id) {
    const StructureData& src = data(source_id);
    const StructureData& dst = source_id == a_.id ? b_ : a_;
    StructureModel& enc = model(source_id);
    StructureModel& dec = model(dst.id);
    if (enc.partition().part_count() != dec.partition().part_count())
      throw PartitionMismatch("partition part counts disagree");
    ad::NoGradGuard guard;
    const int T = clip.frames();
    ad::Tensor M = ad::Tensor::from({T, src.skeleton.joint_count() + 1, 4},
                                    apply_norm(clip.flatten(), src.norm));
    ad::Tensor H = enc.encode_motion(M);
    ad::Tensor out = dec.decode_motion(H, dec.encode_skeleton(dst.skeleton));
    MotionClip result =
        MotionClip::unflatten(dst.skeleton, invert_norm(out.data(), dst.norm), T);
    result.start_position = clip.start_position;
    result.start_yaw = clip.start_yaw;
    return result;
  }

  Checkpoint to_checkpoint() const {
    Checkpoint ckpt;
    ckpt.structures[a_.id] = {model_a_, a_.skeleton, a_.norm};
    ckpt.structures[b_.id] = {model_b_, b_.skeleton, b_.norm};
    ckpt.extra = {{"step", step_}, {"rng_draws", rng_draws_}, {"mode", tcfg_.mode}};
    return ckpt;
  }

 private:
  void init_optimizers() {
    adam_g_ = Adam(tcfg_.lr, tcfg_.beta1, tcfg_.beta2);
    adam_d_ = Adam(tcfg_.lr, tcfg_.beta1, tcfg_.beta2);
    adam_g_.attach(a_.id, model_a_.generator_params());
    adam_g_.attach(b_.id, model_b_.generator_params());
    adam_d_.attach(a_.id, model_a_.discriminator_params());
    adam_d_.attach(b_.id, model_b_.discriminator_params());
  }

  int effective_batch() const {
    const int n = static_cast<int>(std::min(a_.clips.size(), b_.clips.size()));
    return std::max(1, std::min(tcfg_.batch_size, n));
  }

  std::vector<int> sample_indices(const StructureData& s, int batch) {
    if (s.clips.empty()) throw EmptyDataset("no clips for structure " + s.id);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(s.clips.size()) - 1);
    std::vector<int> idx(static_cast<size_t>(batch));
    for (int& i : idx) {
      i = pick(rng_);
      ++rng_draws_;
    }
    return idx;
  }

  ad::Tensor norm_tensor(const StructureData& s, int index) const {
    const int T = tcfg_.clip_len;
    return ad::Tensor::from({T, s.skeleton.joint_count() + 1, 4},
                            apply_norm(s.clips[static_cast<size_t>(index)], s.norm));
  }

  // Denormalize a normalized-space tensor inside the graph.
  ad::Tensor denorm(const ad::Tensor& M, const StructureData& s) const {
    const int T = M.dim(0), C = s.norm.channels();
    std::vector<double> mu(static_cast<size_t>(T * C)), sd(static_cast<size_t>(T * C));
    for (int t = 0; t < T; ++t)
      for (int c = 0; c < C; ++c) {
        mu[static_cast<size_t>(t * C + c)] = s.norm.mean[static_cast<size_t>(c)];
        sd[static_cast<size_t>(t * C + c)] = s.norm.stddev[static_cast<size_t>(c)];
      }
    const ad::Shape shape = M.shape();
    return ad::add(ad::mul(M, ad::Tensor::from(shape, std::move(sd))),
                   ad::Tensor::from(shape, std::move(mu)));
  }

  static ad::Tensor linear_velocity_rows(const ad::Tensor& M_phys, int J) {
    using namespace ad;
    Tensor vbar = slice_mid(M_phys, J);  // (T, 4)
    return stack_cols({slice_col(vbar, 0), slice_col(vbar, 1), slice_col(vbar, 2)});
  }

  void run_direction(const StructureData& src, StructureModel& src_model,
                     const std::vector<int>& src_idx, const StructureData& dst,
                     StructureModel& dst_model, const std::vector<int>& dst_idx,
                     LossReport& report, ad::Tensor& total_g, ad::Tensor& total_d) {
    using namespace ad;
    const bool bq = tcfg_.biped_quad();
    const LossWeights& w = tcfg_.weights;
    const int batch = static_cast<int>(src_idx.size());
    const double inv_b = 1.0 / batch;

    Tensor mask_src = bq ? common_part_mask(src.partition, tcfg_.clip_len) : Tensor();
    std::vector<double> joint_weight;
    if (bq) {
      for (int j = 0; j < src.skeleton.joint_count(); ++j)
        joint_weight.push_back(src.partition.joint_encoded(j) ? 1.0 : 0.0);
    }

    Tensor hs_src = src_model.encode_skeleton(src.skeleton);
    Tensor hs_dst = dst_model.encode_skeleton(dst.skeleton);

    Tensor rec_acc = Tensor::zeros({1}), cyc_acc = Tensor::zeros({1});
    Tensor kine_acc = Tensor::zeros({1}), vel_acc = Tensor::zeros({1});
    std::vector<Tensor> fakes, reals;
    for (int i = 0; i < batch; ++i) {
      Tensor M = norm_tensor(src, src_idx[static_cast<size_t>(i)]);
      Tensor H = src_model.encode_motion(M);
      Tensor M_hat = src_model.decode_motion(H, hs_src);
      Tensor M_st = dst_model.decode_motion(H, hs_dst);
      Tensor H_st = dst_model.encode_motion(M_st);
      Tensor M_bar = src_model.decode_motion(H_st, hs_src);

      rec_acc = add(rec_acc, bq ? rec_loss(M, M_hat, mask_src) : rec_loss(M, M_hat));
      cyc_acc = add(cyc_acc, bq ? cyc_loss(H, H_st, M, M_bar, mask_src)
                                : cyc_loss(H, H_st, M, M_bar));
      Tensor M_phys = denorm(M, src), M_bar_phys = denorm(M_bar, src),
             M_hat_phys = denorm(M_hat, src);
      kine_acc = add(kine_acc, kine_loss(M_phys, M_bar_phys, M_hat_phys, src.skeleton,
                                         bq ? &joint_weight : nullptr));
      if (bq) {
        Tensor V_s = linear_velocity_rows(M_phys, src.skeleton.joint_count());
        Tensor V_t = linear_velocity_rows(denorm(M_st, dst), dst.skeleton.joint_count());
        vel_acc = add(vel_acc, vel_loss(V_s, V_t, src.vstats, dst.vstats));
      }
      fakes.push_back(M_st);
      reals.push_back(norm_tensor(dst, dst_idx[static_cast<size_t>(i)]));
    }
    rec_acc = scale(rec_acc, inv_b);
    cyc_acc = scale(cyc_acc, inv_b);
    kine_acc = scale(kine_acc, inv_b);
    vel_acc = scale(vel_acc, inv_b);
    AdvPair adv = adv_losses(dst_model, reals, fakes, tcfg_.adv_convention);

    Tensor dir_total = add(add(scale(rec_acc, w.rec), scale(cyc_acc, w.cyc)),
                           add(scale(kine_acc, w.kine), scale(adv.loss_g, w.adv)));
    if (bq) dir_total = add(dir_total, scale(vel_acc, w.vel));

    report.rec += rec_acc.item();
    report.cyc += cyc_acc.item();
    report.kine += kine_acc.item();
    report.adv_g += adv.loss_g.item();
    report.vel += vel_acc.item();
    report.disc += adv.loss_d.item();
    total_g = add(total_g, dir_total);
    total_d = add(total_d, adv.loss_d);
  }

  void accumulate_disc_only(const StructureData& a, StructureModel& ma,
                            const std::vector<int>& idx_a, const StructureData& b,
                            StructureModel& mb, const std::vector<int>& idx_b, LossReport& report,
                            ad::Tensor& total_d) {
    ad::Tensor tg = ad::Tensor::zeros({1});
    run_direction(a, ma, idx_a, b, mb, idx_b, report, tg, total_d);
    run_direction(b, mb, idx_b, a, ma, idx_a, report, tg, total_d);
  }

  StructureData a_, b_;
  TrainConfig tcfg_;
  StructureModel model_a_, model_b_;
  Adam adam_g_, adam_d_;
  std::mt19937_64 rng_;
  std::uint64_t rng_draws_ = 0;
  long step_ = 0;
};

}  // namespace bpmr
