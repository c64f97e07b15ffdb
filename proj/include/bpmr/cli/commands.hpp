#pragma once

// Command layer shared by the CLI binary and the tests: prepare, train,
// retarget, eval, attn-viz. Each command returns a process exit code and
// reports errors as one machine-parsable "ERROR:<code>: ..." line.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "bpmr/eval/attention_viz.hpp"
#include "bpmr/eval/fid.hpp"
#include "bpmr/eval/metrics.hpp"
#include "bpmr/motion/bvh.hpp"
#include "bpmr/motion/dataset.hpp"
#include "bpmr/motion/manifest.hpp"
#include "bpmr/net/checkpoint.hpp"
#include "bpmr/train/trainer.hpp"

namespace bpmr::cli {

namespace fs = std::filesystem;

inline int fail(std::ostream& err, const std::string& code, const std::string& msg) {
  err << "ERROR:" << code << ": " << msg << "\n";
  return 1;
}

// ---- shared helpers --------------------------------------------------------

// Inverse of facing localization: a clip back to a world-space raw track.
inline RawMotion delocalize(const MotionClip& clip, int fps) {
  RawMotion raw;
  raw.skeleton = clip.skeleton;
  raw.frame_time = 1.0 / fps;
  const RootTrack track = integrate_root(clip.Vbar);
  const Quat start = yaw_quat(clip.start_yaw);
  for (int t = 0; t < clip.frames(); ++t) {
    raw.root_positions.push_back(clip.start_position +
                                 quat_rotate_vec(start, track.positions[static_cast<size_t>(t)]));
    std::vector<Quat> rots = clip.Q[static_cast<size_t>(t)];
    rots[0] = quat_mul(yaw_quat(clip.start_yaw + track.yaw[static_cast<size_t>(t)]), rots[0]);
    raw.local_rotations.push_back(std::move(rots));
  }
  return raw;
}

// Checkpoint-level retarget: encode with the source structure, decode with the
// target structure onto `target_skel` (defaults to the training skeleton).
inline MotionClip retarget_clip(const StructureState& src, const StructureState& dst,
                                const MotionClip& clip, const SkeletonDef* target_skel = nullptr) {
  if (src.model.partition().part_count() != dst.model.partition().part_count())
    throw PartitionMismatch("source and target partitions disagree on part count");
  const SkeletonDef& out_skel = target_skel ? *target_skel : dst.skeleton;
  ad::NoGradGuard guard;
  const int T = clip.frames();
  ad::Tensor M = ad::Tensor::from({T, clip.joints() + 1, 4},
                                  apply_norm(clip.flatten(), src.norm));
  ad::Tensor H = src.model.encode_motion(M);
  ad::Tensor out = dst.model.decode_motion(H, dst.model.encode_skeleton(out_skel));
  MotionClip result = MotionClip::unflatten(out_skel, invert_norm(out.data(), dst.norm), T);
  result.start_position = clip.start_position;
  result.start_yaw = clip.start_yaw;
  return result;
}

inline StructureData dataset_to_structure(const PreparedDataset& ds, const std::string& split) {
  StructureData s;
  s.id = ds.structure_id;
  s.skeleton = ds.skeleton;
  s.partition = ds.partition;
  s.norm = ds.norm;
  s.vstats = ds.vstats;
  s.clips = split == "train" ? ds.train_clips : ds.test_clips;
  return s;
}

// ---- prepare ---------------------------------------------------------------

inline int cmd_prepare(const std::string& manifest_path, const std::string& partition_spec,
                       const std::string& out_dir, int clip_len, std::ostream& log,
                       std::ostream& err) {
  try {
    const DatasetManifest manifest = load_manifest(manifest_path);
    PreparedDataset ds;
    ds.structure_id = manifest.structure_id;
    ds.fps = manifest.fps;
    ds.clip_len = clip_len;

    bool have_skeleton = false;
    int warnings = 0;
    for (const auto& entry : manifest.files) {
      auto [skel, raw] = parse_bvh_file(entry.path);
      if (!have_skeleton) {
        ds.skeleton = skel;
        ds.partition = load_partition(partition_spec, skel);
        have_skeleton = true;
      } else if (skel.joint_names != ds.skeleton.joint_names) {
        return fail(err, "SKELETON_MISMATCH",
                    entry.path + " does not match the structure's joint list");
      }
      try {
        for (auto& clip : localize_and_clip(raw, clip_len, manifest.fps)) {
          auto& bucket = entry.split == "train" ? ds.train_clips : ds.test_clips;
          bucket.push_back(clip.flatten());
        }
      } catch (const TooShort& e) {
        log << "warning: skipping " << entry.path << " (" << e.what() << ")\n";
        ++warnings;
      }
    }
    if (ds.train_clips.empty())
      return fail(err, "EMPTY_DATASET", "no train clips produced from " + manifest_path);

    std::vector<MotionClip> train;
    for (const auto& flat : ds.train_clips)
      train.push_back(MotionClip::unflatten(ds.skeleton, flat, clip_len));
    ds.norm = compute_norm_stats(train);
    ds.vstats = compute_velocity_stats(train);

    fs::create_directories(out_dir);
    save_dataset((fs::path(out_dir) / "dataset.bpd").string(), ds);
    std::ofstream summary(fs::path(out_dir) / "summary.txt");
    summary << "structure_id " << ds.structure_id << "\n"
            << "fps " << ds.fps << "\n"
            << "clip_len " << ds.clip_len << "\n"
            << "joints " << ds.skeleton.joint_count() << "\n"
            << "parts " << ds.partition.part_count() << "\n"
            << "train_clips " << ds.train_clips.size() << "\n"
            << "test_clips " << ds.test_clips.size() << "\n"
            << "warnings " << warnings << "\n";
    log << "prepared " << ds.train_clips.size() << " train / " << ds.test_clips.size()
        << " test clips for " << ds.structure_id << "\n";
    return 0;
  } catch (const std::exception& e) {
    return fail(err, "PREPARE", e.what());
  }
}

// ---- train -----------------------------------------------------------------

inline int cmd_train(const std::string& dataset_a, const std::string& dataset_b,
                     const std::string& run_dir, ModelConfig mcfg, TrainConfig tcfg,
                     int steps_per_epoch, int checkpoint_every, const std::string& resume,
                     std::ostream& log, std::ostream& err) {
  try {
    const PreparedDataset da = load_dataset(dataset_a);
    const PreparedDataset db = load_dataset(dataset_b);
    tcfg.clip_len = da.clip_len;
    StructureData sa = dataset_to_structure(da, "train");
    StructureData sb = dataset_to_structure(db, "train");

    std::unique_ptr<Trainer> trainer;
    if (!resume.empty()) {
      const Checkpoint ckpt = load_checkpoint(resume);
      trainer = std::make_unique<Trainer>(std::move(sa), std::move(sb), tcfg, ckpt);
    } else {
      trainer = std::make_unique<Trainer>(std::move(sa), std::move(sb), mcfg, tcfg);
    }

    fs::create_directories(run_dir);
    {
      nlohmann::json snapshot = {{"seed", tcfg.seed},
                                 {"mode", tcfg.mode},
                                 {"epochs", tcfg.epochs},
                                 {"batch_size", tcfg.batch_size},
                                 {"lr", tcfg.lr},
                                 {"clip_len", tcfg.clip_len},
                                 {"dataset_a", dataset_a},
                                 {"dataset_b", dataset_b}};
      std::ofstream cfg(fs::path(run_dir) / "config.json");
      cfg << snapshot.dump(2) << "\n";
    }
    const fs::path csv_path = fs::path(run_dir) / "loss.csv";
    const bool fresh_csv = resume.empty() || !fs::exists(csv_path);
    std::ofstream csv(csv_path, fresh_csv ? std::ios::trunc : std::ios::app);
    if (fresh_csv) csv << "step,rec,cyc,kine,adv,vel,disc,total\n";
    csv << std::setprecision(17);

    const fs::path latest = fs::path(run_dir) / "latest.bpc";
    for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
      for (int s = 0; s < steps_per_epoch; ++s) {
        LossReport r;
        try {
          r = trainer->train_step();
        } catch (const NonFiniteLoss& e) {
          return fail(err, "NON_FINITE",
                      std::string(e.what()) + " (last-good checkpoint: " + latest.string() + ")");
        }
        csv << trainer->step_count() << "," << r.rec << "," << r.cyc << "," << r.kine << ","
            << r.adv_g << "," << r.vel << "," << r.disc << "," << r.total_g << "\n";
        if (checkpoint_every > 0 && trainer->step_count() % checkpoint_every == 0)
          save_checkpoint(latest.string(), trainer->to_checkpoint());
      }
      log << "epoch " << epoch + 1 << "/" << tcfg.epochs << " done (step "
          << trainer->step_count() << ")\n";
    }
    save_checkpoint(latest.string(), trainer->to_checkpoint());
    return 0;
  } catch (const std::exception& e) {
    return fail(err, "TRAIN", e.what());
  }
}

// ---- retarget --------------------------------------------------------------

inline int cmd_retarget(const std::string& checkpoint_path, const std::string& input_bvh,
                        const std::string& source_id, const std::string& target_id,
                        const std::string& out_bvh, const std::string& target_skeleton_bvh,
                        int fps, std::ostream& log, std::ostream& err) {
  try {
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    if (!ckpt.structures.count(source_id))
      return fail(err, "STRUCTURE", "checkpoint has no structure '" + source_id + "'");
    if (!ckpt.structures.count(target_id))
      return fail(err, "STRUCTURE", "checkpoint has no structure '" + target_id + "'");
    const StructureState& src = ckpt.structures.at(source_id);
    const StructureState& dst = ckpt.structures.at(target_id);

    auto [skel, raw] = parse_bvh_file(input_bvh);
    if (skel.joint_names != src.skeleton.joint_names)
      return fail(err, "STRUCTURE",
                  input_bvh + " joints do not match trained structure '" + source_id + "'");

    SkeletonDef target_skel = dst.skeleton;
    if (!target_skeleton_bvh.empty()) {
      auto [tskel, traw] = parse_bvh_file(target_skeleton_bvh);
      (void)traw;
      if (tskel.joint_names != dst.skeleton.joint_names)
        return fail(err, "STRUCTURE",
                    target_skeleton_bvh + " joints do not match structure '" + target_id + "'");
      target_skel = tskel;
    }

    // whole-track retarget; the encoder needs T divisible by 4
    const double src_fps = 1.0 / raw.frame_time;
    const int decim = std::max(1, static_cast<int>(std::round(src_fps / fps)));
    const int T_all = ((raw.frame_count() + decim - 1) / decim) / 4 * 4;
    if (T_all < 4) return fail(err, "TOO_SHORT", input_bvh + " has fewer than 4 usable frames");
    const MotionClip clip = localize_and_clip(raw, T_all, fps)[0];
    const MotionClip out = retarget_clip(src, dst, clip, &target_skel);

    serialize_bvh_file(out_bvh, out.skeleton, delocalize(out, fps));
    log << "retargeted " << T_all << " frames " << source_id << " -> " << target_id << " into "
        << out_bvh << "\n";
    return 0;
  } catch (const std::exception& e) {
    return fail(err, "RETARGET", e.what());
  }
}

// ---- eval ------------------------------------------------------------------

inline int cmd_eval(const std::string& checkpoint_path, const std::string& dataset_a,
                    const std::string& dataset_b, const std::string& out_dir, int fid_steps,
                    std::uint64_t seed, std::ostream& log, std::ostream& err) {
  try {
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    const PreparedDataset da = load_dataset(dataset_a);
    const PreparedDataset db = load_dataset(dataset_b);
    fs::create_directories(out_dir);

    std::ofstream report(fs::path(out_dir) / "metrics.csv");
    report << "source,target,mpjpe,fid,notes\n";

    const std::vector<const PreparedDataset*> sets = {&da, &db};
    for (const PreparedDataset* s : sets)
      if (!ckpt.structures.count(s->structure_id))
        return fail(err, "STRUCTURE",
                    "checkpoint has no structure '" + s->structure_id + "'");

    for (const PreparedDataset* s : sets) {
      for (const PreparedDataset* t : sets) {
        const StructureState& src = ckpt.structures.at(s->structure_id);
        const StructureState& dst = ckpt.structures.at(t->structure_id);
        const auto eval_clips = s->clips(s->test_clips.empty() ? "train" : "test");

        std::vector<MotionClip> retargeted;
        for (const auto& clip : eval_clips) retargeted.push_back(retarget_clip(src, dst, clip));

        std::ostringstream notes;
        std::string mpjpe_cell = "-";
        if (s->structure_id == t->structure_id) {
          // identity retargeting is its own ground truth pair
          mpjpe_cell = std::to_string(mpjpe(retargeted, eval_clips));
          // recall curve on the first pair
          try {
            const auto curve = contact_recall(eval_clips[0], retargeted[0], default_epsilons());
            std::ofstream rc(fs::path(out_dir) /
                             ("recall_" + s->structure_id + ".csv"));
            rc << "eps,recall\n";
            for (const auto& pt : curve)
              rc << pt.eps << "," << (pt.recall ? std::to_string(*pt.recall) : "undefined")
                 << "\n";
          } catch (const NoContacts& e) {
            notes << "recall skipped (" << e.what() << "); ";
          }
        } else {
          notes << "no cross-structure ground truth: MPJPE/recall skipped; ";
        }

        // FID of retargeted clips against real clips of the target structure
        const auto real_clips = t->clips(t->test_clips.empty() ? "train" : "test");
        FidConfig fcfg;
        fcfg.channels = 32;  // desk-scale feature model
        fcfg.in_channels = (t->skeleton.joint_count() + 1) * 4;
        FidFeatureModel fid_model(fcfg, seed);
        auto to_input = [&](const MotionClip& c) {
          const int T = c.frames(), C = (c.joints() + 1) * 4;
          ad::Tensor m = ad::Tensor::from({T, C}, apply_norm(c.flatten(), t->norm));
          return ad::transpose2d(m);
        };
        std::vector<ad::Tensor> real_in;
        for (const auto& c : real_clips) real_in.push_back(to_input(c));
        train_fid_model(fid_model, real_in, fid_steps, seed);
        std::vector<std::vector<double>> feat_real, feat_ret;
        for (const auto& x : real_in) feat_real.push_back(fid_model.features(x));
        for (const auto& c : retargeted) feat_ret.push_back(fid_model.features(to_input(c)));
        const double f = fid(feat_real, feat_ret);

        report << s->structure_id << "," << t->structure_id << "," << mpjpe_cell << "," << f
               << "," << notes.str() << "\n";
      }
    }
    log << "metric report written to " << (fs::path(out_dir) / "metrics.csv").string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    return fail(err, "EVAL", e.what());
  }
}

// ---- attn-viz --------------------------------------------------------------

inline int cmd_attn(const std::string& checkpoint_path, const std::string& dataset_path,
                    const std::string& structure_id, const std::string& out_dir, int max_clips,
                    std::ostream& log, std::ostream& err) {
  try {
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    if (!ckpt.structures.count(structure_id))
      return fail(err, "STRUCTURE", "checkpoint has no structure '" + structure_id + "'");
    const StructureState& state = ckpt.structures.at(structure_id);
    const PreparedDataset ds = load_dataset(dataset_path);
    if (ds.structure_id != structure_id)
      return fail(err, "STRUCTURE", "dataset holds '" + ds.structure_id + "', expected '" +
                                        structure_id + "'");
    fs::create_directories(out_dir);

    const auto clips = ds.clips(ds.test_clips.empty() ? "train" : "test");
    const int n = std::min<int>(max_clips, static_cast<int>(clips.size()));
    for (int i = 0; i < n; ++i) {
      ad::Tensor M = ad::Tensor::from({clips[static_cast<size_t>(i)].frames(),
                                       ds.skeleton.joint_count() + 1, 4},
                                      apply_norm(clips[static_cast<size_t>(i)].flatten(), ds.norm));
      const AttentionHeatmap hm = export_attention(state.model, M);
      const std::string stem = (fs::path(out_dir) / ("attn_" + std::to_string(i))).string();
      write_heatmap_csv(stem + ".csv", hm, ds.skeleton.joint_names, ds.partition.part_names);
      render_heatmap_ppm(stem + ".ppm", heatmap_display(hm, ds.partition));
    }
    log << "wrote " << n << " heatmap(s) to " << out_dir << "\n";
    return 0;
  } catch (const std::exception& e) {
    return fail(err, "ATTN", e.what());
  }
}

}  // namespace bpmr::cli
