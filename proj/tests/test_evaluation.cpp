#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "fixtures.hpp"

#include "bpmr/eval/attention_viz.hpp"
#include "bpmr/eval/fid.hpp"
#include "bpmr/eval/metrics.hpp"

using namespace bpmr;

namespace {

// Single-joint clip whose world track is driven purely by the velocity rows.
MotionClip point_clip(int T, double step_x, double height = 2.0) {
  SkeletonDef s;
  s.name = "point";
  s.joint_names = {"Hips"};
  s.parent = {-1};
  s.offsets = {{0, 0, 0}};
  s.end_site_offsets = {{}};
  s.height = height;
  MotionClip clip;
  clip.skeleton = s;
  clip.Q.assign(static_cast<size_t>(T), {Quat{1, 0, 0, 0}});
  clip.Vbar.resize(static_cast<size_t>(T));
  for (int t = 1; t < T; ++t) clip.Vbar[static_cast<size_t>(t)].vx = step_x;
  return clip;
}

}  // namespace

TEST_CASE("mpjpe is zero on identical clips and matches the closed form") {
  const MotionClip still = point_clip(4, 0.0);
  CHECK(mpjpe({still}, {still}) == 0.0);

  // drifting copy: frame t sits at (0.3 t, 0, 0); squared error 0.09 t^2,
  // height 2, so the metric is mean(0.09 t^2 / 2) * 1e3 over t = 0..3
  const MotionClip drift = point_clip(4, 0.3);
  const double expect = (0.0 + 0.09 + 0.36 + 0.81) / 2.0 / 4.0 * 1e3;
  CHECK(mpjpe({drift}, {still}) == Catch::Approx(expect));
  CHECK(mpjpe({drift}, {still}) == mpjpe({still}, {drift}));

  // halving the height doubles the normalized error
  MotionClip still_short = point_clip(4, 0.0, 1.0);
  MotionClip drift_short = point_clip(4, 0.3, 1.0);
  CHECK(mpjpe({drift_short}, {still_short}) == Catch::Approx(2.0 * expect));

  CHECK_THROWS_AS(mpjpe({still}, {}), PairMismatch);
  CHECK_THROWS_AS(mpjpe({still}, {point_clip(5, 0.0)}), PairMismatch);
}

TEST_CASE("contact recall counts overlapping still frames") {
  // ground truth plants the joint for 11 transition frames (t = 10..20),
  // the retargeted track only for 6 of them (t = 10..15)
  const int T = 25;
  std::vector<Vec3> gt(T), tar(T);
  for (int t = 0; t < T; ++t) {
    const int g_moved = std::min(t, 9) + std::max(0, t - 20);
    const int r_moved = std::min(t, 9) + std::max(0, t - 15);
    gt[static_cast<size_t>(t)] = {0.1 * g_moved, 0, 0};
    tar[static_cast<size_t>(t)] = {0.1 * r_moved, 0, 0};
  }
  const double eps = 1e-4;  // moving frames displace 0.1 per frame, 0.01 squared
  CHECK(contact_frames(gt, eps).size() == 11);
  CHECK(contact_frames(tar, eps).size() == 6);

  const RecallPoint pt = contact_recall_point(gt, tar, eps);
  REQUIRE(pt.recall.has_value());
  CHECK(*pt.recall == Catch::Approx(6.0 / 11.0));

  // perfect agreement and the undefined (no ground-truth contact) case
  REQUIRE(contact_recall_point(gt, gt, eps).recall.has_value());
  CHECK(*contact_recall_point(gt, gt, eps).recall == 1.0);
  std::vector<Vec3> always_moving(T);
  for (int t = 0; t < T; ++t) always_moving[static_cast<size_t>(t)] = {0.1 * t, 0, 0};
  CHECK_FALSE(contact_recall_point(always_moving, tar, eps).recall.has_value());

  CHECK_THROWS_AS(contact_recall_point(gt, std::vector<Vec3>(T - 1), eps), PairMismatch);
}

TEST_CASE("clip-level recall needs foot joints and is 1 against itself") {
  const SkeletonDef skel = fixtures::biped();
  const MotionClip clip = localize_and_clip(fixtures::synthetic_walk(skel, 16, 3), 16, 30)[0];
  // the fixture has no joints named like feet: the caller must pick some
  CHECK(foot_joints(skel).empty());
  CHECK_THROWS_AS(contact_recall(clip, clip, default_epsilons()), NoContacts);

  const std::vector<int> feet = {skel.index_of("LeftUpLeg"), skel.index_of("RightUpLeg")};
  const auto curve = contact_recall(clip, clip, default_epsilons(), feet);
  CHECK(curve.size() == default_epsilons().size());
  bool any_defined = false;
  for (const RecallPoint& pt : curve)
    if (pt.recall) {
      any_defined = true;
      CHECK(*pt.recall == 1.0);
    }
  CHECK(any_defined);  // the largest epsilons accept every frame
}

TEST_CASE("velocity-stratified sampling balances speed strata") {
  // 90 slow clips and 10 fast ones: naive sampling would be 9:1
  std::vector<MotionClip> dataset;
  for (int i = 0; i < 100; ++i) {
    MotionClip c = point_clip(8, i < 90 ? 0.01 : 1.0);
    dataset.push_back(std::move(c));
  }
  std::mt19937_64 rng(17);
  const std::vector<MotionClip> picked = sample_by_velocity(dataset, 100, rng);
  int fast = 0;
  for (const auto& c : picked)
    if (clip_root_speed(c) > 0.5) ++fast;
  CHECK(picked.size() == 100);
  CHECK(std::abs(fast - 50) <= 5);

  std::vector<MotionClip> small(dataset.begin(), dataset.begin() + 5);
  CHECK_THROWS(sample_by_velocity(small, 10, rng, /*with_replacement=*/false));
  CHECK_THROWS_AS(sample_by_velocity({}, 3, rng), EmptyDataset);
}

TEST_CASE("frechet distance separates shifted feature clouds") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n = 200, D = 3;
  std::vector<std::vector<double>> a(n, std::vector<double>(D));
  for (auto& row : a)
    for (double& v : row) v = gauss(rng);

  CHECK(fid(a, a) < 1e-4);

  // same covariance, mean shifted by a unit vector: distance is exactly 1
  std::vector<std::vector<double>> b = a;
  for (auto& row : b) row[0] += 1.0;
  CHECK(fid(a, b) == Catch::Approx(1.0).margin(1e-9));
  CHECK(fid(a, b) == Catch::Approx(fid(b, a)).margin(1e-9));

  CHECK_THROWS_AS(fid({}, a), EmptyDataset);
}

TEST_CASE("feature autoencoder trains and yields fixed-size features") {
  const SkeletonDef skel = fixtures::biped();
  const int T = 64, C = (skel.joint_count() + 1) * 4;
  std::vector<ad::Tensor> motions;
  for (int i = 0; i < 4; ++i) {
    const MotionClip c =
        localize_and_clip(fixtures::synthetic_walk(skel, T, 200 + static_cast<unsigned>(i)), T, 30)[0];
    const std::vector<double> flat = c.flatten();  // frame-major (T, C)
    std::vector<double> cm(static_cast<size_t>(C * T));
    for (int t = 0; t < T; ++t)
      for (int ch = 0; ch < C; ++ch)
        cm[static_cast<size_t>(ch * T + t)] = flat[static_cast<size_t>(t * C + ch)];
    motions.push_back(ad::Tensor::from({C, T}, std::move(cm)));
  }

  FidConfig cfg;
  cfg.channels = 8;
  cfg.in_channels = C;
  FidFeatureModel model(cfg, 77);
  CHECK(model.encode(motions[0]).shape() == ad::Shape{8, 2});
  CHECK(model.features(motions[0]).size() == 8);

  const std::vector<double> losses = train_fid_model(model, motions, 40, 5);
  REQUIRE(losses.size() == 40);
  double head = 0.0, tail = 0.0;
  for (int i = 0; i < 5; ++i) {
    head += losses[static_cast<size_t>(i)];
    tail += losses[losses.size() - 1 - static_cast<size_t>(i)];
  }
  CHECK(tail < head);
  CHECK_THROWS_AS(train_fid_model(model, {}, 1, 0), EmptyDataset);
}

TEST_CASE("attention heatmaps are per-token simplices restricted to the part") {
  const SkeletonDef skel = fixtures::biped();
  const BodyPartition partition = preset_humanoid6(skel);
  StructureModel model("a", skel.joint_count(), partition, fixtures::tiny_model(), 31);
  const int T = 8;
  const MotionClip clip = localize_and_clip(fixtures::synthetic_walk(skel, T, 400), T, 30)[0];
  ad::Tensor M = ad::Tensor::from({T, skel.joint_count() + 1, 4}, clip.flatten());

  const AttentionHeatmap hm = export_attention(model, M);
  CHECK(hm.joint_count == skel.joint_count());
  CHECK(hm.part_count == 6);
  REQUIRE(hm.frames.size() == static_cast<size_t>(T));
  for (const auto& frame : hm.frames)
    for (int k = 0; k < hm.part_count; ++k) {
      double sum = 0.0;
      for (int j = 0; j <= hm.joint_count; ++j) {
        const double w = frame[static_cast<size_t>(k)][static_cast<size_t>(j)];
        CHECK(w >= 0.0);
        sum += w;
        // masked attention: weight on joints outside the part vanishes
        if (j < hm.joint_count && !partition.joint_in_part(j, k)) CHECK(w < 1e-12);
        if (j == hm.joint_count && !partition.joint_in_part(partition.vel_index(), k))
          CHECK(w < 1e-12);
      }
      CHECK(sum == Catch::Approx(1.0).margin(1e-9));
    }

  const auto display = heatmap_display(hm, partition);
  REQUIRE(display.size() == static_cast<size_t>(T));
  for (const auto& row : display)
    for (double v : row) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0 + 1e-12);
    }

  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "bpmr_attn_test";
  fs::create_directories(dir);
  const std::string csv = (dir / "hm.csv").string(), ppm = (dir / "hm.ppm").string();
  write_heatmap_csv(csv, hm, skel.joint_names, partition.part_names);
  render_heatmap_ppm(ppm, display);
  std::ifstream cf(csv);
  std::string header;
  std::getline(cf, header);
  CHECK(header == "frame,part,Hips,Spine,Neck,LeftArm,RightArm,LeftUpLeg,RightUpLeg,<velocity>");
  std::ifstream pf(ppm);
  std::string magic;
  pf >> magic;
  CHECK(magic == "P3");
  fs::remove_all(dir);
}
