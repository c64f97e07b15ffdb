#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>

#include "bpmr/parts/partition.hpp"

using namespace bpmr;

namespace {

SkeletonDef humanoid() {
  SkeletonDef s;
  s.name = "humanoid";
  s.joint_names = {"Hips",     "Spine",    "Neck",      "Head",     "LeftArm",
                   "LeftHand", "RightArm", "RightHand", "LeftUpLeg", "LeftFoot",
                   "RightUpLeg", "RightFoot"};
  s.parent = {-1, 0, 1, 2, 1, 4, 1, 6, 0, 8, 0, 10};
  s.offsets.assign(12, {0, 0.1, 0});
  s.end_site_offsets.assign(12, {});
  return s;
}

SkeletonDef quadruped() {
  SkeletonDef s;
  s.name = "quad";
  s.joint_names = {"Hips", "Spine", "Neck", "Head", "Tail",
                   "FrontLeftLeg", "FrontRightLeg", "BackLeftLeg", "BackRightLeg"};
  s.parent = {-1, 0, 1, 2, 0, 1, 1, 0, 0};
  s.offsets.assign(9, {0, 0.1, 0});
  s.end_site_offsets.assign(9, {});
  return s;
}

}  // namespace

TEST_CASE("humanoid preset covers all six parts") {
  const SkeletonDef skel = humanoid();
  const BodyPartition p = preset_humanoid6(skel);
  REQUIRE(p.part_count() == 6);
  CHECK(p.joint_count == 12);
  CHECK(p.vel_index() == 12);
  // head part: Neck + Head + vel
  CHECK(p.parts[0] == std::set<int>{2, 3, 12});
  CHECK(p.parts[2] == std::set<int>{4, 5, 12});   // left arm
  CHECK(p.parts[3] == std::set<int>{6, 7, 12});   // right arm
  CHECK(p.parts[4] == std::set<int>{8, 9, 12});   // left leg
  CHECK(p.parts[5] == std::set<int>{10, 11, 12}); // right leg
  for (int k = 0; k < 6; ++k) CHECK(p.joint_in_part(p.vel_index(), k));
  for (int j = 0; j < 12; ++j) CHECK(p.joint_encoded(j));
}

TEST_CASE("biped-quad preset leaves arms and tail unencoded") {
  const BodyPartition pb = preset_biped_quad3(humanoid());
  REQUIRE(pb.part_count() == 3);
  CHECK_FALSE(pb.joint_encoded(4));  // LeftArm
  CHECK_FALSE(pb.joint_encoded(7));  // RightHand
  CHECK(pb.parts[2] == std::set<int>{8, 9, 10, 11, 12});  // both legs merged

  const BodyPartition pq = preset_biped_quad3(quadruped());
  REQUIRE(pq.part_count() == 3);
  CHECK_FALSE(pq.joint_encoded(4));  // Tail
  CHECK(pq.parts[2] == std::set<int>{5, 6, 7, 8, 9});  // four legs in one part
  CHECK(pq.part_names == pb.part_names);  // shared structure space
}

TEST_CASE("custom partition config and unknown-joint errors") {
  const SkeletonDef skel = humanoid();
  const BodyPartition p = make_partition(
      skel, {{"upper", {"Spine", "Neck", "Head"}}, {"lower", {"Hips", "LeftUpLeg", "RightUpLeg"}}});
  REQUIRE(p.part_count() == 2);
  CHECK(p.joint_in_part(1, 0));
  CHECK(p.joint_in_part(0, 1));
  CHECK_FALSE(p.joint_encoded(5));

  CHECK_THROWS_AS(make_partition(skel, {{"bad", {"NoSuchJoint"}}}), UnknownJoint);

  const auto cfg = std::filesystem::temp_directory_path() /
                   ("bpmr_part_" + std::to_string(std::random_device{}()) + ".json");
  {
    std::ofstream out(cfg);
    out << R"({"parts": {"upper": ["Spine", "Neck"], "lower": ["Hips"]}})";
  }
  const BodyPartition loaded = load_partition(cfg.string(), skel);
  CHECK(loaded.part_count() == 2);
  std::filesystem::remove(cfg);

  CHECK(load_partition("humanoid6", skel).part_count() == 6);
  CHECK(load_partition("biped-quad3", skel).part_count() == 3);
}

TEST_CASE("empty parts are rejected") {
  SkeletonDef skel;
  skel.name = "armless";
  skel.joint_names = {"Hips"};
  skel.parent = {-1};
  skel.offsets = {{0, 1, 0}};
  skel.end_site_offsets = {{}};
  // humanoid preset needs every part populated; a hips-only skeleton cannot fill arms
  CHECK_THROWS_AS(preset_humanoid6(skel), EmptyPart);
}

TEST_CASE("mask is symmetric with open part blocks and isolated cross-part pairs") {
  const SkeletonDef skel = humanoid();
  const BodyPartition p = preset_humanoid6(skel);
  const MaskMatrix m = build_mask(p, true);
  const int N = p.part_count(), D = m.dim();
  REQUIRE(D == N + 13);
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) {
      CHECK(m.at(i, j) == m.at(j, i));
      CHECK((m.at(i, j) == 0.0 || m.at(i, j) == kMaskNegInf));
    }
  // tokens see themselves but not each other
  CHECK(m.at(0, 0) == 0.0);
  CHECK(m.at(0, 1) == kMaskNegInf);
  // token 0 (head) sees Neck(2) but not LeftArm(4)
  CHECK(m.at(0, N + 2) == 0.0);
  CHECK(m.at(0, N + 4) == kMaskNegInf);
  // joints in the same part see each other; cross-part pairs are isolated
  CHECK(m.at(N + 4, N + 5) == 0.0);       // LeftArm <-> LeftHand
  CHECK(m.at(N + 4, N + 8) == kMaskNegInf);  // LeftArm <-> LeftUpLeg
  // the velocity pseudo-joint connects to everything encoded
  for (int j = 0; j < 12; ++j) CHECK(m.at(N + 12, N + j) == 0.0);

  const MaskMatrix open = build_mask(p, false);
  CHECK(open.at(0, 1) == 0.0);  // stage-2 style: tokens talk to each other
}

TEST_CASE("positional encoding distinguishes joints and interleaves sin/cos") {
  const int d = 16;
  const auto pe0 = positional_encoding(0, d);
  const auto pe3 = positional_encoding(3, d);
  REQUIRE(pe0.size() == 16);
  for (int i = 0; i < d / 2; ++i) {
    CHECK(pe0[static_cast<size_t>(2 * i)] == Catch::Approx(0.0));
    CHECK(pe0[static_cast<size_t>(2 * i + 1)] == Catch::Approx(1.0));
  }
  CHECK(pe3[0] == Catch::Approx(std::sin(3.0)));
  CHECK(pe3[1] == Catch::Approx(std::cos(3.0)));
  CHECK(pe3[2] == Catch::Approx(std::sin(3.0 / std::pow(10000.0, 2.0 / 16.0))));
  double diff = 0.0;
  for (size_t i = 0; i < pe0.size(); ++i) diff += std::abs(pe0[i] - pe3[i]);
  CHECK(diff > 0.1);
  CHECK_THROWS_AS(positional_encoding(0, 7), OddDim);
}
