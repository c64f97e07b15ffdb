#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "bpmr/kinematics/quat.hpp"

using namespace bpmr;

namespace {

// Rotation-matrix oracle for rotate_vec.
Vec3 matrix_rotate(const Quat& q, const Vec3& v) {
  const auto m = quat_to_matrix(q);
  return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
          m[3] * v.x + m[4] * v.y + m[5] * v.z,
          m[6] * v.x + m[7] * v.y + m[8] * v.z};
}

std::array<double, 9> axis_matrix(char axis, double a) {
  const double c = std::cos(a), s = std::sin(a);
  switch (axis) {
    case 'X': return {1, 0, 0, 0, c, -s, 0, s, c};
    case 'Y': return {c, 0, s, 0, 1, 0, -s, 0, c};
    default:  return {c, -s, 0, s, c, 0, 0, 0, 1};
  }
}

std::array<double, 9> mat_mul(const std::array<double, 9>& a, const std::array<double, 9>& b) {
  std::array<double, 9> r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) r[size_t(i * 3 + j)] += a[size_t(i * 3 + k)] * b[size_t(k * 3 + j)];
  return r;
}

Quat random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> d(0, 1);
  return quat_normalize({d(rng), d(rng), d(rng), d(rng)});
}

}  // namespace

TEST_CASE("identity is the unit element") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 10; ++i) {
    const Quat q = random_unit(rng);
    const Quat p = quat_mul(Quat::identity(), q);
    CHECK(p.w == Catch::Approx(q.w));
    CHECK(p.x == Catch::Approx(q.x));
  }
}

TEST_CASE("rotate_vec matches rotation-matrix oracle") {
  const Quat q = Quat::from_axis_angle({0, 1, 0}, M_PI / 2);
  const Vec3 v = quat_rotate_vec(q, {0, 0, 1});
  CHECK(v.x == Catch::Approx(1.0).margin(1e-6));
  CHECK(v.y == Catch::Approx(0.0).margin(1e-6));
  CHECK(v.z == Catch::Approx(0.0).margin(1e-6));

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(-2, 2);
  for (int i = 0; i < 50; ++i) {
    const Quat r = random_unit(rng);
    const Vec3 u{d(rng), d(rng), d(rng)};
    const Vec3 a = quat_rotate_vec(r, u);
    const Vec3 b = matrix_rotate(r, u);
    CHECK((a - b).norm() < 1e-9);
  }
}

TEST_CASE("quat_from_euler matches composed axis matrices") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-M_PI, M_PI);
  for (EulerOrder order : {EulerOrder::XYZ, EulerOrder::XZY, EulerOrder::YXZ,
                           EulerOrder::YZX, EulerOrder::ZXY, EulerOrder::ZYX}) {
    const char* axes = euler_order_to_string(order);
    for (int i = 0; i < 20; ++i) {
      const double a1 = d(rng), a2 = d(rng), a3 = d(rng);
      const Quat q = quat_from_euler(order, a1, a2, a3);
      const auto expected =
          mat_mul(mat_mul(axis_matrix(axes[0], a1), axis_matrix(axes[1], a2)),
                  axis_matrix(axes[2], a3));
      const auto got = quat_to_matrix(q);
      for (int k = 0; k < 9; ++k) CHECK(got[size_t(k)] == Catch::Approx(expected[size_t(k)]).margin(1e-6));
    }
  }
}

TEST_CASE("quat_to_euler round trips for every order") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> d(-1.4, 1.4);  // stay clear of gimbal lock
  for (EulerOrder order : {EulerOrder::XYZ, EulerOrder::XZY, EulerOrder::YXZ,
                           EulerOrder::YZX, EulerOrder::ZXY, EulerOrder::ZYX}) {
    for (int i = 0; i < 30; ++i) {
      const double a1 = d(rng), a2 = d(rng), a3 = d(rng);
      const Quat q = quat_from_euler(order, a1, a2, a3);
      const auto e = quat_to_euler(order, q);
      const Quat q2 = quat_from_euler(order, e[0], e[1], e[2]);
      const double dot = q.w * q2.w + q.x * q2.x + q.y * q2.y + q.z * q2.z;
      CHECK(std::abs(dot) == Catch::Approx(1.0).margin(1e-9));
    }
  }
}

TEST_CASE("quat_mul is associative and norm-closed") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 30; ++i) {
    const Quat a = random_unit(rng), b = random_unit(rng), c = random_unit(rng);
    const Quat l = quat_mul(quat_mul(a, b), c);
    const Quat r = quat_mul(a, quat_mul(b, c));
    CHECK(std::abs(l.w - r.w) < 1e-12);
    CHECK(std::abs(l.x - r.x) < 1e-12);
    CHECK(quat_mul(a, b).norm() == Catch::Approx(1.0).margin(1e-6));
  }
}

TEST_CASE("normalize flags near-zero input") {
  const Quat q = quat_normalize({0, 0, 0, 0});
  CHECK(q.w == 1.0);
  CHECK(q.flagged_degenerate);
  CHECK_FALSE(quat_normalize({2, 0, 0, 0}).flagged_degenerate);
}

TEST_CASE("yaw decomposition removes rotation about y") {
  std::mt19937_64 rng(19);
  for (int i = 0; i < 30; ++i) {
    const Quat q = random_unit(rng);
    const double phi = yaw_angle(q);
    const Quat rest = remove_yaw(q);
    // remainder has zero y component and recomposes to q
    CHECK(std::abs(rest.y) < 1e-9);
    const Quat back = quat_mul(yaw_quat(phi), rest);
    const double dot = q.w * back.w + q.x * back.x + q.y * back.y + q.z * back.z;
    CHECK(std::abs(dot) == Catch::Approx(1.0).margin(1e-9));
  }
}
