#pragma once

// Quaternion algebra: Hamilton product, w-first, right-handed, y-up.

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace bpmr {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

struct Quat {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

  static Quat identity() { return {1.0, 0.0, 0.0, 0.0}; }

  static Quat from_axis_angle(const Vec3& axis, double angle) {
    const double n = axis.norm();
    if (n < 1e-12) return identity();
    const double s = std::sin(angle * 0.5) / n;
    return {std::cos(angle * 0.5), axis.x * s, axis.y * s, axis.z * s};
  }

  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

  Quat conj() const { return {w, -x, -y, -z}; }

  bool flagged_degenerate = false;
};

inline Quat quat_mul(const Quat& a, const Quat& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

// Near-zero norm yields identity with the degenerate flag set.
inline Quat quat_normalize(const Quat& q) {
  const double n = q.norm();
  if (n < 1e-12) {
    Quat id = Quat::identity();
    id.flagged_degenerate = true;
    return id;
  }
  return {q.w / n, q.x / n, q.y / n, q.z / n};
}

inline Vec3 quat_rotate_vec(const Quat& q, const Vec3& v) {
  // v + 2 w (u x v) + 2 u x (u x v), u = (x, y, z)
  const Vec3 u{q.x, q.y, q.z};
  const Vec3 uv{u.y * v.z - u.z * v.y, u.z * v.x - u.x * v.z, u.x * v.y - u.y * v.x};
  const Vec3 uuv{u.y * uv.z - u.z * uv.y, u.z * uv.x - u.x * uv.z, u.x * uv.y - u.y * uv.x};
  return {v.x + 2.0 * (q.w * uv.x + uuv.x),
          v.y + 2.0 * (q.w * uv.y + uuv.y),
          v.z + 2.0 * (q.w * uv.z + uuv.z)};
}

// 3x3 rotation matrix, row-major.
inline std::array<double, 9> quat_to_matrix(const Quat& q) {
  const double w = q.w, x = q.x, y = q.y, z = q.z;
  return {1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
          2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
          2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y)};
}

enum class EulerOrder { XYZ, XZY, YXZ, YZX, ZXY, ZYX };

inline EulerOrder euler_order_from_string(const std::string& s) {
  if (s == "XYZ") return EulerOrder::XYZ;
  if (s == "XZY") return EulerOrder::XZY;
  if (s == "YXZ") return EulerOrder::YXZ;
  if (s == "YZX") return EulerOrder::YZX;
  if (s == "ZXY") return EulerOrder::ZXY;
  if (s == "ZYX") return EulerOrder::ZYX;
  throw std::runtime_error("unknown euler order: " + s);
}

inline const char* euler_order_to_string(EulerOrder o) {
  switch (o) {
    case EulerOrder::XYZ: return "XYZ";
    case EulerOrder::XZY: return "XZY";
    case EulerOrder::YXZ: return "YXZ";
    case EulerOrder::YZX: return "YZX";
    case EulerOrder::ZXY: return "ZXY";
    case EulerOrder::ZYX: return "ZYX";
  }
  return "ZXY";
}

inline Quat quat_about(char axis, double angle) {
  switch (axis) {
    case 'X': return Quat::from_axis_angle({1, 0, 0}, angle);
    case 'Y': return Quat::from_axis_angle({0, 1, 0}, angle);
    default:  return Quat::from_axis_angle({0, 0, 1}, angle);
  }
}

// Intrinsic rotations applied in the listed order: q = R(a1) * R(a2) * R(a3).
inline Quat quat_from_euler(EulerOrder order, double a1, double a2, double a3) {
  const char* axes = euler_order_to_string(order);
  return quat_mul(quat_mul(quat_about(axes[0], a1), quat_about(axes[1], a2)),
                  quat_about(axes[2], a3));
}

// Inverse of quat_from_euler for each of the six intrinsic orders.
// Returns angles in radians, in the order's axis sequence.
inline std::array<double, 3> quat_to_euler(EulerOrder order, const Quat& qin) {
  const Quat q = quat_normalize(qin);
  const auto m = quat_to_matrix(q);
  auto M = [&](int r, int c) { return m[static_cast<size_t>(r * 3 + c)]; };
  const double eps = 1.0 - 1e-9;
  auto clamp1 = [](double v) { return v > 1.0 ? 1.0 : (v < -1.0 ? -1.0 : v); };
  double a1 = 0, a2 = 0, a3 = 0;
  switch (order) {
    case EulerOrder::XYZ:
      a2 = std::asin(clamp1(M(0, 2)));
      if (std::abs(M(0, 2)) < eps) {
        a1 = std::atan2(-M(1, 2), M(2, 2));
        a3 = std::atan2(-M(0, 1), M(0, 0));
      } else {
        a1 = std::atan2(M(2, 1), M(1, 1));
      }
      break;
    case EulerOrder::XZY:
      a2 = std::asin(clamp1(-M(0, 1)));
      if (std::abs(M(0, 1)) < eps) {
        a1 = std::atan2(M(2, 1), M(1, 1));
        a3 = std::atan2(M(0, 2), M(0, 0));
      } else {
        a1 = std::atan2(-M(1, 2), M(2, 2));
      }
      break;
    case EulerOrder::YXZ:
      a2 = std::asin(clamp1(-M(1, 2)));
      if (std::abs(M(1, 2)) < eps) {
        a1 = std::atan2(M(0, 2), M(2, 2));
        a3 = std::atan2(M(1, 0), M(1, 1));
      } else {
        a1 = std::atan2(-M(2, 0), M(0, 0));
      }
      break;
    case EulerOrder::YZX:
      a2 = std::asin(clamp1(M(1, 0)));
      if (std::abs(M(1, 0)) < eps) {
        a1 = std::atan2(-M(2, 0), M(0, 0));
        a3 = std::atan2(-M(1, 2), M(1, 1));
      } else {
        a1 = std::atan2(M(0, 2), M(2, 2));
      }
      break;
    case EulerOrder::ZXY:
      a2 = std::asin(clamp1(M(2, 1)));
      if (std::abs(M(2, 1)) < eps) {
        a1 = std::atan2(-M(0, 1), M(1, 1));
        a3 = std::atan2(-M(2, 0), M(2, 2));
      } else {
        a1 = std::atan2(M(1, 0), M(0, 0));
      }
      break;
    case EulerOrder::ZYX:
      a2 = std::asin(clamp1(-M(2, 0)));
      if (std::abs(M(2, 0)) < eps) {
        a1 = std::atan2(M(1, 0), M(0, 0));
        a3 = std::atan2(M(2, 1), M(2, 2));
      } else {
        a1 = std::atan2(-M(0, 1), M(1, 1));
      }
      break;
  }
  return {a1, a2, a3};
}

// Decompose q into yaw (rotation about +y) times remainder: q = yaw * rest.
// Returns the yaw angle; rest = conj(yaw_quat) * q has zero y component.
inline double yaw_angle(const Quat& q) {
  const double n = std::sqrt(q.w * q.w + q.y * q.y);
  if (n < 1e-9) return 0.0;  // pure horizontal flip; yaw undefined
  return 2.0 * std::atan2(q.y, q.w);
}

inline Quat yaw_quat(double angle) {
  return {std::cos(angle * 0.5), 0.0, std::sin(angle * 0.5), 0.0};
}

inline Quat remove_yaw(const Quat& q) {
  return quat_mul(yaw_quat(yaw_angle(q)).conj(), q);
}

inline double wrap_pi(double a) {
  while (a > M_PI) a -= 2.0 * M_PI;
  while (a < -M_PI) a += 2.0 * M_PI;
  return a;
}

}  // namespace bpmr
