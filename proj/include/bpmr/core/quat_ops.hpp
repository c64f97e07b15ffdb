#pragma once

// Differentiable quaternion primitives over (rows, 4) tensors.

#include "bpmr/core/ops.hpp"

namespace bpmr::ad {

// Row-wise Hamilton product of two (rows, 4) tensors.
inline Tensor quat_mul_rows(const Tensor& a, const Tensor& b) {
  detail::check_same_shape(a, b, "quat_mul_rows");
  if (a.shape().size() != 2 || a.dim(1) != 4) throw ShapeMismatch("quat_mul_rows: need (rows,4)");
  const int rows = a.dim(0);
  std::vector<double> v(static_cast<size_t>(rows * 4));
  for (int i = 0; i < rows; ++i) {
    const double aw = a.at(i, 0), ax = a.at(i, 1), ay = a.at(i, 2), az = a.at(i, 3);
    const double bw = b.at(i, 0), bx = b.at(i, 1), by = b.at(i, 2), bz = b.at(i, 3);
    v[static_cast<size_t>(i * 4 + 0)] = aw * bw - ax * bx - ay * by - az * bz;
    v[static_cast<size_t>(i * 4 + 1)] = aw * bx + ax * bw + ay * bz - az * by;
    v[static_cast<size_t>(i * 4 + 2)] = aw * by - ax * bz + ay * bw + az * bx;
    v[static_cast<size_t>(i * 4 + 3)] = aw * bz + ax * by - ay * bx + az * bw;
  }
  return make_op({rows, 4}, std::move(v), {a, b}, [rows](Node& n) {
    auto& A = *n.inputs[0];
    auto& B = *n.inputs[1];
    A.ensure_grad();
    B.ensure_grad();
    for (int i = 0; i < rows; ++i) {
      const size_t o = static_cast<size_t>(i * 4);
      const double gw = n.grad[o], gx = n.grad[o + 1], gy = n.grad[o + 2], gz = n.grad[o + 3];
      const double aw = A.val[o], ax = A.val[o + 1], ay = A.val[o + 2], az = A.val[o + 3];
      const double bw = B.val[o], bx = B.val[o + 1], by = B.val[o + 2], bz = B.val[o + 3];
      A.grad[o + 0] += gw * bw + gx * bx + gy * by + gz * bz;
      A.grad[o + 1] += -gw * bx + gx * bw - gy * bz + gz * by;
      A.grad[o + 2] += -gw * by + gx * bz + gy * bw - gz * bx;
      A.grad[o + 3] += -gw * bz - gx * by + gy * bx + gz * bw;
      B.grad[o + 0] += gw * aw + gx * ax + gy * ay + gz * az;
      B.grad[o + 1] += -gw * ax + gx * aw + gy * az - gz * ay;
      B.grad[o + 2] += -gw * ay - gx * az + gy * aw + gz * ax;
      B.grad[o + 3] += -gw * az + gx * ay - gy * ax + gz * aw;
    }
  });
}

inline Tensor quat_conj_rows(const Tensor& a) {
  if (a.shape().size() != 2 || a.dim(1) != 4) throw ShapeMismatch("quat_conj_rows: need (rows,4)");
  const int rows = a.dim(0);
  std::vector<double> v(a.data());
  for (int i = 0; i < rows; ++i)
    for (int c = 1; c < 4; ++c) v[static_cast<size_t>(i * 4 + c)] = -v[static_cast<size_t>(i * 4 + c)];
  return make_op({rows, 4}, std::move(v), {a}, [rows](Node& n) {
    n.inputs[0]->ensure_grad();
    for (int i = 0; i < rows; ++i) {
      n.inputs[0]->grad[static_cast<size_t>(i * 4)] += n.grad[static_cast<size_t>(i * 4)];
      for (int c = 1; c < 4; ++c)
        n.inputs[0]->grad[static_cast<size_t>(i * 4 + c)] -= n.grad[static_cast<size_t>(i * 4 + c)];
    }
  });
}

// (rows, 3) -> (rows, 4) with zero scalar part.
inline Tensor vec_to_quat_rows(const Tensor& v3) {
  if (v3.shape().size() != 2 || v3.dim(1) != 3) throw ShapeMismatch("vec_to_quat_rows: need (rows,3)");
  const int rows = v3.dim(0);
  std::vector<double> v(static_cast<size_t>(rows * 4), 0.0);
  for (int i = 0; i < rows; ++i)
    for (int c = 0; c < 3; ++c) v[static_cast<size_t>(i * 4 + 1 + c)] = v3.at(i, c);
  return make_op({rows, 4}, std::move(v), {v3}, [rows](Node& n) {
    n.inputs[0]->ensure_grad();
    for (int i = 0; i < rows; ++i)
      for (int c = 0; c < 3; ++c)
        n.inputs[0]->grad[static_cast<size_t>(i * 3 + c)] += n.grad[static_cast<size_t>(i * 4 + 1 + c)];
  });
}

// (rows, 4) -> (rows, 3): drop the scalar part.
inline Tensor quat_to_vec_rows(const Tensor& q) {
  if (q.shape().size() != 2 || q.dim(1) != 4) throw ShapeMismatch("quat_to_vec_rows: need (rows,4)");
  const int rows = q.dim(0);
  std::vector<double> v(static_cast<size_t>(rows * 3));
  for (int i = 0; i < rows; ++i)
    for (int c = 0; c < 3; ++c) v[static_cast<size_t>(i * 3 + c)] = q.at(i, c + 1);
  return make_op({rows, 3}, std::move(v), {q}, [rows](Node& n) {
    n.inputs[0]->ensure_grad();
    for (int i = 0; i < rows; ++i)
      for (int c = 0; c < 3; ++c)
        n.inputs[0]->grad[static_cast<size_t>(i * 4 + c + 1)] += n.grad[static_cast<size_t>(i * 3 + c)];
  });
}

// Rotate per-row vectors by per-row unit quaternions: (q * (0,v) * conj(q)).xyz
inline Tensor quat_rotate_rows(const Tensor& q, const Tensor& v3) {
  return quat_to_vec_rows(quat_mul_rows(quat_mul_rows(q, vec_to_quat_rows(v3)), quat_conj_rows(q)));
}

// Row-wise normalization of (rows, 4); near-zero rows fall back to identity
// with zero gradient.
inline Tensor quat_normalize_rows(const Tensor& a) {
  if (a.shape().size() != 2 || a.dim(1) != 4) throw ShapeMismatch("quat_normalize_rows: need (rows,4)");
  const int rows = a.dim(0);
  std::vector<double> v(static_cast<size_t>(rows * 4));
  for (int i = 0; i < rows; ++i) {
    double n2 = 0.0;
    for (int c = 0; c < 4; ++c) n2 += a.at(i, c) * a.at(i, c);
    const double nrm = std::sqrt(n2);
    if (nrm < 1e-12) {
      v[static_cast<size_t>(i * 4)] = 1.0;
      for (int c = 1; c < 4; ++c) v[static_cast<size_t>(i * 4 + c)] = 0.0;
    } else {
      for (int c = 0; c < 4; ++c) v[static_cast<size_t>(i * 4 + c)] = a.at(i, c) / nrm;
    }
  }
  return make_op({rows, 4}, std::move(v), {a}, [rows](Node& n) {
    n.inputs[0]->ensure_grad();
    for (int i = 0; i < rows; ++i) {
      const size_t o = static_cast<size_t>(i * 4);
      double n2 = 0.0;
      for (int c = 0; c < 4; ++c) n2 += n.inputs[0]->val[o + c] * n.inputs[0]->val[o + c];
      const double nrm = std::sqrt(n2);
      if (nrm < 1e-12) continue;
      double dot = 0.0;
      for (int c = 0; c < 4; ++c) dot += n.grad[o + c] * n.val[o + c];
      for (int c = 0; c < 4; ++c)
        n.inputs[0]->grad[o + c] += (n.grad[o + c] - dot * n.val[o + c]) / nrm;
    }
  });
}

// theta (rows) -> yaw quaternions (rows, 4): (cos(t/2), 0, sin(t/2), 0).
inline Tensor yaw_quat_rows(const Tensor& theta) {
  if (theta.shape().size() != 1) throw ShapeMismatch("yaw_quat_rows: need 1-D");
  const int rows = theta.dim(0);
  std::vector<double> v(static_cast<size_t>(rows * 4), 0.0);
  for (int i = 0; i < rows; ++i) {
    v[static_cast<size_t>(i * 4)] = std::cos(theta.at(i) * 0.5);
    v[static_cast<size_t>(i * 4 + 2)] = std::sin(theta.at(i) * 0.5);
  }
  return make_op({rows, 4}, std::move(v), {theta}, [rows](Node& n) {
    n.inputs[0]->ensure_grad();
    for (int i = 0; i < rows; ++i) {
      const size_t o = static_cast<size_t>(i * 4);
      const double t = n.inputs[0]->val[static_cast<size_t>(i)];
      n.inputs[0]->grad[static_cast<size_t>(i)] +=
          -0.5 * std::sin(t * 0.5) * n.grad[o] + 0.5 * std::cos(t * 0.5) * n.grad[o + 2];
    }
  });
}

}  // namespace bpmr::ad
