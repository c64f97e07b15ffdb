#pragma once

// Differentiable primitives: elementwise math, linear algebra, temporal
// convolution/resampling, masked softmax, and the reductions the losses use.

#include "bpmr/core/tensor.hpp"

namespace bpmr::ad {

namespace detail {
inline void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeMismatch(std::string(op) + ": " + shape_str(a.shape()) + " vs " +
                        shape_str(b.shape()));
}
}  // namespace detail

// ---- elementwise -----------------------------------------------------------

inline Tensor add(const Tensor& a, const Tensor& b) {
  detail::check_same_shape(a, b, "add");
  std::vector<double> v(a.data());
  for (size_t i = 0; i < v.size(); ++i) v[i] += b.data()[i];
  return make_op(a.shape(), std::move(v), {a, b}, [](Node& n) {
    n.inputs[0]->ensure_grad();
    n.inputs[1]->ensure_grad();
    for (size_t i = 0; i < n.val.size(); ++i) {
      n.inputs[0]->grad[i] += n.grad[i];
      n.inputs[1]->grad[i] += n.grad[i];
    }
  });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  detail::check_same_shape(a, b, "sub");
  std::vector<double> v(a.data());
  for (size_t i = 0; i < v.size(); ++i) v[i] -= b.data()[i];
  return make_op(a.shape(), std::move(v), {a, b}, [](Node& n) {
    n.inputs[0]->ensure_grad();
    n.inputs[1]->ensure_grad();
    for (size_t i = 0; i < n.val.size(); ++i) {
      n.inputs[0]->grad[i] += n.grad[i];
      n.inputs[1]->grad[i] -= n.grad[i];
    }
  });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  detail::check_same_shape(a, b, "mul");
  std::vector<double> v(a.data());
  for (size_t i = 0; i < v.size(); ++i) v[i] *= b.data()[i];
  return make_op(a.shape(), std::move(v), {a, b}, [](Node& n) {
    n.inputs[0]->ensure_grad();
    n.inputs[1]->ensure_grad();
    for (size_t i = 0; i < n.val.size(); ++i) {
      n.inputs[0]->grad[i] += n.grad[i] * n.inputs[1]->val[i];
      n.inputs[1]->grad[i] += n.grad[i] * n.inputs[0]->val[i];
    }
  });
}

inline Tensor scale(const Tensor& a, double c) {
  std::vector<double> v(a.data());
  for (double& x : v) x *= c;
  return make_op(a.shape(), std::move(v), {a}, [c](Node& n) {
    n.inputs[0]->ensure_grad();
    for (size_t i = 0; i < n.val.size(); ++i) n.inputs[0]->grad[i] += c * n.grad[i];
  });
}

inline Tensor add_scalar(const Tensor& a, double c) {
  std::vector<double> v(a.data());
  for (double& x : v) x += c;
  return make_op(a.shape(), std::move(v), {a}, [](Node& n) {
    n.inputs[0]->ensure_grad();
    for (size_t i = 0; i < n.val.size(); ++i) n.inputs[0]->grad[i] += n.grad[i];
  });
}

inline Tensor relu(const Tensor& a) {
  std::vector<double> v(a.data());
  for (double& x : v) x = x > 0.0 ? x : 0.0;
  return make_op(a.shape(), std::move(v), {a}, [](Node& n) {
    n.inputs[0]->ensure_grad();
    for (size_t i = 0; i < n.val.size(); ++i)
      if (n.inputs[0]->val[i] > 0.0) n.inputs[0]->grad[i] += n.grad[i];
  });
}

inline Tensor leaky_relu(const Tensor& a, double slope) {
  std::vector<double> v(a.data());
  for (double& x : v) x = x > 0.0 ? x : slope * x;
  return make_op(a.shape(), std::move(v), {a}, [slope](Node& n) {
    n.inputs[0]->ensure_grad();
    for (size_t i = 0; i < n.val.size(); ++i)
      n.inputs[0]->grad[i] += n.grad[i] * (n.inputs[0]->val[i] > 0.0 ? 1.0 : slope);
  });
}

inline Tensor sigmoid(const Tensor& a) {
  std::vector<double> v(a.data());
  for (double& x : v) x = 1.0 / (1.0 + std::exp(-x));
  return make_op(a.shape(), std::move(v), {a}, [](Node& n) {
    n.inputs[0]->ensure_grad();
    for (size_t i = 0; i < n.val.size(); ++i)
      n.inputs[0]->grad[i] += n.grad[i] * n.val[i] * (1.0 - n.val[i]);
  });
}

inline Tensor tanh_t(const Tensor& a) {
  std::vector<double> v(a.data());
  for (double& x : v) x = std::tanh(x);
  return make_op(a.shape(), std::move(v), {a}, [](Node& n) {
    n.inputs[0]->ensure_grad();
    for (size_t i = 0; i < n.val.size(); ++i)
      n.inputs[0]->grad[i] += n.grad[i] * (1.0 - n.val[i] * n.val[i]);
  });
}

inline Tensor sin_t(const Tensor& a) {
  std::vector<double> v(a.data());
  for (double& x : v) x = std::sin(x);
  return make_op(a.shape(), std::move(v), {a}, [](Node& n) {
    n.inputs[0]->ensure_grad();
    for (size_t i = 0; i < n.val.size(); ++i)
      n.inputs[0]->grad[i] += n.grad[i] * std::cos(n.inputs[0]->val[i]);
  });
}

inline Tensor cos_t(const Tensor& a) {
  std::vector<double> v(a.data());
  for (double& x : v) x = std::cos(x);
  return make_op(a.shape(), std::move(v), {a}, [](Node& n) {
    n.inputs[0]->ensure_grad();
    for (size_t i = 0; i < n.val.size(); ++i)
      n.inputs[0]->grad[i] -= n.grad[i] * std::sin(n.inputs[0]->val[i]);
  });
}

// ---- shape manipulation ----------------------------------------------------

inline Tensor reshape(const Tensor& a, Shape shape) {
  if (numel(shape) != a.size())
    throw ShapeMismatch("reshape: " + shape_str(a.shape()) + " -> " + shape_str(shape));
  return make_op(std::move(shape), a.data(), {a}, [](Node& n) {
    n.inputs[0]->ensure_grad();
    for (size_t i = 0; i < n.val.size(); ++i) n.inputs[0]->grad[i] += n.grad[i];
  });
}

inline Tensor transpose2d(const Tensor& a) {
  if (a.shape().size() != 2) throw ShapeMismatch("transpose2d: need 2-D");
  const int r = a.dim(0), c = a.dim(1);
  std::vector<double> v(static_cast<size_t>(r * c));
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) v[static_cast<size_t>(j * r + i)] = a.at(i, j);
  return make_op({c, r}, std::move(v), {a}, [r, c](Node& n) {
    n.inputs[0]->ensure_grad();
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j)
        n.inputs[0]->grad[static_cast<size_t>(i * c + j)] +=
            n.grad[static_cast<size_t>(j * r + i)];
  });
}

// Concatenate 2-D tensors along rows (dim 0); all must share column count.
inline Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeMismatch("concat_rows: empty");
  const int cols = parts[0].dim(1);
  int rows = 0;
  for (const auto& p : parts) {
    if (p.shape().size() != 2 || p.dim(1) != cols)
      throw ShapeMismatch("concat_rows: column mismatch");
    rows += p.dim(0);
  }
  std::vector<double> v;
  v.reserve(static_cast<size_t>(rows * cols));
  for (const auto& p : parts) v.insert(v.end(), p.data().begin(), p.data().end());
  std::vector<int> row_counts;
  for (const auto& p : parts) row_counts.push_back(p.dim(0));
  return make_op({rows, cols}, std::move(v), parts, [row_counts, cols](Node& n) {
    size_t off = 0;
    for (size_t k = 0; k < n.inputs.size(); ++k) {
      n.inputs[k]->ensure_grad();
      const size_t cnt = static_cast<size_t>(row_counts[k] * cols);
      for (size_t i = 0; i < cnt; ++i) n.inputs[k]->grad[i] += n.grad[off + i];
      off += cnt;
    }
  });
}

// Rows [begin, begin+count) of a 2-D tensor.
inline Tensor slice_rows(const Tensor& a, int begin, int count) {
  if (a.shape().size() != 2) throw ShapeMismatch("slice_rows: need 2-D");
  const int cols = a.dim(1);
  if (begin < 0 || begin + count > a.dim(0)) throw ShapeMismatch("slice_rows: out of range");
  std::vector<double> v(a.data().begin() + static_cast<size_t>(begin) * cols,
                        a.data().begin() + static_cast<size_t>(begin + count) * cols);
  return make_op({count, cols}, std::move(v), {a}, [begin, cols](Node& n) {
    n.inputs[0]->ensure_grad();
    const size_t off = static_cast<size_t>(begin) * cols;
    for (size_t i = 0; i < n.val.size(); ++i) n.inputs[0]->grad[off + i] += n.grad[i];
  });
}

// Column c of a 2-D tensor as a 1-D tensor.
inline Tensor slice_col(const Tensor& a, int c) {
  if (a.shape().size() != 2) throw ShapeMismatch("slice_col: need 2-D");
  const int rows = a.dim(0), cols = a.dim(1);
  std::vector<double> v(static_cast<size_t>(rows));
  for (int i = 0; i < rows; ++i) v[static_cast<size_t>(i)] = a.at(i, c);
  return make_op({rows}, std::move(v), {a}, [c, cols](Node& n) {
    n.inputs[0]->ensure_grad();
    for (size_t i = 0; i < n.val.size(); ++i)
      n.inputs[0]->grad[i * cols + static_cast<size_t>(c)] += n.grad[i];
  });
}

// Stack 1-D tensors of equal length as columns of a (len, k) matrix.
inline Tensor stack_cols(const std::vector<Tensor>& cols) {
  if (cols.empty()) throw ShapeMismatch("stack_cols: empty");
  const int len = cols[0].dim(0);
  const int k = static_cast<int>(cols.size());
  for (const auto& c : cols)
    if (c.shape().size() != 1 || c.dim(0) != len) throw ShapeMismatch("stack_cols: length mismatch");
  std::vector<double> v(static_cast<size_t>(len * k));
  for (int i = 0; i < len; ++i)
    for (int j = 0; j < k; ++j) v[static_cast<size_t>(i * k + j)] = cols[static_cast<size_t>(j)].at(i);
  return make_op({len, k}, std::move(v), cols, [len, k](Node& n) {
    for (int j = 0; j < k; ++j) n.inputs[static_cast<size_t>(j)]->ensure_grad();
    for (int i = 0; i < len; ++i)
      for (int j = 0; j < k; ++j)
        n.inputs[static_cast<size_t>(j)]->grad[static_cast<size_t>(i)] +=
            n.grad[static_cast<size_t>(i * k + j)];
  });
}

// Middle-axis slice of a 3-D tensor: a[:, j, :] -> (d0, d2).
inline Tensor slice_mid(const Tensor& a, int j) {
  if (a.shape().size() != 3) throw ShapeMismatch("slice_mid: need 3-D");
  const int d0 = a.dim(0), d1 = a.dim(1), d2 = a.dim(2);
  std::vector<double> v(static_cast<size_t>(d0 * d2));
  for (int t = 0; t < d0; ++t)
    for (int c = 0; c < d2; ++c) v[static_cast<size_t>(t * d2 + c)] = a.at(t, j, c);
  return make_op({d0, d2}, std::move(v), {a}, [j, d1, d2](Node& n) {
    n.inputs[0]->ensure_grad();
    const int d0 = n.shape[0];
    for (int t = 0; t < d0; ++t)
      for (int c = 0; c < d2; ++c)
        n.inputs[0]->grad[static_cast<size_t>((t * d1 + j) * d2 + c)] +=
            n.grad[static_cast<size_t>(t * d2 + c)];
  });
}

// ---- linear algebra --------------------------------------------------------

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.dim(1) != b.dim(0))
    throw ShapeMismatch("matmul: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  const int m = a.dim(0), k = a.dim(1), n_cols = b.dim(1);
  std::vector<double> v(static_cast<size_t>(m * n_cols), 0.0);
  for (int i = 0; i < m; ++i)
    for (int p = 0; p < k; ++p) {
      const double av = a.at(i, p);
      if (av == 0.0) continue;
      for (int j = 0; j < n_cols; ++j) v[static_cast<size_t>(i * n_cols + j)] += av * b.at(p, j);
    }
  return make_op({m, n_cols}, std::move(v), {a, b}, [m, k, n_cols](Node& n) {
    auto& A = *n.inputs[0];
    auto& B = *n.inputs[1];
    A.ensure_grad();
    B.ensure_grad();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n_cols; ++j) {
        const double g = n.grad[static_cast<size_t>(i * n_cols + j)];
        if (g == 0.0) continue;
        for (int p = 0; p < k; ++p) {
          A.grad[static_cast<size_t>(i * k + p)] += g * B.val[static_cast<size_t>(p * n_cols + j)];
          B.grad[static_cast<size_t>(p * n_cols + j)] += g * A.val[static_cast<size_t>(i * k + p)];
        }
      }
  });
}

// x: (rows, in), W: (in, out), b: (out) -> (rows, out)
inline Tensor linear(const Tensor& x, const Tensor& W, const Tensor& b) {
  Tensor y = matmul(x, W);
  const int rows = y.dim(0), out = y.dim(1);
  if (b.size() != out) throw ShapeMismatch("linear: bias size");
  std::vector<double> v(y.data());
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < out; ++j) v[static_cast<size_t>(i * out + j)] += b.at(j);
  return make_op({rows, out}, std::move(v), {y, b}, [rows, out](Node& n) {
    n.inputs[0]->ensure_grad();
    n.inputs[1]->ensure_grad();
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < out; ++j) {
        const double g = n.grad[static_cast<size_t>(i * out + j)];
        n.inputs[0]->grad[static_cast<size_t>(i * out + j)] += g;
        n.inputs[1]->grad[static_cast<size_t>(j)] += g;
      }
  });
}

// Row-wise softmax of a 2-D tensor (numerically stabilized).
inline Tensor softmax_rows(const Tensor& a) {
  if (a.shape().size() != 2) throw ShapeMismatch("softmax_rows: need 2-D");
  const int r = a.dim(0), c = a.dim(1);
  std::vector<double> v(static_cast<size_t>(r * c));
  for (int i = 0; i < r; ++i) {
    double mx = a.at(i, 0);
    for (int j = 1; j < c; ++j) mx = std::max(mx, a.at(i, j));
    double sum = 0.0;
    for (int j = 0; j < c; ++j) {
      const double e = std::exp(a.at(i, j) - mx);
      v[static_cast<size_t>(i * c + j)] = e;
      sum += e;
    }
    for (int j = 0; j < c; ++j) v[static_cast<size_t>(i * c + j)] /= sum;
  }
  return make_op({r, c}, std::move(v), {a}, [r, c](Node& n) {
    n.inputs[0]->ensure_grad();
    for (int i = 0; i < r; ++i) {
      double dot = 0.0;
      for (int j = 0; j < c; ++j)
        dot += n.grad[static_cast<size_t>(i * c + j)] * n.val[static_cast<size_t>(i * c + j)];
      for (int j = 0; j < c; ++j) {
        const size_t idx = static_cast<size_t>(i * c + j);
        n.inputs[0]->grad[idx] += n.val[idx] * (n.grad[idx] - dot);
      }
    }
  });
}

// ---- temporal ops (channels-first: (C, T)) ---------------------------------

// 1-D convolution, zero padding. x: (Cin, T), W: (Cout, Cin, w), b: (Cout).
inline Tensor conv1d(const Tensor& x, const Tensor& W, const Tensor& b, int stride, int pad) {
  if (x.shape().size() != 2 || W.shape().size() != 3)
    throw ShapeMismatch("conv1d: bad ranks");
  const int cin = x.dim(0), t_in = x.dim(1);
  const int cout = W.dim(0), w = W.dim(2);
  if (W.dim(1) != cin) throw ShapeMismatch("conv1d: channel mismatch");
  const int t_out = (t_in + 2 * pad - w) / stride + 1;
  if (t_out <= 0) throw ShapeMismatch("conv1d: output length <= 0");
  std::vector<double> v(static_cast<size_t>(cout * t_out));
  for (int oc = 0; oc < cout; ++oc)
    for (int ot = 0; ot < t_out; ++ot) {
      double acc = b.at(oc);
      const int start = ot * stride - pad;
      for (int ic = 0; ic < cin; ++ic)
        for (int k = 0; k < w; ++k) {
          const int t = start + k;
          if (t < 0 || t >= t_in) continue;
          acc += x.at(ic, t) * W.at(oc, ic, k);
        }
      v[static_cast<size_t>(oc * t_out + ot)] = acc;
    }
  return make_op({cout, t_out}, std::move(v), {x, W, b},
                 [cin, t_in, cout, w, stride, pad](Node& n) {
    auto& X = *n.inputs[0];
    auto& Wt = *n.inputs[1];
    auto& B = *n.inputs[2];
    X.ensure_grad();
    Wt.ensure_grad();
    B.ensure_grad();
    const int t_out = n.shape[1];
    for (int oc = 0; oc < cout; ++oc)
      for (int ot = 0; ot < t_out; ++ot) {
        const double g = n.grad[static_cast<size_t>(oc * t_out + ot)];
        if (g == 0.0) continue;
        B.grad[static_cast<size_t>(oc)] += g;
        const int start = ot * stride - pad;
        for (int ic = 0; ic < cin; ++ic)
          for (int k = 0; k < w; ++k) {
            const int t = start + k;
            if (t < 0 || t >= t_in) continue;
            X.grad[static_cast<size_t>(ic * t_in + t)] +=
                g * Wt.val[static_cast<size_t>((oc * cin + ic) * w + k)];
            Wt.grad[static_cast<size_t>((oc * cin + ic) * w + k)] +=
                g * X.val[static_cast<size_t>(ic * t_in + t)];
          }
      }
  });
}

// Linear interpolation upsampling along time, align_corners = false.
// x: (C, T) -> (C, T*factor)
inline Tensor upsample_linear(const Tensor& x, int factor) {
  if (x.shape().size() != 2) throw ShapeMismatch("upsample_linear: need 2-D");
  const int c = x.dim(0), t_in = x.dim(1);
  const int t_out = t_in * factor;
  // Precompute source indices/weights shared by forward and backward.
  std::vector<int> i0(static_cast<size_t>(t_out)), i1(static_cast<size_t>(t_out));
  std::vector<double> w1(static_cast<size_t>(t_out));
  for (int ot = 0; ot < t_out; ++ot) {
    double src = (ot + 0.5) / factor - 0.5;
    if (src < 0.0) src = 0.0;
    if (src > t_in - 1) src = t_in - 1;
    const int lo = static_cast<int>(std::floor(src));
    i0[static_cast<size_t>(ot)] = lo;
    i1[static_cast<size_t>(ot)] = std::min(lo + 1, t_in - 1);
    w1[static_cast<size_t>(ot)] = src - lo;
  }
  std::vector<double> v(static_cast<size_t>(c * t_out));
  for (int ch = 0; ch < c; ++ch)
    for (int ot = 0; ot < t_out; ++ot) {
      const double a = x.at(ch, i0[static_cast<size_t>(ot)]);
      const double bvl = x.at(ch, i1[static_cast<size_t>(ot)]);
      v[static_cast<size_t>(ch * t_out + ot)] =
          a * (1.0 - w1[static_cast<size_t>(ot)]) + bvl * w1[static_cast<size_t>(ot)];
    }
  return make_op({c, t_out}, std::move(v), {x}, [c, t_in, t_out, i0, i1, w1](Node& n) {
    n.inputs[0]->ensure_grad();
    for (int ch = 0; ch < c; ++ch)
      for (int ot = 0; ot < t_out; ++ot) {
        const double g = n.grad[static_cast<size_t>(ch * t_out + ot)];
        n.inputs[0]->grad[static_cast<size_t>(ch * t_in + i0[static_cast<size_t>(ot)])] +=
            g * (1.0 - w1[static_cast<size_t>(ot)]);
        n.inputs[0]->grad[static_cast<size_t>(ch * t_in + i1[static_cast<size_t>(ot)])] +=
            g * w1[static_cast<size_t>(ot)];
      }
  });
}

// Max pooling along time. x: (C, T) -> (C, T/stride) with given kernel/stride.
inline Tensor maxpool1d(const Tensor& x, int kernel, int stride) {
  if (x.shape().size() != 2) throw ShapeMismatch("maxpool1d: need 2-D");
  const int c = x.dim(0), t_in = x.dim(1);
  const int t_out = (t_in - kernel) / stride + 1;
  std::vector<double> v(static_cast<size_t>(c * t_out));
  std::vector<int> argmax(static_cast<size_t>(c * t_out));
  for (int ch = 0; ch < c; ++ch)
    for (int ot = 0; ot < t_out; ++ot) {
      int best = ot * stride;
      double bv = x.at(ch, best);
      for (int k = 1; k < kernel; ++k) {
        const int t = ot * stride + k;
        if (t < t_in && x.at(ch, t) > bv) {
          bv = x.at(ch, t);
          best = t;
        }
      }
      v[static_cast<size_t>(ch * t_out + ot)] = bv;
      argmax[static_cast<size_t>(ch * t_out + ot)] = best;
    }
  return make_op({c, t_out}, std::move(v), {x}, [c, t_in, argmax](Node& n) {
    n.inputs[0]->ensure_grad();
    const int t_out = n.shape[1];
    for (int ch = 0; ch < c; ++ch)
      for (int ot = 0; ot < t_out; ++ot)
        n.inputs[0]->grad[static_cast<size_t>(ch * t_in + argmax[static_cast<size_t>(ch * t_out + ot)])] +=
            n.grad[static_cast<size_t>(ch * t_out + ot)];
  });
}

// ---- sequence ops ----------------------------------------------------------

// Inclusive cumulative sum over rows (dim 0) of a 1-D or 2-D tensor.
inline Tensor cumsum_rows(const Tensor& a) {
  const int rows = a.dim(0);
  const int cols = a.shape().size() == 2 ? a.dim(1) : 1;
  std::vector<double> v(a.data());
  for (int i = 1; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      v[static_cast<size_t>(i * cols + j)] += v[static_cast<size_t>((i - 1) * cols + j)];
  return make_op(a.shape(), std::move(v), {a}, [rows, cols](Node& n) {
    n.inputs[0]->ensure_grad();
    for (int j = 0; j < cols; ++j) {
      double acc = 0.0;
      for (int i = rows - 1; i >= 0; --i) {
        acc += n.grad[static_cast<size_t>(i * cols + j)];
        n.inputs[0]->grad[static_cast<size_t>(i * cols + j)] += acc;
      }
    }
  });
}

// Shift rows down by one, filling row 0 with zeros (previous-frame values).
inline Tensor shift_rows_down(const Tensor& a) {
  const int rows = a.dim(0);
  const int cols = a.shape().size() == 2 ? a.dim(1) : 1;
  std::vector<double> v(a.size(), 0.0);
  for (int i = 1; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      v[static_cast<size_t>(i * cols + j)] = a.data()[static_cast<size_t>((i - 1) * cols + j)];
  return make_op(a.shape(), std::move(v), {a}, [rows, cols](Node& n) {
    n.inputs[0]->ensure_grad();
    for (int i = 1; i < rows; ++i)
      for (int j = 0; j < cols; ++j)
        n.inputs[0]->grad[static_cast<size_t>((i - 1) * cols + j)] +=
            n.grad[static_cast<size_t>(i * cols + j)];
  });
}

// ---- reductions ------------------------------------------------------------

inline Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double x : a.data()) s += x;
  return make_op({1}, {s}, {a}, [](Node& n) {
    n.inputs[0]->ensure_grad();
    for (size_t i = 0; i < n.inputs[0]->val.size(); ++i) n.inputs[0]->grad[i] += n.grad[0];
  });
}

inline Tensor mean(const Tensor& a) {
  const double inv = 1.0 / a.size();
  double s = 0.0;
  for (double x : a.data()) s += x;
  return make_op({1}, {s * inv}, {a}, [inv](Node& n) {
    n.inputs[0]->ensure_grad();
    for (size_t i = 0; i < n.inputs[0]->val.size(); ++i) n.inputs[0]->grad[i] += n.grad[0] * inv;
  });
}

inline Tensor sqrt_t(const Tensor& a) {
  std::vector<double> v(a.data());
  for (double& x : v) x = std::sqrt(x);
  return make_op(a.shape(), std::move(v), {a}, [](Node& n) {
    n.inputs[0]->ensure_grad();
    for (size_t i = 0; i < n.val.size(); ++i)
      n.inputs[0]->grad[i] += n.grad[i] * 0.5 / std::max(n.val[i], 1e-12);
  });
}

inline Tensor div(const Tensor& a, const Tensor& b) {
  detail::check_same_shape(a, b, "div");
  std::vector<double> v(a.data());
  for (size_t i = 0; i < v.size(); ++i) v[i] /= b.data()[i];
  return make_op(a.shape(), std::move(v), {a, b}, [](Node& n) {
    n.inputs[0]->ensure_grad();
    n.inputs[1]->ensure_grad();
    for (size_t i = 0; i < n.val.size(); ++i) {
      const double bi = n.inputs[1]->val[i];
      n.inputs[0]->grad[i] += n.grad[i] / bi;
      n.inputs[1]->grad[i] -= n.grad[i] * n.inputs[0]->val[i] / (bi * bi);
    }
  });
}

// (R, C) -> (R, 1), sum over the last axis.
inline Tensor rowsum(const Tensor& a) {
  if (a.shape().size() != 2) throw ShapeMismatch("rowsum: need 2-D, got " + shape_str(a.shape()));
  const int R = a.dim(0), C = a.dim(1);
  std::vector<double> v(static_cast<size_t>(R), 0.0);
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c) v[static_cast<size_t>(r)] += a.at(r, c);
  return make_op({R, 1}, std::move(v), {a}, [R, C](Node& n) {
    n.inputs[0]->ensure_grad();
    for (int r = 0; r < R; ++r)
      for (int c = 0; c < C; ++c)
        n.inputs[0]->grad[static_cast<size_t>(r * C + c)] += n.grad[static_cast<size_t>(r)];
  });
}

// (R, 1) -> (R, C), repeat the column.
inline Tensor broadcast_col(const Tensor& a, int C) {
  if (a.shape().size() != 2 || a.dim(1) != 1)
    throw ShapeMismatch("broadcast_col: need (R, 1), got " + shape_str(a.shape()));
  const int R = a.dim(0);
  std::vector<double> v(static_cast<size_t>(R * C));
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c) v[static_cast<size_t>(r * C + c)] = a.at(r, 0);
  return make_op({R, C}, std::move(v), {a}, [R, C](Node& n) {
    n.inputs[0]->ensure_grad();
    for (int r = 0; r < R; ++r)
      for (int c = 0; c < C; ++c)
        n.inputs[0]->grad[static_cast<size_t>(r)] += n.grad[static_cast<size_t>(r * C + c)];
  });
}

// Mean squared error over all elements.
inline Tensor mse(const Tensor& a, const Tensor& b) {
  detail::check_same_shape(a, b, "mse");
  const double inv = 1.0 / a.size();
  double s = 0.0;
  for (size_t i = 0; i < a.data().size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    s += d * d;
  }
  return make_op({1}, {s * inv}, {a, b}, [inv](Node& n) {
    n.inputs[0]->ensure_grad();
    n.inputs[1]->ensure_grad();
    for (size_t i = 0; i < n.inputs[0]->val.size(); ++i) {
      const double d = 2.0 * inv * (n.inputs[0]->val[i] - n.inputs[1]->val[i]) * n.grad[0];
      n.inputs[0]->grad[i] += d;
      n.inputs[1]->grad[i] -= d;
    }
  });
}

// Weighted MSE: per-element weights (constant tensor), normalized by weight sum.
inline Tensor mse_weighted(const Tensor& a, const Tensor& b, const Tensor& w) {
  detail::check_same_shape(a, b, "mse_weighted");
  detail::check_same_shape(a, w, "mse_weighted(w)");
  double wsum = 0.0;
  for (double x : w.data()) wsum += x;
  const double inv = wsum > 0.0 ? 1.0 / wsum : 0.0;
  double s = 0.0;
  for (size_t i = 0; i < a.data().size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    s += w.data()[i] * d * d;
  }
  return make_op({1}, {s * inv}, {a, b, w}, [inv](Node& n) {
    n.inputs[0]->ensure_grad();
    n.inputs[1]->ensure_grad();
    for (size_t i = 0; i < n.inputs[0]->val.size(); ++i) {
      const double d = 2.0 * inv * n.inputs[2]->val[i] *
                       (n.inputs[0]->val[i] - n.inputs[1]->val[i]) * n.grad[0];
      n.inputs[0]->grad[i] += d;
      n.inputs[1]->grad[i] -= d;
    }
  });
}

}  // namespace bpmr::ad
