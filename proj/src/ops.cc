/* Copyright 2026 The nerfcodec Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "nerfcodec/ops.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

namespace nerfcodec {
namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

template <typename T>
void CheckSameTape(Var<T> a, Var<T> b) {
  if (!a.valid() || !b.valid() || a.tape != b.tape) {
    throw ContractError("operands must be valid vars on the same tape");
  }
}

template <typename T>
void CheckSameShape(const char* op, Var<T> a, Var<T> b) {
  CheckSameTape(a, b);
  if (a.shape() != b.shape()) {
    throw ContractError(std::string(op) + ": shape mismatch " +
                        ShapeString(a.shape()) + " vs " +
                        ShapeString(b.shape()));
  }
}

int NormalizeAxis(int axis, int rank) {
  const int a = axis < 0 ? axis + rank : axis;
  if (a < 0 || a >= rank) throw ContractError("axis out of range");
  return a;
}

// Splits a shape around `axis` into (outer, axis extent, inner).
struct AxisSplit {
  int64_t outer = 1;
  int64_t extent = 1;
  int64_t inner = 1;
};

AxisSplit SplitAround(const Shape& shape, int axis) {
  AxisSplit s;
  for (int i = 0; i < axis; ++i) s.outer *= shape[i];
  s.extent = shape[axis];
  for (size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

template <typename T>
void AddInto(Tensor<T>& dst, const Tensor<T>& src) {
  for (int64_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

template <typename T, typename Forward, typename Derivative>
Var<T> Unary(OpKind kind, Var<T> a, Forward f, Derivative df) {
  const Tensor<T>& x = a.value();
  Tensor<T> out(x.shape);
  for (int64_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  const int ia = a.id;
  return a.tape->Record(
      kind, {ia}, std::move(out),
      [ia, df](const Tensor<T>& g, Tape<T>& tape) {
        const Tensor<T>& xv = tape.value(ia);
        Tensor<T>& ga = tape.MutableGrad(ia);
        for (int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] * df(xv[i]);
      });
}

}  // namespace

template <typename T>
T SoftplusValue(T x) {
  if (x > T(20)) return x;
  return std::log1p(std::exp(x));
}

template <typename T>
T SigmoidValue(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

template <typename T>
Var<T> Add(Var<T> a, Var<T> b) {
  CheckSameShape("add", a, b);
  Tensor<T> out(a.shape());
  const auto& x = a.value();
  const auto& y = b.value();
  for (int64_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  const int ia = a.id, ib = b.id;
  return a.tape->Record(OpKind::kAdd, {ia, ib}, std::move(out),
                        [ia, ib](const Tensor<T>& g, Tape<T>& tape) {
                          if (tape.requires_grad(ia)) AddInto(tape.MutableGrad(ia), g);
                          if (tape.requires_grad(ib)) AddInto(tape.MutableGrad(ib), g);
                        });
}

template <typename T>
Var<T> Sub(Var<T> a, Var<T> b) {
  CheckSameShape("sub", a, b);
  Tensor<T> out(a.shape());
  const auto& x = a.value();
  const auto& y = b.value();
  for (int64_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
  const int ia = a.id, ib = b.id;
  return a.tape->Record(OpKind::kSub, {ia, ib}, std::move(out),
                        [ia, ib](const Tensor<T>& g, Tape<T>& tape) {
                          if (tape.requires_grad(ia)) AddInto(tape.MutableGrad(ia), g);
                          if (tape.requires_grad(ib)) {
                            Tensor<T>& gb = tape.MutableGrad(ib);
                            for (int64_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
                          }
                        });
}

template <typename T>
Var<T> Mul(Var<T> a, Var<T> b) {
  CheckSameShape("mul", a, b);
  Tensor<T> out(a.shape());
  const auto& x = a.value();
  const auto& y = b.value();
  for (int64_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  const int ia = a.id, ib = b.id;
  return a.tape->Record(
      OpKind::kMul, {ia, ib}, std::move(out),
      [ia, ib](const Tensor<T>& g, Tape<T>& tape) {
        const auto& xv = tape.value(ia);
        const auto& yv = tape.value(ib);
        if (tape.requires_grad(ia)) {
          Tensor<T>& ga = tape.MutableGrad(ia);
          for (int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] * yv[i];
        }
        if (tape.requires_grad(ib)) {
          Tensor<T>& gb = tape.MutableGrad(ib);
          for (int64_t i = 0; i < g.size(); ++i) gb[i] += g[i] * xv[i];
        }
      });
}

template <typename T>
Var<T> AddScalar(Var<T> a, T c) {
  Tensor<T> out = a.value();
  for (auto& v : out.data) v += c;
  const int ia = a.id;
  return a.tape->Record(OpKind::kAdd, {ia}, std::move(out),
                        [ia](const Tensor<T>& g, Tape<T>& tape) {
                          AddInto(tape.MutableGrad(ia), g);
                        });
}

template <typename T>
Var<T> MulScalar(Var<T> a, T c) {
  Tensor<T> out = a.value();
  for (auto& v : out.data) v *= c;
  const int ia = a.id;
  return a.tape->Record(OpKind::kMul, {ia}, std::move(out),
                        [ia, c](const Tensor<T>& g, Tape<T>& tape) {
                          Tensor<T>& ga = tape.MutableGrad(ia);
                          for (int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] * c;
                        });
}

template <typename T>
Var<T> MatMul(Var<T> a, Var<T> b, bool transpose_a, bool transpose_b) {
  CheckSameTape(a, b);
  if (a.value().rank() != 2 || b.value().rank() != 2) {
    throw ContractError("matmul: operands must be rank 2, got " +
                        ShapeString(a.shape()) + " and " +
                        ShapeString(b.shape()));
  }
  const int64_t ar = a.shape()[0], ac = a.shape()[1];
  const int64_t br = b.shape()[0], bc = b.shape()[1];
  const int64_t m = transpose_a ? ac : ar;
  const int64_t k = transpose_a ? ar : ac;
  const int64_t k2 = transpose_b ? bc : br;
  const int64_t n = transpose_b ? br : bc;
  if (k != k2) {
    throw ContractError("matmul: inner dimensions differ " +
                        ShapeString(a.shape()) + " . " +
                        ShapeString(b.shape()));
  }
  Tensor<T> out({m, n});
  ConstMatrixMap<T> A(a.value().data.data(), ar, ac);
  ConstMatrixMap<T> B(b.value().data.data(), br, bc);
  MatrixMap<T> C(out.data.data(), m, n);
  if (!transpose_a && !transpose_b) C.noalias() = A * B;
  if (!transpose_a && transpose_b) C.noalias() = A * B.transpose();
  if (transpose_a && !transpose_b) C.noalias() = A.transpose() * B;
  if (transpose_a && transpose_b) C.noalias() = A.transpose() * B.transpose();
  const int ia = a.id, ib = b.id;
  return a.tape->Record(
      OpKind::kMatMul, {ia, ib}, std::move(out),
      [=](const Tensor<T>& g, Tape<T>& tape) {
        ConstMatrixMap<T> G(g.data.data(), m, n);
        ConstMatrixMap<T> Av(tape.value(ia).data.data(), ar, ac);
        ConstMatrixMap<T> Bv(tape.value(ib).data.data(), br, bc);
        if (tape.requires_grad(ia)) {
          MatrixMap<T> GA(tape.MutableGrad(ia).data.data(), ar, ac);
          // d op(A) = G . op(B)^T
          if (!transpose_a) {
            if (!transpose_b) GA.noalias() += G * Bv.transpose();
            else GA.noalias() += G * Bv;
          } else {
            if (!transpose_b) GA.noalias() += Bv * G.transpose();
            else GA.noalias() += Bv.transpose() * G.transpose();
          }
        }
        if (tape.requires_grad(ib)) {
          MatrixMap<T> GB(tape.MutableGrad(ib).data.data(), br, bc);
          // d op(B) = op(A)^T . G
          if (!transpose_b) {
            if (!transpose_a) GB.noalias() += Av.transpose() * G;
            else GB.noalias() += Av * G;
          } else {
            if (!transpose_a) GB.noalias() += G.transpose() * Av;
            else GB.noalias() += G.transpose() * Av.transpose();
          }
        }
      });
}

namespace {

struct Conv2dGeometry {
  int64_t n, cin, h, w, cout, kh, kw, stride, pad, ho, wo;
  int64_t patch() const { return cin * kh * kw; }
};

template <typename T>
void Im2Col2d(const Conv2dGeometry& g, const T* x, T* col) {
  const int64_t hw = g.ho * g.wo;
  for (int64_t c = 0; c < g.cin; ++c) {
    for (int64_t ky = 0; ky < g.kh; ++ky) {
      for (int64_t kx = 0; kx < g.kw; ++kx) {
        T* row = col + ((c * g.kh + ky) * g.kw + kx) * hw;
        for (int64_t oy = 0; oy < g.ho; ++oy) {
          const int64_t iy = oy * g.stride - g.pad + ky;
          T* dst = row + oy * g.wo;
          if (iy < 0 || iy >= g.h) {
            std::fill(dst, dst + g.wo, T(0));
            continue;
          }
          const T* src = x + (c * g.h + iy) * g.w;
          for (int64_t ox = 0; ox < g.wo; ++ox) {
            const int64_t ix = ox * g.stride - g.pad + kx;
            dst[ox] = (ix < 0 || ix >= g.w) ? T(0) : src[ix];
          }
        }
      }
    }
  }
}

template <typename T>
void Col2Im2d(const Conv2dGeometry& g, const T* col, T* dx) {
  const int64_t hw = g.ho * g.wo;
  for (int64_t c = 0; c < g.cin; ++c) {
    for (int64_t ky = 0; ky < g.kh; ++ky) {
      for (int64_t kx = 0; kx < g.kw; ++kx) {
        const T* row = col + ((c * g.kh + ky) * g.kw + kx) * hw;
        for (int64_t oy = 0; oy < g.ho; ++oy) {
          const int64_t iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.h) continue;
          T* dst = dx + (c * g.h + iy) * g.w;
          const T* src = row + oy * g.wo;
          for (int64_t ox = 0; ox < g.wo; ++ox) {
            const int64_t ix = ox * g.stride - g.pad + kx;
            if (ix >= 0 && ix < g.w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Var<T> Conv2d(Var<T> x, Var<T> weight, Var<T> bias, int stride, int padding) {
  CheckSameTape(x, weight);
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  if (xs.size() != 4 || ws.size() != 4 || ws[1] != xs[1]) {
    throw ContractError("conv2d: input " + ShapeString(xs) +
                        " incompatible with weight " + ShapeString(ws));
  }
  if (stride < 1 || padding < 0) throw ContractError("conv2d: bad stride/padding");
  Conv2dGeometry g{xs[0], xs[1], xs[2], xs[3], ws[0], ws[2], ws[3],
                   stride, padding, 0, 0};
  g.ho = (g.h + 2 * padding - g.kh) / stride + 1;
  g.wo = (g.w + 2 * padding - g.kw) / stride + 1;
  if (g.ho <= 0 || g.wo <= 0) throw ContractError("conv2d: empty output");
  const bool has_bias = bias.valid();
  if (has_bias) {
    CheckSameTape(x, bias);
    if (bias.shape() != Shape{g.cout}) throw ContractError("conv2d: bad bias shape");
  }
  const int64_t hw = g.ho * g.wo;
  Tensor<T> out({g.n, g.cout, g.ho, g.wo});
  std::vector<T> col(g.patch() * hw);
  ConstMatrixMap<T> W(weight.value().data.data(), g.cout, g.patch());
  for (int64_t b = 0; b < g.n; ++b) {
    Im2Col2d(g, x.value().data.data() + b * g.cin * g.h * g.w, col.data());
    ConstMatrixMap<T> Col(col.data(), g.patch(), hw);
    MatrixMap<T> O(out.data.data() + b * g.cout * hw, g.cout, hw);
    O.noalias() = W * Col;
    if (has_bias) {
      const auto& bv = bias.value();
      for (int64_t c = 0; c < g.cout; ++c) O.row(c).array() += bv[c];
    }
  }
  const int ix = x.id, iw = weight.id, ib = has_bias ? bias.id : -1;
  std::vector<int> inputs{ix, iw};
  if (has_bias) inputs.push_back(ib);
  return x.tape->Record(
      OpKind::kConv2d, inputs, std::move(out),
      [=](const Tensor<T>& gout, Tape<T>& tape) {
        const bool need_x = tape.requires_grad(ix);
        const bool need_w = tape.requires_grad(iw);
        std::vector<T> col(g.patch() * hw);
        ConstMatrixMap<T> Wv(tape.value(iw).data.data(), g.cout, g.patch());
        for (int64_t b = 0; b < g.n; ++b) {
          ConstMatrixMap<T> G(gout.data.data() + b * g.cout * hw, g.cout, hw);
          if (need_w) {
            Im2Col2d(g, tape.value(ix).data.data() + b * g.cin * g.h * g.w,
                     col.data());
            ConstMatrixMap<T> Col(col.data(), g.patch(), hw);
            MatrixMap<T> GW(tape.MutableGrad(iw).data.data(), g.cout, g.patch());
            GW.noalias() += G * Col.transpose();
          }
          if (need_x) {
            MatrixMap<T> DCol(col.data(), g.patch(), hw);
            DCol.noalias() = Wv.transpose() * G;
            Col2Im2d(g, col.data(),
                     tape.MutableGrad(ix).data.data() + b * g.cin * g.h * g.w);
          }
          if (ib >= 0 && tape.requires_grad(ib)) {
            Tensor<T>& gb = tape.MutableGrad(ib);
            for (int64_t c = 0; c < g.cout; ++c) gb[c] += G.row(c).sum();
          }
        }
      });
}

namespace {

struct Conv3dGeometry {
  int64_t cin, d, h, w, cout, k, pad, od, oh, ow;
  int64_t patch() const { return cin * k * k * k; }
  int64_t out_voxels() const { return od * oh * ow; }
};

template <typename T>
void Im2Col3d(const Conv3dGeometry& g, const T* x, T* col) {
  const int64_t nv = g.out_voxels();
  for (int64_t c = 0; c < g.cin; ++c) {
    for (int64_t kz = 0; kz < g.k; ++kz) {
      for (int64_t ky = 0; ky < g.k; ++ky) {
        for (int64_t kx = 0; kx < g.k; ++kx) {
          T* row = col + (((c * g.k + kz) * g.k + ky) * g.k + kx) * nv;
          for (int64_t oz = 0; oz < g.od; ++oz) {
            const int64_t iz = oz - g.pad + kz;
            for (int64_t oy = 0; oy < g.oh; ++oy) {
              const int64_t iy = oy - g.pad + ky;
              T* dst = row + (oz * g.oh + oy) * g.ow;
              if (iz < 0 || iz >= g.d || iy < 0 || iy >= g.h) {
                std::fill(dst, dst + g.ow, T(0));
                continue;
              }
              const T* src = x + ((c * g.d + iz) * g.h + iy) * g.w;
              for (int64_t ox = 0; ox < g.ow; ++ox) {
                const int64_t ix = ox - g.pad + kx;
                dst[ox] = (ix < 0 || ix >= g.w) ? T(0) : src[ix];
              }
            }
          }
        }
      }
    }
  }
}

template <typename T>
void Col2Im3d(const Conv3dGeometry& g, const T* col, T* dx) {
  const int64_t nv = g.out_voxels();
  for (int64_t c = 0; c < g.cin; ++c) {
    for (int64_t kz = 0; kz < g.k; ++kz) {
      for (int64_t ky = 0; ky < g.k; ++ky) {
        for (int64_t kx = 0; kx < g.k; ++kx) {
          const T* row = col + (((c * g.k + kz) * g.k + ky) * g.k + kx) * nv;
          for (int64_t oz = 0; oz < g.od; ++oz) {
            const int64_t iz = oz - g.pad + kz;
            if (iz < 0 || iz >= g.d) continue;
            for (int64_t oy = 0; oy < g.oh; ++oy) {
              const int64_t iy = oy - g.pad + ky;
              if (iy < 0 || iy >= g.h) continue;
              T* dst = dx + ((c * g.d + iz) * g.h + iy) * g.w;
              const T* src = row + (oz * g.oh + oy) * g.ow;
              for (int64_t ox = 0; ox < g.ow; ++ox) {
                const int64_t ix = ox - g.pad + kx;
                if (ix >= 0 && ix < g.w) dst[ix] += src[ox];
              }
            }
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Var<T> Conv3d(Var<T> x, Var<T> weight, Var<T> bias, int padding) {
  CheckSameTape(x, weight);
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  if (xs.size() != 4 || ws.size() != 5 || ws[1] != xs[0] || ws[2] != ws[3] ||
      ws[3] != ws[4]) {
    throw ContractError("conv3d: input " + ShapeString(xs) +
                        " incompatible with weight " + ShapeString(ws));
  }
  Conv3dGeometry g{xs[0], xs[1], xs[2], xs[3], ws[0], ws[2], padding, 0, 0, 0};
  g.od = g.d + 2 * padding - g.k + 1;
  g.oh = g.h + 2 * padding - g.k + 1;
  g.ow = g.w + 2 * padding - g.k + 1;
  if (g.od <= 0 || g.oh <= 0 || g.ow <= 0) throw ContractError("conv3d: empty output");
  const bool has_bias = bias.valid();
  if (has_bias && bias.shape() != Shape{g.cout}) {
    throw ContractError("conv3d: bad bias shape");
  }
  const int64_t nv = g.out_voxels();
  Tensor<T> out({g.cout, g.od, g.oh, g.ow});
  {
    std::vector<T> col(g.patch() * nv);
    Im2Col3d(g, x.value().data.data(), col.data());
    ConstMatrixMap<T> W(weight.value().data.data(), g.cout, g.patch());
    ConstMatrixMap<T> Col(col.data(), g.patch(), nv);
    MatrixMap<T> O(out.data.data(), g.cout, nv);
    O.noalias() = W * Col;
    if (has_bias) {
      for (int64_t c = 0; c < g.cout; ++c) O.row(c).array() += bias.value()[c];
    }
  }
  const int ix = x.id, iw = weight.id, ib = has_bias ? bias.id : -1;
  std::vector<int> inputs{ix, iw};
  if (has_bias) inputs.push_back(ib);
  return x.tape->Record(
      OpKind::kConv3d, inputs, std::move(out),
      [=](const Tensor<T>& gout, Tape<T>& tape) {
        std::vector<T> col(g.patch() * nv);
        ConstMatrixMap<T> G(gout.data.data(), g.cout, nv);
        if (tape.requires_grad(iw)) {
          Im2Col3d(g, tape.value(ix).data.data(), col.data());
          ConstMatrixMap<T> Col(col.data(), g.patch(), nv);
          MatrixMap<T> GW(tape.MutableGrad(iw).data.data(), g.cout, g.patch());
          GW.noalias() += G * Col.transpose();
        }
        if (tape.requires_grad(ix)) {
          ConstMatrixMap<T> Wv(tape.value(iw).data.data(), g.cout, g.patch());
          MatrixMap<T> DCol(col.data(), g.patch(), nv);
          DCol.noalias() = Wv.transpose() * G;
          Col2Im3d(g, col.data(), tape.MutableGrad(ix).data.data());
        }
        if (ib >= 0 && tape.requires_grad(ib)) {
          Tensor<T>& gb = tape.MutableGrad(ib);
          for (int64_t c = 0; c < g.cout; ++c) gb[c] += G.row(c).sum();
        }
      });
}

namespace {

// Four taps per sample point; index -1 marks a tap with no contribution.
template <typename T>
struct GatherTaps {
  std::vector<int64_t> index;  // 4 per point
  std::vector<T> weight;       // 4 per point
};

template <typename T>
GatherTaps<T> ComputeTaps(int64_t h, int64_t w, std::span<const T> coords,
                          OutOfBounds mode) {
  const int64_t n = static_cast<int64_t>(coords.size() / 2);
  GatherTaps<T> taps;
  taps.index.assign(4 * n, -1);
  taps.weight.assign(4 * n, T(0));
  for (int64_t p = 0; p < n; ++p) {
    T u = coords[2 * p];
    T v = coords[2 * p + 1];
    if (mode == OutOfBounds::kClamp) {
      u = std::clamp(u, T(0), T(w - 1));
      v = std::clamp(v, T(0), T(h - 1));
    }
    const T fu = std::floor(u);
    const T fv = std::floor(v);
    const T ax = u - fu;
    const T ay = v - fv;
    const int64_t x0 = static_cast<int64_t>(fu);
    const int64_t y0 = static_cast<int64_t>(fv);
    int64_t xs[2] = {x0, x0 + 1};
    int64_t ys[2] = {y0, y0 + 1};
    if (mode == OutOfBounds::kClamp) {
      xs[1] = std::min(xs[1], w - 1);
      ys[1] = std::min(ys[1], h - 1);
    }
    const T wx[2] = {T(1) - ax, ax};
    const T wy[2] = {T(1) - ay, ay};
    for (int j = 0; j < 2; ++j) {
      for (int i = 0; i < 2; ++i) {
        const int t = 4 * p + 2 * j + i;
        if (xs[i] < 0 || xs[i] >= w || ys[j] < 0 || ys[j] >= h) continue;
        taps.index[t] = ys[j] * w + xs[i];
        taps.weight[t] = wy[j] * wx[i];
      }
    }
  }
  return taps;
}

}  // namespace

template <typename T>
Var<T> BilinearGather(Var<T> plane, std::span<const T> coords,
                      OutOfBounds mode, GatherLayout layout) {
  if (!plane.valid() || plane.value().rank() != 3) {
    throw ContractError("bilinear-gather: plane must be [C, H, W]");
  }
  if (coords.size() % 2 != 0) {
    throw ContractError("bilinear-gather: coords must be (u, v) pairs");
  }
  const int64_t c = plane.shape()[0], h = plane.shape()[1], w = plane.shape()[2];
  const int64_t n = static_cast<int64_t>(coords.size() / 2);
  auto taps = std::make_shared<GatherTaps<T>>(ComputeTaps<T>(h, w, coords, mode));
  const bool point_major = layout == GatherLayout::kPointMajor;
  Tensor<T> out(point_major ? Shape{n, c} : Shape{c, n});
  const T* src = plane.value().data.data();
  const int64_t hw = h * w;
  for (int64_t ch = 0; ch < c; ++ch) {
    const T* sp = src + ch * hw;
    for (int64_t p = 0; p < n; ++p) {
      // On a grid node the tap weights are exactly {1, 0, 0, 0}, so node
      // values are reproduced without smoothing.
      T acc = T(0);
      for (int t = 0; t < 4; ++t) {
        const int64_t idx = taps->index[4 * p + t];
        if (idx >= 0) acc += taps->weight[4 * p + t] * sp[idx];
      }
      out[point_major ? p * c + ch : ch * n + p] = acc;
    }
  }
  const int ip = plane.id;
  return plane.tape->Record(
      OpKind::kBilinearGather, {ip}, std::move(out),
      [=](const Tensor<T>& g, Tape<T>& tape) {
        T* dst = tape.MutableGrad(ip).data.data();
        for (int64_t ch = 0; ch < c; ++ch) {
          T* dp = dst + ch * hw;
          for (int64_t p = 0; p < n; ++p) {
            const T gv = g[point_major ? p * c + ch : ch * n + p];
            for (int t = 0; t < 4; ++t) {
              const int64_t idx = taps->index[4 * p + t];
              if (idx >= 0) dp[idx] += taps->weight[4 * p + t] * gv;
            }
          }
        }
      });
}

template <typename T>
Var<T> MeanPoolAxis(Var<T> a, int axis) {
  const Shape& s = a.shape();
  const int ax = NormalizeAxis(axis, static_cast<int>(s.size()));
  const AxisSplit sp = SplitAround(s, ax);
  Shape os = s;
  os.erase(os.begin() + ax);
  Tensor<T> out(os);
  const T inv = T(1) / static_cast<T>(sp.extent);
  const auto& x = a.value();
  for (int64_t o = 0; o < sp.outer; ++o) {
    for (int64_t k = 0; k < sp.extent; ++k) {
      const T* row = x.data.data() + (o * sp.extent + k) * sp.inner;
      T* dst = out.data.data() + o * sp.inner;
      for (int64_t i = 0; i < sp.inner; ++i) dst[i] += row[i];
    }
  }
  for (auto& v : out.data) v *= inv;
  const int ia = a.id;
  return a.tape->Record(
      OpKind::kMeanPoolAxis, {ia}, std::move(out),
      [ia, sp, inv](const Tensor<T>& g, Tape<T>& tape) {
        Tensor<T>& ga = tape.MutableGrad(ia);
        for (int64_t o = 0; o < sp.outer; ++o) {
          const T* src = g.data.data() + o * sp.inner;
          for (int64_t k = 0; k < sp.extent; ++k) {
            T* row = ga.data.data() + (o * sp.extent + k) * sp.inner;
            for (int64_t i = 0; i < sp.inner; ++i) row[i] += src[i] * inv;
          }
        }
      });
}

template <typename T>
Var<T> Concat(const std::vector<Var<T>>& parts, int axis) {
  if (parts.empty()) throw ContractError("concat: no inputs");
  const Shape& s0 = parts[0].shape();
  const int ax = NormalizeAxis(axis, static_cast<int>(s0.size()));
  std::vector<int64_t> extents;
  std::vector<int> ids;
  int64_t total = 0;
  for (const auto& p : parts) {
    CheckSameTape(parts[0], p);
    const Shape& s = p.shape();
    if (s.size() != s0.size()) throw ContractError("concat: rank mismatch");
    for (size_t i = 0; i < s.size(); ++i) {
      if (static_cast<int>(i) != ax && s[i] != s0[i]) {
        throw ContractError("concat: shape mismatch " + ShapeString(s0) +
                            " vs " + ShapeString(s));
      }
    }
    extents.push_back(s[ax]);
    ids.push_back(p.id);
    total += s[ax];
  }
  Shape os = s0;
  os[ax] = total;
  const AxisSplit sp = SplitAround(os, ax);
  Tensor<T> out(os);
  int64_t offset = 0;
  for (size_t j = 0; j < parts.size(); ++j) {
    const auto& x = parts[j].value();
    const int64_t chunk = extents[j] * sp.inner;
    for (int64_t o = 0; o < sp.outer; ++o) {
      std::copy_n(x.data.data() + o * chunk, chunk,
                  out.data.data() + (o * total + offset) * sp.inner);
    }
    offset += extents[j];
  }
  return parts[0].tape->Record(
      OpKind::kConcat, ids, std::move(out),
      [ids, extents, sp, total](const Tensor<T>& g, Tape<T>& tape) {
        int64_t offset = 0;
        for (size_t j = 0; j < ids.size(); ++j) {
          const int64_t chunk = extents[j] * sp.inner;
          if (tape.requires_grad(ids[j])) {
            Tensor<T>& gx = tape.MutableGrad(ids[j]);
            for (int64_t o = 0; o < sp.outer; ++o) {
              const T* src = g.data.data() + (o * total + offset) * sp.inner;
              T* dst = gx.data.data() + o * chunk;
              for (int64_t i = 0; i < chunk; ++i) dst[i] += src[i];
            }
          }
          offset += extents[j];
        }
      });
}

template <typename T>
Var<T> Slice(Var<T> a, int axis, int64_t start, int64_t count) {
  const Shape& s = a.shape();
  const int ax = NormalizeAxis(axis, static_cast<int>(s.size()));
  if (start < 0 || count < 0 || start + count > s[ax]) {
    throw ContractError("slice: range [" + std::to_string(start) + ", " +
                        std::to_string(start + count) + ") outside " +
                        ShapeString(s));
  }
  const AxisSplit sp = SplitAround(s, ax);
  Shape os = s;
  os[ax] = count;
  Tensor<T> out(os);
  const int64_t chunk = count * sp.inner;
  const T* x = a.value().data.data();
  for (int64_t o = 0; o < sp.outer; ++o) {
    std::copy_n(x + (o * sp.extent + start) * sp.inner, chunk,
                out.data.data() + o * chunk);
  }
  const int ia = a.id;
  return a.tape->Record(
      OpKind::kSlice, {ia}, std::move(out),
      [ia, sp, start, chunk](const Tensor<T>& g, Tape<T>& tape) {
        Tensor<T>& ga = tape.MutableGrad(ia);
        for (int64_t o = 0; o < sp.outer; ++o) {
          T* dst = ga.data.data() + (o * sp.extent + start) * sp.inner;
          const T* src = g.data.data() + o * chunk;
          for (int64_t i = 0; i < chunk; ++i) dst[i] += src[i];
        }
      });
}

template <typename T>
Var<T> SumReduce(Var<T> a) {
  T acc = T(0);
  for (T v : a.value().data) acc += v;
  const int ia = a.id;
  return a.tape->Record(OpKind::kSumReduce, {ia}, Tensor<T>::Scalar(acc),
                        [ia](const Tensor<T>& g, Tape<T>& tape) {
                          Tensor<T>& ga = tape.MutableGrad(ia);
                          const T gv = g[0];
                          for (auto& v : ga.data) v += gv;
                        });
}

template <typename T>
Var<T> SumReduce(Var<T> a, int axis) {
  const Shape& s = a.shape();
  const int ax = NormalizeAxis(axis, static_cast<int>(s.size()));
  const AxisSplit sp = SplitAround(s, ax);
  Shape os = s;
  os.erase(os.begin() + ax);
  Tensor<T> out(os);
  const auto& x = a.value();
  for (int64_t o = 0; o < sp.outer; ++o) {
    T* dst = out.data.data() + o * sp.inner;
    for (int64_t k = 0; k < sp.extent; ++k) {
      const T* row = x.data.data() + (o * sp.extent + k) * sp.inner;
      for (int64_t i = 0; i < sp.inner; ++i) dst[i] += row[i];
    }
  }
  const int ia = a.id;
  return a.tape->Record(
      OpKind::kSumReduce, {ia}, std::move(out),
      [ia, sp](const Tensor<T>& g, Tape<T>& tape) {
        Tensor<T>& ga = tape.MutableGrad(ia);
        for (int64_t o = 0; o < sp.outer; ++o) {
          const T* src = g.data.data() + o * sp.inner;
          for (int64_t k = 0; k < sp.extent; ++k) {
            T* row = ga.data.data() + (o * sp.extent + k) * sp.inner;
            for (int64_t i = 0; i < sp.inner; ++i) row[i] += src[i];
          }
        }
      });
}

template <typename T>
Var<T> Relu(Var<T> a) {
  return Unary(
      OpKind::kRelu, a, [](T x) { return x > T(0) ? x : T(0); },
      [](T x) { return x > T(0) ? T(1) : T(0); });
}

template <typename T>
Var<T> Softplus(Var<T> a) {
  return Unary(OpKind::kSoftplus, a, [](T x) { return SoftplusValue(x); },
               [](T x) { return SigmoidValue(x); });
}

template <typename T>
Var<T> Sigmoid(Var<T> a) {
  return Unary(OpKind::kSigmoid, a, [](T x) { return SigmoidValue(x); },
               [](T x) {
                 const T s = SigmoidValue(x);
                 return s * (T(1) - s);
               });
}

template <typename T>
Var<T> Exp(Var<T> a) {
  return Unary(OpKind::kExp, a, [](T x) { return std::exp(x); },
               [](T x) { return std::exp(x); });
}

template <typename T>
Var<T> Log(Var<T> a) {
  for (T v : a.value().data) {
    if (!(v > T(0))) {
      if (a.tape->check_finite()) {
        throw NumericError("log of non-positive value (node " +
                           std::to_string(a.tape->size()) + ")");
      }
      break;
    }
  }
  return Unary(OpKind::kLog, a, [](T x) { return std::log(x); },
               [](T x) { return T(1) / x; });
}

template <typename T>
Var<T> Square(Var<T> a) {
  return Unary(OpKind::kSquare, a, [](T x) { return x * x; },
               [](T x) { return T(2) * x; });
}

template <typename T>
Var<T> Broadcast(Var<T> a, const Shape& target) {
  const Shape& s = a.shape();
  const int rank = static_cast<int>(target.size());
  const int offset = rank - static_cast<int>(s.size());
  if (offset < 0) throw ContractError("broadcast: target rank too small");
  // Source stride per target dim; 0 on broadcast dims.
  std::vector<int64_t> src_stride(rank, 0);
  int64_t stride = 1;
  for (int i = rank - 1; i >= 0; --i) {
    const int si = i - offset;
    if (si < 0) continue;
    if (s[si] == target[i]) {
      src_stride[i] = stride;
    } else if (s[si] != 1) {
      throw ContractError("broadcast: cannot broadcast " + ShapeString(s) +
                          " to " + ShapeString(target));
    }
    stride *= s[si];
  }
  auto src_index = std::make_shared<std::vector<int64_t>>(NumElements(target));
  {
    std::vector<int64_t> counter(rank, 0);
    int64_t src = 0;
    for (int64_t i = 0; i < static_cast<int64_t>(src_index->size()); ++i) {
      (*src_index)[i] = src;
      for (int d = rank - 1; d >= 0; --d) {
        ++counter[d];
        src += src_stride[d];
        if (counter[d] < target[d]) break;
        src -= src_stride[d] * counter[d];
        counter[d] = 0;
      }
    }
  }
  Tensor<T> out(target);
  const auto& x = a.value();
  for (int64_t i = 0; i < out.size(); ++i) out[i] = x[(*src_index)[i]];
  const int ia = a.id;
  return a.tape->Record(OpKind::kBroadcast, {ia}, std::move(out),
                        [ia, src_index](const Tensor<T>& g, Tape<T>& tape) {
                          Tensor<T>& ga = tape.MutableGrad(ia);
                          for (int64_t i = 0; i < g.size(); ++i) {
                            ga[(*src_index)[i]] += g[i];
                          }
                        });
}

namespace {

struct LinearTap {
  int64_t i0, i1;
  double w1;  // weight of i1; i0 gets 1 - w1
};

std::vector<LinearTap> UpsampleTaps(int64_t in) {
  std::vector<LinearTap> taps(2 * in);
  for (int64_t o = 0; o < 2 * in; ++o) {
    double src = (static_cast<double>(o) + 0.5) * 0.5 - 0.5;
    if (src < 0) src = 0;
    const int64_t i0 = std::min<int64_t>(static_cast<int64_t>(src), in - 1);
    const int64_t i1 = std::min<int64_t>(i0 + 1, in - 1);
    taps[o] = {i0, i1, src - static_cast<double>(i0)};
  }
  return taps;
}

}  // namespace

template <typename T>
Var<T> Upsample2d(Var<T> x) {
  const Shape& s = x.shape();
  if (s.size() != 4) throw ContractError("upsample2d: input must be [N, C, H, W]");
  const int64_t planes = s[0] * s[1], h = s[2], w = s[3];
  const auto ty = UpsampleTaps(h);
  const auto tx = UpsampleTaps(w);
  Tensor<T> out({s[0], s[1], 2 * h, 2 * w});
  const auto& xv = x.value();
  for (int64_t p = 0; p < planes; ++p) {
    const T* src = xv.data.data() + p * h * w;
    T* dst = out.data.data() + p * 4 * h * w;
    for (int64_t oy = 0; oy < 2 * h; ++oy) {
      const T wy1 = static_cast<T>(ty[oy].w1), wy0 = T(1) - wy1;
      const T* r0 = src + ty[oy].i0 * w;
      const T* r1 = src + ty[oy].i1 * w;
      for (int64_t ox = 0; ox < 2 * w; ++ox) {
        const T wx1 = static_cast<T>(tx[ox].w1), wx0 = T(1) - wx1;
        dst[oy * 2 * w + ox] =
            wy0 * (wx0 * r0[tx[ox].i0] + wx1 * r0[tx[ox].i1]) +
            wy1 * (wx0 * r1[tx[ox].i0] + wx1 * r1[tx[ox].i1]);
      }
    }
  }
  const int ix = x.id;
  return x.tape->Record(
      OpKind::kUpsample2d, {ix}, std::move(out),
      [=](const Tensor<T>& g, Tape<T>& tape) {
        Tensor<T>& gx = tape.MutableGrad(ix);
        for (int64_t p = 0; p < planes; ++p) {
          const T* src = g.data.data() + p * 4 * h * w;
          T* dst = gx.data.data() + p * h * w;
          for (int64_t oy = 0; oy < 2 * h; ++oy) {
            const T wy1 = static_cast<T>(ty[oy].w1), wy0 = T(1) - wy1;
            T* r0 = dst + ty[oy].i0 * w;
            T* r1 = dst + ty[oy].i1 * w;
            for (int64_t ox = 0; ox < 2 * w; ++ox) {
              const T wx1 = static_cast<T>(tx[ox].w1), wx0 = T(1) - wx1;
              const T gv = src[oy * 2 * w + ox];
              r0[tx[ox].i0] += wy0 * wx0 * gv;
              r0[tx[ox].i1] += wy0 * wx1 * gv;
              r1[tx[ox].i0] += wy1 * wx0 * gv;
              r1[tx[ox].i1] += wy1 * wx1 * gv;
            }
          }
        }
      });
}

template <typename T>
Var<T> Reshape(Var<T> a, const Shape& shape) {
  if (NumElements(shape) != a.value().size()) {
    throw ContractError("reshape: " + ShapeString(a.shape()) + " -> " +
                        ShapeString(shape));
  }
  Tensor<T> out(shape, a.value().data);
  const int ia = a.id;
  return a.tape->Record(OpKind::kReshape, {ia}, std::move(out),
                        [ia](const Tensor<T>& g, Tape<T>& tape) {
                          AddInto(tape.MutableGrad(ia), g);
                        });
}

#define NERFCODEC_INSTANTIATE_OPS(T)                                        \
  template T SoftplusValue<T>(T);                                           \
  template T SigmoidValue<T>(T);                                            \
  template Var<T> Add<T>(Var<T>, Var<T>);                                   \
  template Var<T> Sub<T>(Var<T>, Var<T>);                                   \
  template Var<T> Mul<T>(Var<T>, Var<T>);                                   \
  template Var<T> AddScalar<T>(Var<T>, T);                                  \
  template Var<T> MulScalar<T>(Var<T>, T);                                  \
  template Var<T> MatMul<T>(Var<T>, Var<T>, bool, bool);                    \
  template Var<T> Conv2d<T>(Var<T>, Var<T>, Var<T>, int, int);              \
  template Var<T> Conv3d<T>(Var<T>, Var<T>, Var<T>, int);                   \
  template Var<T> BilinearGather<T>(Var<T>, std::span<const T>, OutOfBounds, \
                                    GatherLayout);                          \
  template Var<T> MeanPoolAxis<T>(Var<T>, int);                             \
  template Var<T> Concat<T>(const std::vector<Var<T>>&, int);               \
  template Var<T> Slice<T>(Var<T>, int, int64_t, int64_t);                  \
  template Var<T> SumReduce<T>(Var<T>);                                     \
  template Var<T> SumReduce<T>(Var<T>, int);                                \
  template Var<T> Relu<T>(Var<T>);                                          \
  template Var<T> Softplus<T>(Var<T>);                                      \
  template Var<T> Sigmoid<T>(Var<T>);                                       \
  template Var<T> Exp<T>(Var<T>);                                           \
  template Var<T> Log<T>(Var<T>);                                           \
  template Var<T> Square<T>(Var<T>);                                        \
  template Var<T> Broadcast<T>(Var<T>, const Shape&);                       \
  template Var<T> Upsample2d<T>(Var<T>);                                    \
  template Var<T> Reshape<T>(Var<T>, const Shape&);

NERFCODEC_INSTANTIATE_OPS(float)
NERFCODEC_INSTANTIATE_OPS(double)

#undef NERFCODEC_INSTANTIATE_OPS

}  // namespace nerfcodec
