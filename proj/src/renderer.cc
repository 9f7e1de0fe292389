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

#include "nerfcodec/renderer.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nerfcodec/parallel.h"
#include "nerfcodec/random.h"

namespace nerfcodec {

template <typename T>
RayBatch<T> PixelRays(const CameraView& view, std::span<const int64_t> pixels,
                      uint64_t id_base) {
  RayBatch<T> rays;
  rays.origins.reserve(3 * pixels.size());
  rays.dirs.reserve(3 * pixels.size());
  for (int64_t p : pixels) {
    const int64_t y = p / view.width, x = p % view.width;
    const Ray r = PixelRay(view, x + 0.5, y + 0.5, 0.0, 1.0);
    for (int a = 0; a < 3; ++a) {
      rays.origins.push_back(static_cast<T>(r.origin[a]));
      rays.dirs.push_back(static_cast<T>(r.direction[a]));
    }
    rays.ids.push_back(id_base + static_cast<uint64_t>(p));
  }
  return rays;
}

template <typename T>
FieldFn<T> TriplaneField(const PlaneVars<T>& planes, const MlpVars<T>& coarse,
                         const MlpVars<T>& fine, int pe_frequencies) {
  return [=](Tape<T>&, std::span<const T> points, std::span<const T> dirs,
             bool use_fine) {
    Var<T> features = SampleFeatures<T>(planes, points);
    const std::vector<T> pe = PositionalEncode<T>(dirs, pe_frequencies);
    return EvalPoints<T>(use_fine ? fine : coarse, features, points, pe);
  };
}

template <typename T>
Composite<T> CompositeSamples(Var<T> sigma, Var<T> rgb,
                              std::span<const T> deltas,
                              const std::array<float, 3>& background) {
  Tape<T>& tape = *sigma.tape;
  const int64_t r = sigma.shape()[0], s = sigma.shape()[1];
  if (sigma.shape().size() != 2 || rgb.shape() != Shape{r, s, 3} ||
      static_cast<int64_t>(deltas.size()) != r * s) {
    throw ContractError("composite: expected sigma [R, S], rgb [R, S, 3]");
  }
  Var<T> dv = tape.Constant(
      Tensor<T>({r, s}, std::vector<T>(deltas.begin(), deltas.end())));
  Var<T> tau = Mul(sigma, dv);
  // Exclusive prefix sum as a product with a strictly upper-triangular
  // matrix of ones.
  Tensor<T> upper({s, s});
  for (int64_t j = 0; j < s; ++j) {
    for (int64_t i = j + 1; i < s; ++i) upper[j * s + i] = T(1);
  }
  Var<T> cum = MatMul(tau, tape.Constant(std::move(upper)));
  Var<T> trans = Exp(MulScalar(cum, T(-1)));
  Var<T> alpha = AddScalar(MulScalar(Exp(MulScalar(tau, T(-1))), T(-1)), T(1));
  Composite<T> out;
  out.weights = Mul(trans, alpha);
  Var<T> w3 = Broadcast(Reshape(out.weights, {r, s, 1}), {r, s, 3});
  Var<T> color = SumReduce(Mul(w3, rgb), 1);
  out.residual = Exp(MulScalar(SumReduce(tau, 1), T(-1)));
  Tensor<T> bg({r, 3});
  for (int64_t i = 0; i < r; ++i) {
    for (int c = 0; c < 3; ++c) bg[3 * i + c] = static_cast<T>(background[c]);
  }
  Var<T> back = Mul(Broadcast(Reshape(out.residual, {r, 1}), {r, 3}),
                    tape.Constant(std::move(bg)));
  out.rgb = Add(color, back);
  return out;
}

template <typename T>
std::vector<T> StratifiedSamples(const RayBatch<T>& rays,
                                 const RenderConfig& cfg) {
  const int n = cfg.n_coarse;
  const double step = (cfg.far - cfg.near) / n;
  std::vector<T> t(rays.size() * n);
  for (int64_t r = 0; r < rays.size(); ++r) {
    const uint64_t key = StreamKey(cfg.seed, rays.ids[r]);
    for (int i = 0; i < n; ++i) {
      const double u = cfg.stratified ? UniformAt(key, i) : 0.5;
      t[r * n + i] = static_cast<T>(cfg.near + (i + u) * step);
    }
  }
  return t;
}

template <typename T>
std::vector<T> SampleInverseCdf(std::span<const T> weights,
                                std::span<const T> edges,
                                std::span<const double> uniforms, int bins,
                                int n) {
  const size_t rays = weights.size() / bins;
  std::vector<T> out(rays * n);
  std::vector<double> cdf(bins + 1);
  for (size_t r = 0; r < rays; ++r) {
    const T* w = weights.data() + r * bins;
    const T* e = edges.data() + r * (bins + 1);
    cdf[0] = 0;
    for (int b = 0; b < bins; ++b) {
      cdf[b + 1] = cdf[b] + std::max<double>(w[b], 0.0) + 1e-5;
    }
    const double total = cdf[bins];
    for (int b = 1; b <= bins; ++b) cdf[b] /= total;
    for (int j = 0; j < n; ++j) {
      const double u = uniforms[r * n + j];
      int b = static_cast<int>(std::upper_bound(cdf.begin(), cdf.end(), u) -
                               cdf.begin()) - 1;
      b = std::clamp(b, 0, bins - 1);
      const double mass = cdf[b + 1] - cdf[b];
      const double frac = mass > 0 ? std::clamp((u - cdf[b]) / mass, 0.0, 1.0) : 0.5;
      out[r * n + j] = static_cast<T>(e[b] + frac * (e[b + 1] - e[b]));
    }
  }
  return out;
}

namespace {

// Each sample stands for the span between the midpoints to its neighbours;
// the first span starts at near and the last ends at far, so the spans tile
// [near, far] exactly.
template <typename T>
std::vector<T> Deltas(std::span<const T> t, int64_t rays, int s, double near,
                      double far) {
  std::vector<T> d(t.size());
  for (int64_t r = 0; r < rays; ++r) {
    const T* tr = t.data() + r * s;
    T lo = static_cast<T>(near);
    for (int i = 0; i < s; ++i) {
      const T hi = i + 1 < s ? T(0.5) * (tr[i] + tr[i + 1]) : static_cast<T>(far);
      d[r * s + i] = hi - lo;
      lo = hi;
    }
  }
  return d;
}

template <typename T>
void SamplePoints(const RayBatch<T>& rays, std::span<const T> t, int s,
                  std::vector<T>* points, std::vector<T>* dirs) {
  points->resize(3 * t.size());
  dirs->resize(3 * t.size());
  for (int64_t r = 0; r < rays.size(); ++r) {
    for (int i = 0; i < s; ++i) {
      const int64_t k = r * s + i;
      for (int a = 0; a < 3; ++a) {
        (*points)[3 * k + a] = rays.origins[3 * r + a] + t[k] * rays.dirs[3 * r + a];
        (*dirs)[3 * k + a] = rays.dirs[3 * r + a];
      }
    }
  }
}

template <typename T>
Composite<T> Pass(Tape<T>& tape, const RayBatch<T>& rays,
                  std::span<const T> t, int s, const FieldFn<T>& field,
                  bool fine, const RenderConfig& cfg) {
  std::vector<T> points, dirs;
  SamplePoints(rays, t, s, &points, &dirs);
  const MlpOutput<T> out = field(tape, points, dirs, fine);
  const int64_t r = rays.size();
  const std::vector<T> deltas = Deltas(t, r, s, cfg.near, cfg.far);
  return CompositeSamples<T>(Reshape(out.sigma, {r, s}),
                             Reshape(out.rgb, {r, s, 3}), deltas,
                             cfg.background);
}

}  // namespace

template <typename T>
RenderOutput<T> RenderRays(Tape<T>& tape, const RayBatch<T>& rays,
                           const FieldFn<T>& field, const RenderConfig& cfg,
                           std::span<const T> fine_override) {
  if (cfg.n_coarse < 1 || cfg.n_fine < 1 || !(cfg.near < cfg.far)) {
    throw ContractError("render: need n_coarse, n_fine >= 1 and near < far");
  }
  const int64_t r = rays.size();
  const int nc = cfg.n_coarse, nf = cfg.n_fine, nt = nc + nf;
  RenderOutput<T> out;
  out.t_coarse = StratifiedSamples(rays, cfg);
  out.coarse = Pass<T>(tape, rays, out.t_coarse, nc, field, false, cfg);

  if (!fine_override.empty()) {
    if (static_cast<int64_t>(fine_override.size()) != r * nt) {
      throw ContractError("render: fine override has the wrong size");
    }
    out.t_fine.assign(fine_override.begin(), fine_override.end());
  } else {
    const double step = (cfg.far - cfg.near) / nc;
    std::vector<T> edges(r * (nc + 1));
    std::vector<double> uniforms(r * nf);
    for (int64_t i = 0; i < r; ++i) {
      for (int b = 0; b <= nc; ++b) {
        edges[i * (nc + 1) + b] = static_cast<T>(cfg.near + b * step);
      }
      const uint64_t key = StreamKey(cfg.seed, rays.ids[i]);
      for (int j = 0; j < nf; ++j) {
        const double u = cfg.stratified ? UniformAt(key, nc + j) : 0.5;
        uniforms[i * nf + j] = (j + u) / nf;
      }
    }
    const std::vector<T> drawn = SampleInverseCdf<T>(
        out.coarse.weights.value().data, edges, uniforms, nc, nf);
    out.t_fine.resize(r * nt);
    for (int64_t i = 0; i < r; ++i) {
      T* dst = out.t_fine.data() + i * nt;
      std::copy_n(out.t_coarse.data() + i * nc, nc, dst);
      std::copy_n(drawn.data() + i * nf, nf, dst + nc);
      std::sort(dst, dst + nt);
    }
  }
  out.fine = Pass<T>(tape, rays, out.t_fine, nt, field, true, cfg);
  return out;
}

RenderedImage RenderImage(const CameraView& view, const PlaneSet<float>& planes,
                          const RadianceMlp& coarse, const RadianceMlp& fine,
                          const RenderConfig& cfg) {
  constexpr int64_t kChunk = 256;
  const int64_t n = static_cast<int64_t>(view.width) * view.height;
  RenderedImage out;
  out.image = Image(view.height, view.width);
  out.image.alpha.assign(n, 0.0f);
  out.coarse = Image(view.height, view.width);
  const int64_t chunks = (n + kChunk - 1) / kChunk;
  ParallelFor(chunks, [&](int64_t c) {
    const int64_t begin = c * kChunk, end = std::min(n, begin + kChunk);
    std::vector<int64_t> pixels(end - begin);
    std::iota(pixels.begin(), pixels.end(), begin);
    Tape<float> tape(false);
    const PlaneVars<float> pv = BindPlanes(tape, planes, false);
    const MlpVars<float> cv = BindMlp<float>(tape, coarse, nullptr, false, false);
    const MlpVars<float> fv = BindMlp<float>(tape, fine, nullptr, false, false);
    const RayBatch<float> rays = PixelRays<float>(view, pixels);
    const RenderOutput<float> r = RenderRays<float>(
        tape, rays, TriplaneField<float>(pv, cv, fv, cfg.pe_frequencies), cfg);
    const auto& fine_rgb = r.fine.rgb.value().data;
    const auto& coarse_rgb = r.coarse.rgb.value().data;
    const auto& resid = r.fine.residual.value().data;
    for (int64_t i = 0; i < end - begin; ++i) {
      for (int ch = 0; ch < 3; ++ch) {
        out.image.rgb[3 * (begin + i) + ch] = fine_rgb[3 * i + ch];
        out.coarse.rgb[3 * (begin + i) + ch] = coarse_rgb[3 * i + ch];
      }
      out.image.alpha[begin + i] = 1.0f - resid[i];
    }
  });
  return out;
}

#define NERFCODEC_INSTANTIATE_RENDERER(T)                                     \
  template RayBatch<T> PixelRays<T>(const CameraView&,                        \
                                    std::span<const int64_t>, uint64_t);      \
  template FieldFn<T> TriplaneField<T>(const PlaneVars<T>&,                   \
                                       const MlpVars<T>&, const MlpVars<T>&,  \
                                       int);                                  \
  template Composite<T> CompositeSamples<T>(                                  \
      Var<T>, Var<T>, std::span<const T>, const std::array<float, 3>&);       \
  template std::vector<T> StratifiedSamples<T>(const RayBatch<T>&,            \
                                               const RenderConfig&);          \
  template std::vector<T> SampleInverseCdf<T>(                                \
      std::span<const T>, std::span<const T>, std::span<const double>, int,   \
      int);                                                                   \
  template RenderOutput<T> RenderRays<T>(Tape<T>&, const RayBatch<T>&,        \
                                         const FieldFn<T>&,                   \
                                         const RenderConfig&,                 \
                                         std::span<const T>);

NERFCODEC_INSTANTIATE_RENDERER(float)
NERFCODEC_INSTANTIATE_RENDERER(double)

}  // namespace nerfcodec
