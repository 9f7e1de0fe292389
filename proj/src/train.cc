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

#include "nerfcodec/train.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <sstream>

#include <toml.hpp>

#include "nerfcodec/metrics.h"
#include "nerfcodec/random.h"

namespace nerfcodec {
namespace {

constexpr uint8_t kCheckpointMagic[4] = {'N', 'C', 'C', 'K'};
constexpr uint32_t kCheckpointVersion = 1;

bool IsPeft(FinetuneMode mode) {
  return mode == FinetuneMode::kPeft || mode == FinetuneMode::kPeftPlus;
}

// M rounded half to even, with -0 mapped to +0.
DeltaFactors RoundedDelta(const DeltaFactors& delta) {
  DeltaFactors out = delta;
  for (auto& m : out.m) {
    for (float& x : m.data) x = std::nearbyint(x) + 0.0f;
  }
  return out;
}

Representation Compose(const PlaneSet<float>& base, const RadianceMlp& coarse,
                       const RadianceMlp& fine, const DeltaFactors* delta,
                       const LoraAdapter* coarse_lora,
                       const LoraAdapter* fine_lora) {
  Representation rep;
  rep.planes = base;
  if (delta != nullptr) {
    for (int k = 0; k < kNumPlanes; ++k) {
      for (int s = 0; s < kNumScales; ++s) {
        Tensor<float>& p = rep.planes[PlaneIndex(k, s)];
        const Tensor<float> d = MaterializeDeltaValue(*delta, k, s);
        for (int64_t i = 0; i < p.size(); ++i) p[i] += d[i];
      }
    }
  }
  rep.coarse = coarse_lora ? MergeAdapter(coarse, *coarse_lora) : coarse;
  rep.fine = fine_lora ? MergeAdapter(fine, *fine_lora) : fine;
  return rep;
}

std::vector<ParamRef> RunParams(FinetuneRun* run) {
  std::vector<ParamRef> params = TrainableParams(&run->state, run->config.mode);
  for (size_t s = 0; s < run->density.size(); ++s) {
    params.push_back(
        {"density" + std::to_string(s), &run->density[s], ParamGroup::kDensity});
  }
  return params;
}

// Every tensor a checkpoint stores, in a fixed order.
std::vector<NamedTensor<float>> StateTensors(FinetuneRun* run) {
  std::vector<NamedTensor<float>> out;
  FinetuneState& st = run->state;
  for (size_t i = 0; i < st.base.planes.size(); ++i) {
    out.push_back({"plane" + std::to_string(i), &st.base.planes[i]});
  }
  for (auto [name, mlp] : {std::pair{"coarse", &st.coarse}, std::pair{"fine", &st.fine}}) {
    for (size_t i = 0; i < mlp->layers.size(); ++i) {
      out.push_back({std::string(name) + std::to_string(i) + ".w", &mlp->layers[i].weight});
      out.push_back({std::string(name) + std::to_string(i) + ".b", &mlp->layers[i].bias});
    }
  }
  if (IsPeft(run->config.mode)) {
    for (size_t i = 0; i < st.delta.m.size(); ++i) {
      out.push_back({"m" + std::to_string(i), &st.delta.m[i]});
    }
    for (size_t i = 0; i < st.delta.v.size(); ++i) {
      out.push_back({"v" + std::to_string(i), &st.delta.v[i]});
    }
    for (auto [name, l] : {std::pair{"coarse_lora", &st.coarse_lora},
                           std::pair{"fine_lora", &st.fine_lora}}) {
      for (size_t i = 0; i < l->layers.size(); ++i) {
        out.push_back({std::string(name) + std::to_string(i) + ".a", &l->layers[i].a});
        out.push_back({std::string(name) + std::to_string(i) + ".b", &l->layers[i].b});
      }
    }
  }
  for (size_t s = 0; s < run->density.size(); ++s) {
    out.push_back({"density" + std::to_string(s), &run->density[s]});
  }
  return out;
}

// Loss graph of one batch. Trainable tensors are bound with gradients.
Var<float> BuildLoss(Tape<float>& tape, const FinetuneRun& run,
                     const Scene& scene, int iteration, StepLosses* parts) {
  const TrainConfig& tc = run.config;
  const FinetuneMode mode = tc.mode;
  const FinetuneState& st = run.state;
  const bool full = mode == FinetuneMode::kFullFt;
  const bool peft = IsPeft(mode);
  const uint64_t key = StreamKey(tc.seed, static_cast<uint64_t>(iteration));

  PlaneVars<float> planes = BindPlanes(tape, st.base.planes, full);
  DeltaVars<float> delta;
  if (peft) {
    delta = BindDelta(tape, st.delta, true);
    planes = ComposeWithDelta(planes, delta);
  }
  const MlpVars<float> coarse = BindMlp<float>(
      tape, st.coarse, peft ? &st.coarse_lora : nullptr, full, peft);
  const MlpVars<float> fine =
      BindMlp<float>(tape, st.fine, peft ? &st.fine_lora : nullptr, full, peft);

  const RayTargets batch = SampleBatch(scene, tc.batch_rays, StreamKey(key, 1));
  RenderConfig rcfg = SceneRenderConfig(scene, run.model_config, tc, true);
  rcfg.seed = StreamKey(key, 2);
  const RenderOutput<float> out = RenderRays<float>(
      tape, batch.rays,
      TriplaneField<float>(planes, coarse, fine, run.model_config.pe_frequencies),
      rcfg);
  const Var<float> rgb = RgbLoss(out, batch.rgb);
  const Var<float> tv = TvLoss(planes, st.base.config);
  Var<float> loss = Add(rgb, MulScalar(tv, static_cast<float>(tc.lambda_tv)));
  parts->rgb = rgb.value().item();
  parts->tv = tv.value().item();
  if (mode == FinetuneMode::kPeftPlus) {
    std::vector<Var<float>> dens;
    for (const auto& d : run.density) dens.push_back(tape.Leaf(&d, true));
    const Var<float> rate = RateLoss(dens, delta.m, st.delta.rank, StreamKey(key, 3));
    parts->rate = rate.value().item();
    if (tc.lambda_rate > 0) {
      loss = Add(loss, MulScalar(rate, static_cast<float>(tc.lambda_rate)));
    }
  }
  parts->total = loss.value().item();
  return loss;
}

void WriteCheckpointFile(const FinetuneRun& run, const std::string& name) {
  const std::string& dir = run.config.checkpoint_dir;
  if (dir.empty()) return;
  std::filesystem::create_directories(dir);
  WriteFileBytes((std::filesystem::path(dir) / name).string(), SaveCheckpoint(run));
}

std::string FormatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void TrainConfig::Validate() const {
  if (iterations < 0) throw ContractError("train: iterations must be >= 0");
  if (batch_rays < 1 || n_coarse < 2 || n_fine < 0) {
    throw ContractError("train: batch and sample counts must be positive");
  }
  if (lambda_tv < 0 || lambda_commit < 0 || lambda_rate < 0) {
    throw ContractError("train: loss weights must be >= 0");
  }
  if (lr.plane < 0 || lr.network < 0 || lr.density < 0) {
    throw ContractError("train: learning rates must be >= 0");
  }
  if (eval_views < 0) throw ContractError("train: eval_views must be >= 0");
  for (int c : checkpoints) {
    if (c < 0) throw ContractError("train: checkpoints must be >= 0");
  }
}

TrainConfig ParseTrainConfig(const std::string& toml_text,
                             const TrainConfig& defaults) {
  toml::table doc;
  try {
    doc = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    throw ContractError(std::string("config: ") + std::string(e.description()));
  }
  const toml::table* t = doc["train"].as_table();
  if (t == nullptr) t = &doc;
  TrainConfig c = defaults;
  auto number = [](const toml::node& n, const std::string& k) {
    if (auto v = n.value<double>()) return *v;
    throw ContractError("config: '" + k + "' must be a number");
  };
  auto integer = [](const toml::node& n, const std::string& k) {
    if (auto v = n.value<int64_t>()) return *v;
    throw ContractError("config: '" + k + "' must be an integer");
  };
  for (const auto& [key_view, node] : *t) {
    const std::string k(key_view.str());
    if (t == &doc && node.is_table()) continue;
    if (k == "mode") {
      auto v = node.value<std::string>();
      if (!v) throw ContractError("config: 'mode' must be a string");
      c.mode = ParseFinetuneMode(*v);
    } else if (k == "iterations") {
      c.iterations = static_cast<int>(integer(node, k));
    } else if (k == "batch_rays") {
      c.batch_rays = static_cast<int>(integer(node, k));
    } else if (k == "n_coarse") {
      c.n_coarse = static_cast<int>(integer(node, k));
    } else if (k == "n_fine") {
      c.n_fine = static_cast<int>(integer(node, k));
    } else if (k == "lr_plane") {
      c.lr.plane = number(node, k);
    } else if (k == "lr_network") {
      c.lr.network = number(node, k);
    } else if (k == "lr_density") {
      c.lr.density = number(node, k);
    } else if (k == "lambda_tv") {
      c.lambda_tv = number(node, k);
    } else if (k == "lambda_commit") {
      c.lambda_commit = number(node, k);
    } else if (k == "lambda_rate") {
      c.lambda_rate = number(node, k);
    } else if (k == "seed") {
      c.seed = static_cast<uint64_t>(integer(node, k));
    } else if (k == "eval_views") {
      c.eval_views = static_cast<int>(integer(node, k));
    } else if (k == "checkpoint_dir") {
      auto v = node.value<std::string>();
      if (!v) throw ContractError("config: 'checkpoint_dir' must be a string");
      c.checkpoint_dir = *v;
    } else if (k == "checkpoints") {
      const toml::array* arr = node.as_array();
      if (arr == nullptr) throw ContractError("config: 'checkpoints' must be an array");
      c.checkpoints.clear();
      for (const auto& e : *arr) c.checkpoints.push_back(static_cast<int>(integer(e, k)));
    } else {
      throw ContractError("config: unknown key '" + k + "'");
    }
  }
  c.Validate();
  return c;
}

std::string MetricsCsv(const std::vector<MetricsRow>& rows) {
  std::ostringstream os;
  os << "iteration,psnr,ssim,ms_ssim,codes_mb,feature_mb,mlp_mb,total_mb\n";
  for (const auto& r : rows) {
    os << r.iteration << ',' << FormatDouble(r.psnr) << ',' << FormatDouble(r.ssim)
       << ',' << FormatDouble(r.ms_ssim) << ',' << FormatDouble(r.codes_mb) << ','
       << FormatDouble(r.feature_mb) << ',' << FormatDouble(r.mlp_mb) << ','
       << FormatDouble(r.total_mb) << '\n';
  }
  return os.str();
}

std::string TimingCsv(const std::vector<MetricsRow>& rows) {
  std::ostringstream os;
  os << "iteration,seconds\n";
  for (const auto& r : rows) os << r.iteration << ',' << FormatDouble(r.seconds) << '\n';
  return os.str();
}

FinetuneRun StartFinetune(const BaseModel& model, const FeedForwardResult& ff,
                          const TrainConfig& config) {
  config.Validate();
  FinetuneRun run;
  run.config = config;
  run.model_config = model.config;
  run.indices = ff.indices;
  run.state.base = ff.planes;
  run.state.coarse = model.coarse;
  run.state.fine = model.fine;
  if (IsPeft(config.mode)) {
    AttachAdapters(&run.state, model.config.delta_rank, model.config.lora_rank,
                   StreamKey(config.seed, 0xADA));
  }
  if (config.mode == FinetuneMode::kPeftPlus) {
    run.density.assign(NumStreams(model.config), InitDensity<float>());
  }
  return run;
}

FinetuneRun StartScratch(const ModelConfig& model_config,
                         const TrainConfig& config) {
  FinetuneRun run;
  run.config = config;
  run.config.mode = FinetuneMode::kFullFt;
  run.config.Validate();
  run.model_config = model_config;
  run.state.base = MultiResTriplanes::Zeros(model_config.triplane);
  std::mt19937_64 rng(StreamKey(config.seed, 0x5C2));
  std::normal_distribution<double> dist(0.0, 0.1);
  for (auto& p : run.state.base.planes) {
    for (float& x : p.data) x = static_cast<float>(dist(rng));
  }
  run.state.coarse = RadianceMlp::Init(model_config.mlp(), rng());
  run.state.fine = RadianceMlp::Init(model_config.mlp(), rng());
  return run;
}

RenderConfig SceneRenderConfig(const Scene& scene, const ModelConfig& mc,
                               const TrainConfig& tc, bool training) {
  RenderConfig r;
  r.n_coarse = tc.n_coarse;
  r.n_fine = tc.n_fine;
  r.near = scene.near;
  r.far = scene.far;
  r.background = scene.background;
  r.pe_frequencies = mc.pe_frequencies;
  r.stratified = training;
  return r;
}

RayTargets SampleBatch(const Scene& scene, int n, uint64_t key) {
  std::vector<int> views = scene.FinetuneViews();
  if (views.empty()) {
    for (size_t i = 0; i < scene.views.size(); ++i) views.push_back(static_cast<int>(i));
  }
  if (views.empty()) throw ContractError("SampleBatch: scene has no views");
  RayTargets out;
  out.rays.origins.reserve(3 * n);
  out.rays.dirs.reserve(3 * n);
  out.rgb.reserve(3 * n);
  for (int j = 0; j < n; ++j) {
    const CameraView& view =
        scene.views[views[static_cast<size_t>(UniformAt(key, 2 * j) * views.size())]];
    if (view.image.empty()) throw ContractError("SampleBatch: view without image");
    const int64_t npix = static_cast<int64_t>(view.width) * view.height;
    const int64_t pixel =
        static_cast<int64_t>(UniformAt(key, 2 * j + 1) * static_cast<double>(npix));
    const RayBatch<float> one = PixelRays<float>(view, std::span(&pixel, 1));
    out.rays.origins.insert(out.rays.origins.end(), one.origins.begin(), one.origins.end());
    out.rays.dirs.insert(out.rays.dirs.end(), one.dirs.begin(), one.dirs.end());
    out.rays.ids.push_back(static_cast<uint64_t>(j));
    for (int c = 0; c < 3; ++c) out.rgb.push_back(view.image.rgb[3 * pixel + c]);
  }
  return out;
}

Var<float> RgbLoss(const RenderOutput<float>& out, std::span<const float> target) {
  Tape<float>& tape = *out.fine.rgb.tape;
  const Shape shape = out.fine.rgb.shape();
  if (NumElements(shape) != static_cast<int64_t>(target.size())) {
    throw ContractError("RgbLoss: target size mismatch");
  }
  const Var<float> t =
      tape.Constant(Tensor<float>(shape, std::vector<float>(target.begin(), target.end())));
  const float inv = 1.0f / static_cast<float>(target.size());
  const Var<float> c = SumReduce(Square(Sub(out.coarse.rgb, t)));
  const Var<float> f = SumReduce(Square(Sub(out.fine.rgb, t)));
  return MulScalar(Add(c, f), inv);
}

Var<float> RateLoss(const std::vector<Var<float>>& density,
                    const std::array<Var<float>, kNumPlanes * kNumScales>& m,
                    int rank, uint64_t noise_key) {
  if (static_cast<int>(density.size()) != kNumPlanes * kNumScales * rank) {
    throw ContractError("RateLoss: one density per stream required");
  }
  Var<float> total;
  int64_t count = 0;
  for (size_t i = 0; i < m.size(); ++i) {
    for (int r = 0; r < rank; ++r) {
      const int s = static_cast<int>(i) * rank + r;
      const Var<float> x = rank == 1 ? m[i] : Slice(m[i], 0, r, 1);
      const Var<float> bits =
          StreamBits(density[s], AddUniformNoise(x, StreamKey(noise_key, s)));
      total = total.valid() ? Add(total, bits) : bits;
      count += x.value().size();
    }
  }
  return MulScalar(total, 1.0f / static_cast<float>(count));
}

StepLosses FinetuneLoss(const FinetuneRun& run, const Scene& scene,
                        int iteration) {
  StepLosses parts;
  Tape<float> tape(false);
  BuildLoss(tape, run, scene, iteration, &parts);
  return parts;
}

StepLosses FinetuneStep(FinetuneRun* run, const Scene& scene) {
  StepLosses parts;
  if (run->config.mode == FinetuneMode::kWoFt) {
    ++run->iteration;
    return parts;
  }
  Tape<float> tape(false);
  const Var<float> loss = BuildLoss(tape, *run, scene, run->iteration, &parts);
  if (!std::isfinite(parts.total)) {
    throw NumericError("training diverged at iteration " +
                       std::to_string(run->iteration) + " (loss " +
                       FormatDouble(parts.total) + ")");
  }
  tape.Backward(loss);
  const std::vector<ParamRef> params = RunParams(run);
  std::vector<Tensor<float>> grads;
  grads.reserve(params.size());
  for (const auto& p : params) grads.push_back(tape.ExternalGrad(p.tensor));
  run->adam.Step(params, grads, run->config.lr);
  ++run->iteration;
  return parts;
}

Representation CurrentRepresentation(const FinetuneRun& run) {
  const FinetuneState& st = run.state;
  switch (run.config.mode) {
    case FinetuneMode::kWoFt:
    case FinetuneMode::kFullFt:
      return Compose(st.base.planes, st.coarse, st.fine, nullptr, nullptr, nullptr);
    case FinetuneMode::kPeft:
      return Compose(st.base.planes, st.coarse, st.fine, &st.delta,
                     &st.coarse_lora, &st.fine_lora);
    case FinetuneMode::kPeftPlus: {
      const DeltaFactors rounded = RoundedDelta(st.delta);
      return Compose(st.base.planes, st.coarse, st.fine, &rounded,
                     &st.coarse_lora, &st.fine_lora);
    }
  }
  throw ContractError("unknown mode");
}

CodecPayload MakePayload(const FinetuneRun& run) {
  if (run.indices.empty()) {
    throw ContractError("MakePayload: run has no feed-forward codes");
  }
  CodecPayload p;
  p.mode = run.config.mode;
  p.config = run.model_config;
  p.indices = run.indices;
  const FinetuneState& st = run.state;
  switch (p.mode) {
    case FinetuneMode::kWoFt:
      break;
    case FinetuneMode::kFullFt:
      p.planes = st.base;
      p.coarse = st.coarse;
      p.fine = st.fine;
      break;
    case FinetuneMode::kPeft:
    case FinetuneMode::kPeftPlus:
      p.delta = p.mode == FinetuneMode::kPeftPlus ? RoundedDelta(st.delta) : st.delta;
      p.coarse_lora = st.coarse_lora;
      p.fine_lora = st.fine_lora;
      for (const auto& d : run.density) p.density.push_back(d.data);
      break;
  }
  return p;
}

Representation BuildRepresentation(const BaseModel& model,
                                   const CodecPayload& payload) {
  if (!(payload.config == model.config)) {
    throw ContractError("BuildRepresentation: payload and model configs differ");
  }
  if (payload.mode == FinetuneMode::kFullFt) {
    return Compose(payload.planes.planes, payload.coarse, payload.fine, nullptr,
                   nullptr, nullptr);
  }
  const MultiResTriplanes base = PlanesFromIndices(model, payload.indices);
  if (payload.mode == FinetuneMode::kWoFt) {
    return Compose(base.planes, model.coarse, model.fine, nullptr, nullptr, nullptr);
  }
  return Compose(base.planes, model.coarse, model.fine, &payload.delta,
                 &payload.coarse_lora, &payload.fine_lora);
}

std::vector<Image> RenderViews(const Representation& rep, const Scene& scene,
                               const std::vector<int>& views,
                               const RenderConfig& cfg) {
  std::vector<Image> out;
  out.reserve(views.size());
  for (int v : views) {
    out.push_back(RenderImage(scene.views.at(v), rep.planes, rep.coarse, rep.fine, cfg).image);
  }
  return out;
}

MetricsRow Evaluate(const FinetuneRun& run, const Scene& scene) {
  std::vector<int> views = scene.EvalViews();
  if (views.empty()) {
    for (size_t i = 0; i < scene.views.size(); ++i) views.push_back(static_cast<int>(i));
  }
  if (run.config.eval_views > 0 &&
      static_cast<int>(views.size()) > run.config.eval_views) {
    views.resize(run.config.eval_views);
  }
  const Representation rep = CurrentRepresentation(run);
  const std::vector<Image> images = RenderViews(
      rep, scene, views, SceneRenderConfig(scene, run.model_config, run.config, false));
  MetricsRow row;
  row.iteration = run.iteration;
  for (size_t i = 0; i < views.size(); ++i) {
    const Image& gt = scene.views[views[i]].image;
    row.psnr += Psnr(images[i], gt);
    row.ssim += Ssim(images[i], gt);
    row.ms_ssim += MsSsim(images[i], gt);
  }
  row.psnr /= views.size();
  row.ssim /= views.size();
  row.ms_ssim /= views.size();
  if (!run.indices.empty()) {
    const SizeReport rep_sizes = ReportSizes(PackBitstream(MakePayload(run)));
    row.codes_mb = rep_sizes.codes / 1e6;
    row.feature_mb = rep_sizes.feature / 1e6;
    row.mlp_mb = rep_sizes.mlp / 1e6;
    row.total_mb = rep_sizes.total / 1e6;
  }
  return row;
}

std::vector<MetricsRow> Optimize(
    FinetuneRun* run, const Scene& scene,
    const std::function<void(const MetricsRow&)>& on_row) {
  const auto start = std::chrono::steady_clock::now();
  const auto& cps = run->config.checkpoints;
  std::vector<MetricsRow> rows;
  auto checkpoint = [&] {
    if (std::find(cps.begin(), cps.end(), run->iteration) == cps.end()) return;
    MetricsRow row = Evaluate(*run, scene);
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rows.push_back(row);
    if (on_row) on_row(row);
    char name[32];
    std::snprintf(name, sizeof(name), "ckpt_%06d.bin", run->iteration);
    WriteCheckpointFile(*run, name);
  };
  if (run->iteration == 0) checkpoint();
  while (run->iteration < run->config.iterations) {
    try {
      FinetuneStep(run, scene);
    } catch (const NumericError&) {
      char name[32];
      std::snprintf(name, sizeof(name), "diverged_%06d.bin", run->iteration);
      WriteCheckpointFile(*run, name);
      throw;
    }
    checkpoint();
  }
  return rows;
}

std::vector<uint8_t> SaveCheckpoint(const FinetuneRun& run) {
  std::vector<uint8_t> out;
  ByteWriter w(&out);
  w.Bytes(kCheckpointMagic);
  w.U32(kCheckpointVersion);
  w.U16(static_cast<uint16_t>(run.config.mode));
  w.U32(static_cast<uint32_t>(run.iteration));
  const auto tensors = StateTensors(const_cast<FinetuneRun*>(&run));
  w.U32(static_cast<uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    w.Str(t.name);
    w.U32(static_cast<uint32_t>(t.tensor->size()));
    w.F32s(t.tensor->data);
  }
  run.adam.Serialize(w);
  return out;
}

void RestoreCheckpoint(std::span<const uint8_t> bytes, FinetuneRun* run) {
  ByteReader r(bytes);
  const auto magic = r.Bytes(4);
  if (!std::equal(magic.begin(), magic.end(), kCheckpointMagic)) {
    throw FormatError("checkpoint: bad magic");
  }
  if (r.U32() != kCheckpointVersion) throw FormatError("checkpoint: bad version");
  if (r.U16() != static_cast<uint16_t>(run->config.mode)) {
    throw FormatError("checkpoint: mode does not match the run");
  }
  const int iteration = static_cast<int>(r.U32());
  const auto tensors = StateTensors(run);
  if (r.U32() != tensors.size()) throw FormatError("checkpoint: tensor count");
  for (const auto& t : tensors) {
    if (r.Str() != t.name || r.U32() != static_cast<uint32_t>(t.tensor->size())) {
      throw FormatError("checkpoint: unexpected tensor, expected " + t.name);
    }
    r.F32s(t.tensor->data);
  }
  Adam adam;
  adam.Deserialize(r);
  if (r.remaining() != 0) throw FormatError("checkpoint: trailing bytes");
  run->adam = adam;
  run->iteration = iteration;
}

void TrainBase(BaseModel* model, const std::vector<Scene>& scenes,
               const BaseTrainConfig& config,
               const std::function<void(const BaseTrainStats&)>& on_step) {
  if (scenes.empty()) throw ContractError("TrainBase: no scenes");
  if (config.iterations < 0 || config.epoch < 1) {
    throw ContractError("TrainBase: bad iteration or epoch count");
  }
  const ModelConfig& mc = model->config;
  TrainConfig tc;
  tc.batch_rays = config.batch_rays;
  tc.n_coarse = config.n_coarse;
  tc.n_fine = config.n_fine;
  tc.Validate();
  std::vector<ParamRef> params;
  for (const auto& p : model->Params()) params.push_back({p.name, p.tensor, ParamGroup::kNetwork});
  LearningRates lr;
  lr.network = config.lr;
  Adam adam;
  DeadCodeMonitor monitor(mc.codebook_size, mc.code_dim);
  std::mt19937_64 rng(StreamKey(config.seed, 0xDEAD));
  if (config.codebook_init_scenes > 0 && config.iterations > 0) {
    const size_t n = std::min(scenes.size(),
                              static_cast<size_t>(config.codebook_init_scenes));
    for (size_t i = 0; i < n; ++i) {
      Tape<float> tape(false);
      const auto enc = BindEncoder(tape, model->encoder, false);
      const auto pooled = EncodeViews(enc, EncoderViewPtrs(scenes[i]));
      const VqVars<float> vq = BindVq(tape, model->vq, false, false);
      const Var<float> codes = Downsample(vq, pooled);
      monitor.Observe(NearestCodes(codes.value(), model->vq.codebook),
                      codes.value(), rng);
    }
    monitor.ReseedAll(&model->vq.codebook, rng);
  }
  for (int it = 0; it < config.iterations; ++it) {
    const uint64_t key = StreamKey(config.seed, static_cast<uint64_t>(it));
    const Scene& scene =
        scenes[static_cast<size_t>(UniformAt(key, 0) * scenes.size())];
    Tape<float> tape(false);
    const auto enc = BindEncoder(tape, model->encoder, true);
    const auto pooled = EncodeViews(enc, EncoderViewPtrs(scene));
    const VqVars<float> vq = BindVq(tape, model->vq, true, true);
    const Var<float> codes = Downsample(vq, pooled);
    const Quantized<float> q = Quantize(codes, vq.codebook);
    // The reconstruction path trains on l; the codebook follows via VqLoss.
    const auto up = Upsample(vq, codes);
    const auto gen = BindGenerator(tape, model->generator, true);
    const PlaneVars<float> planes = GenerateTriplanes(gen, up);
    const MlpVars<float> cv = BindMlp<float>(tape, model->coarse, nullptr, true, false);
    const MlpVars<float> fv = BindMlp<float>(tape, model->fine, nullptr, true, false);
    const RayTargets batch = SampleBatch(scene, config.batch_rays, StreamKey(key, 1));
    RenderConfig rcfg = SceneRenderConfig(scene, mc, tc, true);
    rcfg.seed = StreamKey(key, 2);
    const RenderOutput<float> out = RenderRays<float>(
        tape, batch.rays, TriplaneField<float>(planes, cv, fv, mc.pe_frequencies), rcfg);
    const Var<float> rgb = RgbLoss(out, batch.rgb);
    const Var<float> vql =
        VqLoss(codes, q.codes, static_cast<float>(config.lambda_commit));
    const Var<float> tv = TvLoss(planes, mc.triplane);
    const Var<float> loss =
        Add(Add(rgb, vql), MulScalar(tv, static_cast<float>(config.lambda_tv)));
    BaseTrainStats stats;
    stats.iteration = it;
    stats.losses.total = loss.value().item();
    stats.losses.rgb = rgb.value().item();
    stats.losses.vq = vql.value().item();
    stats.losses.tv = tv.value().item();
    if (!std::isfinite(stats.losses.total)) {
      throw NumericError("base training diverged at iteration " + std::to_string(it));
    }
    tape.Backward(loss);
    std::vector<Tensor<float>> grads;
    grads.reserve(params.size());
    for (const auto& p : params) grads.push_back(tape.ExternalGrad(p.tensor));
    adam.Step(params, grads, lr);
    monitor.Observe(q.indices, codes.value(), rng);
    if ((it + 1) % config.epoch == 0) {
      stats.reseeded = monitor.EndEpoch(&model->vq.codebook, rng);
    }
    if (on_step) on_step(stats);
  }
}

}  // namespace nerfcodec
