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

// Base-model training, per-scene finetuning in the four operating modes, the
// from-scratch baseline, evaluation and checkpoints.
//
// Randomness is keyed by (seed, iteration), so a run resumed from a
// checkpoint continues exactly as an uninterrupted one. Training steps run on
// one thread; evaluation renders in parallel with per-pixel outputs.

#ifndef NERFCODEC_TRAIN_H_
#define NERFCODEC_TRAIN_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nerfcodec/bitstream.h"
#include "nerfcodec/model.h"
#include "nerfcodec/optim.h"
#include "nerfcodec/peft.h"
#include "nerfcodec/renderer.h"
#include "nerfcodec/scene.h"

namespace nerfcodec {

struct TrainConfig {
  FinetuneMode mode = FinetuneMode::kPeft;
  int iterations = 500;
  int batch_rays = 64;
  int n_coarse = 32;
  int n_fine = 32;
  LearningRates lr;
  double lambda_tv = 1e-4;
  double lambda_commit = 0.25;
  double lambda_rate = 1e-3;
  uint64_t seed = 0;
  // Iterations at which metrics are taken and checkpoints written.
  std::vector<int> checkpoints = {0, 100, 500, 1000, 2000};
  // Number of eval views rendered for metrics; 0 renders all of them.
  int eval_views = 0;
  // Checkpoint files are written here when non-empty.
  std::string checkpoint_dir;

  void Validate() const;
};

// Keys of a [train] TOML table: mode, iterations, batch_rays, n_coarse,
// n_fine, lr_plane, lr_network, lr_density, lambda_tv, lambda_commit,
// lambda_rate, seed, checkpoints, eval_views, checkpoint_dir. Missing keys
// keep the values of `defaults`; unknown keys are errors.
TrainConfig ParseTrainConfig(const std::string& toml_text,
                             const TrainConfig& defaults = {});

struct MetricsRow {
  int iteration = 0;
  double psnr = 0;
  double ssim = 0;
  double ms_ssim = 0;
  double codes_mb = 0;
  double feature_mb = 0;
  double mlp_mb = 0;
  double total_mb = 0;
  double seconds = 0;  // wall clock since the start of the run
};

// CSV of the deterministic columns (everything except seconds).
std::string MetricsCsv(const std::vector<MetricsRow>& rows);
// iteration,seconds
std::string TimingCsv(const std::vector<MetricsRow>& rows);

// Planes and MLPs as rendered.
struct Representation {
  PlaneSet<float> planes;
  RadianceMlp coarse;
  RadianceMlp fine;
};

struct FinetuneRun {
  TrainConfig config;
  ModelConfig model_config;
  std::vector<int32_t> indices;  // feed-forward codes; empty for scratch
  FinetuneState state;
  std::vector<Tensor<float>> density;  // peft++: one per stream
  Adam adam;
  int iteration = 0;
};

// Finetuning from the feed-forward result of `model` on a scene.
FinetuneRun StartFinetune(const BaseModel& model, const FeedForwardResult& ff,
                          const TrainConfig& config);

// The baseline: random planes (N(0, 0.1^2)) and He-initialised MLPs of the
// same architecture, all trained (full-ft).
FinetuneRun StartScratch(const ModelConfig& model_config,
                         const TrainConfig& config);

// Rendering settings for a scene; training draws jittered samples.
RenderConfig SceneRenderConfig(const Scene& scene, const ModelConfig& mc,
                               const TrainConfig& tc, bool training);

// Rays and target colors of one training batch drawn from the finetune views.
struct RayTargets {
  RayBatch<float> rays;
  std::vector<float> rgb;  // N x 3
};
RayTargets SampleBatch(const Scene& scene, int n, uint64_t key);

// Mean squared error of the coarse pass plus that of the fine pass.
Var<float> RgbLoss(const RenderOutput<float>& out, std::span<const float> target);

// Bits of the noisy matrices under the stream densities, per matrix element.
Var<float> RateLoss(const std::vector<Var<float>>& density,
                    const std::array<Var<float>, kNumPlanes * kNumScales>& m,
                    int rank, uint64_t noise_key);

struct StepLosses {
  double total = 0;
  double rgb = 0;
  double tv = 0;
  double rate = 0;
  double vq = 0;
};

// One optimizer step. wo-ft only advances the iteration counter. Throws
// NumericError when the loss is not finite.
StepLosses FinetuneStep(FinetuneRun* run, const Scene& scene);

// Loss of the batch for `iteration` without updating anything.
StepLosses FinetuneLoss(const FinetuneRun& run, const Scene& scene,
                        int iteration);

// What the receiver would render; peft++ uses the rounded matrices.
Representation CurrentRepresentation(const FinetuneRun& run);

// Everything needed to rebuild CurrentRepresentation from `model`.
CodecPayload MakePayload(const FinetuneRun& run);

// Receiver side.
Representation BuildRepresentation(const BaseModel& model,
                                   const CodecPayload& payload);

std::vector<Image> RenderViews(const Representation& rep, const Scene& scene,
                               const std::vector<int>& views,
                               const RenderConfig& cfg);

// Metrics over the eval views (sizes are zero without feed-forward codes).
MetricsRow Evaluate(const FinetuneRun& run, const Scene& scene);

// Steps to config.iterations, evaluating at every checkpoint in
// [run->iteration, config.iterations]. On divergence a diagnostic checkpoint
// is written (when a checkpoint directory is set) and NumericError rethrown.
std::vector<MetricsRow> Optimize(
    FinetuneRun* run, const Scene& scene,
    const std::function<void(const MetricsRow&)>& on_row = {});

// Trainable state, densities, optimizer moments and the iteration.
std::vector<uint8_t> SaveCheckpoint(const FinetuneRun& run);
// Overwrites the state of a run created the same way as the saved one.
void RestoreCheckpoint(std::span<const uint8_t> bytes, FinetuneRun* run);

struct BaseTrainConfig {
  int iterations = 3000;
  int batch_rays = 64;
  int n_coarse = 32;
  int n_fine = 32;
  double lr = 1e-3;
  double lambda_tv = 1e-4;
  double lambda_commit = 0.25;
  uint64_t seed = 0;
  // Iterations per dead-code epoch.
  int epoch = 50;
  // Scenes whose code vectors seed the codebook before the first step; 0
  // keeps the random codebook.
  int codebook_init_scenes = 8;
};

struct BaseTrainStats {
  int iteration = 0;
  StepLosses losses;
  int reseeded = 0;  // codebook rows re-seeded at this step
};

// Trains every module of `model` end to end on `scenes`.
void TrainBase(BaseModel* model, const std::vector<Scene>& scenes,
               const BaseTrainConfig& config,
               const std::function<void(const BaseTrainStats&)>& on_step = {});

}  // namespace nerfcodec

#endif  // NERFCODEC_TRAIN_H_
