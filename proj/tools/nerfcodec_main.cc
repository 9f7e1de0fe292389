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

// Command-line front end: synth, train-base, encode, decode, render, bench.
//
// Failures print one JSON object on stderr. Usage errors exit with 2, every
// other failure with 1.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "nerfcodec/bitstream.h"
#include "nerfcodec/bytes.h"
#include "nerfcodec/model.h"
#include "nerfcodec/scene.h"
#include "nerfcodec/train.h"
#include "nerfcodec/triplane.h"

namespace nerfcodec {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr char kMlpMagic[4] = {'N', 'C', 'M', 'P'};

void PrintError(const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << std::endl;
}

void Log(const json& line) { std::cerr << line.dump() << std::endl; }

std::vector<uint8_t> ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void WriteFile(const std::string& path, std::span<const uint8_t> bytes) {
  if (fs::path(path).has_parent_path()) {
    fs::create_directories(fs::path(path).parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("cannot write " + path);
}

void WriteText(const std::string& path, const std::string& text) {
  WriteFile(path, std::span<const uint8_t>(
                      reinterpret_cast<const uint8_t*>(text.data()), text.size()));
}

ModelConfig ProfileConfig(const std::string& name) {
  if (name == "desk") return ModelConfig::Desk();
  if (name == "default") return ModelConfig::Default();
  throw ContractError("unknown profile '" + name + "' (desk, default)");
}

// Coarse and fine MLP weights of a decoded representation.
void WriteMlps(const std::string& path, const Representation& rep) {
  std::vector<uint8_t> bytes(kMlpMagic, kMlpMagic + 4);
  ByteWriter w(&bytes);
  for (const RadianceMlp* mlp : {&rep.coarse, &rep.fine}) {
    w.U32(static_cast<uint32_t>(mlp->layers.size()));
    for (const auto& layer : mlp->layers) {
      w.U32(static_cast<uint32_t>(layer.weight.dim(0)));
      w.U32(static_cast<uint32_t>(layer.weight.dim(1)));
      w.F32s(layer.weight.data);
      w.F32s(layer.bias.data);
    }
  }
  WriteFile(path, bytes);
}

void ReadMlps(const std::string& path, const MlpConfig& config,
              Representation* rep) {
  const std::vector<uint8_t> bytes = ReadFile(path);
  if (bytes.size() < 4 || !std::equal(kMlpMagic, kMlpMagic + 4, bytes.begin())) {
    throw FormatError(path + ": not an MLP dump");
  }
  ByteReader r(std::span<const uint8_t>(bytes).subspan(4));
  for (RadianceMlp* mlp : {&rep->coarse, &rep->fine}) {
    *mlp = RadianceMlp::Zeros(config);
    if (r.U32() != mlp->layers.size()) throw FormatError(path + ": layer count");
    for (auto& layer : mlp->layers) {
      if (r.U32() != layer.weight.dim(0) || r.U32() != layer.weight.dim(1)) {
        throw FormatError(path + ": layer shape");
      }
      for (float& v : layer.weight.data) v = r.F32();
      for (float& v : layer.bias.data) v = r.F32();
    }
  }
}

std::string PngName(const CameraView& view, size_t index) {
  std::string stem = fs::path(view.name).stem().string();
  return (stem.empty() ? "view_" + std::to_string(index) : stem) + ".png";
}

// Flags shared by encode and bench.
struct TrainFlags {
  std::string config_path;
  std::optional<int> iters;
  std::optional<double> lambda_rate;
  std::optional<uint64_t> seed;
  std::optional<int> eval_views;

  void Add(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "TOML file with a [train] table")
        ->check(CLI::ExistingFile);
    cmd->add_option("--iters", iters, "Finetuning iterations")->check(CLI::NonNegativeNumber);
    cmd->add_option("--lambda-rate", lambda_rate, "Rate weight for peft++")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--seed", seed, "Training seed");
    cmd->add_option("--eval-views", eval_views, "Eval views rendered for metrics (0: all)")
        ->check(CLI::NonNegativeNumber);
  }

  TrainConfig Resolve(FinetuneMode mode) const {
    TrainConfig c;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      std::stringstream text;
      text << in.rdbuf();
      c = ParseTrainConfig(text.str(), c);
    }
    c.mode = mode;
    if (iters) c.iterations = *iters;
    if (lambda_rate) c.lambda_rate = *lambda_rate;
    if (seed) c.seed = *seed;
    if (eval_views) c.eval_views = *eval_views;
    // Checkpoints past the last iteration are never reached.
    std::vector<int> kept;
    for (int k : c.checkpoints) {
      if (k <= c.iterations) kept.push_back(k);
    }
    if (kept.empty() || kept.back() != c.iterations) kept.push_back(c.iterations);
    c.checkpoints = kept;
    c.Validate();
    return c;
  }
};

int Synth(const std::string& spec_path, std::optional<uint64_t> seed,
          std::optional<int> views, std::optional<int> size,
          const std::string& out) {
  SynthSpec spec = spec_path.empty()
                       ? RandomSynthSpec(seed.value_or(0), views.value_or(20),
                                         size.value_or(32))
                       : LoadSynthSpec(spec_path);
  if (views) spec.n_views = *views;
  if (size) spec.image_size = *size;
  if (seed) spec.seed = *seed;
  const Scene scene = SynthScene(spec);
  SaveScene(scene, out);
  std::cout << json{{"scene", out}, {"views", scene.views.size()}}.dump() << std::endl;
  return 0;
}

int TrainBaseCommand(const std::string& profile, int scenes, int views, int size,
                     const std::vector<std::string>& scene_dirs,
                     const BaseTrainConfig& config, uint64_t init_seed,
                     int log_every, const std::string& out) {
  const ModelConfig mc = ProfileConfig(profile);
  std::vector<Scene> data;
  for (const auto& dir : scene_dirs) data.push_back(LoadScene(dir));
  for (int i = 0; i < scenes; ++i) {
    data.push_back(SynthScene(RandomSynthSpec(1000 + i, views, size)));
  }
  if (data.empty()) throw ContractError("train-base needs --scenes or --scene-dir");
  BaseModel model = BaseModel::Init(mc, init_seed);
  double acc = 0;
  int n = 0;
  TrainBase(&model, data, config, [&](const BaseTrainStats& s) {
    acc += s.losses.rgb;
    ++n;
    if ((s.iteration + 1) % log_every == 0 || s.iteration + 1 == config.iterations) {
      Log({{"iteration", s.iteration + 1}, {"rgb", acc / n}, {"vq", s.losses.vq},
           {"tv", s.losses.tv}});
      acc = 0;
      n = 0;
    }
  });
  WriteModel(out, model);
  std::cout << json{{"model", out}, {"scenes", data.size()},
                    {"iterations", config.iterations}}.dump()
            << std::endl;
  return 0;
}

json SizesJson(const SizeReport& r, int64_t file_size) {
  return {{"codes_bytes", r.codes},     {"feature_bytes", r.feature},
          {"mlp_bytes", r.mlp},         {"total_bytes", r.total},
          {"file_bytes", file_size}};
}

int Encode(const std::string& model_path, const std::string& scene_dir,
           const std::string& mode_name, const TrainFlags& flags,
           const std::string& out, const std::string& metrics_path) {
  const BaseModel model = ReadModel(model_path);
  const Scene scene = LoadScene(scene_dir);
  const TrainConfig tc = flags.Resolve(ParseFinetuneMode(mode_name));
  FinetuneRun run = StartFinetune(model, EncodeScene(model, scene), tc);
  const std::vector<MetricsRow> rows = Optimize(&run, scene, [](const MetricsRow& r) {
    Log({{"iteration", r.iteration}, {"psnr", r.psnr}, {"ssim", r.ssim}});
  });
  const std::vector<uint8_t> bytes = PackBitstream(MakePayload(run));
  WriteFile(out, bytes);
  if (!metrics_path.empty()) WriteText(metrics_path, MetricsCsv(rows));
  std::cout << SizesJson(ReportSizes(bytes),
                         static_cast<int64_t>(fs::file_size(out)))
                   .dump()
            << std::endl;
  return 0;
}

int Decode(const std::string& model_path, const std::string& in,
           const std::string& out_dir) {
  const BaseModel model = ReadModel(model_path);
  const CodecPayload payload = UnpackBitstream(ReadFile(in), model.config);
  const Representation rep = BuildRepresentation(model, payload);
  fs::create_directories(out_dir);
  MultiResTriplanes tri = MultiResTriplanes::Zeros(model.config.triplane);
  tri.planes = rep.planes;
  WriteTriplanes((fs::path(out_dir) / "triplanes.bin").string(), tri);
  WriteMlps((fs::path(out_dir) / "mlp.bin").string(), rep);
  std::cout << json{{"mode", FinetuneModeName(payload.mode)}, {"out", out_dir}}.dump()
            << std::endl;
  return 0;
}

int Render(const std::string& model_path, const std::string& in,
           const std::string& decoded, const std::string& poses,
           const std::string& out_dir) {
  const BaseModel model = ReadModel(model_path);
  Representation rep;
  if (!decoded.empty()) {
    const MultiResTriplanes tri =
        ReadTriplanes((fs::path(decoded) / "triplanes.bin").string());
    if (!(tri.config == model.config.triplane)) {
      throw FormatError("decoded planes do not match the model configuration");
    }
    rep.planes = tri.planes;
    ReadMlps((fs::path(decoded) / "mlp.bin").string(), model.config.mlp(), &rep);
  } else {
    rep = BuildRepresentation(model,
                              UnpackBitstream(ReadFile(in), model.config));
  }
  Scene scene = LoadPoses(poses);
  std::vector<int> views(scene.views.size());
  for (size_t i = 0; i < views.size(); ++i) views[i] = static_cast<int>(i);
  const RenderConfig rc = SceneRenderConfig(scene, model.config, TrainConfig{}, false);
  const std::vector<Image> images = RenderViews(rep, scene, views, rc);
  fs::create_directories(out_dir);
  for (size_t i = 0; i < images.size(); ++i) {
    WritePng((fs::path(out_dir) / PngName(scene.views[i], i)).string(), images[i]);
  }
  std::cout << json{{"rendered", images.size()}, {"out", out_dir}}.dump() << std::endl;
  return 0;
}

int Bench(const std::string& model_path, const std::string& scene_dir,
          const std::vector<std::string>& modes, bool scratch,
          const TrainFlags& flags, const std::string& out_dir) {
  const BaseModel model = ReadModel(model_path);
  const Scene scene = LoadScene(scene_dir);
  const FeedForwardResult ff = EncodeScene(model, scene);
  fs::create_directories(out_dir);
  std::string csv, timing;
  std::vector<std::string> labels;
  std::vector<SizeReport> sizes;
  auto append = [](std::string* dst, const std::string& label,
                   const std::string& table) {
    std::istringstream lines(table);
    std::string line;
    bool header = true;
    while (std::getline(lines, line)) {
      if (header) {
        if (dst->empty()) *dst = "run," + line + "\n";
        header = false;
        continue;
      }
      *dst += label + "," + line + "\n";
    }
  };
  for (const auto& name : modes) {
    const TrainConfig tc = flags.Resolve(ParseFinetuneMode(name));
    FinetuneRun run = StartFinetune(model, ff, tc);
    const auto rows = Optimize(&run, scene);
    append(&csv, name, MetricsCsv(rows));
    append(&timing, name, TimingCsv(rows));
    labels.push_back(name);
    sizes.push_back(ReportSizes(PackBitstream(MakePayload(run))));
    Log({{"run", name}, {"psnr", rows.back().psnr}});
  }
  if (scratch) {
    const TrainConfig tc = flags.Resolve(FinetuneMode::kFullFt);
    FinetuneRun run = StartScratch(model.config, tc);
    const auto rows = Optimize(&run, scene);
    append(&csv, "scratch", MetricsCsv(rows));
    append(&timing, "scratch", TimingCsv(rows));
    Log({{"run", "scratch"}, {"psnr", rows.back().psnr}});
  }
  const std::string table = SizeTableMarkdown(labels, sizes);
  WriteText((fs::path(out_dir) / "metrics.csv").string(), csv);
  WriteText((fs::path(out_dir) / "timing.csv").string(), timing);
  WriteText((fs::path(out_dir) / "sizes.md").string(), table);
  std::cout << csv << "\n" << table;
  return 0;
}

int Main(int argc, char** argv) {
  CLI::App app{"Neural radiance field codec"};
  app.require_subcommand(1);

  std::string out, model_path, scene_dir, in, spec_path, poses, decoded,
      profile = "desk", mode = "peft", metrics_path;
  std::optional<uint64_t> seed;
  std::optional<int> views, size;

  auto* synth = app.add_subcommand("synth", "Render a synthetic scene");
  synth->add_option("--spec", spec_path, "TOML or JSON scene spec")->check(CLI::ExistingFile);
  synth->add_option("--seed", seed, "Random scene seed (without --spec)");
  synth->add_option("--views", views, "Number of views")->check(CLI::PositiveNumber);
  synth->add_option("--size", size, "Image side in pixels")->check(CLI::PositiveNumber);
  synth->add_option("--out", out, "Output scene directory")->required();

  BaseTrainConfig base;
  int base_scenes = 16, base_views = 20, base_size = 32, log_every = 100;
  uint64_t init_seed = 1;
  std::vector<std::string> scene_dirs;
  auto* train = app.add_subcommand("train-base", "Train the shared base model");
  train->add_option("--profile", profile, "desk or default");
  train->add_option("--scenes", base_scenes, "Random synthetic training scenes")
      ->check(CLI::NonNegativeNumber);
  train->add_option("--scene-dir", scene_dirs, "Additional scene directories");
  train->add_option("--views", base_views, "Views per synthetic scene")->check(CLI::PositiveNumber);
  train->add_option("--size", base_size, "Synthetic image side")->check(CLI::PositiveNumber);
  train->add_option("--iters", base.iterations, "Iterations")->check(CLI::NonNegativeNumber);
  train->add_option("--lr", base.lr, "Learning rate")->check(CLI::NonNegativeNumber);
  train->add_option("--seed", base.seed, "Training seed");
  train->add_option("--init-seed", init_seed, "Weight initialisation seed");
  train->add_option("--log-every", log_every, "Progress interval")->check(CLI::PositiveNumber);
  train->add_option("--out", out, "Output model archive")->required();

  TrainFlags flags;
  auto* encode = app.add_subcommand("encode", "Compress a scene into a bitstream");
  encode->add_option("--model", model_path, "Base model archive")->required()->check(CLI::ExistingFile);
  encode->add_option("--scene", scene_dir, "Scene directory")->required()->check(CLI::ExistingDirectory);
  encode->add_option("--mode", mode, "wo-ft, full-ft, peft or peft++")
      ->check(CLI::IsMember({"wo-ft", "full-ft", "peft", "peft++"}));
  flags.Add(encode);
  encode->add_option("--metrics", metrics_path, "Write checkpoint metrics CSV here");
  encode->add_option("--out", out, "Output bitstream")->required();

  auto* decode = app.add_subcommand("decode", "Rebuild planes and MLPs from a bitstream");
  decode->add_option("--model", model_path, "Base model archive")->required()->check(CLI::ExistingFile);
  decode->add_option("--in", in, "Bitstream")->required()->check(CLI::ExistingFile);
  decode->add_option("--out", out, "Output directory")->required();

  auto* render = app.add_subcommand("render", "Render views of a compressed scene");
  render->add_option("--model", model_path, "Base model archive")->required()->check(CLI::ExistingFile);
  auto* render_in = render->add_option("--in", in, "Bitstream")->check(CLI::ExistingFile);
  auto* render_dec = render->add_option("--decoded", decoded, "Output directory of decode")
                         ->check(CLI::ExistingDirectory);
  render_in->excludes(render_dec);
  render->add_option("--poses", poses, "Pose manifest (JSON)")->required()->check(CLI::ExistingFile);
  render->add_option("--out", out, "Output directory for PNGs")->required();

  std::vector<std::string> modes = {"wo-ft", "full-ft", "peft", "peft++"};
  bool scratch = false;
  auto* bench = app.add_subcommand("bench", "Metrics and sizes across modes");
  bench->add_option("--model", model_path, "Base model archive")->required()->check(CLI::ExistingFile);
  bench->add_option("--scene", scene_dir, "Scene directory")->required()->check(CLI::ExistingDirectory);
  bench->add_option("--modes", modes, "Modes to run")
      ->delimiter(',')
      ->check(CLI::IsMember({"wo-ft", "full-ft", "peft", "peft++"}));
  bench->add_flag("--scratch", scratch, "Also train the from-scratch baseline");
  flags.Add(bench);
  bench->add_option("--out", out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    PrintError("usage", e.what());
    return 2;
  }

  try {
    if (*synth) return Synth(spec_path, seed, views, size, out);
    if (*train) {
      return TrainBaseCommand(profile, base_scenes, base_views, base_size,
                              scene_dirs, base, init_seed, log_every, out);
    }
    if (*encode) return Encode(model_path, scene_dir, mode, flags, out, metrics_path);
    if (*decode) return Decode(model_path, in, out);
    if (*render) {
      if (in.empty() == decoded.empty()) {
        PrintError("usage", "render needs exactly one of --in or --decoded");
        return 2;
      }
      return Render(model_path, in, decoded, poses, out);
    }
    if (*bench) return Bench(model_path, scene_dir, modes, scratch, flags, out);
  } catch (const ContractError& e) {
    PrintError("invalid_argument", e.what());
  } catch (const FormatError& e) {
    PrintError("format", e.what());
  } catch (const NumericError& e) {
    PrintError("numeric", e.what());
  } catch (const std::exception& e) {
    PrintError("internal", e.what());
  }
  return 1;
}

}  // namespace
}  // namespace nerfcodec

int main(int argc, char** argv) { return nerfcodec::Main(argc, argv); }
