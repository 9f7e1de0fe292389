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

#include "nerfcodec/scene.h"

#include <png.h>

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <toml.hpp>

#include "nerfcodec/parallel.h"
#include "nerfcodec/tensor.h"

namespace nerfcodec {

namespace fs = std::filesystem;
using json = nlohmann::json;

Image ReadPng(const std::string& path) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw FormatError("cannot read PNG " + path + ": " + img.message);
  }
  const bool has_alpha = (img.format & PNG_FORMAT_FLAG_ALPHA) != 0;
  img.format = has_alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB;
  const int channels = has_alpha ? 4 : 3;
  std::vector<uint8_t> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    throw FormatError("corrupt PNG " + path + ": " + img.message);
  }
  Image out(static_cast<int>(img.height), static_cast<int>(img.width));
  const int64_t n = static_cast<int64_t>(out.height) * out.width;
  if (has_alpha) out.alpha.resize(n);
  for (int64_t i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) out.rgb[3 * i + c] = buf[channels * i + c] / 255.0f;
    if (has_alpha) out.alpha[i] = buf[channels * i + 3] / 255.0f;
  }
  return out;
}

void WritePng(const std::string& path, const Image& image) {
  const bool has_alpha = !image.alpha.empty();
  const int channels = has_alpha ? 4 : 3;
  const int64_t n = static_cast<int64_t>(image.height) * image.width;
  std::vector<uint8_t> buf(channels * n);
  auto to8 = [](float v) {
    return static_cast<uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
  };
  for (int64_t i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) buf[channels * i + c] = to8(image.rgb[3 * i + c]);
    if (has_alpha) buf[channels * i + 3] = to8(image.alpha[i]);
  }
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = image.width;
  img.height = image.height;
  img.format = has_alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.c_str(), 0, buf.data(), 0, nullptr)) {
    throw FormatError("cannot write PNG " + path + ": " + img.message);
  }
}

void ValidateView(const CameraView& view) {
  const Eigen::Matrix3d r = view.pose.block<3, 3>(0, 0);
  const double err = (r.transpose() * r - Eigen::Matrix3d::Identity())
                         .cwiseAbs()
                         .maxCoeff();
  if (!(err <= 1e-5) || !(r.determinant() > 0)) {
    throw ContractError("view '" + view.name +
                        "': rotation is not orthonormal");
  }
  const Intrinsics& k = view.intrinsics;
  if (!(k.fx > 0) || !(k.fy > 0)) {
    throw ContractError("view '" + view.name + "': focal length must be > 0");
  }
  if (view.width <= 0 || view.height <= 0) {
    throw ContractError("view '" + view.name + "': empty image size");
  }
  if (!(k.cx >= 0 && k.cx < view.width && k.cy >= 0 && k.cy < view.height)) {
    throw ContractError("view '" + view.name +
                        "': principal point outside the image");
  }
  if (!view.image.empty() &&
      (view.image.width != view.width || view.image.height != view.height)) {
    throw ContractError("view '" + view.name +
                        "': image size does not match the camera");
  }
}

Projection Project(const Eigen::Vector3d& point, const CameraView& view) {
  const Eigen::Matrix3d r = view.pose.block<3, 3>(0, 0);
  if (!(std::abs(r.determinant()) > 1e-9)) {
    throw ContractError("project: degenerate pose");
  }
  const Eigen::Vector3d pc = r.transpose() * (point - view.origin());
  Projection out;
  out.depth = -pc.z();
  if (!(out.depth > 0)) return out;
  const Intrinsics& k = view.intrinsics;
  out.u = k.cx + k.fx * pc.x() / out.depth;
  out.v = k.cy - k.fy * pc.y() / out.depth;
  out.in_frustum =
      out.u >= 0 && out.u < view.width && out.v >= 0 && out.v < view.height;
  return out;
}

Eigen::Vector3d BackProject(double u, double v, double depth,
                            const CameraView& view) {
  const Intrinsics& k = view.intrinsics;
  const Eigen::Vector3d pc((u - k.cx) / k.fx * depth,
                           -(v - k.cy) / k.fy * depth, -depth);
  return view.pose.block<3, 3>(0, 0) * pc + view.origin();
}

Ray PixelRay(const CameraView& view, double u, double v, double near,
             double far) {
  const Intrinsics& k = view.intrinsics;
  const Eigen::Vector3d dc((u - k.cx) / k.fx, -(v - k.cy) / k.fy, -1.0);
  Ray ray;
  ray.origin = view.origin();
  ray.direction = (view.pose.block<3, 3>(0, 0) * dc).normalized();
  ray.near = near;
  ray.far = far;
  return ray;
}

std::vector<Ray> GenerateRays(const CameraView& view, double near,
                              double far) {
  std::vector<Ray> rays;
  rays.reserve(static_cast<size_t>(view.width) * view.height);
  for (int y = 0; y < view.height; ++y) {
    for (int x = 0; x < view.width; ++x) {
      rays.push_back(PixelRay(view, x + 0.5, y + 0.5, near, far));
    }
  }
  return rays;
}

const char* ViewRoleName(ViewRole role) {
  switch (role) {
    case ViewRole::kEncoder:
      return "encoder";
    case ViewRole::kFinetune:
      return "finetune";
    case ViewRole::kEval:
      return "eval";
  }
  return "?";
}

ViewRole ParseViewRole(const std::string& name) {
  if (name == "encoder") return ViewRole::kEncoder;
  if (name == "finetune") return ViewRole::kFinetune;
  if (name == "eval") return ViewRole::kEval;
  throw FormatError("unknown view role '" + name + "'");
}

ViewRole DefaultRole(int index) {
  const int m = index % 25;
  if (m < 8) return ViewRole::kEncoder;
  if (m < 12) return ViewRole::kFinetune;
  return ViewRole::kEval;
}

namespace {

std::vector<int> ViewsWithRole(const Scene& s, bool encoder, bool finetune,
                               bool eval) {
  std::vector<int> out;
  for (size_t i = 0; i < s.roles.size(); ++i) {
    const ViewRole r = s.roles[i];
    if ((r == ViewRole::kEncoder && encoder) ||
        (r == ViewRole::kFinetune && finetune) ||
        (r == ViewRole::kEval && eval)) {
      out.push_back(static_cast<int>(i));
    }
  }
  return out;
}

}  // namespace

std::vector<int> Scene::EncoderViews() const {
  return ViewsWithRole(*this, true, false, false);
}
std::vector<int> Scene::FinetuneViews() const {
  return ViewsWithRole(*this, true, true, false);
}
std::vector<int> Scene::EvalViews() const {
  return ViewsWithRole(*this, false, false, true);
}

void DeriveNearFar(Scene* scene) {
  const double r = std::sqrt(3.0) * kSceneBound;
  double dmin = std::numeric_limits<double>::infinity(), dmax = 0;
  for (const auto& v : scene->views) {
    const double d = v.origin().norm();
    dmin = std::min(dmin, d);
    dmax = std::max(dmax, d);
  }
  scene->near = std::max(0.05, dmin - r);
  scene->far = dmax + r;
}

namespace {

json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("malformed JSON in " + path + ": " + e.what());
  }
}

Scene ParseManifest(const json& doc, const fs::path& base, bool load_images) {
  if (!doc.contains("frames") || !doc["frames"].is_array()) {
    throw FormatError("manifest has no frame list");
  }
  const json& frames = doc["frames"];
  if (frames.empty()) throw FormatError("manifest frame list is empty");
  Scene scene;
  std::set<std::string> names;
  try {
    for (size_t i = 0; i < frames.size(); ++i) {
      const json& f = frames[i];
      CameraView view;
      view.name = f.at("file_path").get<std::string>();
      if (!names.insert(view.name).second) {
        throw FormatError("duplicate frame '" + view.name + "'");
      }
      const json& m = f.at("transform_matrix");
      if (m.size() != 4) throw FormatError("transform_matrix must be 4x4");
      for (int r = 0; r < 4; ++r) {
        if (m[r].size() != 4) throw FormatError("transform_matrix must be 4x4");
        for (int c = 0; c < 4; ++c) view.pose(r, c) = m[r][c].get<double>();
      }
      if (load_images) {
        fs::path p = base / view.name;
        if (!p.has_extension()) p += ".png";
        view.image = ReadPng(p.string());
        view.width = view.image.width;
        view.height = view.image.height;
      }
      if (f.contains("w")) view.width = f["w"].get<int>();
      if (f.contains("h")) view.height = f["h"].get<int>();
      if (!load_images) {
        if (view.width <= 0) view.width = doc.value("w", 0);
        if (view.height <= 0) view.height = doc.value("h", 0);
      }
      if (f.contains("fx")) {
        view.intrinsics = {f.at("fx").get<double>(), f.at("fy").get<double>(),
                           f.at("cx").get<double>(), f.at("cy").get<double>()};
      } else if (doc.contains("camera_angle_x")) {
        const double fx = 0.5 * view.width /
                          std::tan(0.5 * doc["camera_angle_x"].get<double>());
        view.intrinsics = {fx, fx, 0.5 * view.width, 0.5 * view.height};
      } else {
        throw FormatError("frame '" + view.name + "' has no intrinsics");
      }
      ValidateView(view);
      scene.roles.push_back(f.contains("role")
                                ? ParseViewRole(f["role"].get<std::string>())
                                : DefaultRole(static_cast<int>(i)));
      scene.views.push_back(std::move(view));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what());
  } catch (const ContractError& e) {
    throw FormatError(e.what());
  }
  if (doc.contains("background")) {
    for (int c = 0; c < 3; ++c) {
      scene.background[c] = doc["background"][c].get<float>();
    }
  }
  DeriveNearFar(&scene);
  if (doc.contains("near")) scene.near = doc["near"].get<double>();
  if (doc.contains("far")) scene.far = doc["far"].get<double>();
  if (!(scene.near < scene.far)) throw FormatError("near must be < far");
  return scene;
}

}  // namespace

Scene LoadScene(const std::string& dir) {
  const fs::path base(dir);
  return ParseManifest(ReadJsonFile((base / "transforms.json").string()), base,
                       true);
}

Scene LoadPoses(const std::string& manifest_path) {
  const fs::path p(manifest_path);
  return ParseManifest(ReadJsonFile(manifest_path), p.parent_path(), false);
}

void SaveScene(const Scene& scene, const std::string& dir) {
  fs::create_directories(dir);
  json doc;
  doc["near"] = scene.near;
  doc["far"] = scene.far;
  doc["background"] = scene.background;
  json frames = json::array();
  for (size_t i = 0; i < scene.views.size(); ++i) {
    const CameraView& v = scene.views[i];
    json f;
    f["file_path"] = v.name;
    json m = json::array();
    for (int r = 0; r < 4; ++r) {
      m.push_back({v.pose(r, 0), v.pose(r, 1), v.pose(r, 2), v.pose(r, 3)});
    }
    f["transform_matrix"] = m;
    f["w"] = v.width;
    f["h"] = v.height;
    f["fx"] = v.intrinsics.fx;
    f["fy"] = v.intrinsics.fy;
    f["cx"] = v.intrinsics.cx;
    f["cy"] = v.intrinsics.cy;
    f["role"] = ViewRoleName(scene.roles[i]);
    frames.push_back(f);
    if (!v.image.empty()) {
      WritePng((fs::path(dir) / (v.name + ".png")).string(), v.image);
    }
  }
  doc["frames"] = frames;
  std::ofstream out(fs::path(dir) / "transforms.json");
  out << doc.dump(2) << "\n";
}

namespace {

Eigen::Vector3d Vec3(const std::vector<double>& v, const std::string& what) {
  if (v.size() != 3) throw FormatError(what + " must have 3 components");
  return {v[0], v[1], v[2]};
}

Primitive MakePrimitive(const std::string& kind, const Eigen::Vector3d& center,
                        const std::vector<double>& extent, double sigma,
                        const std::vector<double>& rgb) {
  Primitive p;
  if (kind == "sphere") {
    p.kind = Primitive::Kind::kSphere;
    if (extent.size() != 1) throw FormatError("sphere radius must be a scalar");
    p.extent = Eigen::Vector3d::Constant(extent[0]);
  } else if (kind == "box") {
    p.kind = Primitive::Kind::kBox;
    p.extent = extent.size() == 1 ? Eigen::Vector3d::Constant(extent[0])
                                  : Vec3(extent, "half_extent");
  } else {
    throw FormatError("unknown primitive kind '" + kind + "'");
  }
  p.center = center;
  p.sigma = sigma;
  const Eigen::Vector3d c = Vec3(rgb, "rgb");
  p.rgb = {c[0], c[1], c[2]};
  return p;
}

std::vector<double> JsonNumbers(const json& v) {
  if (v.is_number()) return {v.get<double>()};
  return v.get<std::vector<double>>();
}

std::vector<double> TomlNumbers(const toml::node* n) {
  std::vector<double> out;
  if (n == nullptr) return out;
  if (auto d = n->value<double>()) return {*d};
  if (const toml::array* arr = n->as_array()) {
    for (const auto& e : *arr) out.push_back(e.value<double>().value_or(0.0));
  }
  return out;
}

}  // namespace

SynthSpec ParseSynthSpec(const std::string& text, bool is_toml) {
  SynthSpec spec;
  if (!is_toml) {
    try {
      const json doc = json::parse(text);
      for (const json& p : doc.value("primitives", json::array())) {
        const std::string kind = p.at("kind").get<std::string>();
        const json& ext = p.contains("radius")        ? p["radius"]
                          : p.contains("half_extent") ? p["half_extent"]
                                                      : p.at("radius_or_halfextent");
        spec.primitives.push_back(MakePrimitive(
            kind, Vec3(p.at("center").get<std::vector<double>>(), "center"),
            JsonNumbers(ext), p.at("sigma").get<double>(),
            p.at("rgb").get<std::vector<double>>()));
      }
      if (doc.contains("background_rgb")) {
        const auto bg = Vec3(doc["background_rgb"].get<std::vector<double>>(),
                             "background_rgb");
        spec.background = {float(bg[0]), float(bg[1]), float(bg[2])};
      }
      spec.n_views = doc.value("n_views", spec.n_views);
      spec.image_size = doc.value("image_size", spec.image_size);
      spec.seed = doc.value("seed", spec.seed);
      spec.camera_radius = doc.value("camera_radius", spec.camera_radius);
      spec.camera_angle_x = doc.value("camera_angle_x", spec.camera_angle_x);
      spec.quadrature_samples =
          doc.value("quadrature_samples", spec.quadrature_samples);
    } catch (const json::exception& e) {
      throw FormatError(std::string("malformed scene spec: ") + e.what());
    }
  } else {
    toml::table doc;
    try {
      doc = toml::parse(text);
    } catch (const toml::parse_error& e) {
      throw FormatError(std::string("malformed scene spec: ") +
                        std::string(e.description()));
    }
    if (const toml::array* prims = doc["primitives"].as_array()) {
      for (const auto& node : *prims) {
        const toml::table* p = node.as_table();
        if (p == nullptr) throw FormatError("primitive must be a table");
        const toml::node* ext = p->get("radius");
        if (ext == nullptr) ext = p->get("half_extent");
        if (ext == nullptr) ext = p->get("radius_or_halfextent");
        const auto kind = (*p)["kind"].value<std::string>();
        const auto sigma = (*p)["sigma"].value<double>();
        if (!kind || !sigma || ext == nullptr) {
          throw FormatError("primitive needs kind, extent and sigma");
        }
        spec.primitives.push_back(MakePrimitive(
            *kind, Vec3(TomlNumbers(p->get("center")), "center"),
            TomlNumbers(ext), *sigma, TomlNumbers(p->get("rgb"))));
      }
    }
    if (doc.contains("background_rgb")) {
      const auto bg = Vec3(TomlNumbers(doc.get("background_rgb")),
                           "background_rgb");
      spec.background = {float(bg[0]), float(bg[1]), float(bg[2])};
    }
    spec.n_views = doc["n_views"].value_or(spec.n_views);
    spec.image_size = doc["image_size"].value_or(spec.image_size);
    spec.seed = doc["seed"].value_or<int64_t>(static_cast<int64_t>(spec.seed));
    spec.camera_radius = doc["camera_radius"].value_or(spec.camera_radius);
    spec.camera_angle_x = doc["camera_angle_x"].value_or(spec.camera_angle_x);
    spec.quadrature_samples =
        doc["quadrature_samples"].value_or(spec.quadrature_samples);
  }
  return spec;
}

SynthSpec LoadSynthSpec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseSynthSpec(ss.str(), fs::path(path).extension() == ".toml");
}

SynthSpec RandomSynthSpec(uint64_t seed, int n_views, int image_size) {
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SynthSpec spec;
  spec.seed = seed;
  spec.n_views = n_views;
  spec.image_size = image_size;
  const int count = 1 + static_cast<int>(unit(rng) * 3) % 3;
  for (int i = 0; i < count; ++i) {
    Primitive p;
    p.kind = unit(rng) < 0.5 ? Primitive::Kind::kSphere : Primitive::Kind::kBox;
    double size = 0.25 + 0.3 * unit(rng);
    if (p.kind == Primitive::Kind::kSphere) {
      p.extent = Eigen::Vector3d::Constant(size);
    } else {
      for (int a = 0; a < 3; ++a) p.extent[a] = 0.6 * size + 0.4 * size * unit(rng);
    }
    for (int a = 0; a < 3; ++a) {
      const double room = 0.9 - p.extent[a];
      p.center[a] = room * (2.0 * unit(rng) - 1.0) * 0.6;
    }
    p.sigma = 30.0 + 40.0 * unit(rng);
    for (int c = 0; c < 3; ++c) p.rgb[c] = 0.1 + 0.8 * unit(rng);
    spec.primitives.push_back(p);
  }
  return spec;
}

AnalyticField::AnalyticField(std::vector<Primitive> primitives)
    : primitives_(std::move(primitives)) {}

namespace {

bool Inside(const Primitive& p, const Eigen::Vector3d& x) {
  const Eigen::Vector3d d = x - p.center;
  if (p.kind == Primitive::Kind::kSphere) {
    return d.squaredNorm() <= p.extent[0] * p.extent[0];
  }
  return (d.cwiseAbs().array() <= p.extent.array()).all();
}

}  // namespace

double AnalyticField::Density(const Eigen::Vector3d& p) const {
  double s = 0;
  for (const auto& prim : primitives_) {
    if (Inside(prim, p)) s += prim.sigma;
  }
  return s;
}

Eigen::Vector3d AnalyticField::Color(const Eigen::Vector3d& p) const {
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  double s = 0;
  for (const auto& prim : primitives_) {
    if (!Inside(prim, p)) continue;
    c += prim.sigma * Eigen::Vector3d(prim.rgb[0], prim.rgb[1], prim.rgb[2]);
    s += prim.sigma;
  }
  return s > 0 ? Eigen::Vector3d(c / s) : c;
}

Image RenderAnalytic(const AnalyticField& field, const CameraView& view,
                     double near, double far,
                     const std::array<float, 3>& background, int n_samples) {
  Image img(view.height, view.width);
  img.alpha.assign(static_cast<size_t>(view.height) * view.width, 0.0f);
  const double dt = (far - near) / n_samples;
  ParallelFor(view.height, [&](int64_t y) {
    for (int x = 0; x < view.width; ++x) {
      const Ray ray = PixelRay(view, x + 0.5, y + 0.5, near, far);
      double trans = 1.0;
      Eigen::Vector3d acc = Eigen::Vector3d::Zero();
      for (int i = 0; i < n_samples; ++i) {
        const Eigen::Vector3d p = ray.origin + (near + (i + 0.5) * dt) * ray.direction;
        const double sigma = field.Density(p);
        if (sigma <= 0) continue;
        const double alpha = 1.0 - std::exp(-sigma * dt);
        acc += trans * alpha * field.Color(p);
        trans *= 1.0 - alpha;
      }
      for (int c = 0; c < 3; ++c) {
        img.at(y, x, c) = static_cast<float>(acc[c] + trans * background[c]);
      }
      img.alpha[y * view.width + x] = static_cast<float>(1.0 - trans);
    }
  });
  return img;
}

Eigen::Matrix4d LookAtOrigin(const Eigen::Vector3d& position) {
  const Eigen::Vector3d z = position.normalized();  // camera looks along -z
  Eigen::Vector3d up(0, 0, 1);
  if (std::abs(z.dot(up)) > 0.999) up = Eigen::Vector3d(0, 1, 0);
  const Eigen::Vector3d x = up.cross(z).normalized();
  const Eigen::Vector3d y = z.cross(x);
  Eigen::Matrix4d pose = Eigen::Matrix4d::Identity();
  pose.block<3, 1>(0, 0) = x;
  pose.block<3, 1>(0, 1) = y;
  pose.block<3, 1>(0, 2) = z;
  pose.block<3, 1>(0, 3) = position;
  return pose;
}

Scene SynthScene(const SynthSpec& spec, int n_views, uint64_t seed,
                 AnalyticField* oracle) {
  if (n_views < 1 || spec.image_size < 1 || spec.quadrature_samples < 512) {
    throw ContractError("synth: need >= 1 view, a positive image size and "
                        ">= 512 quadrature samples");
  }
  for (const auto& p : spec.primitives) {
    const Eigen::Vector3d lo = p.center - p.extent, hi = p.center + p.extent;
    if ((lo.array() < -kSceneBound).any() || (hi.array() > kSceneBound).any()) {
      throw ContractError("synth: primitive extends outside [-1, 1]^3");
    }
    if (!(p.sigma >= 0)) throw ContractError("synth: sigma must be >= 0");
  }
  AnalyticField field(spec.primitives);
  if (oracle != nullptr) *oracle = field;

  // A Fibonacci lattice gives even coverage; a seeded shuffle decouples the
  // lattice order from the role assignment.
  std::vector<int> order(n_views);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const double phase = std::uniform_real_distribution<double>(0, 2 * M_PI)(rng);
  const double golden = M_PI * (3.0 - std::sqrt(5.0));

  Scene scene;
  scene.background = spec.background;
  const int size = spec.image_size;
  const double f = 0.5 * size / std::tan(0.5 * spec.camera_angle_x);
  for (int i = 0; i < n_views; ++i) {
    const int k = order[i];
    const double z = 1.0 - 2.0 * (k + 0.5) / n_views;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = k * golden + phase;
    CameraView view;
    view.name = "r_" + std::to_string(i);
    view.width = view.height = size;
    view.intrinsics = {f, f, 0.5 * size, 0.5 * size};
    view.pose = LookAtOrigin(spec.camera_radius *
                             Eigen::Vector3d(r * std::cos(phi), r * std::sin(phi), z));
    scene.views.push_back(std::move(view));
    scene.roles.push_back(DefaultRole(i));
  }
  DeriveNearFar(&scene);
  for (auto& view : scene.views) {
    view.image = RenderAnalytic(field, view, scene.near, scene.far,
                                spec.background, spec.quadrature_samples);
  }
  return scene;
}

}  // namespace nerfcodec
