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

// Pinhole cameras, posed views, on-disk scenes and an analytic scene
// generator.
//
// Conventions: poses are camera-to-world, right-handed, and the camera looks
// down its local -z axis with +y up. Pixel (x, y) covers [x, x+1) x [y, y+1)
// so its center is at (x + 0.5, y + 0.5); image rows grow downwards.

#ifndef NERFCODEC_SCENE_H_
#define NERFCODEC_SCENE_H_

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace nerfcodec {

// Interleaved HxWx3 RGB in [0, 1] with an optional HxW alpha plane.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<float> rgb;
  std::vector<float> alpha;

  Image() = default;
  Image(int h, int w) : height(h), width(w), rgb(3 * h * w, 0.0f) {}
  bool empty() const { return rgb.empty(); }
  float& at(int y, int x, int c) { return rgb[(y * width + x) * 3 + c]; }
  float at(int y, int x, int c) const { return rgb[(y * width + x) * 3 + c]; }
};

Image ReadPng(const std::string& path);
void WritePng(const std::string& path, const Image& image);

struct Intrinsics {
  double fx = 0;
  double fy = 0;
  double cx = 0;
  double cy = 0;
};

struct CameraView {
  std::string name;
  int width = 0;
  int height = 0;
  Intrinsics intrinsics;
  Eigen::Matrix4d pose = Eigen::Matrix4d::Identity();  // camera-to-world
  Image image;  // may be empty for pose-only views

  Eigen::Vector3d origin() const { return pose.block<3, 1>(0, 3); }
};

// Throws ContractError when the rotation is not orthonormal (1e-5), the
// focal lengths are not positive, or the principal point lies outside the
// image.
void ValidateView(const CameraView& view);

struct Projection {
  double u = 0;
  double v = 0;
  double depth = 0;  // distance along the optical axis
  bool in_frustum = false;
};

Projection Project(const Eigen::Vector3d& point, const CameraView& view);

// Inverse of Project for a continuous pixel coordinate at a given depth.
Eigen::Vector3d BackProject(double u, double v, double depth,
                            const CameraView& view);

struct Ray {
  Eigen::Vector3d origin;
  Eigen::Vector3d direction;  // unit length
  double near = 0;
  double far = 0;
};

// One ray per pixel in row-major order, through the pixel centers.
std::vector<Ray> GenerateRays(const CameraView& view, double near, double far);
Ray PixelRay(const CameraView& view, double u, double v, double near,
             double far);

enum class ViewRole {
  kEncoder,   // encoder input; also used for finetuning
  kFinetune,
  kEval,
};

const char* ViewRoleName(ViewRole role);
ViewRole ParseViewRole(const std::string& name);

// Role used when a manifest carries none: indices cycle through blocks of 25
// split 8 / 4 / 13, which yields 16 / 24 / 26 for 50 frames.
ViewRole DefaultRole(int index);

// All scene content lives in the cube [-1, 1]^3.
inline constexpr double kSceneBound = 1.0;

struct Scene {
  std::vector<CameraView> views;
  std::vector<ViewRole> roles;
  double near = 0;
  double far = 0;
  std::array<float, 3> background = {1.0f, 1.0f, 1.0f};

  std::vector<int> EncoderViews() const;
  std::vector<int> FinetuneViews() const;  // includes encoder views
  std::vector<int> EvalViews() const;
};

// Near/far bounds that enclose the scene cube from every camera.
void DeriveNearFar(Scene* scene);

// Reads `dir`/transforms.json and the PNGs it references.
Scene LoadScene(const std::string& dir);
// Reads only the poses of a manifest; images are not required to exist.
Scene LoadPoses(const std::string& manifest_path);
// Writes transforms.json with explicit intrinsics and roles plus one PNG per
// view.
void SaveScene(const Scene& scene, const std::string& dir);

struct Primitive {
  enum class Kind { kSphere, kBox };
  Kind kind = Kind::kSphere;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  // Sphere: x component is the radius. Box: per-axis half extents.
  Eigen::Vector3d extent = Eigen::Vector3d::Constant(0.5);
  double sigma = 50.0;
  std::array<double, 3> rgb = {0.5, 0.5, 0.5};
};

struct SynthSpec {
  std::vector<Primitive> primitives;
  std::array<float, 3> background = {1.0f, 1.0f, 1.0f};
  int n_views = 20;
  int image_size = 32;
  uint64_t seed = 0;
  double camera_radius = 4.0;
  double camera_angle_x = 0.9;
  int quadrature_samples = 512;
};

// Parses a JSON or TOML document (chosen by `toml`).
SynthSpec ParseSynthSpec(const std::string& text, bool toml);
// Chooses the parser from the file extension (.toml, otherwise JSON).
SynthSpec LoadSynthSpec(const std::string& path);

// A random arrangement of 1-3 colored spheres and boxes.
SynthSpec RandomSynthSpec(uint64_t seed, int n_views = 20,
                          int image_size = 32);

// Constant-density primitives; overlapping primitives add densities and mix
// colors by density.
class AnalyticField {
 public:
  explicit AnalyticField(std::vector<Primitive> primitives);

  double Density(const Eigen::Vector3d& p) const;
  // Color at p, weighted by density; returns black where the density is 0.
  Eigen::Vector3d Color(const Eigen::Vector3d& p) const;

 private:
  std::vector<Primitive> primitives_;
};

// Midpoint quadrature along each pixel ray; fills rgb and alpha.
Image RenderAnalytic(const AnalyticField& field, const CameraView& view,
                     double near, double far,
                     const std::array<float, 3>& background, int n_samples);

// Cameras on a sphere of radius spec.camera_radius looking at the origin,
// rendered from the analytic field. Throws ContractError for primitives
// outside the scene cube.
Scene SynthScene(const SynthSpec& spec, int n_views, uint64_t seed,
                 AnalyticField* oracle = nullptr);
inline Scene SynthScene(const SynthSpec& spec) {
  return SynthScene(spec, spec.n_views, spec.seed);
}

// Camera-to-world pose at `position` looking at the origin.
Eigen::Matrix4d LookAtOrigin(const Eigen::Vector3d& position);

}  // namespace nerfcodec

#endif  // NERFCODEC_SCENE_H_
