// Copyright 2026 The nfps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "nfps/lighting.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace nfps {

/// Lambertian + Blinn-Phong lobe. `metallic` tints the specular colour by the albedo.
struct Material {
  Rgb albedo = Rgb::Constant(0.8);
  double specular_weight = 0.0;
  double shininess = 1.0;
  double metallic = 0.0;

  void validate() const;
  static Material lambertian(const Rgb& albedo) { return Material{albedo, 0.0, 1.0, 0.0}; }
};

/// Per-pixel stand-ins for cast shadows, interreflections and ambient light.
struct GlobalIllumApprox {
  double shadow_prob = 0.0;
  Rgb ambient = Rgb::Zero();
  Rgb self_reflection = Rgb::Zero();  // scaled by each light's attenuation

  void validate() const;
  bool is_zero() const { return shadow_prob == 0.0 && (ambient == 0.0).all() && (self_reflection == 0.0).all(); }
};

/// Sensor discretisation: clamp to [0, 1], then round to `levels` uniformly spaced values.
struct QuantizationSpec {
  int levels = 1024;

  void validate() const;
};

double quantize(double v, const QuantizationSpec& q);

/// Reflectance B(N, L, V) for unit vectors; L points surface to light, V surface to camera.
Rgb shade(const Vec3& N, const Vec3& L, const Vec3& V, const Material& material);

using Rng = std::mt19937_64;

/// Intensities i_m for one surface point. Quantization is skipped when `quant` is empty.
std::vector<Rgb> render_pixel(const Vec3& X, const Vec3& N, const Material& material, const std::vector<PointLight>& lights,
                              const GlobalIllumApprox& gi, const std::optional<QuantizationSpec>& quant, Rng& rng);

struct SceneRenderOptions {
  GlobalIllumApprox gi;
  std::optional<QuantizationSpec> quant;
  std::uint64_t seed = 0;
};

/// One image per light; pixels outside the shared mask are black.
ImageStack render_scene(const CameraIntrinsics& cam, const DepthMap& depth, const NormalMap& normals,
                        const Grid<Material>& materials, const std::vector<PointLight>& lights,
                        const SceneRenderOptions& opts = {});

}  // namespace nfps
