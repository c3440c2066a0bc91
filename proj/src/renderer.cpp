// Copyright 2026 The nfps Authors
// SPDX-License-Identifier: Apache-2.0

#include "nfps/renderer.hpp"

#include <algorithm>
#include <cmath>

namespace nfps {

void Material::validate() const {
  if (!((albedo >= 0.0).all() && (albedo <= 1.0).all())) throw std::invalid_argument("material: albedo outside [0, 1]");
  if (!(specular_weight >= 0.0 && specular_weight <= 1.0)) throw std::invalid_argument("material: specular weight outside [0, 1]");
  if (!(shininess >= 1.0)) throw std::invalid_argument("material: shininess must be >= 1");
  if (!(metallic >= 0.0 && metallic <= 1.0)) throw std::invalid_argument("material: metallic outside [0, 1]");
}

void GlobalIllumApprox::validate() const {
  if (!(shadow_prob >= 0.0 && shadow_prob <= 1.0)) throw std::invalid_argument("gi: shadow probability outside [0, 1]");
  if (!(ambient >= 0.0).all() || !(self_reflection >= 0.0).all()) throw std::invalid_argument("gi: additive terms must be >= 0");
}

void QuantizationSpec::validate() const {
  if (levels < 2) throw std::invalid_argument("quantization: at least two levels required");
}

double quantize(double v, const QuantizationSpec& q) {
  const double top = q.levels - 1;
  const double c = std::clamp(v, 0.0, 1.0);
  return std::round(c * top) / top;  // std::round: half away from zero
}

Rgb shade(const Vec3& N, const Vec3& L, const Vec3& V, const Material& m) {
  const double nl = N.dot(L);
  if (nl <= 0.0) return Rgb::Zero();
  const double s = m.specular_weight;
  Rgb out = m.albedo * nl * (1.0 - s);
  if (s > 0.0) {
    const Vec3 h = L + V;
    const double hn = h.norm();
    if (hn > 1e-12) {
      const double nh = std::max(0.0, N.dot(h / hn));
      const Rgb spec_color = Rgb::Ones() * (1.0 - m.metallic) + m.albedo * m.metallic;
      out += spec_color * s * std::pow(nh, m.shininess);
    }
  }
  return out;
}

std::vector<Rgb> render_pixel(const Vec3& X, const Vec3& N, const Material& material, const std::vector<PointLight>& lights,
                              const GlobalIllumApprox& gi, const std::optional<QuantizationSpec>& quant, Rng& rng) {
  if (lights.empty()) throw std::invalid_argument("render_pixel: no lights");
  if (!(X.z() > 0.0)) throw std::domain_error("render_pixel: point behind the camera");
  const Vec3 V = -X.normalized();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Rgb> out;
  out.reserve(lights.size());
  for (const auto& light : lights) {
    const auto lv = lighting_vector(light, X);
    // constant-attenuation shading, then the radial/angular falloff
    const Rgb lit = light.brightness * shade(N, lv.dir, V, material);
    const double g = geometric_attenuation(light, X);
    Rgb i = lit * g;
    if (gi.shadow_prob > 0.0 && unit(rng) < gi.shadow_prob) i = Rgb::Zero();
    if (!gi.is_zero()) i += gi.ambient + light.brightness * g * gi.self_reflection;
    if (quant)
      for (int c = 0; c < 3; ++c) i[c] = quantize(i[c], *quant);
    out.push_back(i);
  }
  return out;
}

ImageStack render_scene(const CameraIntrinsics& cam, const DepthMap& depth, const NormalMap& normals,
                        const Grid<Material>& materials, const std::vector<PointLight>& lights, const SceneRenderOptions& opts) {
  const int W = depth.width(), H = depth.height();
  if (!normals.values.same_shape(W, H) || !materials.same_shape(W, H) || !depth.mask.same_shape(W, H) ||
      !normals.mask.same_shape(W, H))
    throw std::invalid_argument("render_scene: depth, normal and material maps must share a shape");
  if (W != cam.width || H != cam.height) throw std::invalid_argument("render_scene: maps do not match the camera size");
  if (lights.empty()) throw std::invalid_argument("render_scene: no lights");
  opts.gi.validate();
  if (opts.quant) opts.quant->validate();

  ImageStack stack(lights.size(), Image(W, H, Rgb::Zero()));
  parallel_for(static_cast<std::size_t>(H), [&](std::size_t y0, std::size_t y1) {
    for (int y = static_cast<int>(y0); y < static_cast<int>(y1); ++y)
      for (int x = 0; x < W; ++x) {
        if (!depth.valid(x, y) || !normals.valid(x, y)) continue;
        Rng rng(stream_seed(opts.seed, static_cast<std::uint64_t>(y) * W + x));
        const Vec3 X = back_project(cam, x, y, depth.values(x, y));
        const auto px = render_pixel(X, normals.values(x, y), materials(x, y), lights, opts.gi, opts.quant, rng);
        for (std::size_t m = 0; m < lights.size(); ++m) stack[m](x, y) = px[m];
      }
  });
  return stack;
}

}  // namespace nfps
