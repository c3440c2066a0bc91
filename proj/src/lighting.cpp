// Copyright 2026 The nfps Authors
// SPDX-License-Identifier: Apache-2.0

#include "nfps/lighting.hpp"

#include <cmath>

namespace nfps {

void PointLight::validate() const {
  if (std::abs(direction.norm() - 1.0) > 1e-6) throw std::invalid_argument("light: principal direction must be unit length");
  if (!(mu >= 0.0)) throw std::invalid_argument("light: mu must be non-negative");
  if (!(brightness > 0.0).all()) throw std::invalid_argument("light: brightness must be positive");
  if (!position.allFinite()) throw std::invalid_argument("light: position must be finite");
}

LightingVector lighting_vector(const PointLight& light, const Vec3& X) {
  const Vec3 L = light.position - X;
  const double dist = L.norm();
  if (!(dist > 0.0)) throw std::domain_error("lighting_vector: surface point coincides with the light");
  return {L / dist, dist};
}

double anisotropy_cosine(const PointLight& light, const Vec3& X) {
  return -lighting_vector(light, X).dir.dot(light.direction);
}

double geometric_attenuation(const PointLight& light, const Vec3& X) {
  const auto lv = lighting_vector(light, X);
  const double c = -lv.dir.dot(light.direction);
  if (c < 0.0) return 0.0;
  const double aniso = light.mu == 0.0 ? 1.0 : std::pow(c, light.mu);
  return aniso / (lv.dist * lv.dist);
}

Attenuation attenuation(const PointLight& light, const Vec3& X) {
  Attenuation a;
  a.behind_emitter = anisotropy_cosine(light, X) < 0.0;
  a.value = light.brightness * geometric_attenuation(light, X);
  return a;
}

LightField compute_light_field(const CameraIntrinsics& cam, const DepthMap& depth, const std::vector<PointLight>& lights) {
  const int W = depth.width(), H = depth.height();
  LightField f;
  f.mask = depth.mask;
  f.dirs.assign(lights.size(), Grid<Vec3>(W, H, Vec3::Zero()));
  f.atten.assign(lights.size(), Image(W, H, Rgb::Zero()));
  parallel_for(static_cast<std::size_t>(H), [&](std::size_t y0, std::size_t y1) {
    for (int y = static_cast<int>(y0); y < static_cast<int>(y1); ++y)
      for (int x = 0; x < W; ++x) {
        if (!depth.valid(x, y)) continue;
        const Vec3 X = back_project(cam, x, y, depth.values(x, y));
        for (std::size_t m = 0; m < lights.size(); ++m) {
          f.dirs[m](x, y) = lighting_vector(lights[m], X).dir;
          f.atten[m](x, y) = attenuation(lights[m], X).value;
        }
      }
  });
  return f;
}

CompensatedStack compensate(const ImageStack& images, const DepthMap& depth, const CameraIntrinsics& cam,
                            const std::vector<PointLight>& lights) {
  if (images.size() != lights.size()) throw std::invalid_argument("compensate: image count does not match light count");
  const int W = depth.width(), H = depth.height();
  for (const auto& im : images)
    if (!im.same_shape(W, H)) throw std::invalid_argument("compensate: image size does not match depth map");

  CompensatedStack out;
  out.samples.assign(images.size(), Image(W, H, Rgb::Zero()));
  out.valid.assign(images.size(), Mask(W, H, 0));
  parallel_for(static_cast<std::size_t>(H), [&](std::size_t y0, std::size_t y1) {
    for (int y = static_cast<int>(y0); y < static_cast<int>(y1); ++y)
      for (int x = 0; x < W; ++x) {
        if (!depth.valid(x, y)) continue;
        const Vec3 X = back_project(cam, x, y, depth.values(x, y));
        for (std::size_t m = 0; m < lights.size(); ++m) {
          const Rgb a = attenuation(lights[m], X).value;
          if (!(a > 0.0).all()) continue;
          out.samples[m](x, y) = images[m](x, y) / a;
          out.valid[m](x, y) = 1;
        }
      }
  });
  return out;
}

}  // namespace nfps
