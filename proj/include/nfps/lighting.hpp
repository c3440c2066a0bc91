// Copyright 2026 The nfps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "nfps/geometry.hpp"

#include <vector>

namespace nfps {

/// LED modelled as a point emitter with radial (inverse square) and angular dissipation.
struct PointLight {
  Vec3 position = Vec3::Zero();          // metres, camera frame
  Rgb brightness = Rgb::Ones();          // phi, per channel
  Vec3 direction = Vec3(0, 0, 1);        // principal direction D, unit
  double mu = 0.0;                       // angular dissipation exponent

  void validate() const;
};

struct LightingVector {
  Vec3 dir;     // unit, surface to light
  double dist;  // metres
};

LightingVector lighting_vector(const PointLight& light, const Vec3& X);

/// Anisotropy cosine s.D where s = -L is the light-to-surface direction.
double anisotropy_cosine(const PointLight& light, const Vec3& X);

/// (s.D)^mu / |P - X|^2, without brightness. Zero when the point is behind the emitter.
double geometric_attenuation(const PointLight& light, const Vec3& X);

struct Attenuation {
  Rgb value = Rgb::Zero();
  bool behind_emitter = false;
};

/// phi * (s.D)^mu / |P - X|^2 per channel.
Attenuation attenuation(const PointLight& light, const Vec3& X);

/// Per-pixel, per-light lighting directions and attenuations for a depth hypothesis.
struct LightField {
  std::vector<Grid<Vec3>> dirs;    // [light](x, y)
  std::vector<Image> atten;        // [light](x, y), includes brightness
  Mask mask;
};

LightField compute_light_field(const CameraIntrinsics& cam, const DepthMap& depth, const std::vector<PointLight>& lights);

struct CompensatedStack {
  ImageStack samples;          // j = i / a per light
  std::vector<Mask> valid;     // false where attenuation vanished or depth is missing
};

/// Inverts the point-light attenuation: j_m = i_m / a_m(X(u, v, z)).
CompensatedStack compensate(const ImageStack& images, const DepthMap& depth, const CameraIntrinsics& cam,
                            const std::vector<PointLight>& lights);

}  // namespace nfps
