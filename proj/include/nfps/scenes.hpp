// Copyright 2026 The nfps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "nfps/calibration.hpp"
#include "nfps/renderer.hpp"

#include <string>
#include <vector>

namespace nfps {

/// Analytic scene with exact depth and normals, used for hermetic end-to-end runs.
struct Scene {
  CameraIntrinsics cam;
  DepthMap depth;
  NormalMap normals;
  Grid<Material> materials;

  double mean_depth() const;
};

Scene make_sphere_scene(const CameraIntrinsics& cam, const Vec3& center, double radius, const Material& material);

/// Plane n.X = offset seen through every pixel. `normal` must face the camera.
Scene make_plane_scene(const CameraIntrinsics& cam, const Vec3& normal, double offset, const Material& material);

/// z(u, v) = z0 + amplitude * sin(2 pi u / period) * sin(2 pi v / period) on a disc around the principal point.
Scene make_wave_scene(const CameraIntrinsics& cam, double z0, double amplitude, double period_px, const Material& material);

/// `count` LEDs evenly spaced on a ring of `radius` around the optical axis at z = 0,
/// each aimed along +z. Brightness varies slightly per light around `phi`.
std::vector<PointLight> ring_lights(int count, double radius, double phi, double mu);

/// 52 LEDs on three concentric rings (12 + 20 + 20), spanning 20 cm.
std::vector<PointLight> luces_like_lights(double phi, double mu);

/// Moves each light away from `target` by `factor` and scales brightness by factor^2.
/// Directions are kept, so the attenuation at `target` is unchanged (far-field variant of a setup).
std::vector<PointLight> scale_lights_about(const std::vector<PointLight>& lights, const Vec3& target, double factor);

/// `count` LEDs on an 8 cm ring at z = 0 with varied brightness, slight tilts and mu in [0.5, 1.5].
std::vector<PointLight> calibration_leds(int count, std::uint64_t seed);

/// Two tilted reference-plane poses at 25 and 40 cm.
std::vector<PlanePose> default_calibration_planes();

/// Initial guess for calibration: each position moved `position_error` metres in a random direction,
/// brightness scaled by 1 +- `brightness_error`, direction +z and mu 0.5.
std::vector<PointLight> calibration_initial_guess(const std::vector<PointLight>& truth, double position_error,
                                                  double brightness_error, std::uint64_t seed);

}  // namespace nfps
