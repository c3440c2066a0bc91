// Copyright 2026 The nfps Authors
// SPDX-License-Identifier: Apache-2.0

#include "nfps/scenes.hpp"

#include <cmath>
#include <random>

namespace nfps {

double Scene::mean_depth() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < depth.mask.size(); ++i)
    if (depth.mask.data[i]) {
      sum += depth.values.data[i];
      ++n;
    }
  if (n == 0) throw std::domain_error("scene: empty mask");
  return sum / static_cast<double>(n);
}

namespace {

Scene empty_scene(const CameraIntrinsics& cam, const Material& material) {
  cam.validate();
  material.validate();
  const int W = cam.width, H = cam.height;
  return Scene{cam, DepthMap{Grid<double>(W, H, 0.0), Mask(W, H, 0)}, NormalMap{Grid<Vec3>(W, H, Vec3(0, 0, -1)), Mask(W, H, 0)},
               Grid<Material>(W, H, material)};
}

Vec3 pixel_ray(const CameraIntrinsics& cam, int x, int y) { return {(x - cam.cx) / cam.fx, (y - cam.cy) / cam.fy, 1.0}; }

void set_pixel(Scene& s, int x, int y, double z, const Vec3& n) {
  s.depth.values(x, y) = z;
  s.depth.mask(x, y) = 1;
  s.normals.values(x, y) = n;
  s.normals.mask(x, y) = 1;
}

}  // namespace

Scene make_sphere_scene(const CameraIntrinsics& cam, const Vec3& center, double radius, const Material& material) {
  if (!(radius > 0.0) || center.z() <= radius) throw std::invalid_argument("sphere: must lie entirely in front of the camera");
  Scene s = empty_scene(cam, material);
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x) {
      // |t r - c|^2 = R^2 with r_z = 1, so the depth equals t
      const Vec3 r = pixel_ray(cam, x, y);
      const double a = r.squaredNorm();
      const double b = -2.0 * r.dot(center);
      const double c = center.squaredNorm() - radius * radius;
      const double disc = b * b - 4.0 * a * c;
      if (disc <= 0.0) continue;
      const double t = (-b - std::sqrt(disc)) / (2.0 * a);
      const Vec3 X = t * r;
      const Vec3 n = (X - center) / radius;
      if (n.dot(-X.normalized()) <= 0.0) continue;
      set_pixel(s, x, y, t, n.normalized());
    }
  return s;
}

Scene make_plane_scene(const CameraIntrinsics& cam, const Vec3& normal, double offset, const Material& material) {
  const Vec3 n = normal.normalized();
  if (n.z() >= 0.0) throw std::invalid_argument("plane: normal must face the camera (n_z < 0)");
  Scene s = empty_scene(cam, material);
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x) {
      const Vec3 r = pixel_ray(cam, x, y);
      const double denom = n.dot(r);
      if (std::abs(denom) < 1e-12) continue;
      const double t = offset / denom;
      if (!(t > 0.0)) continue;
      set_pixel(s, x, y, t, n);
    }
  return s;
}

Scene make_wave_scene(const CameraIntrinsics& cam, double z0, double amplitude, double period_px, const Material& material) {
  if (!(z0 > std::abs(amplitude)) || !(period_px > 0.0)) throw std::invalid_argument("wave: invalid parameters");
  Scene s = empty_scene(cam, material);
  const double k = 2.0 * kPi / period_px;
  const double rad = 0.45 * std::min(cam.width, cam.height);
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x) {
      const double du = x - cam.cx, dv = y - cam.cy;
      if (du * du + dv * dv > rad * rad) continue;
      const double z = z0 + amplitude * std::sin(k * du) * std::sin(k * dv);
      const double zu = amplitude * k * std::cos(k * du) * std::sin(k * dv);
      const double zv = amplitude * k * std::sin(k * du) * std::cos(k * dv);
      const Vec3 r = pixel_ray(cam, x, y);
      const Vec3 Xu = zu * r + Vec3(z / cam.fx, 0, 0);
      const Vec3 Xv = zv * r + Vec3(0, z / cam.fy, 0);
      set_pixel(s, x, y, z, orient_to_camera(Xu.cross(Xv).normalized()));
    }
  return s;
}

std::vector<PointLight> ring_lights(int count, double radius, double phi, double mu) {
  std::vector<PointLight> lights;
  for (int m = 0; m < count; ++m) {
    const double a = 2.0 * kPi * m / count;
    PointLight l;
    l.position = Vec3(radius * std::cos(a), radius * std::sin(a), 0.0);
    // deterministic +-10% brightness spread and a slight colour tint
    const double spread = 1.0 + 0.1 * std::sin(3.0 * a + 0.5);
    l.brightness = Rgb(phi * spread, phi * spread * 0.97, phi * spread * 1.03);
    l.direction = Vec3(0, 0, 1);
    l.mu = mu;
    lights.push_back(l);
  }
  return lights;
}

std::vector<PointLight> luces_like_lights(double phi, double mu) {
  std::vector<PointLight> lights;
  auto add = [&](double x, double y, double spread) {
    PointLight l;
    l.position = Vec3(x, y, 0.0);
    l.brightness = Rgb(phi * spread, phi * spread * 0.98, phi * spread * 1.02);
    l.direction = Vec3(0, 0, 1);
    l.mu = mu;
    lights.push_back(l);
  };
  for (int m = 0; m < 12; ++m) {
    const double a = 2.0 * kPi * m / 12;
    add(0.04 * std::cos(a), 0.04 * std::sin(a), 1.0 + 0.05 * std::cos(2 * a));
  }
  for (int m = 0; m < 20; ++m) {
    const double a = 2.0 * kPi * (m + 0.5) / 20;
    add(0.075 * std::cos(a), 0.075 * std::sin(a), 1.0 + 0.05 * std::sin(3 * a));
  }
  for (int m = 0; m < 20; ++m) {
    const double a = 2.0 * kPi * m / 20;
    add(0.10 * std::cos(a), 0.10 * std::sin(a), 1.0 - 0.05 * std::cos(a));
  }
  return lights;
}

std::vector<PointLight> scale_lights_about(const std::vector<PointLight>& lights, const Vec3& target, double factor) {
  if (!(factor > 0.0)) throw std::invalid_argument("scale_lights_about: factor must be positive");
  std::vector<PointLight> out = lights;
  for (auto& l : out) {
    l.position = target + factor * (l.position - target);
    l.brightness *= factor * factor;
  }
  return out;
}

std::vector<PointLight> calibration_leds(int count, std::uint64_t seed) {
  if (count <= 0) throw std::invalid_argument("calibration_leds: count must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<PointLight> lights;
  for (int m = 0; m < count; ++m) {
    const double a = 2.0 * kPi * m / count;
    PointLight l;
    l.position = Vec3(0.08 * std::cos(a), 0.08 * std::sin(a), 0.0);
    const double phi = 0.05 * (1.0 + 0.1 * u(rng));
    l.brightness = Rgb(phi, phi * 0.95, phi * 1.05);
    l.direction = Vec3(0.1 * u(rng), 0.1 * u(rng), 1.0).normalized();
    l.mu = 1.0 + 0.5 * u(rng);
    lights.push_back(l);
  }
  return lights;
}

std::vector<PlanePose> default_calibration_planes() {
  return {{Vec3(0, 0, 0.25), Vec3(0.1, 0.05, -1.0).normalized()}, {Vec3(0, 0, 0.40), Vec3(-0.15, 0.1, -1.0).normalized()}};
}

std::vector<PointLight> calibration_initial_guess(const std::vector<PointLight>& truth, double position_error,
                                                  double brightness_error, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::bernoulli_distribution sign(0.5);
  std::vector<PointLight> init;
  for (auto l : truth) {
    Vec3 dir(n(rng), n(rng), n(rng));
    l.position += position_error * dir.normalized();
    l.brightness *= 1.0 + (sign(rng) ? brightness_error : -brightness_error);
    l.direction = Vec3(0, 0, 1);
    l.mu = 0.5;
    init.push_back(l);
  }
  return init;
}

}  // namespace nfps
