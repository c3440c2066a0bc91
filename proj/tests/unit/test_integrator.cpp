// Copyright 2026 The nfps Authors
// SPDX-License-Identifier: Apache-2.0

#include "nfps/integrator.hpp"
#include "nfps/scenes.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace nfps;

namespace {

DepthMap constant_depth(const DepthMap& shape, double z) {
  DepthMap d = shape;
  for (std::size_t i = 0; i < d.values.size(); ++i)
    if (d.mask.data[i]) d.values.data[i] = z;
  return d;
}

double mean_abs_error(const DepthMap& a, const DepthMap& b, const Mask& m) {
  double s = 0;
  int n = 0;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m.data[i] && a.mask.data[i] && b.mask.data[i]) {
      s += std::abs(a.values.data[i] - b.values.data[i]);
      ++n;
    }
  REQUIRE(n > 0);
  return s / n;
}

Scene sphere(int size) {
  const auto cam = CameraIntrinsics::from_normalized(3.125, size, size);
  return make_sphere_scene(cam, Vec3(0, 0, 0.3), 0.05, Material{});
}

}  // namespace

TEST_CASE("config validation") {
  IntegratorConfig c;
  CHECK_NOTHROW(c.validate());
  c.lambda = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.max_iters = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("fronto-parallel normals give zero gradients") {
  const auto cam = CameraIntrinsics::from_normalized(2.0, 16, 16);
  NormalMap n;
  n.values = Grid<Vec3>(16, 16, Vec3(0, 0, -1));
  n.mask = Mask(16, 16, 1);
  const auto g = normals_to_gradients(cam, n);
  for (std::size_t i = 0; i < g.p.size(); ++i) {
    CHECK(g.mask.data[i] == 1);
    CHECK(g.p.data[i] == 0.0);
    CHECK(g.q.data[i] == 0.0);
  }
}

TEST_CASE("grazing normals are masked") {
  const auto cam = CameraIntrinsics::from_normalized(2.0, 16, 16);
  NormalMap n;
  n.values = Grid<Vec3>(16, 16, Vec3(0, 0, -1));
  n.mask = Mask(16, 16, 1);
  n.values(8, 8) = Vec3(1, 0, 0);
  const Vec3 ray = back_project(cam, 3, 4, 1.0);
  n.values(3, 4) = orient_to_camera(ray.cross(Vec3(1, 0, 0)).normalized());
  n.values(10, 2) = Vec3(0, -1, 1e-9).normalized();
  const auto g = normals_to_gradients(cam, n);
  CHECK(g.mask(8, 8) == 0);
  CHECK(g.mask(3, 4) == 0);
  CHECK(g.mask(10, 2) == 1);
  for (std::size_t i = 0; i < g.p.size(); ++i) {
    CHECK(std::isfinite(g.p.data[i]));
    CHECK(std::isfinite(g.q.data[i]));
  }
}

TEST_CASE("sphere gradients match finite differences of log depth") {
  const auto sc = sphere(256);
  const auto g = normals_to_gradients(sc.cam, sc.normals);
  const Mask inner = erode(sc.depth.mask, 4);
  double worst = 0;
  for (int y = 1; y < 255; ++y)
    for (int x = 1; x < 255; ++x) {
      if (!masked(inner, x, y)) continue;
      const auto& z = sc.depth.values;
      const double p = (std::log(z(x + 1, y)) - std::log(z(x - 1, y))) / 2;
      const double q = (std::log(z(x, y + 1)) - std::log(z(x, y - 1))) / 2;
      worst = std::max({worst, std::abs(p - g.p(x, y)), std::abs(q - g.q(x, y))});
    }
  CHECK(worst < 1e-3);
}

TEST_CASE("zero gradients keep the prior") {
  const auto cam = CameraIntrinsics::from_normalized(2.0, 24, 20);
  GradientField g{Grid<double>(24, 20, 0.0), Grid<double>(24, 20, 0.0), Mask(24, 20, 1)};
  const auto z0 = flat_plane_init(cam, g.mask, 0.5);
  const auto z = integrate(g, z0);
  for (std::size_t i = 0; i < z.values.size(); ++i) CHECK(z.values.data[i] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("slanted plane integrates to within 0.1%") {
  const auto cam = CameraIntrinsics::from_normalized(2.5, 96, 96);
  const Vec3 n = Vec3(0.3, -0.2, -1).normalized();
  const auto sc = make_plane_scene(cam, n, 0.4 * n.z(), Material{});
  const auto g = normals_to_gradients(cam, sc.normals);
  // the prior fixes the mean of log depth
  double log_sum = 0;
  for (std::size_t i = 0; i < sc.depth.values.size(); ++i)
    if (sc.depth.mask.data[i]) log_sum += std::log(sc.depth.values.data[i]);
  const auto z0 = flat_plane_init(cam, sc.depth.mask, std::exp(log_sum / mask_count(sc.depth.mask)));
  const auto z = integrate(g, z0);
  const Mask inner = erode(sc.depth.mask, 1);
  double worst = 0;
  for (std::size_t i = 0; i < inner.size(); ++i)
    if (inner.data[i]) worst = std::max(worst, std::abs(z.values.data[i] / sc.depth.values.data[i] - 1.0));
  CHECK(worst < 1e-3);
}

TEST_CASE("sphere integrates to within 1% of the radius") {
  const auto sc = sphere(128);
  const auto g = normals_to_gradients(sc.cam, sc.normals);
  const auto z0 = flat_plane_init(sc.cam, sc.depth.mask, sc.mean_depth());
  const auto r = integrate_detailed(g, z0);
  CHECK(mean_abs_error(r.depth, sc.depth, sc.depth.mask) < 0.01 * 0.05);
  REQUIRE(r.objective.size() >= 2);
  for (std::size_t i = 1; i < r.objective.size(); ++i) CHECK(r.objective[i] <= r.objective[i - 1]);
  CHECK(r.iterations <= IntegratorConfig{}.max_iters);
  CHECK(integration_objective(g, r.depth, z0, 1e-6) == doctest::Approx(r.objective.back()).epsilon(1e-6));
}

TEST_CASE("large lambda pins the solution to the prior") {
  const auto sc = sphere(64);
  const auto g = normals_to_gradients(sc.cam, sc.normals);
  const auto z0 = flat_plane_init(sc.cam, sc.depth.mask, sc.mean_depth());
  IntegratorConfig cfg;
  cfg.lambda = 1e3;
  const auto z = integrate(g, z0, cfg);
  double worst = 0;
  for (std::size_t i = 0; i < z.values.size(); ++i)
    if (z.mask.data[i]) worst = std::max(worst, std::abs(std::log(z.values.data[i]) - std::log(z0.values.data[i])));
  // optimality bound: 2 lambda |w - w0| <= net sign count, reaching 1 / lambda at mask corners
  CHECK(worst <= 1e-3 + 1e-8);
}

TEST_CASE("l1 integration is robust to sparse outliers") {
  const auto sc = sphere(128);
  const auto g = normals_to_gradients(sc.cam, sc.normals);
  const auto z0 = flat_plane_init(sc.cam, sc.depth.mask, sc.mean_depth());
  const auto clean = integrate(g, z0);
  auto gc = g;
  Mask corrupted(128, 128, 0);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0, 1);
  for (std::size_t i = 0; i < gc.mask.size(); ++i)
    if (gc.mask.data[i] && u(rng) < 0.05) {
      corrupted.data[i] = 1;
      gc.p.data[i] += u(rng) < 0.5 ? -0.05 : 0.05;
      gc.q.data[i] += u(rng) < 0.5 ? -0.05 : 0.05;
    }
  const auto dirty = integrate(gc, z0);
  Mask keep = sc.depth.mask;
  for (std::size_t i = 0; i < keep.size(); ++i)
    if (corrupted.data[i]) keep.data[i] = 0;
  const double e_clean = mean_abs_error(clean, sc.depth, keep);
  const double e_dirty = mean_abs_error(dirty, sc.depth, keep);
  CHECK(e_dirty < 5.0 * e_clean);
}

TEST_CASE("depth to normals to depth round trip on a smooth surface") {
  const auto cam = CameraIntrinsics::from_normalized(3.0, 96, 96);
  const auto sc = make_wave_scene(cam, 0.3, 0.01, 32.0, Material{});
  const auto n = normals_from_depth(cam, sc.depth);
  const auto g = normals_to_gradients(cam, n);
  const auto z0 = flat_plane_init(cam, sc.depth.mask, sc.mean_depth());
  const auto z = integrate(g, z0);
  double rel = 0;
  int count = 0;
  for (std::size_t i = 0; i < z.values.size(); ++i)
    if (z.mask.data[i]) {
      rel += std::abs(z.values.data[i] / sc.depth.values.data[i] - 1.0);
      ++count;
    }
  CHECK(rel / count < 0.01);
}

TEST_CASE("separate components are each anchored") {
  const auto cam = CameraIntrinsics::from_normalized(2.0, 40, 20);
  GradientField g{Grid<double>(40, 20, 0.0), Grid<double>(40, 20, 0.0), Mask(40, 20, 0)};
  for (int y = 2; y < 18; ++y)
    for (int x = 0; x < 40; ++x)
      if (x < 15 || x > 25) g.mask(x, y) = 1;
  DepthMap z0 = flat_plane_init(cam, g.mask, 0.4);
  for (int y = 0; y < 20; ++y)
    for (int x = 26; x < 40; ++x) z0.values(x, y) = 0.6;
  const auto z = integrate(g, z0);
  CHECK(z.values(5, 10) == doctest::Approx(0.4).epsilon(1e-9));
  CHECK(z.values(35, 10) == doctest::Approx(0.6).epsilon(1e-9));
  CHECK_FALSE(z.valid(20, 10));
}
