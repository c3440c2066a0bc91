// Copyright 2026 The nfps Authors
// SPDX-License-Identifier: Apache-2.0

#include "nfps/renderer.hpp"
#include "nfps/scenes.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace nfps;

namespace {

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  return Vec3(n(rng), n(rng), n(rng)).normalized();
}

}  // namespace

TEST_CASE("shade examples") {
  const Material lam = Material::lambertian(Rgb(0.9, 0.5, 0.2));
  const Vec3 N(0, 0, -1);
  CHECK((shade(N, N, N, lam) - lam.albedo).abs().maxCoeff() < 1e-15);
  CHECK((shade(N, Vec3(1, 0, 0), N, lam) == 0.0).all());
  CHECK((shade(N, Vec3(0.6, 0, 0.8), N, lam) == 0.0).all());

  Material mirror{Rgb(0.3, 0.3, 0.3), 1.0, 80.0, 0.0};
  const Vec3 V = Vec3(0.4, 0.1, -1).normalized();
  const Vec3 L = 2.0 * N.dot(V) * N - V;
  CHECK((shade(N, L, V, mirror) - 1.0).abs().maxCoeff() < 1e-12);

  mirror.metallic = 1.0;
  CHECK((shade(N, L, V, mirror) - mirror.albedo).abs().maxCoeff() < 1e-12);
}

TEST_CASE("shade is non-negative") {
  std::mt19937_64 rng(11);
  const Material m{Rgb(0.5, 0.6, 0.7), 0.6, 30.0, 0.5};
  for (int i = 0; i < 2000; ++i) {
    const Rgb b = shade(random_unit(rng), random_unit(rng), random_unit(rng), m);
    CHECK((b >= 0.0).all());
  }
}

TEST_CASE("quantize") {
  const QuantizationSpec q{1024};
  CHECK(quantize(1.5, q) == 1.0);
  CHECK(quantize(-0.1, q) == 0.0);
  CHECK(quantize(0.25, q) == 256.0 / 1023.0);
  CHECK(quantize(0.25, q) == doctest::Approx(0.250244).epsilon(1e-6));
  CHECK(quantize(0.5 / 1023.0, q) == 1.0 / 1023.0);
  CHECK_THROWS_AS(QuantizationSpec{1}.validate(), std::invalid_argument);
}

TEST_CASE("render_pixel matches the closed form for isotropic Lambertian lights") {
  Rng rng(1);
  std::mt19937_64 r2(2);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  const Material m = Material::lambertian(Rgb(0.8, 0.5, 0.3));
  for (int t = 0; t < 100; ++t) {
    std::vector<PointLight> lights(5);
    for (auto& l : lights) {
      l.position = Vec3(u(r2), u(r2), u(r2) * 0.1);
      l.brightness = Rgb(0.1 + u(r2) * 0.5 + 0.05, 0.1, 0.12);
    }
    const Vec3 X(u(r2), u(r2), 0.4);
    const Vec3 N = Vec3(u(r2), u(r2), -0.5).normalized();
    const auto i = render_pixel(X, N, m, lights, {}, std::nullopt, rng);
    for (std::size_t k = 0; k < lights.size(); ++k) {
      const Vec3 d = lights[k].position - X;
      const Rgb expect = lights[k].brightness * m.albedo * std::max(0.0, N.dot(d.normalized())) / d.squaredNorm();
      CHECK((i[k] - expect).abs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("doubling brightness doubles intensity within one quantization step") {
  Rng rng(3);
  const QuantizationSpec q{1024};
  auto lights = ring_lights(10, 0.1, 0.004, 1.0);
  const Vec3 X(0.01, -0.02, 0.3), N = Vec3(0.1, 0.2, -1).normalized();
  const Material m = Material::lambertian(Rgb::Constant(0.7));
  const auto a = render_pixel(X, N, m, lights, {}, q, rng);
  for (auto& l : lights) l.brightness *= 2.0;
  const auto b = render_pixel(X, N, m, lights, {}, q, rng);
  for (std::size_t k = 0; k < lights.size(); ++k) {
    REQUIRE(b[k].maxCoeff() < 1.0);
    CHECK((b[k] - 2.0 * a[k]).abs().maxCoeff() <= 1.0 / 1023.0 + 1e-12);
  }
}

TEST_CASE("render_pixel is permutation equivariant") {
  auto lights = ring_lights(7, 0.1, 0.05, 1.2);
  const Vec3 X(0.0, 0.01, 0.3), N = Vec3(-0.2, 0.1, -1).normalized();
  const Material m{Rgb(0.6, 0.5, 0.4), 0.4, 40.0, 0.2};
  Rng r1(0), r2(0);
  const auto a = render_pixel(X, N, m, lights, {}, QuantizationSpec{}, r1);
  std::vector<PointLight> rev(lights.rbegin(), lights.rend());
  const auto b = render_pixel(X, N, m, rev, {}, QuantizationSpec{}, r2);
  for (std::size_t k = 0; k < lights.size(); ++k) CHECK((a[k] - b[lights.size() - 1 - k]).abs().maxCoeff() == 0.0);
}

TEST_CASE("global illumination terms add light and shadows remove it") {
  const auto lights = ring_lights(12, 0.1, 0.05, 1.0);
  const Vec3 X(0, 0, 0.3), N(0, 0, -1);
  const Material m = Material::lambertian(Rgb::Constant(0.5));
  Rng rng(9);
  const auto base = render_pixel(X, N, m, lights, {}, std::nullopt, rng);
  GlobalIllumApprox amb;
  amb.ambient = Rgb::Constant(0.01);
  const auto lifted = render_pixel(X, N, m, lights, amb, std::nullopt, rng);
  for (std::size_t k = 0; k < lights.size(); ++k) CHECK((lifted[k] - base[k] - 0.01).abs().maxCoeff() < 1e-12);
  GlobalIllumApprox dark;
  dark.shadow_prob = 1.0;
  const auto black = render_pixel(X, N, m, lights, dark, std::nullopt, rng);
  for (const auto& i : black) CHECK((i == 0.0).all());
}

TEST_CASE("fronto-parallel plane under an on-axis light peaks at the principal point") {
  const int S = 41;
  CameraIntrinsics cam = CameraIntrinsics::from_normalized(2.0, S, S);
  const auto sc = make_plane_scene(cam, Vec3(0, 0, -1), -0.3, Material::lambertian(Rgb::Constant(0.8)));
  PointLight l;
  l.brightness = Rgb::Constant(0.05);
  l.mu = 1.0;
  const auto imgs = render_scene(cam, sc.depth, sc.normals, sc.materials, {l});
  const double centre = imgs[0](S / 2, S / 2)[0];
  for (int y = 0; y < S; ++y)
    for (int x = 0; x < S; ++x) CHECK(imgs[0](x, y)[0] <= centre);
  for (int x = S / 2; x + 1 < S; ++x) CHECK(imgs[0](x + 1, S / 2)[0] < imgs[0](x, S / 2)[0]);
}

TEST_CASE("mirror-symmetric lights give mirrored images") {
  const int S = 33;
  CameraIntrinsics cam = CameraIntrinsics::from_normalized(2.5, S, S);
  const auto sc = make_sphere_scene(cam, Vec3(0, 0, 0.3), 0.05, Material{Rgb(0.6, 0.6, 0.6), 0.3, 20.0, 0.0});
  PointLight a, b;
  a.position = Vec3(0.05, 0, 0);
  b.position = Vec3(-0.05, 0, 0);
  a.brightness = b.brightness = Rgb::Constant(0.05);
  const auto imgs = render_scene(cam, sc.depth, sc.normals, sc.materials, {a, b});
  for (int y = 0; y < S; ++y)
    for (int x = 0; x < S; ++x)
      CHECK((imgs[0](x, y) - imgs[1](S - 1 - x, y)).abs().maxCoeff() < 1e-12);
}

TEST_CASE("render_scene is deterministic and rejects bad shapes") {
  const auto cam = CameraIntrinsics::from_normalized(3.0, 24, 24);
  const auto sc = make_sphere_scene(cam, Vec3(0, 0, 0.3), 0.05, Material::lambertian(Rgb::Constant(0.8)));
  const auto lights = ring_lights(5, 0.1, 0.05, 1.0);
  SceneRenderOptions o;
  o.gi.shadow_prob = 0.2;
  o.seed = 4;
  const auto a = render_scene(cam, sc.depth, sc.normals, sc.materials, lights, o);
  const auto b = render_scene(cam, sc.depth, sc.normals, sc.materials, lights, o);
  for (std::size_t m = 0; m < a.size(); ++m)
    for (std::size_t i = 0; i < a[m].size(); ++i) CHECK((a[m].data[i] == b[m].data[i]).all());
  CameraIntrinsics small = CameraIntrinsics::from_normalized(3.0, 20, 24);
  CHECK_THROWS_AS(render_scene(small, sc.depth, sc.normals, sc.materials, lights), std::invalid_argument);
  CHECK_THROWS_AS(render_scene(cam, sc.depth, sc.normals, sc.materials, {}), std::invalid_argument);
}
