// Copyright 2026 The nfps Authors
// SPDX-License-Identifier: Apache-2.0

#include "nfps/obsmap.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace nfps;

namespace {

std::vector<MapSample> random_samples(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<MapSample> s(n);
  for (auto& m : s) {
    Vec3 d(g(rng), g(rng), g(rng));
    d.z() = std::abs(d.z());
    m.dir = d.normalized();
    m.value = Rgb(u(rng), u(rng), u(rng));
  }
  return s;
}

bool same_map(const ObservationMap& a, const ObservationMap& b, double tol) {
  if (a.d() != b.d()) return false;
  for (int y = 0; y < a.d(); ++y)
    for (int x = 0; x < a.d(); ++x) {
      if (a.occupied(x, y) != b.occupied(x, y)) return false;
      for (int c = 0; c < 3; ++c)
        if (std::abs(a.rgb(x, y, c) - b.rgb(x, y, c)) > tol * std::max(1.0f, std::abs(a.rgb(x, y, c)))) return false;
    }
  return true;
}

}  // namespace

TEST_CASE("map_cell examples") {
  CHECK(map_cell(Vec3(0, 0, 1), 32) == std::pair(16, 16));
  CHECK(map_cell(Vec3(0.5, -0.5, std::sqrt(0.5)), 32) == std::pair(24, 8));
  CHECK(map_cell(Vec3(1, 0, 0), 32) == std::pair(31, 16));
  CHECK(map_cell(Vec3(-1, 0, 0), 32) == std::pair(0, 16));
  CHECK(map_cell(Vec3(0, 1, 0), 2) == std::pair(1, 1));
}

TEST_CASE("build_map normalises by brightness") {
  std::vector<MapSample> s{{Vec3(0, 0, 1), Rgb::Constant(0.4), true}};
  std::vector<Rgb> phi{Rgb::Constant(2.0)};
  const auto m = build_map(s, phi, Vec3(0, 0, -1), 32);
  CHECK(m.occupied(16, 16));
  CHECK(m.occupied_count() == 1);
  for (int c = 0; c < 3; ++c) CHECK(m.rgb(16, 16, c) == doctest::Approx(0.2));
  CHECK(m.rgb(0, 0, 0) == 0.0f);
}

TEST_CASE("build_map averages collisions and fills the view channels") {
  const Vec3 a = Vec3(0.01, 0.01, 1).normalized(), b = Vec3(0.02, 0.015, 1).normalized();
  REQUIRE(map_cell(a, 32) == map_cell(b, 32));
  std::vector<MapSample> s{{a, Rgb(0.2, 0.4, 0.6), true}, {b, Rgb(0.4, 0.2, 0.0), true}};
  std::vector<Rgb> phi{Rgb::Ones(), Rgb::Ones()};
  const Vec3 view = Vec3(0.1, -0.2, -1).normalized();
  const auto m = build_map(s, phi, view, 32);
  const auto [ix, iy] = map_cell(a, 32);
  CHECK(m.occupied_count() == 1);
  CHECK(m.rgb(ix, iy, 0) == doctest::Approx(0.3));
  CHECK(m.rgb(ix, iy, 1) == doctest::Approx(0.3));
  CHECK(m.rgb(ix, iy, 2) == doctest::Approx(0.3));
  const auto t = m.to_tensor();
  REQUIRE(t.size() == 6u * 32 * 32);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 32 * 32; ++i) CHECK(t[(3 + c) * 1024 + i] == static_cast<float>(view[c]));
}

TEST_CASE("build_map skips invalid samples and fails when none remain") {
  std::vector<MapSample> s{{Vec3(0, 0, 1), Rgb::Ones(), false}, {Vec3(0.6, 0, 0.8), Rgb::Ones(), true}};
  std::vector<Rgb> phi{Rgb::Ones(), Rgb::Ones()};
  const auto m = build_map(s, phi, Vec3(0, 0, -1), 8);
  CHECK(m.occupied_count() == 1);
  CHECK_FALSE(m.occupied(4, 4));
  s[1].valid = false;
  CHECK_THROWS_AS(build_map(s, phi, Vec3(0, 0, -1), 8), std::domain_error);
  CHECK_THROWS_AS(build_map(s, std::span<const Rgb>(phi.data(), 1), Vec3(0, 0, -1), 8), std::invalid_argument);
  CHECK_THROWS_AS(ObservationMap(1), std::invalid_argument);
}

TEST_CASE("build_map properties") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 100; ++t) {
    auto s = random_samples(rng, 60);
    std::vector<Rgb> phi(s.size());
    std::uniform_real_distribution<double> u(0.25, 4.0);
    for (auto& p : phi) p = Rgb(u(rng), u(rng), u(rng));
    const auto m = build_map(s, phi, Vec3(0, 0, -1), 16);
    CHECK(m.occupied_count() <= 60);
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x)
        for (int c = 0; c < 3; ++c) {
          CHECK(m.rgb(x, y, c) >= 0.0f);
          if (!m.occupied(x, y)) CHECK(m.rgb(x, y, c) == 0.0f);
        }

    std::vector<std::size_t> order(s.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<MapSample> s2;
    std::vector<Rgb> phi2;
    for (auto i : order) {
      s2.push_back(s[i]);
      phi2.push_back(phi[i]);
    }
    CHECK(same_map(m, build_map(s2, phi2, Vec3(0, 0, -1), 16), 1e-6));

    for (auto& x : s2) x.value *= 7.5;
    for (auto& p : phi2) p *= 7.5;
    CHECK(same_map(m, build_map(s2, phi2, Vec3(0, 0, -1), 16), 1e-6));
  }
}

TEST_CASE("observe divides by the full attenuation") {
  PointLight l;
  l.position = Vec3(0.1, 0, 0);
  l.brightness = Rgb(2, 3, 4);
  l.mu = 1.0;
  const Vec3 X(0, 0, 0.4);
  const Rgb a = attenuation(l, X).value;
  const Rgb B(0.3, 0.2, 0.1);
  std::vector<Rgb> i{a * B};
  const auto m = observe(i, X, {l}, 32);
  const auto [ix, iy] = map_cell(lighting_vector(l, X).dir, 32);
  for (int c = 0; c < 3; ++c) CHECK(m.rgb(ix, iy, c) == doctest::Approx(B[c]).epsilon(1e-6));
  CHECK((m.view() + X.normalized()).norm() < 1e-12);

  PointLight back = l;
  back.direction = Vec3(0, 0, -1);
  CHECK_THROWS_AS(observe(i, X, {back}, 32), std::domain_error);
}
