// Copyright 2026 The nfps Authors
// SPDX-License-Identifier: Apache-2.0

#include "nfps/calibration.hpp"
#include "nfps/scenes.hpp"

#include <doctest.h>

#include <nlohmann/json.hpp>

#include <cmath>
#include <random>

using namespace nfps;

namespace {

CalibrationProblem make_problem(const std::vector<PointLight>& truth, const std::vector<PlanePose>& planes, int size = 48) {
  CalibrationProblem p;
  p.cam = CameraIntrinsics::from_normalized(1.5, size, size);
  for (const auto& pl : planes) p.captures.push_back({pl, render_plane_captures(p.cam, pl, truth, 0.5), Mask()});
  p.init = truth;
  return p;
}

}  // namespace

TEST_CASE("calibration text round trip") {
  CalibrationFile f;
  f.camera = CameraIntrinsics::from_normalized(1.5, 64, 48);
  f.lights = calibration_leds(8, 3);
  const auto text = calibration_to_text(f);
  const auto j = nlohmann::json::parse(text);
  CHECK(j.at("version") == 1);
  for (const char* k : {"fx", "fy", "cx", "cy", "width", "height"}) CHECK(j.at("camera").contains(k));
  for (const char* k : {"position", "phi", "direction", "mu"}) CHECK(j.at("lights").at(0).contains(k));
  const auto back = calibration_from_text(text);
  CHECK(calibration_to_text(back) == text);
  REQUIRE(back.lights.size() == 8);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(back.lights[i].position == f.lights[i].position);
    CHECK((back.lights[i].brightness == f.lights[i].brightness).all());
    CHECK(back.lights[i].direction == f.lights[i].direction);
    CHECK(back.lights[i].mu == f.lights[i].mu);
  }
  CHECK(back.camera.fx == f.camera.fx);
  CHECK(back.camera.height == 48);
  CHECK_THROWS_AS(calibration_from_text("{"), std::invalid_argument);
  CHECK_THROWS_AS(calibration_from_text(R"({"version":2})"), std::invalid_argument);
}

TEST_CASE("pack and unpack are inverse") {
  const auto l = calibration_leds(3, 1)[2];
  const auto p = pack_light(l);
  REQUIRE(p.size() == static_cast<std::size_t>(kCalibParamsPerLight));
  const auto u = unpack_light(p.data());
  CHECK(u.position == l.position);
  CHECK((u.brightness == l.brightness).all());
  CHECK(u.mu == l.mu);
}

TEST_CASE("residuals vanish at the truth") {
  const auto truth = calibration_leds(8, 5);
  const auto p = make_problem(truth, default_calibration_planes());
  const auto r = calib_residuals(truth, p);
  REQUIRE(!r.empty());
  for (double v : r) CHECK(std::abs(v) < 1e-12);
  CHECK(calib_l1(truth, p) < 1e-12);
}

TEST_CASE("doubling brightness makes residuals equal the observations") {
  const auto truth = calibration_leds(4, 6);
  const auto p = make_problem(truth, default_calibration_planes());
  auto doubled = truth;
  for (auto& l : doubled) l.brightness *= 2.0;
  const CalibrationData data(p);
  for (std::size_t m = 0; m < truth.size(); ++m) {
    std::vector<double> obs;
    for (const auto& cap : p.captures)
      for (const auto& v : cap.images[m].data)
        for (int c = 0; c < 3; ++c)
          if (v[c] < p.saturation) obs.push_back(v[c]);
    std::vector<double> res;
    data.residuals(m, doubled[m], res);
    REQUIRE(res.size() == obs.size());
    for (std::size_t i = 0; i < res.size(); ++i) CHECK(res[i] == doctest::Approx(obs[i]).epsilon(1e-12).scale(1e-15));
  }
}

TEST_CASE("prediction behind the emitter is zero") {
  PointLight l;
  l.position = Vec3(0, 0, 0.1);
  l.mu = 1.0;
  CHECK(calib_predict(l, 0, Vec3(0, 0, 0.05), Vec3(0, 0, 1), 0.5) == 0.0);
  CHECK(calib_predict(l, 0, Vec3(0, 0, 0.3), Vec3(0, 0, -1), 0.5) > 0.0);
}

TEST_CASE("brightness and albedo form an exact gauge") {
  const auto truth = calibration_leds(5, 8);
  auto p = make_problem(truth, default_calibration_planes());
  auto lights = calibration_initial_guess(truth, 0.004, 0.1, 2);
  const auto r = calib_residuals(lights, p);
  p.albedo *= 4.0;
  for (auto& l : lights) l.brightness /= 4.0;
  const auto r2 = calib_residuals(lights, p);
  REQUIRE(r.size() == r2.size());
  for (std::size_t i = 0; i < r.size(); ++i) CHECK(r2[i] == doctest::Approx(r[i]).epsilon(1e-12).scale(1e-15));
}

TEST_CASE("Jacobian matches finite differences") {
  const auto truth = calibration_leds(8, 9);
  const auto p = make_problem(truth, default_calibration_planes(), 24);
  const CalibrationData data(p);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  double worst = 0;
  for (int probe = 0; probe < 50; ++probe) {
    const std::size_t m = probe % truth.size();
    PointLight l = truth[m];
    l.position += 0.005 * Vec3(u(rng), u(rng), u(rng));
    l.brightness *= 1.0 + 0.1 * u(rng);
    l.direction = (l.direction + 0.1 * Vec3(u(rng), u(rng), 0)).normalized();
    l.mu = std::max(0.1, l.mu + 0.3 * u(rng));
    std::vector<double> res;
    Eigen::MatrixXd J;
    data.jacobian(m, l, res, J);
    REQUIRE(J.cols() == kCalibParamsPerLight);
    const auto base = pack_light(l);
    for (int k = 0; k < kCalibParamsPerLight; ++k) {
      const double h = 1e-6 * std::max(1.0, std::abs(base[k]));
      auto plus = base, minus = base;
      plus[k] += h;
      minus[k] -= h;
      std::vector<double> rp, rm;
      data.residuals(m, unpack_light(plus.data()), rp);
      data.residuals(m, unpack_light(minus.data()), rm);
      const double scale = J.col(k).cwiseAbs().maxCoeff();
      for (std::size_t i = 0; i < rp.size(); ++i) {
        const double num = (rp[i] - rm[i]) / (2 * h);
        worst = std::max(worst, std::abs(num - J(static_cast<Eigen::Index>(i), k)) / std::max(scale, 1e-12));
      }
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("calibrating from the truth stays at the truth") {
  const auto truth = calibration_leds(4, 10);
  const auto p = make_problem(truth, default_calibration_planes(), 32);
  CalibrateOptions o;
  o.epochs = 50;
  const auto r = calibrate(p, o);
  REQUIRE(r.loss_history.size() >= 2);
  CHECK(r.loss_history.front() < 1e-9);
  for (std::size_t i = 1; i < r.loss_history.size(); ++i) CHECK(r.loss_history[i] <= r.loss_history[i - 1] + 1e-12);
}

TEST_CASE("calibration reduces the loss and warns on a single pose") {
  const auto truth = calibration_leds(4, 11);
  auto p = make_problem(truth, default_calibration_planes(), 32);
  p.init = calibration_initial_guess(truth, 0.005, 0.1, 3);
  CalibrateOptions o;
  o.epochs = 200;
  const auto r = calibrate(p, o);
  CHECK_FALSE(r.diverged);
  CHECK(r.loss_history.back() < r.loss_history.front());
  CHECK(calib_l1(r.lights, p) <= calib_l1(p.init, p));
  CHECK(r.warnings.empty());

  auto single = make_problem(truth, {default_calibration_planes()[0]}, 32);
  single.init = p.init;
  o.epochs = 5;
  const auto rs = calibrate(single, o);
  CHECK_FALSE(rs.warnings.empty());
}

TEST_CASE("problem validation") {
  const auto truth = calibration_leds(2, 1);
  auto p = make_problem(truth, default_calibration_planes(), 16);
  CHECK_NOTHROW(p.validate());
  p.init.pop_back();
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = make_problem(truth, default_calibration_planes(), 16);
  p.captures.clear();
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
