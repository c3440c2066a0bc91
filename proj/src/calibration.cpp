// Copyright 2026 The nfps Authors
// SPDX-License-Identifier: Apache-2.0

#include "nfps/calibration.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/SVD>

#include <array>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

namespace nfps {

using nlohmann::json;

namespace {

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
json rgb_json(const Rgb& v) { return json::array({v[0], v[1], v[2]}); }

Vec3 json_vec(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument(std::string("calibration: ") + what + " must be a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace

void CalibrationFile::validate() const {
  if (version != 1) throw std::invalid_argument("calibration: unsupported version " + std::to_string(version));
  camera.validate();
  if (lights.empty()) throw std::invalid_argument("calibration: no lights");
  for (std::size_t i = 0; i < lights.size(); ++i) try {
      lights[i].validate();
    } catch (const std::exception& e) {
      throw std::invalid_argument("calibration: light " + std::to_string(i) + ": " + e.what());
    }
}

std::string calibration_to_text(const CalibrationFile& f) {
  json j;
  j["version"] = f.version;
  j["camera"] = {{"fx", f.camera.fx}, {"fy", f.camera.fy}, {"cx", f.camera.cx},
                 {"cy", f.camera.cy}, {"width", f.camera.width}, {"height", f.camera.height}};
  j["lights"] = json::array();
  for (const auto& l : f.lights)
    j["lights"].push_back({{"position", vec_json(l.position)}, {"phi", rgb_json(l.brightness)}, {"direction", vec_json(l.direction)}, {"mu", l.mu}});
  return j.dump(2) + "\n";
}

CalibrationFile calibration_from_text(const std::string& text) {
  CalibrationFile f;
  try {
    const json j = json::parse(text);
    f.version = j.at("version").get<int>();
    const json& c = j.at("camera");
    f.camera.fx = c.at("fx").get<double>();
    f.camera.fy = c.at("fy").get<double>();
    f.camera.cx = c.at("cx").get<double>();
    f.camera.cy = c.at("cy").get<double>();
    f.camera.width = c.at("width").get<int>();
    f.camera.height = c.at("height").get<int>();
    for (const auto& jl : j.at("lights")) {
      PointLight l;
      l.position = json_vec(jl.at("position"), "position");
      const Vec3 phi = json_vec(jl.at("phi"), "phi");
      l.brightness = Rgb(phi.x(), phi.y(), phi.z());
      l.direction = json_vec(jl.at("direction"), "direction");
      l.mu = jl.at("mu").get<double>();
      f.lights.push_back(l);
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("calibration: ") + e.what());
  }
  f.validate();
  return f;
}

CalibrationFile read_calibration(const std::string& path) {
  try {
    return calibration_from_text(read_text(path));
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

void write_calibration(const std::string& path, const CalibrationFile& f) {
  f.validate();
  write_text(path, calibration_to_text(f));
}

std::vector<PlanePose> read_planes(const std::string& path) {
  std::vector<PlanePose> planes;
  try {
    const json j = json::parse(read_text(path));
    for (const auto& jp : j.at("planes"))
      planes.push_back({json_vec(jp.at("point"), "point"), json_vec(jp.at("normal"), "normal")});
  } catch (const json::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  for (const auto& p : planes)
    if (!(p.normal.norm() > 0.0)) throw std::invalid_argument(path + ": plane normal must be non-zero");
  return planes;
}

void write_planes(const std::string& path, const std::vector<PlanePose>& planes) {
  json j;
  j["planes"] = json::array();
  for (const auto& p : planes) j["planes"].push_back({{"point", vec_json(p.point)}, {"normal", vec_json(p.normal)}});
  write_text(path, j.dump(2) + "\n");
}

void CalibrationProblem::validate() const {
  cam.validate();
  if (captures.empty()) throw std::invalid_argument("calibration: no plane captures");
  if (init.empty()) throw std::invalid_argument("calibration: no initial lights");
  for (const auto& l : init)
    if (!(l.brightness > 0.0).all()) throw std::invalid_argument("calibration: initial brightness must be positive");
  if (!(albedo > 0.0)) throw std::invalid_argument("calibration: albedo must be positive");
  if (stride < 1) throw std::invalid_argument("calibration: stride must be >= 1");
  for (const auto& c : captures) {
    if (c.images.size() != init.size()) throw std::invalid_argument("calibration: each capture needs one image per light");
    for (const auto& img : c.images)
      if (!img.same_shape(cam.width, cam.height)) throw std::invalid_argument("calibration: capture size differs from the camera");
    if (c.mask.width != 0 && !c.mask.same_shape(cam.width, cam.height)) throw std::invalid_argument("calibration: mask size differs");
    if (!(c.plane.normal.norm() > 0.0)) throw std::invalid_argument("calibration: plane normal must be non-zero");
  }
}

std::vector<double> pack_light(const PointLight& l) {
  return {l.position.x(), l.position.y(), l.position.z(), l.brightness[0], l.brightness[1], l.brightness[2],
          l.direction.x(), l.direction.y(), l.direction.z(), l.mu};
}

PointLight unpack_light(const double* p) {
  PointLight l;
  l.position = Vec3(p[0], p[1], p[2]);
  l.brightness = Rgb(p[3], p[4], p[5]);
  l.direction = Vec3(p[6], p[7], p[8]);
  l.mu = p[9];
  return l;
}

double calib_predict(const PointLight& l, int channel, const Vec3& X, const Vec3& N, double albedo) {
  const Vec3 L = l.position - X;
  const double d = L.norm();
  const Vec3 Lh = L / d;
  const double c = -Lh.dot(l.direction);
  const double h = Lh.dot(N);
  if (c <= 0.0 || h <= 0.0) return 0.0;
  const double aniso = l.mu == 0.0 ? 1.0 : std::pow(c, l.mu);
  return l.brightness[channel] * albedo * aniso * h / (d * d);
}

namespace {

// Point on the plane seen through pixel (x, y), or nullopt when the ray misses it.
std::optional<Vec3> plane_point(const CameraIntrinsics& cam, const PlanePose& plane, int x, int y) {
  const Vec3 r((x - cam.cx) / cam.fx, (y - cam.cy) / cam.fy, 1.0);
  const Vec3 n = plane.normal.normalized();
  const double denom = n.dot(r);
  if (std::abs(denom) < 1e-12) return std::nullopt;
  const double t = n.dot(plane.point) / denom;
  if (!(t > 0.0)) return std::nullopt;
  return t * r;
}

}  // namespace

CalibrationData::CalibrationData(const CalibrationProblem& problem) : albedo_(problem.albedo) {
  problem.validate();
  const auto& cam = problem.cam;
  per_light_.resize(problem.init.size());
  for (const auto& cap : problem.captures) {
    const Vec3 N = orient_to_camera(cap.plane.normal.normalized());
    for (int y = 0; y < cam.height; y += problem.stride)
      for (int x = 0; x < cam.width; x += problem.stride) {
        if (cap.mask.width != 0 && !cap.mask(x, y)) continue;
        const auto X = plane_point(cam, cap.plane, x, y);
        if (!X) continue;
        for (std::size_t m = 0; m < per_light_.size(); ++m) {
          const Rgb& obs = cap.images[m](x, y);
          for (int c = 0; c < 3; ++c) {
            if (obs[c] >= problem.saturation) continue;
            auto& s = per_light_[m];
            s.X.push_back(*X);
            s.N.push_back(N);
            s.channel.push_back(c);
            s.obs.push_back(obs[c]);
          }
        }
      }
  }
}

std::size_t CalibrationData::residual_count() const {
  std::size_t n = 0;
  for (const auto& s : per_light_) n += s.obs.size();
  return n;
}

void CalibrationData::residuals(std::size_t light, const PointLight& l, std::vector<double>& out) const {
  const auto& s = per_light_[light];
  out.resize(s.obs.size());
  for (std::size_t k = 0; k < s.obs.size(); ++k) out[k] = calib_predict(l, s.channel[k], s.X[k], s.N[k], albedo_) - s.obs[k];
}

void CalibrationData::jacobian(std::size_t light, const PointLight& l, std::vector<double>& res, Eigen::MatrixXd& J) const {
  const auto& s = per_light_[light];
  const std::size_t n = s.obs.size();
  res.resize(n);
  J.setZero(static_cast<Eigen::Index>(n), kCalibParamsPerLight);
  const Vec3& D = l.direction;
  for (std::size_t k = 0; k < n; ++k) {
    const Vec3 L = l.position - s.X[k];
    const double d = L.norm();
    const Vec3 Lh = L / d;
    const double c = -Lh.dot(D);
    const double h = Lh.dot(s.N[k]);
    const int ch = s.channel[k];
    if (c <= 0.0 || h <= 0.0) {
      res[k] = -s.obs[k];
      continue;
    }
    const double phi = l.brightness[ch];
    const double inv_d2 = 1.0 / (d * d);
    const double cm = l.mu == 0.0 ? 1.0 : std::pow(c, l.mu);
    const double dcm = l.mu == 0.0 ? 0.0 : l.mu * std::pow(c, l.mu - 1.0);
    const double pred = phi * albedo_ * cm * h * inv_d2;
    res[k] = pred - s.obs[k];

    // dLh/dP = (I - Lh Lh^T) / d
    const Vec3 dc_dP = -(D - Lh * Lh.dot(D)) / d;
    const Vec3 dh_dP = (s.N[k] - Lh * h) / d;
    const Vec3 dinvd2_dP = -2.0 * inv_d2 / d * Lh;
    const double k0 = phi * albedo_;
    const Vec3 dP = k0 * (dcm * h * inv_d2 * dc_dP + cm * h * dinvd2_dP + cm * inv_d2 * dh_dP);
    const Eigen::Index r = static_cast<Eigen::Index>(k);
    J.block<1, 3>(r, 0) = dP.transpose();
    J(r, 3 + ch) = albedo_ * cm * h * inv_d2;
    J.block<1, 3>(r, 6) = (k0 * dcm * h * inv_d2 * -Lh).transpose();
    J(r, 9) = k0 * cm * std::log(c) * h * inv_d2;
  }
}

std::vector<double> calib_residuals(const std::vector<PointLight>& lights, const CalibrationProblem& problem) {
  if (lights.size() != problem.init.size()) throw std::invalid_argument("calib_residuals: light count differs from the problem");
  const CalibrationData data(problem);
  std::vector<double> all, r;
  for (std::size_t m = 0; m < lights.size(); ++m) {
    data.residuals(m, lights[m], r);
    all.insert(all.end(), r.begin(), r.end());
  }
  return all;
}

double calib_l1(const std::vector<PointLight>& lights, const CalibrationProblem& problem) {
  const auto r = calib_residuals(lights, problem);
  double s = 0.0;
  for (double v : r) s += std::abs(v);
  return r.empty() ? 0.0 : s / static_cast<double>(r.size());
}

std::vector<double> calibration_conditioning(const std::vector<PointLight>& lights, const CalibrationProblem& problem) {
  const CalibrationData data(problem);
  std::vector<double> out(lights.size(), 0.0);
  std::vector<double> res;
  Eigen::MatrixXd J;
  for (std::size_t m = 0; m < lights.size(); ++m) {
    data.jacobian(m, lights[m], res, J);
    // direction restricted to its tangent plane (its length only trades against brightness),
    // columns scaled to unit norm so the ratio is independent of parameter units
    const Vec3 D = lights[m].direction.normalized();
    const Vec3 t1 = D.unitOrthogonal(), t2 = D.cross(t1);
    Eigen::MatrixXd Jr(J.rows(), kCalibParamsPerLight - 1);
    Jr << J.leftCols(6), J.middleCols(6, 3) * t1, J.middleCols(6, 3) * t2, J.col(9);
    J = Jr;
    for (Eigen::Index c = 0; c < J.cols(); ++c) {
      const double nrm = J.col(c).norm();
      if (nrm > 0.0) J.col(c) /= nrm;
    }
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(JtJ);
    const auto& sv = svd.singularValues();
    out[m] = sv[0] > 0.0 ? std::sqrt(sv[sv.size() - 1] / sv[0]) : 0.0;
  }
  return out;
}

CalibrationResult calibrate(const CalibrationProblem& problem, const CalibrateOptions& opts) {
  if (opts.epochs < 0 || !(opts.lr > 0.0) || !(opts.huber_delta > 0.0))
    throw std::invalid_argument("calibrate: epochs >= 0, lr > 0 and huber_delta > 0 required");
  const CalibrationData data(problem);
  const std::size_t M = problem.init.size();
  const double total = static_cast<double>(data.residual_count());
  if (total == 0.0) throw std::invalid_argument("calibrate: no usable pixels");

  CalibrationResult out;
  out.lights = problem.init;
  for (auto& l : out.lights) l.direction.normalize();

  if (problem.captures.size() < 2)
    out.warnings.push_back("a single plane pose leaves light distance and brightness nearly interchangeable; use two or more poses");
  const auto cond = calibration_conditioning(out.lights, problem);
  for (std::size_t m = 0; m < M; ++m)
    if (cond[m] < 5e-3) out.warnings.push_back("light " + std::to_string(m) + " is poorly constrained (conditioning " + std::to_string(cond[m]) + ")");

  // Adam in scaled coordinates: positions in centimetres, brightness relative to its start.
  std::vector<std::array<double, kCalibParamsPerLight>> scale(M);
  for (std::size_t m = 0; m < M; ++m) {
    const auto& l = out.lights[m];
    scale[m] = {0.01, 0.01, 0.01, l.brightness[0], l.brightness[1], l.brightness[2], 1.0, 1.0, 1.0, 1.0};
  }
  std::vector<std::array<double, kCalibParamsPerLight>> m1(M), m2(M);
  for (std::size_t m = 0; m < M; ++m) {
    m1[m].fill(0.0);
    m2[m].fill(0.0);
  }
  const double b1 = 0.9, b2 = 0.999, eps = 1e-12;

  using ParamArray = std::vector<double>;
  auto evaluate = [&](const std::vector<PointLight>& lights, ParamArray& l1, ParamArray& grads) {
    parallel_for(M, [&](std::size_t b, std::size_t e) {
      std::vector<double> res;
      Eigen::MatrixXd J;
      for (std::size_t m = b; m < e; ++m) {
        data.jacobian(m, lights[m], res, J);
        double s = 0.0;
        Eigen::VectorXd w(static_cast<Eigen::Index>(res.size()));
        for (std::size_t k = 0; k < res.size(); ++k) {
          s += std::abs(res[k]);
          // derivative of the Huber loss
          w[static_cast<Eigen::Index>(k)] = std::abs(res[k]) <= opts.huber_delta ? res[k] / opts.huber_delta : (res[k] > 0 ? 1.0 : -1.0);
        }
        l1[m] = s;
        const Eigen::VectorXd g = J.transpose() * w / total;
        const Vec3 D = lights[m].direction;
        const Vec3 gD = g.segment<3>(6) - D * D.dot(g.segment<3>(6));
        for (int p = 0; p < kCalibParamsPerLight; ++p) grads[m * kCalibParamsPerLight + p] = p >= 6 && p < 9 ? gD[p - 6] : g[p];
      }
    });
  };
  auto mean_l1 = [&](const ParamArray& l1) {
    double s = 0.0;
    for (double v : l1) s += v;
    return s / total;
  };

  // Adam follows its own trajectory; each light reports its best iterate so far.
  ParamArray l1(M), grads(M * kCalibParamsPerLight);
  evaluate(out.lights, l1, grads);
  ParamArray best_l1 = l1;
  std::vector<PointLight> current = out.lights;
  out.loss_history.push_back(mean_l1(best_l1));
  for (int step = 1; step <= opts.epochs; ++step) {
    // cosine decay to 1% of the base rate
    const double frac = opts.epochs > 1 ? (step - 1.0) / (opts.epochs - 1.0) : 0.0;
    const double lr = opts.lr * (0.01 + 0.99 * 0.5 * (1.0 + std::cos(kPi * frac)));
    for (std::size_t m = 0; m < M; ++m) {
      std::vector<double> p = pack_light(current[m]);
      for (int k = 0; k < kCalibParamsPerLight; ++k) {
        const double g = grads[m * kCalibParamsPerLight + k] * scale[m][k];
        m1[m][k] = b1 * m1[m][k] + (1 - b1) * g;
        m2[m][k] = b2 * m2[m][k] + (1 - b2) * g * g;
        const double mh = m1[m][k] / (1 - std::pow(b1, step));
        const double vh = m2[m][k] / (1 - std::pow(b2, step));
        p[k] -= lr * scale[m][k] * mh / (std::sqrt(vh) + eps);
      }
      PointLight l = unpack_light(p.data());
      if (l.direction.norm() > 0.0) l.direction.normalize();
      l.mu = std::max(0.0, l.mu);
      for (int c = 0; c < 3; ++c) l.brightness[c] = std::max(l.brightness[c], 1e-12);
      current[m] = l;
    }
    evaluate(current, l1, grads);
    for (std::size_t m = 0; m < M; ++m) {
      if (!std::isfinite(l1[m])) {
        out.diverged = true;
      } else if (l1[m] <= best_l1[m]) {
        best_l1[m] = l1[m];
        out.lights[m] = current[m];
      }
    }
    out.loss_history.push_back(mean_l1(best_l1));
    if (out.diverged) break;
  }
  return out;
}

ImageStack render_plane_captures(const CameraIntrinsics& cam, const PlanePose& plane, const std::vector<PointLight>& lights,
                                 double albedo) {
  cam.validate();
  const Vec3 N = orient_to_camera(plane.normal.normalized());
  ImageStack out(lights.size(), Image(cam.width, cam.height, Rgb::Zero()));
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x) {
      const auto X = plane_point(cam, plane, x, y);
      if (!X) continue;
      for (std::size_t m = 0; m < lights.size(); ++m)
        for (int c = 0; c < 3; ++c) out[m](x, y)[c] = calib_predict(lights[m], c, *X, N, albedo);
    }
  return out;
}

}  // namespace nfps
