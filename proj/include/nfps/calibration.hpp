// Copyright 2026 The nfps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "nfps/lighting.hpp"

#include <string>
#include <vector>

namespace nfps {

/// Camera and per-LED parameters as stored beside a dataset.
struct CalibrationFile {
  int version = 1;
  CameraIntrinsics camera;
  std::vector<PointLight> lights;

  void validate() const;
};

std::string calibration_to_text(const CalibrationFile& f);
CalibrationFile calibration_from_text(const std::string& text);
CalibrationFile read_calibration(const std::string& path);
void write_calibration(const std::string& path, const CalibrationFile& f);

/// Plane n.X = n.point in the camera frame, normal facing the camera.
struct PlanePose {
  Vec3 point;
  Vec3 normal;
};

std::vector<PlanePose> read_planes(const std::string& path);
void write_planes(const std::string& path, const std::vector<PlanePose>& planes);

/// One capture of the reference plane: one image per light.
struct PlaneCapture {
  PlanePose plane;
  ImageStack images;
  Mask mask;  // empty means every pixel
};

struct CalibrationProblem {
  CameraIntrinsics cam;
  std::vector<PlaneCapture> captures;
  std::vector<PointLight> init;
  double albedo = 0.5;
  double saturation = 0.98;  // observed values at or above are excluded
  int stride = 1;            // pixel subsampling of the captures

  void validate() const;
};

/// Number of parameters per light: position(3), brightness(3), direction(3), mu(1).
constexpr int kCalibParamsPerLight = 10;

std::vector<double> pack_light(const PointLight& l);
PointLight unpack_light(const double* p);

/// Precomputed per-pixel plane geometry and observations for fast residual evaluation.
class CalibrationData {
 public:
  explicit CalibrationData(const CalibrationProblem& problem);

  std::size_t light_count() const { return per_light_.size(); }
  std::size_t residual_count(std::size_t light) const { return per_light_[light].obs.size(); }
  std::size_t residual_count() const;

  /// predicted - observed for one light, ordered (pixel, channel) over included samples.
  void residuals(std::size_t light, const PointLight& l, std::vector<double>& out) const;

  /// Residuals and their Jacobian (rows = residuals, cols = kCalibParamsPerLight).
  void jacobian(std::size_t light, const PointLight& l, std::vector<double>& res, Eigen::MatrixXd& J) const;

  double albedo() const { return albedo_; }

 private:
  struct Samples {
    std::vector<Vec3> X;
    std::vector<Vec3> N;
    std::vector<int> channel;
    std::vector<double> obs;
  };
  std::vector<Samples> per_light_;
  double albedo_;
};

/// All residuals of all lights, concatenated in light order.
std::vector<double> calib_residuals(const std::vector<PointLight>& lights, const CalibrationProblem& problem);

/// Predicted plane irradiance phi * g * albedo * max(0, L.N) for one channel.
double calib_predict(const PointLight& l, int channel, const Vec3& X, const Vec3& N, double albedo);

struct CalibrateOptions {
  int epochs = 1000;  // full-batch optimizer steps
  double lr = 1e-2;  // step in scaled units: centimetres, relative brightness, radians, mu
  double huber_delta = 1e-4;
};

struct CalibrationResult {
  std::vector<PointLight> lights;
  std::vector<double> loss_history;  // mean L1 per step, of the returned estimate, entry 0 at the initialization
  std::vector<std::string> warnings;
  bool diverged = false;  // a non-finite loss stopped the run
};

/// Mean absolute residual.
double calib_l1(const std::vector<PointLight>& lights, const CalibrationProblem& problem);

CalibrationResult calibrate(const CalibrationProblem& problem, const CalibrateOptions& opts = {});

/// Smallest over largest singular value of each light's Jacobian at `lights`.
std::vector<double> calibration_conditioning(const std::vector<PointLight>& lights, const CalibrationProblem& problem);

/// Renders the calibration model over a plane capture (used to synthesize problems).
ImageStack render_plane_captures(const CameraIntrinsics& cam, const PlanePose& plane, const std::vector<PointLight>& lights,
                                 double albedo);

}  // namespace nfps
