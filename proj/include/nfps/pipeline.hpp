// Copyright 2026 The nfps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "nfps/calibration.hpp"
#include "nfps/integrator.hpp"
#include "nfps/regressor.hpp"

#include <optional>
#include <vector>

namespace nfps {

struct ReconstructionConfig {
  int iterations = 2;
  double mean_distance = 1.0;  // metres, depth of the initial plane
  int d = 32;
  IntegratorConfig integrator;

  void validate() const;
};

struct IterationRecord {
  double normal_change_deg = 0.0;  // mean angle to the previous normals (first iteration: those of the initial depth)
  int pixels = 0;                  // pixels with a prediction
  int integrator_iterations = 0;
};

struct Reconstruction {
  DepthMap depth;
  NormalMap normals_cnn;  // regressor output of the last iteration
  NormalMap normals_nfs;  // differentiated final depth
  std::vector<IterationRecord> history;
  std::vector<DepthMap> depth_history;  // depth after each iteration
};

/// Alternates compensation under the current depth, regression and integration, starting from a
/// fronto-parallel plane at cfg.mean_distance (or `init` when given).
Reconstruction reconstruct(const ImageStack& images, const Mask& mask, const CalibrationFile& calib,
                           const NormalRegressor& regressor, const ReconstructionConfig& cfg,
                           const std::optional<DepthMap>& init = std::nullopt);

/// Same loop on intensities divided only by each light's brightness, with one fixed direction per
/// light taken at the mask centroid back-projected to cfg.mean_distance.
Reconstruction naive_reconstruct(const ImageStack& images, const Mask& mask, const CalibrationFile& calib,
                                 const NormalRegressor& regressor, const ReconstructionConfig& cfg);

struct EvalReport {
  double mae_cnn = 0.0;  // degrees
  double mae_nfs = 0.0;  // degrees, normals differentiated from the predicted depth
  double mze_mm = 0.0;
  int pixels = 0;
  Grid<double> normal_error;  // degrees, NaN outside the evaluation mask
  Grid<double> depth_error;   // millimetres
};

/// Errors over mask & prediction & ground truth. With align_mean_z the mean depth offset is removed first.
/// Throws std::invalid_argument on shape mismatch or an empty evaluation mask.
EvalReport evaluate(const CameraIntrinsics& cam, const DepthMap& pred_depth, const NormalMap& pred_normals,
                    const DepthMap& gt_depth, const NormalMap& gt_normals, const Mask& mask, bool align_mean_z = false);

/// Mean angle in degrees between two normal maps over their common pixels (0 when none).
double mean_normal_difference(const NormalMap& a, const NormalMap& b);

}  // namespace nfps
