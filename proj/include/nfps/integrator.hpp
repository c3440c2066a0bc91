// Copyright 2026 The nfps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "nfps/geometry.hpp"

#include <vector>

namespace nfps {

struct IntegratorConfig {
  double lambda = 1e-6;        // Tikhonov weight towards the previous log-depth
  double admm_penalty = 1.0;   // beta
  int max_iters = 300;
  double tol = 1e-6;

  void validate() const;
};

/// Target gradient (p, q) of w = log z with respect to pixel coordinates (u, v).
struct GradientField {
  Grid<double> p;
  Grid<double> q;
  Mask mask;
};

/// Perspective normal-to-log-depth-gradient conversion. Pixels whose normal is within ~87 degrees
/// of perpendicular to the viewing ray (|cos| < 0.05) are masked out.
GradientField normals_to_gradients(const CameraIntrinsics& cam, const NormalMap& normals);

struct IntegrationResult {
  DepthMap depth;
  std::vector<double> objective;  // per outer iteration, of the best iterate so far
  int iterations = 0;
  bool converged = false;
};

/// min_w sum |grad w - g|_1 + lambda sum (w - log z0)^2 with forward differences and
/// Neumann boundaries on the mask, solved by ADMM. Returns exp(w).
IntegrationResult integrate_detailed(const GradientField& grad, const DepthMap& z0, const IntegratorConfig& cfg = {});

DepthMap integrate(const GradientField& grad, const DepthMap& z0, const IntegratorConfig& cfg = {});

/// The objective above evaluated for a depth map on the integration domain.
double integration_objective(const GradientField& grad, const DepthMap& z, const DepthMap& z0, double lambda);

}  // namespace nfps
