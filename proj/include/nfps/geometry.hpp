// Copyright 2026 The nfps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "nfps/common.hpp"

#include <utility>

namespace nfps {

/// Pinhole camera in pixel units. Camera at the origin, x right, y down, z forward.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  /// Throws std::invalid_argument when the invariants do not hold.
  void validate() const;

  /// Focal length relative to half the sensor width (f = 1 is fish-eye, f = 10 near orthographic).
  double normalized_focal() const { return fx / (0.5 * width); }

  /// Builds a camera with principal point at the image centre from a normalized focal length.
  static CameraIntrinsics from_normalized(double f_norm, int width, int height);
};

/// Depth is the z coordinate (not ray length), positive into the scene.
struct DepthMap {
  Grid<double> values;
  Mask mask;

  int width() const { return values.width; }
  int height() const { return values.height; }
  bool valid(int x, int y) const { return masked(mask, x, y); }
};

/// Unit normals in camera coordinates, facing the camera (n_z <= 0).
struct NormalMap {
  Grid<Vec3> values;
  Mask mask;

  int width() const { return values.width; }
  int height() const { return values.height; }
  bool valid(int x, int y) const { return masked(mask, x, y); }
};

Vec3 back_project(const CameraIntrinsics& cam, double u, double v, double z);
std::pair<double, double> project(const CameraIntrinsics& cam, const Vec3& X);

/// -X/|X| for the back-projected point; independent of z.
Vec3 viewing_vector(const CameraIntrinsics& cam, double u, double v, double z = 1.0);

/// Flips n so that n_z <= 0.
Vec3 orient_to_camera(const Vec3& n);

NormalMap normals_from_depth(const CameraIntrinsics& cam, const DepthMap& depth);
DepthMap flat_plane_init(const CameraIntrinsics& cam, const Mask& mask, double mean_distance);

}  // namespace nfps
