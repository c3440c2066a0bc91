// Copyright 2026 The nfps Authors
// SPDX-License-Identifier: Apache-2.0

#include "nfps/geometry.hpp"

#include <cmath>
#include <optional>
#include <string>

namespace nfps {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw std::invalid_argument("camera: focal lengths must be positive");
  if (width <= 0 || height <= 0) throw std::invalid_argument("camera: image size must be positive");
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height))
    throw std::invalid_argument("camera: principal point outside the image");
}

CameraIntrinsics CameraIntrinsics::from_normalized(double f_norm, int width, int height) {
  CameraIntrinsics cam;
  cam.fx = cam.fy = f_norm * 0.5 * width;
  cam.cx = 0.5 * (width - 1);
  cam.cy = 0.5 * (height - 1);
  cam.width = width;
  cam.height = height;
  return cam;
}

Vec3 back_project(const CameraIntrinsics& cam, double u, double v, double z) {
  if (!(z > 0.0)) throw std::domain_error("back_project: depth must be positive, got " + std::to_string(z));
  return {(u - cam.cx) * z / cam.fx, (v - cam.cy) * z / cam.fy, z};
}

std::pair<double, double> project(const CameraIntrinsics& cam, const Vec3& X) {
  if (!(X.z() > 0.0)) throw std::domain_error("project: point behind the camera");
  return {cam.fx * X.x() / X.z() + cam.cx, cam.fy * X.y() / X.z() + cam.cy};
}

Vec3 viewing_vector(const CameraIntrinsics& cam, double u, double v, double z) {
  return -back_project(cam, u, v, z).normalized();
}

Vec3 orient_to_camera(const Vec3& n) { return n.z() > 0.0 ? Vec3(-n) : n; }

NormalMap normals_from_depth(const CameraIntrinsics& cam, const DepthMap& depth) {
  const int W = depth.width(), H = depth.height();
  NormalMap out{Grid<Vec3>(W, H, Vec3(0, 0, -1)), Mask(W, H, 0)};

  auto point = [&](int x, int y) -> std::optional<Vec3> {
    if (!depth.valid(x, y)) return std::nullopt;
    return back_project(cam, x, y, depth.values(x, y));
  };
  // central difference when both neighbours exist, one-sided otherwise
  auto tangent = [&](const Vec3& c, const std::optional<Vec3>& prev, const std::optional<Vec3>& next) -> std::optional<Vec3> {
    if (prev && next) return Vec3(0.5 * (*next - *prev));
    if (next) return Vec3(*next - c);
    if (prev) return Vec3(c - *prev);
    return std::nullopt;
  };

  parallel_for(static_cast<std::size_t>(H), [&](std::size_t y0, std::size_t y1) {
    for (int y = static_cast<int>(y0); y < static_cast<int>(y1); ++y)
      for (int x = 0; x < W; ++x) {
        auto c = point(x, y);
        if (!c) continue;
        auto tu = tangent(*c, point(x - 1, y), point(x + 1, y));
        auto tv = tangent(*c, point(x, y - 1), point(x, y + 1));
        if (!tu || !tv) continue;
        Vec3 n = tu->cross(*tv);
        const double len = n.norm();
        if (!(len > 1e-300) || !std::isfinite(len)) continue;
        out.values(x, y) = orient_to_camera(n / len);
        out.mask(x, y) = 1;
      }
  });
  return out;
}

DepthMap flat_plane_init(const CameraIntrinsics& cam, const Mask& mask, double mean_distance) {
  if (!(mean_distance > 0.0)) throw std::domain_error("flat_plane_init: mean distance must be positive");
  if (!mask.same_shape(cam.width, cam.height) && mask.size() != 0)
    throw std::invalid_argument("flat_plane_init: mask does not match the camera size");
  DepthMap d{Grid<double>(mask.width, mask.height, 0.0), mask};
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask.data[i]) d.values.data[i] = mean_distance;
  return d;
}

}  // namespace nfps
