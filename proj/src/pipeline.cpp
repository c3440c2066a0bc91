// Copyright 2026 The nfps Authors
// SPDX-License-Identifier: Apache-2.0

#include "nfps/pipeline.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

namespace nfps {

void ReconstructionConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("ReconstructionConfig: iterations must be at least 1");
  if (!(mean_distance > 0.0) || !std::isfinite(mean_distance))
    throw std::invalid_argument("ReconstructionConfig: mean_distance must be positive");
  if (d < 2) throw std::invalid_argument("ReconstructionConfig: d must be at least 2");
  integrator.validate();
}

double mean_normal_difference(const NormalMap& a, const NormalMap& b) {
  if (!a.mask.same_shape(b.mask)) throw std::invalid_argument("mean_normal_difference: shape mismatch");
  double sum = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x)
      if (a.valid(x, y) && b.valid(x, y)) {
        sum += angular_loss(a.values(x, y), b.values(x, y));
        ++n;
      }
  return n ? rad2deg(sum / static_cast<double>(n)) : 0.0;
}

namespace {

using MapBuilder = std::function<std::optional<ObservationMap>(int x, int y, double z)>;

void check_inputs(const ImageStack& images, const Mask& mask, const CalibrationFile& calib) {
  calib.validate();
  if (images.size() != calib.lights.size())
    throw std::invalid_argument("reconstruct: " + std::to_string(images.size()) + " images but " +
                                std::to_string(calib.lights.size()) + " calibrated lights");
  const auto& cam = calib.camera;
  if (!mask.same_shape(cam.width, cam.height))
    throw std::invalid_argument("reconstruct: mask size does not match the camera");
  for (const auto& img : images)
    if (!img.same_shape(cam.width, cam.height))
      throw std::invalid_argument("reconstruct: image size does not match the camera");
  if (mask_count(mask) == 0) throw std::invalid_argument("reconstruct: mask is empty");
}

Reconstruction run_loop(const CalibrationFile& calib, const Mask& mask, const NormalRegressor& regressor,
                        const ReconstructionConfig& cfg, DepthMap depth, const MapBuilder& build) {
  const auto& cam = calib.camera;
  const int W = cam.width, H = cam.height;
  Reconstruction out;
  NormalMap previous = normals_from_depth(cam, depth);

  for (int it = 0; it < cfg.iterations; ++it) {
    std::vector<std::pair<int, int>> pixels;
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x)
        if (masked(mask, x, y) && depth.valid(x, y)) pixels.emplace_back(x, y);

    NormalMap normals{Grid<Vec3>(W, H, Vec3(0, 0, -1)), Mask(W, H, 0)};
    constexpr std::size_t kChunk = 4096;
    std::vector<ObservationMap> maps;
    std::vector<std::uint8_t> ok;
    for (std::size_t c0 = 0; c0 < pixels.size(); c0 += kChunk) {
      const std::size_t n = std::min(kChunk, pixels.size() - c0);
      maps.assign(n, ObservationMap());
      ok.assign(n, 0);
      parallel_for(n, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
          const auto [x, y] = pixels[c0 + i];
          if (auto m = build(x, y, depth.values(x, y))) {
            maps[i] = std::move(*m);
            ok[i] = 1;
          }
        }
      });
      std::vector<ObservationMap> valid_maps;
      std::vector<std::size_t> where;
      for (std::size_t i = 0; i < n; ++i)
        if (ok[i]) {
          valid_maps.push_back(std::move(maps[i]));
          where.push_back(c0 + i);
        }
      const auto pred = regressor.try_predict_batch(valid_maps);
      for (std::size_t k = 0; k < where.size(); ++k) {
        if (!pred[k] || !pred[k]->allFinite()) continue;
        const auto [x, y] = pixels[where[k]];
        normals.values(x, y) = orient_to_camera(pred[k]->normalized());
        normals.mask(x, y) = 1;
      }
    }

    IterationRecord rec;
    rec.pixels = static_cast<int>(mask_count(normals.mask));
    if (rec.pixels == 0) throw std::runtime_error("reconstruct: no pixel produced a normal");
    rec.normal_change_deg = mean_normal_difference(normals, previous);

    const auto integ = integrate_detailed(normals_to_gradients(cam, normals), depth, cfg.integrator);
    rec.integrator_iterations = integ.iterations;
    depth = integ.depth;
    out.history.push_back(rec);
    out.depth_history.push_back(depth);
    previous = normals;
    out.normals_cnn = std::move(normals);
  }
  out.depth = depth;
  out.normals_nfs = normals_from_depth(cam, depth);
  return out;
}

}  // namespace

Reconstruction reconstruct(const ImageStack& images, const Mask& mask, const CalibrationFile& calib,
                           const NormalRegressor& regressor, const ReconstructionConfig& cfg,
                           const std::optional<DepthMap>& init) {
  cfg.validate();
  check_inputs(images, mask, calib);
  const auto& cam = calib.camera;
  DepthMap depth = init ? *init : flat_plane_init(cam, mask, cfg.mean_distance);
  if (!depth.mask.same_shape(cam.width, cam.height))
    throw std::invalid_argument("reconstruct: initial depth size does not match the camera");

  const auto& lights = calib.lights;
  MapBuilder build = [&](int x, int y, double z) -> std::optional<ObservationMap> {
    std::vector<Rgb> intensities(images.size());
    for (std::size_t m = 0; m < images.size(); ++m) intensities[m] = images[m](x, y);
    try {
      return observe(intensities, back_project(cam, x, y, z), lights, cfg.d);
    } catch (const std::domain_error&) {
      return std::nullopt;
    }
  };
  return run_loop(calib, mask, regressor, cfg, std::move(depth), build);
}

Reconstruction naive_reconstruct(const ImageStack& images, const Mask& mask, const CalibrationFile& calib,
                                 const NormalRegressor& regressor, const ReconstructionConfig& cfg) {
  cfg.validate();
  check_inputs(images, mask, calib);
  const auto& cam = calib.camera;

  double su = 0.0, sv = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask(x, y)) {
        su += x;
        sv += y;
        ++n;
      }
  const Vec3 centroid = back_project(cam, su / n, sv / n, cfg.mean_distance);
  std::vector<Vec3> dirs;
  for (const auto& l : calib.lights) dirs.push_back(lighting_vector(l, centroid).dir);
  std::vector<Rgb> phi;
  for (const auto& l : calib.lights) phi.push_back(l.brightness);

  MapBuilder build = [&](int x, int y, double) -> std::optional<ObservationMap> {
    std::vector<MapSample> samples(images.size());
    for (std::size_t m = 0; m < images.size(); ++m) samples[m] = {dirs[m], images[m](x, y), true};
    try {
      return build_map(samples, phi, viewing_vector(cam, x, y), cfg.d);
    } catch (const std::domain_error&) {
      return std::nullopt;
    }
  };
  return run_loop(calib, mask, regressor, cfg, flat_plane_init(cam, mask, cfg.mean_distance), build);
}

EvalReport evaluate(const CameraIntrinsics& cam, const DepthMap& pred_depth, const NormalMap& pred_normals,
                    const DepthMap& gt_depth, const NormalMap& gt_normals, const Mask& mask, bool align_mean_z) {
  const int W = mask.width, H = mask.height;
  if (!pred_depth.mask.same_shape(W, H) || !pred_normals.mask.same_shape(W, H) || !gt_depth.mask.same_shape(W, H) ||
      !gt_normals.mask.same_shape(W, H))
    throw std::invalid_argument("evaluate: prediction, ground truth and mask sizes differ");

  const NormalMap nfs = normals_from_depth(cam, pred_depth);
  Mask eval(W, H, 0);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      eval(x, y) = mask(x, y) && pred_depth.valid(x, y) && pred_normals.valid(x, y) && gt_depth.valid(x, y) &&
                   gt_normals.valid(x, y);
  const std::size_t count = mask_count(eval);
  if (count == 0) throw std::invalid_argument("evaluate: empty evaluation mask");

  double offset = 0.0;
  if (align_mean_z) {
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x)
        if (eval(x, y)) offset += pred_depth.values(x, y) - gt_depth.values(x, y);
    offset /= static_cast<double>(count);
  }

  EvalReport r;
  r.pixels = static_cast<int>(count);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  r.normal_error = Grid<double>(W, H, nan);
  r.depth_error = Grid<double>(W, H, nan);
  double sn = 0.0, sz = 0.0, sf = 0.0;
  std::size_t nf = 0;
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      if (!eval(x, y)) continue;
      const double e = rad2deg(angular_loss(pred_normals.values(x, y), gt_normals.values(x, y)));
      const double dz = 1000.0 * std::abs(pred_depth.values(x, y) - offset - gt_depth.values(x, y));
      r.normal_error(x, y) = e;
      r.depth_error(x, y) = dz;
      sn += e;
      sz += dz;
      if (nfs.valid(x, y)) {
        sf += rad2deg(angular_loss(nfs.values(x, y), gt_normals.values(x, y)));
        ++nf;
      }
    }
  r.mae_cnn = sn / static_cast<double>(count);
  r.mze_mm = sz / static_cast<double>(count);
  r.mae_nfs = nf ? sf / static_cast<double>(nf) : nan;
  return r;
}

}  // namespace nfps
