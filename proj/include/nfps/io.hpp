// Copyright 2026 The nfps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "nfps/calibration.hpp"

#include <optional>
#include <string>
#include <vector>

namespace nfps {

/// Reads an 8- or 16-bit gray/RGB(A) PNG as linear values in [0, 1] (value / max code).
Image read_png(const std::string& path);

/// Writes a 16-bit RGB PNG; values are clamped to [0, 1] and rounded to value * 65535.
void write_png16(const std::string& path, const Image& img);

/// Writes an 8-bit RGB PNG (error-map dumps).
void write_png8(const std::string& path, const Image& img);

Mask read_mask_png(const std::string& path);
void write_mask_png(const std::string& path, const Mask& mask);

/// Float map with 1 or 3 channels, row-major top-to-bottom in memory.
struct FloatMap {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<float> data;

  float& at(int x, int y, int c) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  float at(int x, int y, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
};

FloatMap read_pfm(const std::string& path);
void write_pfm(const std::string& path, const FloatMap& map);

/// Depth as a 1-channel map; pixels outside the mask are stored as 0.
FloatMap depth_to_map(const DepthMap& depth);
DepthMap depth_from_map(const FloatMap& map);
/// Normals as a 3-channel map; pixels outside the mask are stored as 0.
FloatMap normals_to_map(const NormalMap& normals);
NormalMap normals_from_map(const FloatMap& map);

struct Dataset {
  ImageStack images;  // images[i] is lit by calib.lights[i]
  Mask mask;
  CalibrationFile calib;
  std::optional<DepthMap> gt_depth;
  std::optional<NormalMap> gt_normals;

  void validate() const;
};

/// Directory layout: light_%03d.png, mask.png, calib.txt, optional gt_depth.pfm and gt_normals.pfm.
Dataset load_dataset(const std::string& dir);
void save_dataset(const std::string& dir, const Dataset& data);

std::string light_image_name(std::size_t index);

/// Versions of the linked image and linear-algebra libraries, for run manifests.
std::string libpng_version();
std::string eigen_version();

}  // namespace nfps
