// Copyright 2026 The nfps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "nfps/lighting.hpp"

#include <span>
#include <utility>
#include <vector>

namespace nfps {

/// d x d grid of brightness-normalised reflectance samples indexed by the light direction,
/// plus the viewing vector broadcast over three more channels.
///
/// Cell (ix, iy) = (floor(d (Lx + 1) / 2), floor(d (Ly + 1) / 2)), clamped to [0, d - 1].
/// Besides the network input, each occupied cell keeps the mean of the light directions
/// that landed in it, which the closed-form solver uses instead of the cell centre.
class ObservationMap {
 public:
  ObservationMap() = default;
  explicit ObservationMap(int d);

  int d() const { return d_; }

  float rgb(int ix, int iy, int c) const { return rgb_[idx(ix, iy) * 3 + c]; }
  bool occupied(int ix, int iy) const { return occupancy_[idx(ix, iy)] != 0; }
  int occupied_count() const;
  const Vec3& view() const { return view_; }
  const Vec3& mean_direction(int ix, int iy) const { return dirs_[idx(ix, iy)]; }

  /// Direction through the centre of a cell (z on the camera side, i.e. negative).
  Vec3 cell_direction(int ix, int iy) const;

  /// Channel-major 6 x d x d tensor: r, g, b, Vx, Vy, Vz.
  std::vector<float> to_tensor() const;
  void write_tensor(float* out) const;

  void set_cell(int ix, int iy, const Rgb& value, const Vec3& mean_dir);
  void set_view(const Vec3& v) { view_ = v; }

 private:
  std::size_t idx(int ix, int iy) const { return static_cast<std::size_t>(iy) * d_ + ix; }

  int d_ = 0;
  std::vector<float> rgb_;
  std::vector<std::uint8_t> occupancy_;
  std::vector<Vec3> dirs_;
  Vec3 view_ = Vec3(0, 0, -1);
};

struct MapSample {
  Vec3 dir;        // unit surface-to-light direction, camera frame
  Rgb value;       // compensated sample j
  bool valid = true;
};

std::pair<int, int> map_cell(const Vec3& dir, int d);

/// Writes j / phi per channel into its cell; collisions are averaged.
/// Throws std::domain_error when no sample is valid.
ObservationMap build_map(std::span<const MapSample> samples, std::span<const Rgb> brightness, const Vec3& view, int d = 32);

/// Compensates one pixel's intensities by each light's geometric attenuation at X (no brightness)
/// and bins them with build_map, so a cell holds i / (phi * g) = i / a. Lights behind their
/// emitter cone are skipped. Throws std::domain_error when no light is usable.
ObservationMap observe(std::span<const Rgb> intensities, const Vec3& X, const std::vector<PointLight>& lights, int d = 32);

}  // namespace nfps
