// Copyright 2026 The nfps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

namespace nfps {

using Vec3 = Eigen::Vector3d;
using Rgb = Eigen::Array3d;

/// Row-major 2D container indexed as (x, y) = (column, row).
template <class T>
struct Grid {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Grid() = default;
  Grid(int w, int h, const T& fill = T()) : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {
    if (w < 0 || h < 0) throw std::invalid_argument("Grid: negative dimensions");
  }

  T& operator()(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  const T& operator()(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }

  bool inside(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  std::size_t size() const { return data.size(); }
  bool same_shape(int w, int h) const { return width == w && height == h; }
  template <class U>
  bool same_shape(const Grid<U>& o) const { return width == o.width && height == o.height; }
};

using Mask = Grid<std::uint8_t>;
using Image = Grid<Rgb>;
using ImageStack = std::vector<Image>;

inline bool masked(const Mask& m, int x, int y) { return m.inside(x, y) && m(x, y) != 0; }
std::size_t mask_count(const Mask& m);

/// Erodes a mask with a 3x3 structuring element, `radius` times.
Mask erode(const Mask& m, int radius);

/// Worker count used by parallel loops. Defaults to NFPS_THREADS or 1.
int thread_count();
void set_thread_count(int n);

/// Static-partition parallel loop over [0, n). Results must not depend on the schedule.
void parallel_for(std::size_t n, const std::function<void(std::size_t begin, std::size_t end)>& body);

/// Mixes a seed and a stream index into an independent 64-bit seed.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index);

constexpr double kPi = 3.14159265358979323846;
inline double rad2deg(double r) { return r * 180.0 / kPi; }
inline double deg2rad(double d) { return d * kPi / 180.0; }

}  // namespace nfps
