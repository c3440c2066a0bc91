// Copyright 2026 The nfps Authors
// SPDX-License-Identifier: Apache-2.0

#include "nfps/obsmap.hpp"

#include <algorithm>
#include <cmath>

namespace nfps {

ObservationMap::ObservationMap(int d) : d_(d) {
  if (d < 2) throw std::invalid_argument("observation map: d must be >= 2");
  const std::size_t n = static_cast<std::size_t>(d) * d;
  rgb_.assign(n * 3, 0.0f);
  occupancy_.assign(n, 0);
  dirs_.assign(n, Vec3::Zero());
}

int ObservationMap::occupied_count() const {
  return static_cast<int>(std::count(occupancy_.begin(), occupancy_.end(), std::uint8_t{1}));
}

Vec3 ObservationMap::cell_direction(int ix, int iy) const {
  const double lx = 2.0 * (ix + 0.5) / d_ - 1.0;
  const double ly = 2.0 * (iy + 0.5) / d_ - 1.0;
  const double r2 = std::min(1.0, lx * lx + ly * ly);
  return {lx, ly, -std::sqrt(1.0 - r2)};
}

void ObservationMap::set_cell(int ix, int iy, const Rgb& value, const Vec3& mean_dir) {
  const std::size_t i = idx(ix, iy);
  for (int c = 0; c < 3; ++c) rgb_[i * 3 + c] = static_cast<float>(value[c]);
  occupancy_[i] = 1;
  dirs_[i] = mean_dir;
}

void ObservationMap::write_tensor(float* out) const {
  const std::size_t n = static_cast<std::size_t>(d_) * d_;
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < n; ++i) out[c * n + i] = rgb_[i * 3 + c];
  for (int c = 0; c < 3; ++c) std::fill(out + (3 + c) * n, out + (4 + c) * n, static_cast<float>(view_[c]));
}

std::vector<float> ObservationMap::to_tensor() const {
  std::vector<float> t(static_cast<std::size_t>(6) * d_ * d_);
  write_tensor(t.data());
  return t;
}

std::pair<int, int> map_cell(const Vec3& dir, int d) {
  auto index = [d](double c) {
    const int i = static_cast<int>(std::floor(d * (c + 1.0) / 2.0));
    return std::clamp(i, 0, d - 1);
  };
  return {index(dir.x()), index(dir.y())};
}

ObservationMap build_map(std::span<const MapSample> samples, std::span<const Rgb> brightness, const Vec3& view, int d) {
  if (samples.size() != brightness.size()) throw std::invalid_argument("build_map: one brightness per sample required");
  ObservationMap map(d);
  const std::size_t n = static_cast<std::size_t>(d) * d;
  std::vector<Rgb> sum(n, Rgb::Zero());
  std::vector<Vec3> dir_sum(n, Vec3::Zero());
  std::vector<int> count(n, 0);
  bool any = false;
  for (std::size_t m = 0; m < samples.size(); ++m) {
    const auto& s = samples[m];
    if (!s.valid) continue;
    if (std::abs(s.dir.norm() - 1.0) > 1e-6) throw std::invalid_argument("build_map: light direction must be unit length");
    const auto [ix, iy] = map_cell(s.dir, d);
    const std::size_t i = static_cast<std::size_t>(iy) * d + ix;
    sum[i] += s.value / brightness[m];
    dir_sum[i] += s.dir;
    ++count[i];
    any = true;
  }
  if (!any) throw std::domain_error("build_map: no valid samples");
  for (int iy = 0; iy < d; ++iy)
    for (int ix = 0; ix < d; ++ix) {
      const std::size_t i = static_cast<std::size_t>(iy) * d + ix;
      if (count[i] == 0) continue;
      const Rgb v = (sum[i] / count[i]).max(0.0);
      map.set_cell(ix, iy, v, dir_sum[i] / count[i]);
    }
  map.set_view(view);
  return map;
}

ObservationMap observe(std::span<const Rgb> intensities, const Vec3& X, const std::vector<PointLight>& lights, int d) {
  if (intensities.size() != lights.size()) throw std::invalid_argument("observe: one intensity per light required");
  std::vector<MapSample> samples(lights.size());
  std::vector<Rgb> phi(lights.size());
  for (std::size_t m = 0; m < lights.size(); ++m) {
    const double g = geometric_attenuation(lights[m], X);
    phi[m] = lights[m].brightness;
    samples[m].dir = lighting_vector(lights[m], X).dir;
    samples[m].valid = g > 0.0;
    samples[m].value = samples[m].valid ? Rgb(intensities[m] / g) : Rgb(Rgb::Zero());
  }
  return build_map(samples, phi, -X.normalized(), d);
}

}  // namespace nfps
