// Copyright 2026 The nfps Authors
// SPDX-License-Identifier: Apache-2.0

#include "nfps/regressor.hpp"
#include "nfps/geometry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace nfps {

double angular_loss(const Vec3& p, const Vec3& t) {
  // canonical operand order
  const bool swap = std::lexicographical_compare(t.data(), t.data() + 3, p.data(), p.data() + 3);
  const Vec3& a = swap ? p : t;
  const Vec3& b = swap ? t : p;
  return std::abs(std::atan2(a.cross(b).norm(), a.dot(b)));
}

Vec3 angular_loss_grad(const Vec3& p, const Vec3& t) {
  const Vec3 c = t.cross(p);
  const double s = c.norm();
  const double cs = t.dot(p);
  if (std::atan2(s, cs) < deg2rad(1.0)) return -t;
  // theta = atan2(s, cs); d theta = (cs ds - s dcs) / (s^2 + cs^2)
  // ds/dp = (c x t) / s   (since c = t x p),  dcs/dp = t
  const Vec3 ds = c.cross(t) / s;
  return (cs * ds - s * t) / (s * s + cs * cs);
}

std::vector<Vec3> NormalRegressor::predict_batch(std::span<const ObservationMap> maps) const {
  std::vector<Vec3> out(maps.size());
  parallel_for(maps.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) out[i] = predict(maps[i]);
  });
  return out;
}

std::vector<std::optional<Vec3>> NormalRegressor::try_predict_batch(std::span<const ObservationMap> maps) const {
  std::vector<std::optional<Vec3>> out(maps.size());
  parallel_for(maps.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) out[i] = try_predict(maps[i]);
  });
  return out;
}

LambertianSolution lambertian_solve(const ObservationMap& map) {
  struct Cell {
    Vec3 dir;
    Rgb rgb;
    double gray;
  };
  std::vector<Cell> cells;
  for (int iy = 0; iy < map.d(); ++iy)
    for (int ix = 0; ix < map.d(); ++ix) {
      if (!map.occupied(ix, iy)) continue;
      Vec3 dir = map.mean_direction(ix, iy);
      if (dir.squaredNorm() == 0.0) dir = map.cell_direction(ix, iy);
      const Rgb rgb(map.rgb(ix, iy, 0), map.rgb(ix, iy, 1), map.rgb(ix, iy, 2));
      cells.push_back({dir, rgb, rgb.mean()});
    }
  if (cells.size() < 3) throw std::domain_error("lambertian_solve: fewer than three samples");

  const double peak = std::max_element(cells.begin(), cells.end(), [](auto& a, auto& b) { return a.gray < b.gray; })->gray;
  std::erase_if(cells, [&](const Cell& c) { return c.gray < 0.02 * peak; });
  if (cells.size() > 6) {
    std::stable_sort(cells.begin(), cells.end(), [](auto& a, auto& b) { return a.gray < b.gray; });
    const std::size_t drop = cells.size() / 10;
    if (cells.size() - drop > 6) cells.resize(cells.size() - drop);
  }
  if (cells.size() < 3) throw std::domain_error("lambertian_solve: too few lit samples");

  const Eigen::Index n = static_cast<Eigen::Index>(cells.size());
  Eigen::MatrixXd L(n, 3);
  Eigen::VectorXd j(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    L.row(k) = cells[k].dir.transpose();
    j[k] = cells[k].gray;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(L, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv[2] <= 1e-6 * sv[0]) throw std::domain_error("lambertian_solve: degenerate lighting (rank deficient)");
  const Vec3 b = svd.solve(j);
  const double bn = b.norm();
  if (!(bn > 0.0)) throw std::domain_error("lambertian_solve: zero solution");

  LambertianSolution sol;
  sol.normal = b / bn;
  sol.samples_used = static_cast<int>(n);
  const Eigen::VectorXd shading = L * sol.normal;
  const double ss = shading.squaredNorm();
  for (int c = 0; c < 3; ++c) {
    double num = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) num += cells[k].rgb[c] * shading[k];
    sol.albedo[c] = ss > 0.0 ? num / ss : 0.0;
  }
  return sol;
}

std::optional<Vec3> LambertianRegressor::try_predict(const ObservationMap& map) const {
  try {
    return orient_to_camera(lambertian_solve(map).normal);
  } catch (const std::domain_error&) {
    return std::nullopt;
  }
}

Vec3 LambertianRegressor::predict(const ObservationMap& map) const {
  // fronto-facing fallback for maps the solver rejects
  return try_predict(map).value_or(map.view());
}

}  // namespace nfps
