// Copyright 2026 The nfps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "nfps/obsmap.hpp"

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nfps {

/// |atan2(|t x p|, t . p)| in radians, in [0, pi].
double angular_loss(const Vec3& predicted, const Vec3& target);

/// d angular_loss / d predicted for unit inputs. Within one degree of alignment the
/// gradient of 1 - t.p is used instead, since the atan2 form has no defined direction there.
Vec3 angular_loss_grad(const Vec3& predicted, const Vec3& target);

/// Maps an observation map to a unit normal facing the camera.
class NormalRegressor {
 public:
  virtual ~NormalRegressor() = default;
  virtual Vec3 predict(const ObservationMap& map) const = 0;
  /// Empty when the map cannot be inverted (the pixel is then dropped by callers).
  virtual std::optional<Vec3> try_predict(const ObservationMap& map) const { return predict(map); }
  virtual std::vector<Vec3> predict_batch(std::span<const ObservationMap> maps) const;
  virtual std::vector<std::optional<Vec3>> try_predict_batch(std::span<const ObservationMap> maps) const;
  virtual std::string name() const = 0;
};

struct LambertianSolution {
  Vec3 normal;
  Rgb albedo;
  int samples_used = 0;
};

/// Least-squares Lambertian fit on the gray samples of a map after shadow/highlight rejection.
/// Returns the raw (unoriented) normal. Throws std::domain_error on degenerate lighting.
LambertianSolution lambertian_solve(const ObservationMap& map);

class LambertianRegressor final : public NormalRegressor {
 public:
  Vec3 predict(const ObservationMap& map) const override;
  std::optional<Vec3> try_predict(const ObservationMap& map) const override;
  std::string name() const override { return "lambertian"; }
};

}  // namespace nfps
