// Copyright 2026 The nfps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "nfps/calibration.hpp"
#include "nfps/obsmap.hpp"
#include "nfps/renderer.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace nfps {

enum class SamplerMode { general, specific };
enum class MaterialFamily { lambertian, mixed };
enum class PerturbOrder { forward, reverse };

/// Magnitudes of the calibration/depth perturbations applied between rendering and map building.
struct PerturbationSpec {
  double dz = 0.05;       // std of z' - z, relative to z
  double dP = 0.001;      // half-width of the additive position noise, relative to z
  double dphi = 0.01;     // brightness scale 1 + U(-dphi, dphi)
  double dD = 0.1;        // half-width of the additive direction noise
  double dmu_add = 0.1;   // mu + U(-dmu_add, dmu_add), clamped at 0
  double dmu_mul = 0.10;  // mu scale 1 + U(-dmu_mul, dmu_mul)
  bool systematic = true; // add one shared draw of the same distributions to every light

  void validate() const;
  bool is_zero() const;
  static PerturbationSpec none();
};

struct SamplerConfig {
  SamplerMode mode = SamplerMode::general;
  std::optional<CalibrationFile> calib;  // required in specific mode
  PerturbationSpec perturbation;
  MaterialFamily materials = MaterialFamily::mixed;
  bool global_illumination = true;
  std::optional<QuantizationSpec> quant = QuantizationSpec{};
  int d = 32;
  double z_min = 0.10, z_max = 1.70;
  double f_min = 1.0, f_max = 10.0;

  void validate() const;
};

struct ConfigSample {
  double u = 0.0, v = 0.0;  // normalized image coordinates in [-1, 1]
  double f_norm = 1.0;
  double z = 1.0;
  Vec3 X = Vec3::Zero();
  std::vector<PointLight> lights;
  Vec3 normal = Vec3(0, 0, -1);
  Material material;
  GlobalIllumApprox gi;
};

ConfigSample sample_config(Rng& rng, const SamplerConfig& cfg);

/// Light and depth parameters on one side of the render/map split.
struct SideParams {
  double z = 1.0;
  Vec3 X = Vec3::Zero();
  std::vector<PointLight> lights;
};

struct PerturbedPair {
  SideParams render;
  SideParams map;
};

/// Perturbs `lights` with per-light and systematic draws.
std::vector<PointLight> perturb_lights(const std::vector<PointLight>& lights, double z, const PerturbationSpec& spec, Rng& rng);

/// forward: render with the sampled lights, build maps with perturbed ones.
/// reverse: build maps with the sampled (calibrated) lights, render with perturbed ones.
/// The depth is perturbed on the map side in both orders.
PerturbedPair perturb(const ConfigSample& config, const PerturbationSpec& spec, Rng& rng, PerturbOrder order);

struct TrainingRecord {
  ObservationMap map;
  Vec3 target = Vec3(0, 0, -1);
  double z = 0.0;
  double f_norm = 0.0;
  int light_count = 0;
  double exposure = 1.0;  // gain applied to the rendered intensities
};

/// Intermediate state of the accepted draw, for tests and diagnostics.
struct RecordTrace {
  ConfigSample config;
  PerturbedPair params;  // brightness includes the exposure gain
  std::vector<Rgb> intensities;
};

/// Pure function of (seed, index, cfg).
TrainingRecord generate_record(std::uint64_t seed, std::uint64_t index, const SamplerConfig& cfg, RecordTrace* trace = nullptr);

std::vector<TrainingRecord> generate_records(std::uint64_t seed, std::uint64_t first, std::size_t count, const SamplerConfig& cfg);

/// Archive: uint32 d, uint32 count, then per record 6*d*d map floats followed by 3 target floats,
/// all little-endian.
struct ArchivedRecord {
  std::vector<float> tensor;
  Vec3 target;
};

void write_archive(const std::string& path, int d, const std::vector<TrainingRecord>& records);
std::vector<ArchivedRecord> read_archive(const std::string& path, int* d = nullptr);

}  // namespace nfps
