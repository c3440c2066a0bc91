// Copyright 2026 The nfps Authors
// SPDX-License-Identifier: Apache-2.0

#include "nfps/sampler.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace nfps {

namespace {

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

// U(-h, h), or exactly 0 without consuming the stream when h = 0.
double symmetric(Rng& rng, double h) { return h > 0.0 ? uniform(rng, -h, h) : 0.0; }

Vec3 symmetric3(Rng& rng, double h) { return {symmetric(rng, h), symmetric(rng, h), symmetric(rng, h)}; }

constexpr int kGridLong = 24;
constexpr int kGridShort = 12;
constexpr int kMinLights = 15;
constexpr int kMaxLights = kGridLong * kGridShort;

std::vector<PointLight> sample_light_grid(Rng& rng, double z) {
  for (;;) {
    const double side_a = uniform(rng, 0.5 * z, 3.0 * z);
    const double side_b = uniform(rng, 0.5 * z, 3.0 * z);
    const double hole_a = uniform(rng, 0.0, 0.66 * z);
    const double hole_b = uniform(rng, 0.0, 0.66 * z);
    const int nx = side_a >= side_b ? kGridLong : kGridShort;
    const int ny = side_a >= side_b ? kGridShort : kGridLong;
    std::vector<Vec3> cells;
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const double x = -0.5 * side_a + (i + 0.5) * side_a / nx;
        const double y = -0.5 * side_b + (j + 0.5) * side_b / ny;
        if (std::abs(x) < 0.5 * hole_a && std::abs(y) < 0.5 * hole_b) continue;
        cells.emplace_back(x, y, 0.0);
      }
    const int available = static_cast<int>(cells.size());
    if (available < kMinLights) continue;
    const int count = std::uniform_int_distribution<int>(kMinLights, std::min(kMaxLights, available))(rng);
    // partial Fisher-Yates: the first `count` cells become the selection
    for (int k = 0; k < count; ++k) {
      const int pick = std::uniform_int_distribution<int>(k, available - 1)(rng);
      std::swap(cells[k], cells[pick]);
    }
    const double offset = uniform(rng, 0.0, 0.25 * z);
    std::vector<PointLight> lights(count);
    for (int k = 0; k < count; ++k) {
      PointLight& l = lights[k];
      l.position = cells[k] + Vec3(0, 0, offset + uniform(rng, -0.05 * z, 0.05 * z));
      const double phi = std::exp(uniform(rng, std::log(0.25), std::log(4.0)));
      l.brightness = Rgb::Constant(phi);
      l.mu = uniform(rng, 0.0, 3.0);
      const Vec3 d = symmetric3(rng, 0.1);
      l.direction = Vec3(d.x(), d.y(), 1.0 + d.z()).normalized();
    }
    return lights;
  }
}

Vec3 sample_normal(Rng& rng, const Vec3& V) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (;;) {
    const Vec3 n(gauss(rng), gauss(rng), gauss(rng));
    const double len = n.norm();
    if (len < 1e-9) continue;
    const Vec3 N = n / len;
    if (N.dot(V) > 0.05 && N.z() <= 0.0) return N;
  }
}

Material sample_material(Rng& rng, MaterialFamily family) {
  Material m;
  const double base = uniform(rng, 0.2, 1.0);
  for (int c = 0; c < 3; ++c) m.albedo[c] = std::clamp(base * uniform(rng, 0.85, 1.15), 0.0, 1.0);
  if (family == MaterialFamily::lambertian || uniform(rng, 0.0, 1.0) < 0.2) return m;
  m.specular_weight = uniform(rng, 0.2, 0.8);
  m.shininess = std::exp(uniform(rng, std::log(10.0), std::log(500.0)));
  m.metallic = uniform(rng, 0.0, 1.0) < 0.3 ? uniform(rng, 0.5, 1.0) : 0.0;
  return m;
}

GlobalIllumApprox sample_gi(Rng& rng, const Material& m) {
  GlobalIllumApprox gi;
  gi.shadow_prob = uniform(rng, 0.0, 0.35);
  gi.ambient = Rgb::Constant(uniform(rng, 0.0, 0.05));
  gi.self_reflection = m.albedo * uniform(rng, 0.0, 0.15);
  return gi;
}

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big)
    v = ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  return v;
}

void put_u32(std::ostream& out, std::uint32_t v) {
  v = to_le(v);
  out.write(reinterpret_cast<const char*>(&v), 4);
}

void put_f32(std::ostream& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  if (!in) throw std::runtime_error("archive: truncated file");
  return to_le(v);
}

}  // namespace

void PerturbationSpec::validate() const {
  if (!(dz >= 0 && dP >= 0 && dphi >= 0 && dD >= 0 && dmu_add >= 0 && dmu_mul >= 0))
    throw std::invalid_argument("perturbation: magnitudes must be non-negative");
  if (dphi >= 1.0 || dmu_mul >= 1.0) throw std::invalid_argument("perturbation: multiplicative magnitudes must be < 1");
}

bool PerturbationSpec::is_zero() const {
  return dz == 0 && dP == 0 && dphi == 0 && dD == 0 && dmu_add == 0 && dmu_mul == 0;
}

PerturbationSpec PerturbationSpec::none() { return PerturbationSpec{0, 0, 0, 0, 0, 0, false}; }

void SamplerConfig::validate() const {
  perturbation.validate();
  if (quant) quant->validate();
  if (d < 2) throw std::invalid_argument("sampler: d must be >= 2");
  if (!(z_min > 0.0 && z_max >= z_min)) throw std::invalid_argument("sampler: invalid depth range");
  if (!(f_min > 0.0 && f_max >= f_min)) throw std::invalid_argument("sampler: invalid focal range");
  if (mode == SamplerMode::specific) {
    if (!calib) throw std::invalid_argument("sampler: specific mode needs a calibration file");
    calib->validate();
  }
}

ConfigSample sample_config(Rng& rng, const SamplerConfig& cfg) {
  ConfigSample c;
  if (cfg.mode == SamplerMode::general) {
    c.u = uniform(rng, -1.0, 1.0);
    c.v = uniform(rng, -1.0, 1.0);
    c.f_norm = uniform(rng, cfg.f_min, cfg.f_max);
    c.z = uniform(rng, cfg.z_min, cfg.z_max);
    c.X = Vec3(c.u * c.z / c.f_norm, c.v * c.z / c.f_norm, c.z);
    c.lights = sample_light_grid(rng, c.z);
  } else {
    const CameraIntrinsics& cam = cfg.calib->camera;
    const double px = uniform(rng, 0.0, cam.width - 1.0);
    const double py = uniform(rng, 0.0, cam.height - 1.0);
    c.z = uniform(rng, cfg.z_min, cfg.z_max);
    c.f_norm = cam.normalized_focal();
    c.u = (px - cam.cx) / (0.5 * cam.width);
    c.v = (py - cam.cy) / (0.5 * cam.width);
    c.X = back_project(cam, px, py, c.z);
    c.lights = cfg.calib->lights;
  }
  c.normal = sample_normal(rng, -c.X.normalized());
  c.material = sample_material(rng, cfg.materials);
  if (cfg.global_illumination) c.gi = sample_gi(rng, c.material);
  return c;
}

std::vector<PointLight> perturb_lights(const std::vector<PointLight>& lights, double z, const PerturbationSpec& spec, Rng& rng) {
  struct Draw {
    Vec3 dP;
    double phi, mu_mul, mu_add;
    Vec3 dD;
  };
  auto draw = [&]() {
    Draw d;
    d.dP = symmetric3(rng, spec.dP * z);
    d.phi = symmetric(rng, spec.dphi);
    d.dD = symmetric3(rng, spec.dD);
    d.mu_add = symmetric(rng, spec.dmu_add);
    d.mu_mul = symmetric(rng, spec.dmu_mul);
    return d;
  };
  const Draw sys = spec.systematic ? draw() : Draw{Vec3::Zero(), 0.0, 0.0, 0.0, Vec3::Zero()};
  std::vector<PointLight> out = lights;
  for (auto& l : out) {
    const Draw d = draw();
    l.position = l.position + d.dP + sys.dP;
    l.brightness = l.brightness * ((1.0 + d.phi) * (1.0 + sys.phi));
    if (spec.dD > 0.0) l.direction = (l.direction + d.dD + sys.dD).normalized();
    l.mu = std::max(0.0, l.mu * ((1.0 + d.mu_mul) * (1.0 + sys.mu_mul)) + (d.mu_add + sys.mu_add));
  }
  return out;
}

PerturbedPair perturb(const ConfigSample& config, const PerturbationSpec& spec, Rng& rng, PerturbOrder order) {
  spec.validate();
  PerturbedPair p;
  double z2 = config.z;
  if (spec.dz > 0.0) {
    std::normal_distribution<double> dz(0.0, spec.dz * config.z);
    do z2 = config.z + dz(rng);
    while (!(z2 > 0.0));
  }
  p.render = {config.z, config.X, {}};
  p.map = {z2, config.X * (z2 / config.z), {}};
  if (order == PerturbOrder::forward) {
    p.render.lights = config.lights;
    p.map.lights = perturb_lights(config.lights, config.z, spec, rng);
  } else {
    p.map.lights = config.lights;
    p.render.lights = perturb_lights(config.lights, config.z, spec, rng);
  }
  return p;
}

TrainingRecord generate_record(std::uint64_t seed, std::uint64_t index, const SamplerConfig& cfg, RecordTrace* trace) {
  cfg.validate();
  Rng rng(stream_seed(seed, index));
  const PerturbOrder order = cfg.mode == SamplerMode::general ? PerturbOrder::forward : PerturbOrder::reverse;
  for (;;) {
    const ConfigSample c = sample_config(rng, cfg);
    PerturbedPair p = perturb(c, cfg.perturbation, rng, order);

    // exposure: the brightest attenuation among the rendered lights maps to 1
    double peak = 0.0;
    for (const auto& l : p.render.lights) peak = std::max(peak, attenuation(l, p.render.X).value.maxCoeff());
    if (!(peak > 0.0)) continue;
    const double gain = 1.0 / peak;
    for (auto& l : p.render.lights) l.brightness *= gain;
    if (order == PerturbOrder::forward)
      for (auto& l : p.map.lights) l.brightness *= gain;

    const auto intensities = render_pixel(p.render.X, c.normal, c.material, p.render.lights, c.gi, cfg.quant, rng);
    bool lit = false;
    for (const auto& i : intensities) lit = lit || (i > 0.0).any();
    if (!lit) continue;

    TrainingRecord r;
    try {
      r.map = observe(intensities, p.map.X, p.map.lights, cfg.d);
    } catch (const std::domain_error&) {
      continue;
    }
    r.target = c.normal;
    r.z = c.z;
    r.f_norm = c.f_norm;
    r.light_count = static_cast<int>(c.lights.size());
    r.exposure = gain;
    if (trace) *trace = RecordTrace{c, std::move(p), intensities};
    return r;
  }
}

std::vector<TrainingRecord> generate_records(std::uint64_t seed, std::uint64_t first, std::size_t count, const SamplerConfig& cfg) {
  cfg.validate();
  std::vector<TrainingRecord> out(count);
  parallel_for(count, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) out[i] = generate_record(seed, first + i, cfg);
  });
  return out;
}

void write_archive(const std::string& path, int d, const std::vector<TrainingRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  put_u32(out, static_cast<std::uint32_t>(d));
  put_u32(out, static_cast<std::uint32_t>(records.size()));
  std::vector<float> t;
  for (const auto& r : records) {
    if (r.map.d() != d) throw std::invalid_argument("archive: record map size differs from the header");
    t = r.map.to_tensor();
    for (float f : t) put_f32(out, f);
    for (int c = 0; c < 3; ++c) put_f32(out, static_cast<float>(r.target[c]));
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<ArchivedRecord> read_archive(const std::string& path, int* d_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  const std::uint32_t d = get_u32(in);
  const std::uint32_t count = get_u32(in);
  if (d < 2 || d > 4096) throw std::runtime_error("archive: implausible map size");
  std::vector<ArchivedRecord> out(count);
  const std::size_t n = 6u * d * d;
  for (auto& r : out) {
    r.tensor.resize(n);
    for (auto& f : r.tensor) f = std::bit_cast<float>(get_u32(in));
    for (int c = 0; c < 3; ++c) r.target[c] = std::bit_cast<float>(get_u32(in));
  }
  if (d_out) *d_out = static_cast<int>(d);
  return out;
}

}  // namespace nfps
