// Copyright 2026 The nfps Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include "nfps/io.hpp"
#include "nfps/network.hpp"
#include "nfps/pipeline.hpp"
#include "nfps/sampler.hpp"
#include "nfps/scenes.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>
#include <string>

namespace nfps::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

/// Records the subcommand, its effective flags and library versions next to the outputs.
void write_manifest(const fs::path& path, const CLI::App& sub, std::uint64_t seed) {
  json flags = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name.empty()) continue;
    const auto& res = opt->results();
    if (!res.empty()) {
      flags[name] = res.size() == 1 ? json(res.front()) : json(res);
    } else {
      flags[name] = opt->get_default_str();
    }
  }
  json m;
  m["tool"] = "nfps";
  m["version"] = kVersion;
  m["subcommand"] = sub.get_name();
  m["seed"] = seed;
  m["flags"] = flags;
  m["libraries"] = {{"eigen", eigen_version()}, {"libpng", libpng_version()}};
  write_text(path, m.dump(2) + "\n");
}

std::vector<PointLight> resolve_lights(const std::string& spec, double phi, double mu, std::uint64_t seed) {
  if (spec == "leds8") return calibration_leds(8, seed);
  if (spec == "ring15") return ring_lights(15, 0.10, phi, mu);
  if (spec == "luces52") return luces_like_lights(phi, mu);
  if (fs::exists(spec)) return read_calibration(spec).lights;
  throw UsageError("--lights must be ring15, luces52, leds8 or an existing calibration file: " + spec);
}

std::optional<QuantizationSpec> quant_from_bits(int bits) {
  if (bits == 0) return std::nullopt;
  if (bits < 1 || bits > 16) throw UsageError("--bits must be 0 (off) or in [1, 16]");
  QuantizationSpec q;
  q.levels = 1 << bits;
  return q;
}

Material material_from_name(const std::string& name, double albedo) {
  Material m = Material::lambertian(Rgb::Constant(albedo));
  if (name == "specular") {
    m.specular_weight = 0.4;
    m.shininess = 50.0;
  }
  return m;
}

// ---------------------------------------------------------------------------------------------

struct RenderArgs {
  std::string scene = "sphere";
  std::string lights = "ring15";
  std::string material = "lambertian";
  std::string planes;
  std::string out;
  int size = 256;
  double focal = 3.125;
  double phi = 0.06;
  double mu = 1.0;
  double albedo = 0.8;
  double light_scale = 1.0;
  double shadow_prob = 0.0;
  double ambient = 0.0;
  int bits = 16;
  double init_position_error = 0.005;
  double init_brightness_error = 0.1;
  std::uint64_t seed = 0;
};

int cmd_render(const RenderArgs& a, const CLI::App& sub) {
  const auto cam = CameraIntrinsics::from_normalized(a.focal, a.size, a.size);
  const fs::path out(a.out);
  fs::create_directories(out);

  if (a.scene == "planes") {
    const bool lights_given = sub.get_option("--lights")->count() > 0;
    const auto truth = resolve_lights(lights_given ? a.lights : "leds8", a.phi, a.mu, a.seed);
    const auto planes = a.planes.empty() ? default_calibration_planes() : read_planes(a.planes);
    const auto quant = quant_from_bits(a.bits);
    for (std::size_t k = 0; k < planes.size(); ++k) {
      auto images = render_plane_captures(cam, planes[k], truth, 0.5);
      if (quant)
        for (auto& img : images)
          for (auto& v : img.data)
            for (int c = 0; c < 3; ++c) v[c] = quantize(v[c], *quant);
      char name[32];
      std::snprintf(name, sizeof(name), "plane_%03zu", k);
      fs::create_directories(out / name);
      for (std::size_t m = 0; m < images.size(); ++m) write_png16((out / name / light_image_name(m)).string(), images[m]);
    }
    write_planes((out / "planes.json").string(), planes);
    write_calibration((out / "calib_true.txt").string(), CalibrationFile{1, cam, truth});
    write_calibration((out / "calib_init.txt").string(),
                      CalibrationFile{1, cam, calibration_initial_guess(truth, a.init_position_error, a.init_brightness_error,
                                                                        stream_seed(a.seed, 1))});
    write_manifest(out / "manifest.json", sub, a.seed);
    return 0;
  }

  const Material material = material_from_name(a.material, a.albedo);
  Scene scene;
  if (a.scene == "sphere") {
    scene = make_sphere_scene(cam, Vec3(0, 0, 0.30), 0.05, material);
  } else if (a.scene == "plane") {
    scene = make_plane_scene(cam, Vec3(0.2, -0.1, -1.0).normalized(), 0.30, material);
  } else if (a.scene == "wave") {
    scene = make_wave_scene(cam, 0.30, 0.01, a.size / 3.0, material);
  } else {
    throw UsageError("--scene must be sphere, plane, wave or planes");
  }
  auto lights = resolve_lights(a.lights, a.phi, a.mu, a.seed);
  if (a.light_scale != 1.0) lights = scale_lights_about(lights, Vec3(0, 0, scene.mean_depth()), a.light_scale);

  SceneRenderOptions opts;
  opts.quant = quant_from_bits(a.bits);
  opts.seed = a.seed;
  opts.gi.shadow_prob = a.shadow_prob;
  opts.gi.ambient = Rgb::Constant(a.ambient);
  Dataset data;
  data.images = render_scene(cam, scene.depth, scene.normals, scene.materials, lights, opts);
  data.mask = scene.depth.mask;
  data.calib = CalibrationFile{1, cam, lights};
  data.gt_depth = scene.depth;
  data.gt_normals = scene.normals;
  save_dataset(out.string(), data);
  write_manifest(out / "manifest.json", sub, a.seed);
  return 0;
}

// ---------------------------------------------------------------------------------------------

struct StreamArgs {
  std::string mode = "general";
  std::string calib;
  std::string materials = "mixed";
  bool no_gi = false;
  bool no_perturb = false;
  int bits = 10;
  int d = 32;
  std::uint64_t seed = 0;
};

void add_stream_options(CLI::App* sub, StreamArgs& s) {
  sub->add_option("--mode", s.mode, "general or specific")->check(CLI::IsMember({"general", "specific"}))->capture_default_str();
  sub->add_option("--calib", s.calib, "Calibration file (required in specific mode)");
  sub->add_option("--materials", s.materials, "lambertian or mixed")
      ->check(CLI::IsMember({"lambertian", "mixed"}))
      ->capture_default_str();
  sub->add_flag("--no-gi", s.no_gi, "Disable the global-illumination approximation");
  sub->add_flag("--no-perturb", s.no_perturb, "Disable calibration/depth perturbations");
  sub->add_option("--bits", s.bits, "Sensor quantization bits (0 = off)")->capture_default_str();
  sub->add_option("--d", s.d, "Observation map size")->capture_default_str();
  sub->add_option("--seed", s.seed, "Stream seed")->capture_default_str();
}

SamplerConfig sampler_from(const StreamArgs& s) {
  SamplerConfig cfg;
  cfg.mode = s.mode == "specific" ? SamplerMode::specific : SamplerMode::general;
  if (cfg.mode == SamplerMode::specific) {
    if (s.calib.empty()) throw UsageError("--calib is required with --mode specific");
    cfg.calib = read_calibration(s.calib);
  } else if (!s.calib.empty()) {
    throw UsageError("--calib is only used with --mode specific");
  }
  cfg.materials = s.materials == "lambertian" ? MaterialFamily::lambertian : MaterialFamily::mixed;
  cfg.global_illumination = !s.no_gi;
  if (s.no_perturb) cfg.perturbation = PerturbationSpec::none();
  cfg.quant = quant_from_bits(s.bits);
  cfg.d = s.d;
  cfg.validate();
  return cfg;
}

struct SampleArgs {
  StreamArgs stream;
  std::size_t count = 1000;
  std::uint64_t first = 0;
  std::string out;
};

int cmd_sample(const SampleArgs& a, const CLI::App& sub) {
  const auto cfg = sampler_from(a.stream);
  const auto records = generate_records(a.stream.seed, a.first, a.count, cfg);
  const fs::path out(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_archive(out.string(), cfg.d, records);
  write_manifest(out.string() + ".manifest.json", sub, a.stream.seed);
  return 0;
}

struct TrainArgs {
  StreamArgs stream;
  int steps = 3000;
  int batch = 64;
  double lr = 1e-3;
  int steps_per_epoch = 250;
  std::size_t dataset_size = 0;
  int holdout = 1000;
  std::string out;
};

int cmd_train(const TrainArgs& a, const CLI::App& sub) {
  TrainConfig cfg;
  cfg.sampler = sampler_from(a.stream);
  cfg.steps = a.steps;
  cfg.batch = a.batch;
  cfg.lr = a.lr;
  cfg.seed = a.stream.seed;
  cfg.steps_per_epoch = a.steps_per_epoch;
  cfg.dataset_size = a.dataset_size;
  cfg.holdout = a.holdout;
  NetArch arch;
  arch.d = cfg.sampler.d;
  CompactNet net(arch, stream_seed(a.stream.seed, 0x6e6574));
  const auto report = train(net, cfg, [](int epoch, const TrainReport& r) {
    std::fprintf(stderr, "epoch %d loss_deg=%.4f holdout_mae_deg=%.4f\n", epoch, r.epoch_loss.back(),
                 r.holdout_mae.empty() ? NAN : r.holdout_mae.back());
  });
  const fs::path out(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  json h;
  h["epoch_loss_deg"] = report.epoch_loss;
  h["holdout_mae_deg"] = report.holdout_mae;
  h["diverged"] = report.diverged;
  h["diagnostics"] = report.diagnostics;
  write_text(out.string() + ".history.json", h.dump(2) + "\n");
  write_manifest(out.string() + ".manifest.json", sub, a.stream.seed);
  if (report.diverged) throw std::runtime_error("training diverged: " + report.diagnostics);
  net.save(out.string());
  if (!report.holdout_mae.empty()) std::printf("HOLDOUT_MAE_deg=%.6g\n", report.holdout_mae.back());
  return 0;
}

// ---------------------------------------------------------------------------------------------

struct ReconstructArgs {
  std::string data;
  std::string calib;
  std::string regressor = "lambertian";
  int iters = 2;
  bool naive = false;
  double mean_distance = 0.0;
  int d = 32;
  double lambda = 1e-6;
  std::string out;
};

std::unique_ptr<NormalRegressor> make_regressor(const std::string& spec) {
  if (spec == "lambertian") return std::make_unique<LambertianRegressor>();
  if (spec.rfind("net:", 0) == 0) return std::make_unique<CompactNet>(CompactNet::load(spec.substr(4)));
  throw UsageError("--regressor must be lambertian or net:CHECKPOINT");
}

int cmd_reconstruct(const ReconstructArgs& a, const CLI::App& sub) {
  auto regressor = make_regressor(a.regressor);
  Dataset data = load_dataset(a.data);
  if (!a.calib.empty()) {
    data.calib = read_calibration(a.calib);
    data.validate();
  }
  ReconstructionConfig cfg;
  cfg.iterations = a.iters;
  cfg.d = a.d;
  cfg.integrator.lambda = a.lambda;
  if (a.mean_distance > 0.0) {
    cfg.mean_distance = a.mean_distance;
  } else if (data.gt_depth) {
    double sum = 0.0;
    std::size_t n = 0;
    for (int y = 0; y < data.mask.height; ++y)
      for (int x = 0; x < data.mask.width; ++x)
        if (data.mask(x, y) && data.gt_depth->valid(x, y)) {
          sum += data.gt_depth->values(x, y);
          ++n;
        }
    if (n == 0) throw std::runtime_error("ground-truth depth does not cover the mask; pass --mean-distance");
    cfg.mean_distance = sum / static_cast<double>(n);
  } else {
    throw UsageError("--mean-distance is required when the dataset has no ground-truth depth");
  }
  const auto rec = a.naive ? naive_reconstruct(data.images, data.mask, data.calib, *regressor, cfg)
                           : reconstruct(data.images, data.mask, data.calib, *regressor, cfg);
  const fs::path out(a.out);
  fs::create_directories(out);
  write_pfm((out / "depth.pfm").string(), depth_to_map(rec.depth));
  write_pfm((out / "normals.pfm").string(), normals_to_map(rec.normals_cnn));
  write_pfm((out / "normals_nfs.pfm").string(), normals_to_map(rec.normals_nfs));
  write_mask_png((out / "mask.png").string(), rec.depth.mask);
  json h = json::array();
  for (const auto& it : rec.history)
    h.push_back({{"normal_change_deg", it.normal_change_deg}, {"pixels", it.pixels}, {"integrator_iterations", it.integrator_iterations}});
  write_text(out / "history.json", json{{"mean_distance", cfg.mean_distance}, {"iterations", h}}.dump(2) + "\n");
  write_manifest(out / "manifest.json", sub, 0);
  return 0;
}

// ---------------------------------------------------------------------------------------------

struct CalibrateArgs {
  std::string captures;
  std::string planes;
  std::string init;
  int epochs = 1000;
  double lr = 1e-2;
  double albedo = 0.5;
  int stride = 1;
  std::string out;
};

int cmd_calibrate(const CalibrateArgs& a, const CLI::App& sub) {
  const fs::path dir(a.captures);
  const auto planes = read_planes(a.planes.empty() ? (dir / "planes.json").string() : a.planes);
  const auto init = read_calibration(a.init);
  CalibrationProblem problem;
  problem.cam = init.camera;
  problem.init = init.lights;
  problem.albedo = a.albedo;
  problem.stride = a.stride;
  for (std::size_t k = 0; k < planes.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof(name), "plane_%03zu", k);
    PlaneCapture cap;
    cap.plane = planes[k];
    for (std::size_t m = 0; m < init.lights.size(); ++m) {
      const fs::path p = dir / name / light_image_name(m);
      if (!fs::exists(p)) throw std::runtime_error("missing capture " + p.string());
      cap.images.push_back(read_png(p.string()));
    }
    if (fs::exists(dir / name / "mask.png")) cap.mask = read_mask_png((dir / name / "mask.png").string());
    problem.captures.push_back(std::move(cap));
  }
  CalibrateOptions opts;
  opts.epochs = a.epochs;
  opts.lr = a.lr;
  const auto result = calibrate(problem, opts);
  for (const auto& w : result.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  if (result.diverged) throw std::runtime_error("calibration diverged (non-finite loss)");
  const fs::path out(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_calibration(out.string(), CalibrationFile{1, init.camera, result.lights});
  write_text(out.string() + ".history.json", json{{"loss_l1", result.loss_history}, {"warnings", result.warnings}}.dump(2) + "\n");
  write_manifest(out.string() + ".manifest.json", sub, 0);
  std::printf("L1=%.6g\n", result.loss_history.back());
  return 0;
}

// ---------------------------------------------------------------------------------------------

struct EvaluateArgs {
  std::string pred;
  std::string gt;
  bool align = false;
  std::string maps;
};

Image error_image(const Grid<double>& err, double full_scale) {
  Image img(err.width, err.height, Rgb::Zero());
  for (std::size_t i = 0; i < err.data.size(); ++i)
    if (std::isfinite(err.data[i])) img.data[i] = Rgb::Constant(std::min(1.0, err.data[i] / full_scale));
  return img;
}

int cmd_evaluate(const EvaluateArgs& a, const CLI::App& sub) {
  const fs::path pred(a.pred), gt(a.gt);
  const auto calib = read_calibration((gt / "calib.txt").string());
  const Mask mask = read_mask_png((gt / "mask.png").string());
  const auto depth = depth_from_map(read_pfm((pred / "depth.pfm").string()));
  const auto normals = normals_from_map(read_pfm((pred / "normals.pfm").string()));
  const auto gt_depth = depth_from_map(read_pfm((gt / "gt_depth.pfm").string()));
  const auto gt_normals = normals_from_map(read_pfm((gt / "gt_normals.pfm").string()));
  const auto r = evaluate(calib.camera, depth, normals, gt_depth, gt_normals, mask, a.align);
  std::printf("MAE_deg=%.6g MZE_mm=%.6g\n", r.mae_cnn, r.mze_mm);
  std::printf("MAE_NfS_deg=%.6g pixels=%d\n", r.mae_nfs, r.pixels);
  if (!a.maps.empty()) {
    const fs::path out(a.maps);
    fs::create_directories(out);
    write_png8((out / "normal_error.png").string(), error_image(r.normal_error, 20.0));
    write_png8((out / "depth_error.png").string(), error_image(r.depth_error, 10.0));
    write_text(out / "metrics.json",
               json{{"mae_deg", r.mae_cnn}, {"mae_nfs_deg", r.mae_nfs}, {"mze_mm", r.mze_mm}, {"pixels", r.pixels}}.dump(2) + "\n");
    write_manifest(out / "manifest.json", sub, 0);
  }
  return 0;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"nfps: near-field photometric stereo toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: NFPS_THREADS or 1)");

  RenderArgs ra;
  auto* render = app.add_subcommand("render", "Render a synthetic dataset or calibration-plane captures");
  render->add_option("--scene", ra.scene, "sphere, plane, wave or planes")
      ->check(CLI::IsMember({"sphere", "plane", "wave", "planes"}))
      ->capture_default_str();
  render->add_option("--lights", ra.lights, "ring15, luces52, leds8 or a calibration file (planes default: leds8)")->capture_default_str();
  render->add_option("--material", ra.material, "lambertian or specular")
      ->check(CLI::IsMember({"lambertian", "specular"}))
      ->capture_default_str();
  render->add_option("--planes", ra.planes, "Plane poses for --scene planes (default: two tilted poses)");
  render->add_option("--size", ra.size, "Image side in pixels")->check(CLI::Range(8, 8192))->capture_default_str();
  render->add_option("--focal", ra.focal, "Focal length relative to half the image width")->capture_default_str();
  render->add_option("--phi", ra.phi, "Brightness of built-in light sets")->capture_default_str();
  render->add_option("--mu", ra.mu, "Angular dissipation of built-in light sets")->capture_default_str();
  render->add_option("--albedo", ra.albedo, "Scene albedo")->capture_default_str();
  render->add_option("--light-scale", ra.light_scale, "Move lights away from the scene by this factor")->capture_default_str();
  render->add_option("--shadow-prob", ra.shadow_prob, "Per-sample shadow probability")->capture_default_str();
  render->add_option("--ambient", ra.ambient, "Ambient term")->capture_default_str();
  render->add_option("--bits", ra.bits, "Sensor quantization bits (0 = off)")->capture_default_str();
  render->add_option("--init-position-error", ra.init_position_error, "Initial-guess position error (planes), metres")
      ->capture_default_str();
  render->add_option("--init-brightness-error", ra.init_brightness_error, "Initial-guess relative brightness error (planes)")
      ->capture_default_str();
  render->add_option("--seed", ra.seed, "Noise seed")->capture_default_str();
  render->add_option("--out", ra.out, "Output directory")->required();

  SampleArgs sa;
  auto* sample = app.add_subcommand("sample", "Write a training-record archive");
  add_stream_options(sample, sa.stream);
  sample->add_option("--count", sa.count, "Number of records")->capture_default_str();
  sample->add_option("--first", sa.first, "Index of the first record")->capture_default_str();
  sample->add_option("--out", sa.out, "Archive path")->required();

  TrainArgs ta;
  auto* trn = app.add_subcommand("train", "Train the compact regressor on a sampler stream");
  add_stream_options(trn, ta.stream);
  trn->add_option("--steps", ta.steps, "Optimizer steps")->check(CLI::PositiveNumber)->capture_default_str();
  trn->add_option("--batch", ta.batch, "Records per step")->check(CLI::PositiveNumber)->capture_default_str();
  trn->add_option("--lr", ta.lr, "Adam learning rate")->capture_default_str();
  trn->add_option("--steps-per-epoch", ta.steps_per_epoch, "Steps per reported epoch")->check(CLI::PositiveNumber)->capture_default_str();
  trn->add_option("--dataset-size", ta.dataset_size, "Wrap record indices at this size (0 = fresh records)")->capture_default_str();
  trn->add_option("--holdout", ta.holdout, "Held-out records evaluated per epoch")->capture_default_str();
  trn->add_option("--out", ta.out, "Checkpoint path")->required();

  ReconstructArgs rca;
  auto* rec = app.add_subcommand("reconstruct", "Reconstruct depth and normals from a dataset");
  rec->add_option("--data", rca.data, "Dataset directory")->required();
  rec->add_option("--calib", rca.calib, "Calibration file (default: the dataset's calib.txt)");
  rec->add_option("--regressor", rca.regressor, "lambertian or net:CHECKPOINT")->capture_default_str();
  rec->add_option("--iters", rca.iters, "Refinement iterations")->check(CLI::PositiveNumber)->capture_default_str();
  rec->add_flag("--naive", rca.naive, "Raw intensities with one direction per light");
  rec->add_option("--mean-distance", rca.mean_distance, "Initial plane depth in metres (default: ground-truth mean)");
  rec->add_option("--d", rca.d, "Observation map size")->capture_default_str();
  rec->add_option("--lambda", rca.lambda, "Tikhonov weight of the integrator")->capture_default_str();
  rec->add_option("--out", rca.out, "Output directory")->required();

  CalibrateArgs ca;
  auto* cal = app.add_subcommand("calibrate", "Fit LED parameters from reference-plane captures");
  cal->add_option("--captures", ca.captures, "Directory with plane_NNN/light_NNN.png")->required();
  cal->add_option("--planes", ca.planes, "Plane poses (default: CAPTURES/planes.json)");
  cal->add_option("--init", ca.init, "Initial calibration file (camera and lights)")->required();
  cal->add_option("--epochs", ca.epochs, "Optimizer steps")->check(CLI::PositiveNumber)->capture_default_str();
  cal->add_option("--lr", ca.lr, "Adam learning rate in scaled units")->capture_default_str();
  cal->add_option("--albedo", ca.albedo, "Reference plane albedo")->capture_default_str();
  cal->add_option("--stride", ca.stride, "Pixel subsampling")->check(CLI::PositiveNumber)->capture_default_str();
  cal->add_option("--out", ca.out, "Output calibration file")->required();

  EvaluateArgs ea;
  auto* ev = app.add_subcommand("evaluate", "Compare a reconstruction with ground truth");
  ev->add_option("--pred", ea.pred, "Reconstruction directory")->required();
  ev->add_option("--gt", ea.gt, "Dataset directory with ground truth")->required();
  ev->add_flag("--align-mean-z", ea.align, "Remove the mean depth offset before MZE");
  ev->add_option("--error-maps", ea.maps, "Write error-map PNGs and metrics here");

  for (auto* sub : app.get_subcommands({}))
    sub->add_option("--threads", threads, "Worker threads (default: NFPS_THREADS or 1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    if (threads < 0) throw UsageError("--threads must be non-negative");
    if (threads > 0) set_thread_count(threads);
    if (sub == render) return cmd_render(ra, *sub);
    if (sub == sample) return cmd_sample(sa, *sub);
    if (sub == trn) return cmd_train(ta, *sub);
    if (sub == rec) return cmd_reconstruct(rca, *sub);
    if (sub == cal) return cmd_calibrate(ca, *sub);
    return cmd_evaluate(ea, *sub);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "nfps-usage: %s: %s\n", sub->get_name().c_str(), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& c : msg)
      if (c == '\n') c = ' ';
    std::fprintf(stderr, "nfps-error: %s: %s\n", sub->get_name().c_str(), msg.c_str());
    return 1;
  }
}

}  // namespace nfps::cli
