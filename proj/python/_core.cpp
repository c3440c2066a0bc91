// Copyright 2026 The nfps Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"
#include "nfps/io.hpp"
#include "nfps/network.hpp"
#include "nfps/pipeline.hpp"
#include "nfps/sampler.hpp"
#include "nfps/scenes.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

namespace py = pybind11;
using namespace nfps;

namespace {

using F64 = py::array_t<double, py::array::c_style | py::array::forcecast>;
using U8 = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

Vec3 to_vec3(const F64& a) {
  if (a.ndim() != 1 || a.shape(0) != 3) throw std::invalid_argument("expected a length-3 vector");
  const double* p = a.data();
  return Vec3(p[0], p[1], p[2]);
}

py::array_t<double> from_vec3(const Vec3& v) { return py::array_t<double>(py::ssize_t(3), v.data()); }

ImageStack to_stack(const F64& a) {
  if (a.ndim() != 4 || a.shape(3) != 3) throw std::invalid_argument("images must have shape (lights, height, width, 3)");
  const int n = static_cast<int>(a.shape(0)), h = static_cast<int>(a.shape(1)), w = static_cast<int>(a.shape(2));
  ImageStack out(n, Image(w, h));
  auto r = a.unchecked<4>();
  for (int m = 0; m < n; ++m)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out[m](x, y) = Rgb(r(m, y, x, 0), r(m, y, x, 1), r(m, y, x, 2));
  return out;
}

py::array_t<double> from_stack(const ImageStack& s) {
  const int h = s.empty() ? 0 : s[0].height, w = s.empty() ? 0 : s[0].width;
  py::array_t<double> out({static_cast<py::ssize_t>(s.size()), static_cast<py::ssize_t>(h), static_cast<py::ssize_t>(w),
                           py::ssize_t(3)});
  auto r = out.mutable_unchecked<4>();
  for (std::size_t m = 0; m < s.size(); ++m)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < 3; ++c) r(m, y, x, c) = s[m](x, y)[c];
  return out;
}

Mask to_mask(const U8& a) {
  if (a.ndim() != 2) throw std::invalid_argument("mask must be 2-D");
  Mask m(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  auto r = a.unchecked<2>();
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) m(x, y) = r(y, x) != 0;
  return m;
}

py::array_t<std::uint8_t> from_mask(const Mask& m) {
  py::array_t<std::uint8_t> out({m.height, m.width});
  auto r = out.mutable_unchecked<2>();
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) r(y, x) = m(x, y);
  return out;
}

py::array_t<double> from_depth(const DepthMap& d) {
  py::array_t<double> out({d.height(), d.width()});
  auto r = out.mutable_unchecked<2>();
  for (int y = 0; y < d.height(); ++y)
    for (int x = 0; x < d.width(); ++x) r(y, x) = d.valid(x, y) ? d.values(x, y) : 0.0;
  return out;
}

py::array_t<double> from_normals(const NormalMap& n) {
  py::array_t<double> out({n.height(), n.width(), 3});
  auto r = out.mutable_unchecked<3>();
  for (int y = 0; y < n.height(); ++y)
    for (int x = 0; x < n.width(); ++x)
      for (int c = 0; c < 3; ++c) r(y, x, c) = n.valid(x, y) ? n.values(x, y)[c] : 0.0;
  return out;
}

DepthMap to_depth(const F64& a) {
  if (a.ndim() != 2) throw std::invalid_argument("depth must be 2-D");
  const int h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
  DepthMap d{Grid<double>(w, h, 0.0), Mask(w, h, 0)};
  auto r = a.unchecked<2>();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (r(y, x) > 0.0) {
        d.values(x, y) = r(y, x);
        d.mask(x, y) = 1;
      }
  return d;
}

NormalMap to_normals(const F64& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw std::invalid_argument("normals must have shape (height, width, 3)");
  const int h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
  NormalMap n{Grid<Vec3>(w, h, Vec3(0, 0, -1)), Mask(w, h, 0)};
  auto r = a.unchecked<3>();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Vec3 v(r(y, x, 0), r(y, x, 1), r(y, x, 2));
      if (v.squaredNorm() > 0.0) {
        n.values(x, y) = v.normalized();
        n.mask(x, y) = 1;
      }
    }
  return n;
}

py::array_t<float> map_tensor(const ObservationMap& m) {
  py::array_t<float> out({6, m.d(), m.d()});
  m.write_tensor(out.mutable_data());
  return out;
}

std::unique_ptr<NormalRegressor> make_regressor(const std::string& spec) {
  if (spec == "lambertian") return std::make_unique<LambertianRegressor>();
  if (spec.rfind("net:", 0) == 0) return std::make_unique<CompactNet>(CompactNet::load(spec.substr(4)));
  throw std::invalid_argument("regressor must be 'lambertian' or 'net:CHECKPOINT'");
}

SamplerConfig make_sampler(const std::string& materials, bool gi, bool perturb, int quant_bits, int d) {
  SamplerConfig cfg;
  if (materials != "lambertian" && materials != "mixed") throw std::invalid_argument("materials must be lambertian or mixed");
  cfg.materials = materials == "lambertian" ? MaterialFamily::lambertian : MaterialFamily::mixed;
  cfg.global_illumination = gi;
  if (!perturb) cfg.perturbation = PerturbationSpec::none();
  if (quant_bits > 0) {
    QuantizationSpec q;
    q.levels = 1 << quant_bits;
    cfg.quant = q;
  } else {
    cfg.quant.reset();
  }
  cfg.d = d;
  cfg.validate();
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Near-field photometric stereo core";

  py::register_exception<std::domain_error>(m, "DomainError", PyExc_ValueError);

  py::class_<CameraIntrinsics>(m, "Camera")
      .def(py::init<>())
      .def_static("from_normalized", &CameraIntrinsics::from_normalized, py::arg("f_norm"), py::arg("width"), py::arg("height"))
      .def_readwrite("fx", &CameraIntrinsics::fx)
      .def_readwrite("fy", &CameraIntrinsics::fy)
      .def_readwrite("cx", &CameraIntrinsics::cx)
      .def_readwrite("cy", &CameraIntrinsics::cy)
      .def_readwrite("width", &CameraIntrinsics::width)
      .def_readwrite("height", &CameraIntrinsics::height);

  py::class_<PointLight>(m, "PointLight")
      .def(py::init<>())
      .def_property(
          "position", [](const PointLight& l) { return from_vec3(l.position); },
          [](PointLight& l, const F64& v) { l.position = to_vec3(v); })
      .def_property(
          "direction", [](const PointLight& l) { return from_vec3(l.direction); },
          [](PointLight& l, const F64& v) { l.direction = to_vec3(v); })
      .def_property(
          "brightness", [](const PointLight& l) { return from_vec3(l.brightness.matrix()); },
          [](PointLight& l, const F64& v) { l.brightness = to_vec3(v).array(); })
      .def_readwrite("mu", &PointLight::mu);

  py::class_<CalibrationFile>(m, "Calibration")
      .def(py::init<>())
      .def_readwrite("camera", &CalibrationFile::camera)
      .def_readwrite("lights", &CalibrationFile::lights)
      .def("to_text", [](const CalibrationFile& f) { return calibration_to_text(f); })
      .def_static("from_text", &calibration_from_text)
      .def_static("read", &read_calibration)
      .def("write", [](const CalibrationFile& f, const std::string& path) { write_calibration(path, f); });

  m.def("ring_lights", &ring_lights, py::arg("count"), py::arg("radius"), py::arg("phi"), py::arg("mu"));
  m.def("luces_like_lights", &luces_like_lights, py::arg("phi"), py::arg("mu"));

  m.def(
      "angular_loss", [](const F64& p, const F64& t) { return angular_loss(to_vec3(p), to_vec3(t)); }, py::arg("predicted"),
      py::arg("target"), "Angle in radians between two vectors.");

  m.def(
      "render_sphere",
      [](const CameraIntrinsics& cam, const std::vector<PointLight>& lights, double radius, double depth, double albedo,
         int quant_bits, std::uint64_t seed) {
        const auto scene = make_sphere_scene(cam, Vec3(0, 0, depth), radius, Material::lambertian(Rgb::Constant(albedo)));
        SceneRenderOptions opts;
        if (quant_bits > 0) {
          QuantizationSpec q;
          q.levels = 1 << quant_bits;
          opts.quant = q;
        }
        opts.seed = seed;
        const auto images = render_scene(cam, scene.depth, scene.normals, scene.materials, lights, opts);
        py::dict out;
        out["images"] = from_stack(images);
        out["mask"] = from_mask(scene.depth.mask);
        out["depth"] = from_depth(scene.depth);
        out["normals"] = from_normals(scene.normals);
        return out;
      },
      py::arg("camera"), py::arg("lights"), py::arg("radius") = 0.05, py::arg("depth") = 0.30, py::arg("albedo") = 0.8,
      py::arg("quant_bits") = 16, py::arg("seed") = 0, "Lambertian sphere: images (L, H, W, 3), mask, depth, normals.");

  m.def(
      "observe",
      [](const F64& intensities, const F64& X, const std::vector<PointLight>& lights, int d) {
        if (intensities.ndim() != 2 || intensities.shape(1) != 3)
          throw std::invalid_argument("intensities must have shape (lights, 3)");
        std::vector<Rgb> i(static_cast<std::size_t>(intensities.shape(0)));
        for (std::size_t k = 0; k < i.size(); ++k) i[k] = Rgb(intensities.at(k, 0), intensities.at(k, 1), intensities.at(k, 2));
        return map_tensor(observe(i, to_vec3(X), lights, d));
      },
      py::arg("intensities"), py::arg("X"), py::arg("lights"), py::arg("d") = 32,
      "Observation map tensor (6, d, d) of one pixel's compensated intensities.");

  m.def(
      "sample_record",
      [](std::uint64_t seed, std::uint64_t index, const std::string& materials, bool gi, bool perturb, int quant_bits, int d) {
        const auto cfg = make_sampler(materials, gi, perturb, quant_bits, d);
        const auto rec = generate_record(seed, index, cfg);
        LambertianRegressor lambertian;
        py::dict out;
        out["map"] = map_tensor(rec.map);
        out["target"] = from_vec3(rec.target);
        out["lambertian"] = from_vec3(lambertian.predict(rec.map));
        out["light_count"] = rec.light_count;
        return out;
      },
      py::arg("seed"), py::arg("index"), py::arg("materials") = "mixed", py::arg("gi") = true, py::arg("perturb") = true,
      py::arg("quant_bits") = 10, py::arg("d") = 32, "One training record as a dict.");

  m.def(
      "reconstruct",
      [](const F64& images, const U8& mask, const CalibrationFile& calib, const std::string& regressor, int iterations,
         double mean_distance, bool naive) {
        const auto reg = make_regressor(regressor);
        ReconstructionConfig cfg;
        cfg.iterations = iterations;
        cfg.mean_distance = mean_distance;
        const auto stack = to_stack(images);
        const auto msk = to_mask(mask);
        Reconstruction r;
        {
          py::gil_scoped_release release;
          r = naive ? naive_reconstruct(stack, msk, calib, *reg, cfg) : reconstruct(stack, msk, calib, *reg, cfg);
        }
        py::dict out;
        out["depth"] = from_depth(r.depth);
        out["normals"] = from_normals(r.normals_cnn);
        out["normals_nfs"] = from_normals(r.normals_nfs);
        py::list change;
        for (const auto& h : r.history) change.append(h.normal_change_deg);
        out["normal_change_deg"] = change;
        return out;
      },
      py::arg("images"), py::arg("mask"), py::arg("calib"), py::arg("regressor") = "lambertian", py::arg("iterations") = 2,
      py::arg("mean_distance"), py::arg("naive") = false);

  m.def(
      "evaluate",
      [](const CameraIntrinsics& cam, const F64& depth, const F64& normals, const F64& gt_depth, const F64& gt_normals,
         const U8& mask, bool align_mean_z) {
        const auto r =
            evaluate(cam, to_depth(depth), to_normals(normals), to_depth(gt_depth), to_normals(gt_normals), to_mask(mask), align_mean_z);
        py::dict out;
        out["mae_deg"] = r.mae_cnn;
        out["mae_nfs_deg"] = r.mae_nfs;
        out["mze_mm"] = r.mze_mm;
        out["pixels"] = r.pixels;
        return out;
      },
      py::arg("camera"), py::arg("depth"), py::arg("normals"), py::arg("gt_depth"), py::arg("gt_normals"), py::arg("mask"),
      py::arg("align_mean_z") = false);

  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::vector<std::string> all{"nfps"};
        all.insert(all.end(), args.begin(), args.end());
        std::vector<char*> argv;
        for (auto& a : all) argv.push_back(a.data());
        py::gil_scoped_release release;
        return cli::run(static_cast<int>(argv.size()), argv.data());
      },
      py::arg("args"), "Runs the command line tool in-process and returns its exit code.");

  m.def("set_threads", &set_thread_count, py::arg("count"));
}
