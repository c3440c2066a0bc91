// Copyright 2026 The nfps Authors
// SPDX-License-Identifier: Apache-2.0

#include "nfps/integrator.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>

namespace nfps {

void IntegratorConfig::validate() const {
  if (!(lambda > 0.0) || !(admm_penalty > 0.0) || max_iters <= 0 || !(tol > 0.0))
    throw std::invalid_argument("integrator: lambda, penalty, max_iters and tol must be positive");
}

constexpr double kGrazingCosine = 0.05;

GradientField normals_to_gradients(const CameraIntrinsics& cam, const NormalMap& normals) {
  const int W = normals.width(), H = normals.height();
  GradientField g{Grid<double>(W, H, 0.0), Grid<double>(W, H, 0.0), Mask(W, H, 0)};
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      if (!normals.valid(x, y)) continue;
      const Vec3& n = normals.values(x, y);
      const double ut = (x - cam.cx) / cam.fx;
      const double vt = (y - cam.cy) / cam.fy;
      const double denom = ut * n.x() + vt * n.y() + n.z();
      if (std::abs(denom) < kGrazingCosine * std::sqrt(ut * ut + vt * vt + 1.0)) continue;
      g.p(x, y) = -n.x() / (cam.fx * denom);
      g.q(x, y) = -n.y() / (cam.fy * denom);
      g.mask(x, y) = 1;
    }
  return g;
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;

// Unknowns are pixels with a gradient and a positive prior depth; one row of D per
// neighbouring pair inside that set (horizontal then vertical).
struct Discretization {
  Grid<int> index;
  std::vector<int> pixel;  // unknown -> linear pixel index
  SpMat D;
  Eigen::VectorXd g;
  Eigen::VectorXd w0;
};

Discretization discretize(const GradientField& grad, const DepthMap& z0) {
  const int W = grad.mask.width, H = grad.mask.height;
  if (!z0.mask.same_shape(W, H)) throw std::invalid_argument("integrate: gradient field and prior depth differ in size");
  Discretization dz{Grid<int>(W, H, -1), {}, {}, {}, {}};
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      if (grad.mask(x, y) && z0.valid(x, y) && z0.values(x, y) > 0.0) {
        dz.index(x, y) = static_cast<int>(dz.pixel.size());
        dz.pixel.push_back(y * W + x);
      }
  const int n = static_cast<int>(dz.pixel.size());
  dz.w0.resize(n);
  for (int k = 0; k < n; ++k) dz.w0[k] = std::log(z0.values.data[dz.pixel[k]]);

  std::vector<Eigen::Triplet<double>> trips;
  std::vector<double> target;
  int row = 0;
  for (int y = 0; y < H; ++y)
    for (int x = 0; x + 1 < W; ++x) {
      const int a = dz.index(x, y), b = dz.index(x + 1, y);
      if (a < 0 || b < 0) continue;
      trips.emplace_back(row, a, -1.0);
      trips.emplace_back(row, b, 1.0);
      target.push_back(0.5 * (grad.p(x, y) + grad.p(x + 1, y)));
      ++row;
    }
  for (int y = 0; y + 1 < H; ++y)
    for (int x = 0; x < W; ++x) {
      const int a = dz.index(x, y), b = dz.index(x, y + 1);
      if (a < 0 || b < 0) continue;
      trips.emplace_back(row, a, -1.0);
      trips.emplace_back(row, b, 1.0);
      target.push_back(0.5 * (grad.q(x, y) + grad.q(x, y + 1)));
      ++row;
    }
  dz.D.resize(row, n);
  dz.D.setFromTriplets(trips.begin(), trips.end());
  dz.g = Eigen::Map<Eigen::VectorXd>(target.data(), row);
  return dz;
}

double objective(const Discretization& dz, const Eigen::VectorXd& w, double lambda) {
  return (dz.D * w - dz.g).lpNorm<1>() + lambda * (w - dz.w0).squaredNorm();
}

DepthMap to_depth(const Discretization& dz, const Eigen::VectorXd& w, int W, int H) {
  DepthMap out{Grid<double>(W, H, 0.0), Mask(W, H, 0)};
  for (std::size_t k = 0; k < dz.pixel.size(); ++k) {
    out.values.data[dz.pixel[k]] = std::exp(w[static_cast<Eigen::Index>(k)]);
    out.mask.data[dz.pixel[k]] = 1;
  }
  return out;
}

}  // namespace

IntegrationResult integrate_detailed(const GradientField& grad, const DepthMap& z0, const IntegratorConfig& cfg) {
  cfg.validate();
  const int W = grad.mask.width, H = grad.mask.height;
  const Discretization dz = discretize(grad, z0);
  IntegrationResult res;
  const Eigen::Index n = static_cast<Eigen::Index>(dz.pixel.size());
  if (n == 0) {
    res.depth = DepthMap{Grid<double>(W, H, 0.0), Mask(W, H, 0)};
    res.converged = true;
    return res;
  }

  const double beta = cfg.admm_penalty;
  SpMat I(n, n);
  I.setIdentity();
  const SpMat A = SpMat(2.0 * cfg.lambda * I) + beta * SpMat(dz.D.transpose() * dz.D);
  Eigen::SimplicialLDLT<SpMat> solver(A);
  if (solver.info() != Eigen::Success) throw std::runtime_error("integrate: factorisation failed");

  const double thresh = 1.0 / beta;
  auto shrink = [thresh](double v) { return v > thresh ? v - thresh : (v < -thresh ? v + thresh : 0.0); };

  // (x, s, u) follow plain scaled ADMM from the least-squares start; `best` is the reported
  // primal estimate, replaced only when a candidate does not raise the objective.
  Eigen::VectorXd x = dz.w0;
  Eigen::VectorXd s = Eigen::VectorXd::Zero(dz.g.size());
  Eigen::VectorXd u = Eigen::VectorXd::Zero(dz.g.size());
  const Eigen::VectorXd prior = 2.0 * cfg.lambda * dz.w0;
  Eigen::VectorXd best = dz.w0;
  double best_obj = objective(dz, best, cfg.lambda);

  for (int it = 0; it < cfg.max_iters; ++it) {
    const Eigen::VectorXd x_prev = x;
    x = solver.solve(prior + beta * (dz.D.transpose() * (dz.g + s - u)));
    const Eigen::VectorXd r = dz.D * x - dz.g;
    const Eigen::VectorXd s_prev = s;
    s = (r + u).unaryExpr(shrink);
    u += r - s;

    const double obj = objective(dz, x, cfg.lambda);
    if (obj <= best_obj) {
      best = x;
      best_obj = obj;
    }
    res.objective.push_back(best_obj);
    res.iterations = it + 1;

    const double scale = std::max(1.0, x.lpNorm<Eigen::Infinity>());
    const double dx = (x - x_prev).lpNorm<Eigen::Infinity>() / scale;
    const double primal = (r - s).lpNorm<Eigen::Infinity>();
    const double dual = (s - s_prev).lpNorm<Eigen::Infinity>();
    if (dx < cfg.tol && primal < cfg.tol && dual < cfg.tol) {
      res.converged = true;
      break;
    }
  }
  res.depth = to_depth(dz, best, W, H);
  return res;
}

DepthMap integrate(const GradientField& grad, const DepthMap& z0, const IntegratorConfig& cfg) {
  return integrate_detailed(grad, z0, cfg).depth;
}

double integration_objective(const GradientField& grad, const DepthMap& z, const DepthMap& z0, double lambda) {
  const Discretization dz = discretize(grad, z0);
  Eigen::VectorXd w(static_cast<Eigen::Index>(dz.pixel.size()));
  for (std::size_t k = 0; k < dz.pixel.size(); ++k) {
    const double v = z.values.data[dz.pixel[k]];
    if (!(v > 0.0)) throw std::domain_error("integration_objective: depth missing on the integration domain");
    w[static_cast<Eigen::Index>(k)] = std::log(v);
  }
  return objective(dz, w, lambda);
}

}  // namespace nfps
