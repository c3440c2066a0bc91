// Copyright 2026 The nfps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "nfps/regressor.hpp"
#include "nfps/sampler.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace nfps {

/// Layer layout of the compact regressor: 3x3 conv + ReLU + 2x2 max-pool per stage, then
/// dense + ReLU and a 3-unit output that is L2-normalized at prediction time.
struct NetArch {
  int d = 32;
  std::vector<int> conv = {16, 32, 64, 64};
  int hidden = 128;
  bool extra_channels = true;  // occupancy and cell-centre (Lx, Ly) appended to the six map channels
  enum class Scaling { max, median_log };
  Scaling scaling = Scaling::median_log;  // max: rgb / max; median_log: log(1 + rgb / median of occupied cells)

  int input_channels() const { return extra_channels ? 9 : 6; }
  void validate() const;
  bool operator==(const NetArch& o) const = default;
};

/// Map -> network input: scaled rgb, view, then the optional extra channels.
void prepare_input(const ObservationMap& map, const NetArch& arch, float* out);

/// Storage aligned for Eigen's vector units, so reductions over it are independent of heap placement.
template <class T>
using AlignedVector = std::vector<T, Eigen::aligned_allocator<T>>;

/// Feed-forward network with analytic gradients; T = float for training, double for checks.
template <class T>
class Network {
 public:
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

  explicit Network(const NetArch& arch, std::uint64_t seed = 0);

  const NetArch& arch() const { return arch_; }
  std::size_t param_count() const { return params_.size(); }
  AlignedVector<T>& params() { return params_; }
  const AlignedVector<T>& params() const { return params_; }

  /// input: batch x (channels * d * d), channel-major per sample. Returns 3 x batch raw outputs.
  Mat forward(const T* input, int batch);

  /// Gradient of sum_b dout(:, b) . output(:, b) with respect to the parameters, for the last forward.
  AlignedVector<T> backward(const Mat& dout);

 private:
  struct ConvLayer {
    int cin, cout, size;  // size = spatial side of the input
    std::size_t w_offset, b_offset;
  };
  struct DenseLayer {
    int in, out;
    std::size_t w_offset, b_offset;
    bool relu;
  };
  struct ConvCache {
    Mat cols;
    Mat z;
    std::vector<int> argmax;  // pooled position -> input position
  };

  NetArch arch_;
  AlignedVector<T> params_;
  std::vector<ConvLayer> conv_;
  std::vector<DenseLayer> dense_;
  std::vector<ConvCache> conv_cache_;
  std::vector<Mat> dense_in_, dense_z_;
  int batch_ = 0;
};

struct TrainConfig {
  int steps = 3000;
  int batch = 64;
  double lr = 1e-3;
  std::uint64_t seed = 1;
  int steps_per_epoch = 250;
  std::size_t dataset_size = 0;  // 0: every step draws fresh records; otherwise indices wrap
  int holdout = 1000;            // records of the held-out stream evaluated per epoch
  double plateau_factor = 0.5;   // lr multiplier when the held-out MAE stops improving
  int plateau_patience = 2;
  SamplerConfig sampler;
};

struct TrainReport {
  std::vector<double> epoch_loss;     // mean training angular loss (degrees) per epoch
  std::vector<double> holdout_mae;    // held-out MAE (degrees) per epoch
  bool diverged = false;
  std::string diagnostics;
};

class CompactNet final : public NormalRegressor {
 public:
  explicit CompactNet(const NetArch& arch = {}, std::uint64_t seed = 0);

  Vec3 predict(const ObservationMap& map) const override;
  std::vector<Vec3> predict_batch(std::span<const ObservationMap> maps) const override;
  std::vector<std::optional<Vec3>> try_predict_batch(std::span<const ObservationMap> maps) const override;
  std::string name() const override { return "compactnet"; }

  const NetArch& arch() const { return arch_; }
  std::vector<float>& params() { return params_; }
  const std::vector<float>& params() const { return params_; }
  std::string train_config_echo;  // stored with the checkpoint

  void save(const std::string& path) const;
  static CompactNet load(const std::string& path);

 private:
  NetArch arch_;
  std::vector<float> params_;
};

/// Held-out stream seed derived from a training seed.
std::uint64_t holdout_seed(std::uint64_t seed);

TrainReport train(CompactNet& net, const TrainConfig& cfg, const std::function<void(int, const TrainReport&)>& on_epoch = {});

/// Mean angular error in degrees of `reg` over `count` records of the stream (seed, cfg).
double stream_mae(const NormalRegressor& reg, std::uint64_t seed, std::size_t count, const SamplerConfig& cfg);

std::string train_config_to_json(const TrainConfig& cfg);

}  // namespace nfps
