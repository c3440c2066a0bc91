// Copyright 2026 The nfps Authors
// SPDX-License-Identifier: Apache-2.0

#include "nfps/network.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace nfps {

void NetArch::validate() const {
  if (d < 2) throw std::invalid_argument("NetArch: d must be at least 2");
  if (conv.empty()) throw std::invalid_argument("NetArch: at least one convolution stage required");
  if (d % (1 << conv.size()) != 0)
    throw std::invalid_argument("NetArch: d must be divisible by 2^(conv stages)");
  for (int c : conv)
    if (c <= 0) throw std::invalid_argument("NetArch: convolution widths must be positive");
  if (hidden <= 0) throw std::invalid_argument("NetArch: hidden width must be positive");
}

void prepare_input(const ObservationMap& map, const NetArch& arch, float* out) {
  if (map.d() != arch.d)
    throw std::invalid_argument("network input: map d=" + std::to_string(map.d()) + " but network expects d=" +
                                std::to_string(arch.d));
  const int d = arch.d;
  const std::size_t plane = static_cast<std::size_t>(d) * d;
  map.write_tensor(out);
  if (arch.scaling == NetArch::Scaling::max) {
    float peak = 0.0f;
    for (std::size_t i = 0; i < 3 * plane; ++i) peak = std::max(peak, out[i]);
    if (peak > 0.0f && std::isfinite(peak)) {
      const float inv = 1.0f / peak;
      for (std::size_t i = 0; i < 3 * plane; ++i) out[i] *= inv;
    }
  } else {
    std::vector<float> lit;
    for (int iy = 0; iy < d; ++iy)
      for (int ix = 0; ix < d; ++ix)
        if (map.occupied(ix, iy))
          for (int c = 0; c < 3; ++c)
            if (map.rgb(ix, iy, c) > 0.0f) lit.push_back(map.rgb(ix, iy, c));
    if (!lit.empty()) {
      auto mid = lit.begin() + static_cast<std::ptrdiff_t>(lit.size() / 2);
      std::nth_element(lit.begin(), mid, lit.end());
      const float inv = 1.0f / *mid;
      for (std::size_t i = 0; i < 3 * plane; ++i) out[i] = std::log1p(std::max(0.0f, out[i]) * inv);
    }
  }
  if (!arch.extra_channels) return;
  float* occ = out + 6 * plane;
  float* lx = out + 7 * plane;
  float* ly = out + 8 * plane;
  for (int iy = 0; iy < d; ++iy)
    for (int ix = 0; ix < d; ++ix) {
      const std::size_t k = static_cast<std::size_t>(iy) * d + ix;
      occ[k] = map.occupied(ix, iy) ? 1.0f : 0.0f;
      lx[k] = (2.0f * ix + 1.0f) / d - 1.0f;
      ly[k] = (2.0f * iy + 1.0f) / d - 1.0f;
    }
}

// ---------------------------------------------------------------------------------------------
// Network

template <class T>
Network<T>::Network(const NetArch& arch, std::uint64_t seed) : arch_(arch) {
  arch_.validate();
  std::size_t offset = 0;
  int cin = arch_.input_channels();
  int size = arch_.d;
  for (int cout : arch_.conv) {
    ConvLayer l{cin, cout, size, offset, offset + static_cast<std::size_t>(cout) * 9 * cin};
    offset = l.b_offset + cout;
    conv_.push_back(l);
    cin = cout;
    size /= 2;
  }
  const int flat = cin * size * size;
  DenseLayer h{flat, arch_.hidden, offset, offset + static_cast<std::size_t>(arch_.hidden) * flat, true};
  offset = h.b_offset + arch_.hidden;
  DenseLayer o{arch_.hidden, 3, offset, offset + 3 * static_cast<std::size_t>(arch_.hidden), false};
  offset = o.b_offset + 3;
  dense_ = {h, o};
  params_.assign(offset, T(0));

  std::mt19937_64 rng(seed);
  auto fill = [&](std::size_t begin, std::size_t count, double stddev) {
    std::normal_distribution<double> n(0.0, stddev);
    for (std::size_t i = 0; i < count; ++i) params_[begin + i] = static_cast<T>(n(rng));
  };
  for (const auto& l : conv_)
    fill(l.w_offset, static_cast<std::size_t>(l.cout) * 9 * l.cin, std::sqrt(2.0 / (9.0 * l.cin)));
  fill(h.w_offset, static_cast<std::size_t>(h.out) * h.in, std::sqrt(2.0 / h.in));
  fill(o.w_offset, static_cast<std::size_t>(o.out) * o.in, std::sqrt(1.0 / o.in));
  conv_cache_.resize(conv_.size());
  dense_in_.resize(dense_.size());
  dense_z_.resize(dense_.size());
}

namespace {

// cols row k = (dy * 3 + dx) * cin + c; column = b * S * S + y * S + x.
template <class M>
void im2col(const M& a, int cin, int size, int batch, M& cols) {
  const int ss = size * size;
  cols.setZero(9 * cin, static_cast<Eigen::Index>(batch) * ss);
  for (int b = 0; b < batch; ++b)
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        const Eigen::Index col = static_cast<Eigen::Index>(b) * ss + y * size + x;
        for (int dy = 0; dy < 3; ++dy) {
          const int sy = y + dy - 1;
          if (sy < 0 || sy >= size) continue;
          for (int dx = 0; dx < 3; ++dx) {
            const int sx = x + dx - 1;
            if (sx < 0 || sx >= size) continue;
            const Eigen::Index src = static_cast<Eigen::Index>(b) * ss + sy * size + sx;
            cols.block((dy * 3 + dx) * cin, col, cin, 1) = a.col(src);
          }
        }
      }
}

template <class M>
void col2im(const M& dcols, int cin, int size, int batch, M& da) {
  const int ss = size * size;
  da.setZero(cin, static_cast<Eigen::Index>(batch) * ss);
  for (int b = 0; b < batch; ++b)
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        const Eigen::Index col = static_cast<Eigen::Index>(b) * ss + y * size + x;
        for (int dy = 0; dy < 3; ++dy) {
          const int sy = y + dy - 1;
          if (sy < 0 || sy >= size) continue;
          for (int dx = 0; dx < 3; ++dx) {
            const int sx = x + dx - 1;
            if (sx < 0 || sx >= size) continue;
            const Eigen::Index src = static_cast<Eigen::Index>(b) * ss + sy * size + sx;
            da.col(src) += dcols.block((dy * 3 + dx) * cin, col, cin, 1);
          }
        }
      }
}

}  // namespace

template <class T>
typename Network<T>::Mat Network<T>::forward(const T* input, int batch) {
  if (batch <= 0) throw std::invalid_argument("Network::forward: empty batch");
  batch_ = batch;
  const int cin0 = arch_.input_channels();
  const int ss0 = arch_.d * arch_.d;
  Mat a(cin0, static_cast<Eigen::Index>(batch) * ss0);
  for (int b = 0; b < batch; ++b)
    for (int c = 0; c < cin0; ++c)
      for (int p = 0; p < ss0; ++p)
        a(c, static_cast<Eigen::Index>(b) * ss0 + p) = input[(static_cast<std::size_t>(b) * cin0 + c) * ss0 + p];

  for (std::size_t li = 0; li < conv_.size(); ++li) {
    const auto& l = conv_[li];
    auto& cache = conv_cache_[li];
    im2col(a, l.cin, l.size, batch, cache.cols);
    Eigen::Map<const Mat> w(params_.data() + l.w_offset, l.cout, 9 * l.cin);
    Eigen::Map<const Vec> bias(params_.data() + l.b_offset, l.cout);
    cache.z.noalias() = w * cache.cols;
    cache.z.colwise() += bias;

    const int s = l.size, h = s / 2;
    Mat pooled(l.cout, static_cast<Eigen::Index>(batch) * h * h);
    cache.argmax.assign(static_cast<std::size_t>(pooled.size()), 0);
    for (int b = 0; b < batch; ++b)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < h; ++x) {
          const Eigen::Index oc = static_cast<Eigen::Index>(b) * h * h + y * h + x;
          const Eigen::Index ic[4] = {
              static_cast<Eigen::Index>(b) * s * s + (2 * y) * s + 2 * x,
              static_cast<Eigen::Index>(b) * s * s + (2 * y) * s + 2 * x + 1,
              static_cast<Eigen::Index>(b) * s * s + (2 * y + 1) * s + 2 * x,
              static_cast<Eigen::Index>(b) * s * s + (2 * y + 1) * s + 2 * x + 1,
          };
          for (int c = 0; c < l.cout; ++c) {
            int best = 0;
            T bv = cache.z(c, ic[0]);
            for (int k = 1; k < 4; ++k) {
              const T v = cache.z(c, ic[k]);
              if (v > bv) {
                bv = v;
                best = k;
              }
            }
            pooled(c, oc) = std::max(bv, T(0));
            cache.argmax[static_cast<std::size_t>(oc) * l.cout + c] = static_cast<int>(ic[best]);
          }
        }
    a = std::move(pooled);
  }

  // Flatten: feature c * S * S + p of sample b.
  const int cl = conv_.back().cout;
  const int sl = conv_.back().size / 2;
  const int ssl = sl * sl;
  Mat x(static_cast<Eigen::Index>(cl) * ssl, batch);
  for (int b = 0; b < batch; ++b)
    for (int c = 0; c < cl; ++c)
      for (int p = 0; p < ssl; ++p) x(static_cast<Eigen::Index>(c) * ssl + p, b) = a(c, static_cast<Eigen::Index>(b) * ssl + p);

  for (std::size_t li = 0; li < dense_.size(); ++li) {
    const auto& l = dense_[li];
    Eigen::Map<const Mat> w(params_.data() + l.w_offset, l.out, l.in);
    Eigen::Map<const Vec> bias(params_.data() + l.b_offset, l.out);
    dense_in_[li] = x;
    Mat z = w * x;
    z.colwise() += bias;
    dense_z_[li] = z;
    x = l.relu ? Mat(z.cwiseMax(T(0))) : z;
  }
  return x;
}

template <class T>
AlignedVector<T> Network<T>::backward(const Mat& dout) {
  if (batch_ == 0 || dout.rows() != 3 || dout.cols() != batch_)
    throw std::invalid_argument("Network::backward: gradient shape does not match the last forward pass");
  AlignedVector<T> grad(params_.size(), T(0));
  const int batch = batch_;

  Mat dx = dout;
  for (std::size_t li = dense_.size(); li-- > 0;) {
    const auto& l = dense_[li];
    Mat dz = dx;
    if (l.relu) dz = (dense_z_[li].array() > T(0)).select(dz, T(0));
    Eigen::Map<Mat> gw(grad.data() + l.w_offset, l.out, l.in);
    Eigen::Map<Vec> gb(grad.data() + l.b_offset, l.out);
    gw.noalias() = dz * dense_in_[li].transpose();
    gb = dz.rowwise().sum();
    Eigen::Map<const Mat> w(params_.data() + l.w_offset, l.out, l.in);
    dx.noalias() = w.transpose() * dz;
  }

  const int cl = conv_.back().cout;
  const int sl = conv_.back().size / 2;
  const int ssl = sl * sl;
  Mat da(cl, static_cast<Eigen::Index>(batch) * ssl);
  for (int b = 0; b < batch; ++b)
    for (int c = 0; c < cl; ++c)
      for (int p = 0; p < ssl; ++p) da(c, static_cast<Eigen::Index>(b) * ssl + p) = dx(static_cast<Eigen::Index>(c) * ssl + p, b);

  for (std::size_t li = conv_.size(); li-- > 0;) {
    const auto& l = conv_[li];
    auto& cache = conv_cache_[li];
    Mat dz = Mat::Zero(l.cout, cache.z.cols());
    for (Eigen::Index oc = 0; oc < da.cols(); ++oc)
      for (int c = 0; c < l.cout; ++c) {
        const int ic = cache.argmax[static_cast<std::size_t>(oc) * l.cout + c];
        if (cache.z(c, ic) > T(0)) dz(c, ic) += da(c, oc);
      }
    Eigen::Map<Mat> gw(grad.data() + l.w_offset, l.cout, 9 * l.cin);
    Eigen::Map<Vec> gb(grad.data() + l.b_offset, l.cout);
    gw.noalias() = dz * cache.cols.transpose();
    gb = dz.rowwise().sum();
    if (li == 0) break;
    Eigen::Map<const Mat> w(params_.data() + l.w_offset, l.cout, 9 * l.cin);
    Mat dcols = w.transpose() * dz;
    col2im(dcols, l.cin, l.size, batch, da);
  }
  return grad;
}

template class Network<float>;
template class Network<double>;

// ---------------------------------------------------------------------------------------------
// CompactNet

CompactNet::CompactNet(const NetArch& arch, std::uint64_t seed) : arch_(arch) {
  Network<float> net(arch, seed);
  params_.assign(net.params().begin(), net.params().end());
}

namespace {

Vec3 orient(const Eigen::Vector3f& y) {
  Vec3 n = y.cast<double>();
  const double len = n.norm();
  if (!(len > 0.0) || !std::isfinite(len)) return Vec3(0, 0, -1);
  n /= len;
  if (n.z() > 0.0) n = -n;
  return n;
}

}  // namespace

Vec3 CompactNet::predict(const ObservationMap& map) const {
  return predict_batch(std::span<const ObservationMap>(&map, 1))[0];
}

std::vector<Vec3> CompactNet::predict_batch(std::span<const ObservationMap> maps) const {
  const std::size_t in = static_cast<std::size_t>(arch_.input_channels()) * arch_.d * arch_.d;
  for (const auto& m : maps)
    if (m.d() != arch_.d)
      throw std::invalid_argument("predict_batch: map d=" + std::to_string(m.d()) + " but network expects d=" +
                                  std::to_string(arch_.d));
  std::vector<Vec3> out(maps.size());
  constexpr std::size_t kChunk = 128;
  const std::size_t chunks = (maps.size() + kChunk - 1) / kChunk;
  parallel_for(chunks, [&](std::size_t cb, std::size_t ce) {
    Network<float> net(arch_, 0);
    net.params().assign(params_.begin(), params_.end());
    AlignedVector<float> input;
    for (std::size_t ch = cb; ch < ce; ++ch) {
      const std::size_t b = ch * kChunk, e = std::min(maps.size(), b + kChunk);
      input.assign((e - b) * in, 0.0f);
      for (std::size_t i = b; i < e; ++i) prepare_input(maps[i], arch_, input.data() + (i - b) * in);
      const auto y = net.forward(input.data(), static_cast<int>(e - b));
      for (std::size_t i = b; i < e; ++i) out[i] = orient(y.col(static_cast<Eigen::Index>(i - b)));
    }
  });
  return out;
}

std::vector<std::optional<Vec3>> CompactNet::try_predict_batch(std::span<const ObservationMap> maps) const {
  const auto normals = predict_batch(maps);
  return {normals.begin(), normals.end()};
}

namespace {

constexpr char kMagic[8] = {'N', 'F', 'P', 'S', 'N', 'E', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("checkpoint: truncated file");
  return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 | std::uint32_t(b[3]) << 24;
}

}  // namespace

void CompactNet::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  os.write(kMagic, sizeof(kMagic));
  put_u32(os, kVersion);
  put_u32(os, static_cast<std::uint32_t>(arch_.d));
  put_u32(os, static_cast<std::uint32_t>(arch_.conv.size()));
  for (int c : arch_.conv) put_u32(os, static_cast<std::uint32_t>(c));
  put_u32(os, static_cast<std::uint32_t>(arch_.hidden));
  put_u32(os, (arch_.extra_channels ? 1u : 0u) | (arch_.scaling == NetArch::Scaling::median_log ? 2u : 0u));
  put_u32(os, static_cast<std::uint32_t>(params_.size()));
  for (float f : params_) put_u32(os, std::bit_cast<std::uint32_t>(f));
  put_u32(os, static_cast<std::uint32_t>(train_config_echo.size()));
  os.write(train_config_echo.data(), static_cast<std::streamsize>(train_config_echo.size()));
  if (!os) throw std::runtime_error("failed writing checkpoint: " + path);
}

CompactNet CompactNet::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("not a network checkpoint: " + path);
  const std::uint32_t version = get_u32(is);
  if (version != kVersion) throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  NetArch arch;
  arch.d = static_cast<int>(get_u32(is));
  const std::uint32_t stages = get_u32(is);
  if (stages == 0 || stages > 16) throw std::runtime_error("checkpoint: bad architecture descriptor");
  arch.conv.resize(stages);
  for (auto& c : arch.conv) c = static_cast<int>(get_u32(is));
  arch.hidden = static_cast<int>(get_u32(is));
  const std::uint32_t flags = get_u32(is);
  arch.extra_channels = (flags & 1u) != 0;
  arch.scaling = (flags & 2u) != 0 ? NetArch::Scaling::median_log : NetArch::Scaling::max;
  try {
    arch.validate();
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("checkpoint: ") + e.what());
  }
  CompactNet net(arch, 0);
  const std::uint32_t count = get_u32(is);
  if (count != net.params_.size())
    throw std::runtime_error("checkpoint: weight count " + std::to_string(count) + " does not match architecture (" +
                             std::to_string(net.params_.size()) + ")");
  for (auto& f : net.params_) f = std::bit_cast<float>(get_u32(is));
  const std::uint32_t len = get_u32(is);
  net.train_config_echo.resize(len);
  if (len > 0 && !is.read(net.train_config_echo.data(), len)) throw std::runtime_error("checkpoint: truncated file");
  return net;
}

// ---------------------------------------------------------------------------------------------
// Training

std::uint64_t holdout_seed(std::uint64_t seed) { return stream_seed(seed ^ 0x686f6c646f7574ULL, 0x9e3779b97f4a7c15ULL); }

double stream_mae(const NormalRegressor& reg, std::uint64_t seed, std::size_t count, const SamplerConfig& cfg) {
  if (count == 0) return 0.0;
  const auto records = generate_records(seed, 0, count, cfg);
  std::vector<ObservationMap> maps;
  maps.reserve(records.size());
  for (const auto& r : records) maps.push_back(r.map);
  const auto pred = reg.predict_batch(maps);
  double sum = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) sum += angular_loss(pred[i], records[i].target);
  return rad2deg(sum / static_cast<double>(records.size()));
}

std::string train_config_to_json(const TrainConfig& cfg) {
  nlohmann::json j;
  j["steps"] = cfg.steps;
  j["batch"] = cfg.batch;
  j["lr"] = cfg.lr;
  j["seed"] = cfg.seed;
  j["steps_per_epoch"] = cfg.steps_per_epoch;
  j["dataset_size"] = cfg.dataset_size;
  j["holdout"] = cfg.holdout;
  j["plateau_factor"] = cfg.plateau_factor;
  j["plateau_patience"] = cfg.plateau_patience;
  const auto& s = cfg.sampler;
  j["mode"] = s.mode == SamplerMode::general ? "general" : "specific";
  j["materials"] = s.materials == MaterialFamily::lambertian ? "lambertian" : "mixed";
  j["global_illumination"] = s.global_illumination;
  j["quantization"] = s.quant.has_value();
  j["d"] = s.d;
  const auto& p = s.perturbation;
  j["perturbation"] = {{"dz", p.dz},   {"dP", p.dP},           {"dphi", p.dphi},           {"dD", p.dD},
                       {"dmu_add", p.dmu_add}, {"dmu_mul", p.dmu_mul}, {"systematic", p.systematic}};
  return j.dump();
}

TrainReport train(CompactNet& net, const TrainConfig& cfg, const std::function<void(int, const TrainReport&)>& on_epoch) {
  if (cfg.steps <= 0 || cfg.batch <= 0 || cfg.steps_per_epoch <= 0)
    throw std::invalid_argument("train: steps, batch and steps_per_epoch must be positive");
  if (!(cfg.lr > 0.0)) throw std::invalid_argument("train: learning rate must be positive");
  cfg.sampler.validate();
  if (cfg.sampler.d != net.arch().d)
    throw std::invalid_argument("train: sampler d=" + std::to_string(cfg.sampler.d) + " but network expects d=" +
                                std::to_string(net.arch().d));

  const NetArch& arch = net.arch();
  Network<float> model(arch, 0);
  model.params().assign(net.params().begin(), net.params().end());
  const std::size_t np = model.param_count();
  std::vector<float> m(np, 0.0f), v(np, 0.0f);
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  double lr = cfg.lr;
  long long t = 0;

  const std::size_t in = static_cast<std::size_t>(arch.input_channels()) * arch.d * arch.d;
  AlignedVector<float> input(static_cast<std::size_t>(cfg.batch) * in);
  std::vector<Vec3> targets(static_cast<std::size_t>(cfg.batch));
  std::vector<std::uint64_t> indices(static_cast<std::size_t>(cfg.batch));
  const std::uint64_t hseed = holdout_seed(cfg.seed);

  TrainReport report;
  double best_holdout = std::numeric_limits<double>::infinity();
  int since_best = 0;
  int above_initial = 0;
  double epoch_sum = 0.0;
  std::size_t epoch_count = 0;
  std::uint64_t next = 0;

  for (int step = 0; step < cfg.steps; ++step) {
    for (auto& idx : indices) {
      idx = cfg.dataset_size > 0 ? next % cfg.dataset_size : next;
      ++next;
    }
    parallel_for(indices.size(), [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        const auto rec = generate_record(cfg.seed, indices[i], cfg.sampler);
        prepare_input(rec.map, arch, input.data() + i * in);
        targets[i] = rec.target;
      }
    });

    const auto y = model.forward(input.data(), cfg.batch);
    Eigen::MatrixXf dout(3, cfg.batch);
    double loss = 0.0;
    for (int b = 0; b < cfg.batch; ++b) {
      const Vec3 p = y.col(b).cast<double>();
      const Vec3 tgt = targets[static_cast<std::size_t>(b)];
      if (!(p.norm() > 0.0) || !p.allFinite()) {
        loss += kPi / 2;
        dout.col(b) = (-tgt).cast<float>() / static_cast<float>(cfg.batch);
        continue;
      }
      const double len = p.norm();
      const Vec3 u = p / len;
      loss += angular_loss(u, tgt);
      const Vec3 gu = angular_loss_grad(u, tgt);
      dout.col(b) = ((gu - u * u.dot(gu)) / len).cast<float>() / static_cast<float>(cfg.batch);
    }
    loss /= cfg.batch;
    if (!std::isfinite(loss)) {
      report.diverged = true;
      report.diagnostics = "non-finite training loss at step " + std::to_string(step);
      break;
    }
    epoch_sum += loss;
    ++epoch_count;

    const auto grad = model.backward(dout);
    ++t;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    auto& w = model.params();
    for (std::size_t i = 0; i < np; ++i) {
      const double g = grad[i];
      m[i] = static_cast<float>(beta1 * m[i] + (1.0 - beta1) * g);
      v[i] = static_cast<float>(beta2 * v[i] + (1.0 - beta2) * g * g);
      w[i] -= static_cast<float>(lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps));
    }

    const bool last = step + 1 == cfg.steps;
    if ((step + 1) % cfg.steps_per_epoch != 0 && !last) continue;

    report.epoch_loss.push_back(rad2deg(epoch_sum / static_cast<double>(epoch_count)));
    epoch_sum = 0.0;
    epoch_count = 0;
    net.params().assign(model.params().begin(), model.params().end());
    if (cfg.holdout > 0) {
      const double mae = stream_mae(net, hseed, static_cast<std::size_t>(cfg.holdout), cfg.sampler);
      report.holdout_mae.push_back(mae);
      if (mae < best_holdout - 1e-3) {
        best_holdout = mae;
        since_best = 0;
      } else if (++since_best >= cfg.plateau_patience) {
        lr *= cfg.plateau_factor;
        since_best = 0;
      }
    }
    const int epoch = static_cast<int>(report.epoch_loss.size()) - 1;
    if (on_epoch) on_epoch(epoch, report);

    if (epoch > 0 && report.epoch_loss.back() > report.epoch_loss.front()) {
      if (++above_initial >= 3) {
        report.diverged = true;
        std::ostringstream os;
        os << "training loss above the first epoch average (" << report.epoch_loss.front()
           << " deg) for 3 consecutive epochs; last " << report.epoch_loss.back() << " deg, lr " << lr;
        report.diagnostics = os.str();
        break;
      }
    } else {
      above_initial = 0;
    }
  }
  net.params().assign(model.params().begin(), model.params().end());
  net.train_config_echo = train_config_to_json(cfg);
  return report;
}

}  // namespace nfps
