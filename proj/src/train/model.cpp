/*
 * Copyright 2026 The Debias Pipeline Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "debias/train/model.hpp"

#include <algorithm>
#include <cmath>

#include "debias/common/error.hpp"
#include "debias/common/rng.hpp"

namespace debias {
namespace {

void Dense(const double* in, std::size_t n_in, const double* w, const double* b, std::size_t n_out,
           double* out) {
  for (std::size_t j = 0; j < n_out; ++j) {
    double acc = b[j];
    const double* row = w + j * n_in;
    for (std::size_t k = 0; k < n_in; ++k) acc += row[k] * in[k];
    out[j] = acc;
  }
}

// Accumulates weight/bias gradients; din (if non-null) receives W^T dout.
void DenseBackward(const double* in, std::size_t n_in, const double* w, std::size_t n_out,
                   const double* dout, double* dw, double* db, double* din) {
  for (std::size_t j = 0; j < n_out; ++j) {
    const double g = dout[j];
    db[j] += g;
    if (g == 0.0) continue;
    double* drow = dw + j * n_in;
    const double* row = w + j * n_in;
    for (std::size_t k = 0; k < n_in; ++k) drow[k] += g * in[k];
    if (din != nullptr) {
      for (std::size_t k = 0; k < n_in; ++k) din[k] += g * row[k];
    }
  }
}

void FillNormal(std::span<double> out, double stddev, Rng& rng) {
  for (double& v : out) v = stddev * rng.normal();
}

// 3x3 convolution, stride 1, zero padding 1.
void Conv3x3(const double* in, int cin, int size, const double* w, const double* b, int cout,
             double* out) {
  const int plane = size * size;
  for (int o = 0; o < cout; ++o) {
    double* dst = out + o * plane;
    std::fill(dst, dst + plane, b[o]);
    for (int i = 0; i < cin; ++i) {
      const double* src = in + i * plane;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const double wv = w[((o * cin + i) * 3 + ky) * 3 + kx];
          const int x_lo = std::max(0, 1 - kx), x_hi = std::min(size, size + 1 - kx);
          for (int y = 0; y < size; ++y) {
            const int sy = y + ky - 1;
            if (sy < 0 || sy >= size) continue;
            const double* srow = src + sy * size + (kx - 1);
            double* drow = dst + y * size;
            for (int x = x_lo; x < x_hi; ++x) drow[x] += wv * srow[x];
          }
        }
      }
    }
  }
}

void Conv3x3Backward(const double* in, int cin, int size, const double* w, int cout,
                     const double* dout, double* dw, double* db, double* din) {
  const int plane = size * size;
  for (int o = 0; o < cout; ++o) {
    const double* g = dout + o * plane;
    double gsum = 0.0;
    for (int k = 0; k < plane; ++k) gsum += g[k];
    db[o] += gsum;
    for (int i = 0; i < cin; ++i) {
      const double* src = in + i * plane;
      double* dsrc = din != nullptr ? din + i * plane : nullptr;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const int widx = ((o * cin + i) * 3 + ky) * 3 + kx;
          const double wv = w[widx];
          const int x_lo = std::max(0, 1 - kx), x_hi = std::min(size, size + 1 - kx);
          double acc = 0.0;
          for (int y = 0; y < size; ++y) {
            const int sy = y + ky - 1;
            if (sy < 0 || sy >= size) continue;
            const double* srow = src + sy * size + (kx - 1);
            const double* grow = g + y * size;
            for (int x = x_lo; x < x_hi; ++x) acc += grow[x] * srow[x];
            if (dsrc != nullptr) {
              double* drow = dsrc + sy * size + (kx - 1);
              for (int x = x_lo; x < x_hi; ++x) drow[x] += wv * grow[x];
            }
          }
          dw[widx] += acc;
        }
      }
    }
  }
}

// ReLU followed by 2x2 max pooling. argmax stores the flat input index of
// each pooled maximum.
void ReluPool(const double* in, int channels, int size, double* out, int* argmax) {
  const int half = size / 2;
  for (int c = 0; c < channels; ++c) {
    const double* src = in + c * size * size;
    for (int y = 0; y < half; ++y) {
      for (int x = 0; x < half; ++x) {
        int best = (2 * y) * size + 2 * x;
        double best_v = src[best];
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const int idx = (2 * y + dy) * size + 2 * x + dx;
            if (src[idx] > best_v) {
              best_v = src[idx];
              best = idx;
            }
          }
        }
        const int o = (c * half + y) * half + x;
        out[o] = std::max(0.0, best_v);
        argmax[o] = c * size * size + best;
      }
    }
  }
}

void ReluPoolBackward(const double* pre, const int* argmax, std::size_t n_out, const double* dout,
                      double* din) {
  for (std::size_t o = 0; o < n_out; ++o) {
    const int idx = argmax[o];
    if (pre[idx] > 0.0) din[idx] += dout[o];
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// LogisticModel

LogisticModel::LogisticModel(std::size_t input_dim, std::size_t num_classes, std::uint64_t seed)
    : input_dim_(input_dim), num_classes_(num_classes), params_(num_classes * (input_dim + 1)) {
  Rng rng(seed);
  FillNormal(params_, 1.0 / std::sqrt(static_cast<double>(input_dim)), rng);
}

std::vector<ParamBlock> LogisticModel::param_blocks() const {
  const std::size_t w = num_classes_ * input_dim_;
  return {{"linear.weight", {num_classes_, input_dim_}, 0, w},
          {"linear.bias", {num_classes_}, w, num_classes_}};
}

std::vector<double> LogisticModel::logits(std::span<const double> input) const {
  std::vector<double> out(num_classes_);
  Dense(input.data(), input_dim_, params_.data(), params_.data() + num_classes_ * input_dim_,
        num_classes_, out.data());
  return out;
}

std::vector<double> LogisticModel::features(std::span<const double> input) const {
  return {input.begin(), input.end()};
}

std::vector<double> LogisticModel::backprop(std::span<const double> input, const LogitGradFn& dloss,
                                            std::span<double> grad) const {
  auto z = logits(input);
  const auto dz = dloss(z);
  const std::size_t w = num_classes_ * input_dim_;
  DenseBackward(input.data(), input_dim_, params_.data(), num_classes_, dz.data(), grad.data(),
                grad.data() + w, nullptr);
  return z;
}

std::unique_ptr<DifferentiableClassifier> LogisticModel::clone() const {
  return std::make_unique<LogisticModel>(*this);
}

// ---------------------------------------------------------------------------
// TanhMlp

TanhMlp::TanhMlp(std::size_t input_dim, std::size_t hidden, std::size_t num_classes,
                 std::uint64_t seed)
    : input_dim_(input_dim),
      hidden_(hidden),
      num_classes_(num_classes),
      params_(hidden * input_dim + hidden + num_classes * hidden + num_classes) {
  Rng rng(seed);
  std::span<double> p(params_);
  FillNormal(p.subspan(0, hidden * input_dim), 1.0 / std::sqrt(static_cast<double>(input_dim)), rng);
  FillNormal(p.subspan(hidden * input_dim, hidden), 0.1, rng);
  FillNormal(p.subspan(hidden * input_dim + hidden, num_classes * hidden),
             1.0 / std::sqrt(static_cast<double>(hidden)), rng);
  FillNormal(p.subspan(params_.size() - num_classes), 0.1, rng);
}

std::vector<ParamBlock> TanhMlp::param_blocks() const {
  const std::size_t w1 = hidden_ * input_dim_;
  const std::size_t w2 = num_classes_ * hidden_;
  return {{"fc1.weight", {hidden_, input_dim_}, 0, w1},
          {"fc1.bias", {hidden_}, w1, hidden_},
          {"fc2.weight", {num_classes_, hidden_}, w1 + hidden_, w2},
          {"fc2.bias", {num_classes_}, w1 + hidden_ + w2, num_classes_}};
}

std::vector<double> TanhMlp::features(std::span<const double> input) const {
  std::vector<double> h(hidden_);
  Dense(input.data(), input_dim_, params_.data(), params_.data() + hidden_ * input_dim_, hidden_,
        h.data());
  for (double& v : h) v = std::tanh(v);
  return h;
}

std::vector<double> TanhMlp::logits(std::span<const double> input) const {
  const auto h = features(input);
  const double* w2 = params_.data() + hidden_ * input_dim_ + hidden_;
  std::vector<double> out(num_classes_);
  Dense(h.data(), hidden_, w2, w2 + num_classes_ * hidden_, num_classes_, out.data());
  return out;
}

std::vector<double> TanhMlp::backprop(std::span<const double> input, const LogitGradFn& dloss,
                                      std::span<double> grad) const {
  const auto h = features(input);
  const std::size_t off_w2 = hidden_ * input_dim_ + hidden_;
  const double* w2 = params_.data() + off_w2;
  std::vector<double> z(num_classes_);
  Dense(h.data(), hidden_, w2, w2 + num_classes_ * hidden_, num_classes_, z.data());
  const auto dz = dloss(z);
  std::vector<double> dh(hidden_, 0.0);
  DenseBackward(h.data(), hidden_, w2, num_classes_, dz.data(), grad.data() + off_w2,
                grad.data() + off_w2 + num_classes_ * hidden_, dh.data());
  for (std::size_t j = 0; j < hidden_; ++j) dh[j] *= 1.0 - h[j] * h[j];
  DenseBackward(input.data(), input_dim_, params_.data(), hidden_, dh.data(), grad.data(),
                grad.data() + hidden_ * input_dim_, nullptr);
  return z;
}

std::unique_ptr<DifferentiableClassifier> TanhMlp::clone() const {
  return std::make_unique<TanhMlp>(*this);
}

// ---------------------------------------------------------------------------
// ConvNet

std::vector<ParamBlock> conv_net_blocks(const ConvNetShape& s) {
  if (s.input_size <= 0 || s.input_size % 8 != 0) {
    throw ValidationError("conv net input size must be a positive multiple of 8");
  }
  std::vector<ParamBlock> blocks;
  std::size_t offset = 0;
  auto add = [&](std::string name, std::vector<std::size_t> shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    blocks.push_back({std::move(name), std::move(shape), offset, n});
    offset += n;
  };
  const auto u = [](int v) { return static_cast<std::size_t>(v); };
  add("conv1.weight", {u(s.conv1), u(s.channels), 3, 3});
  add("conv1.bias", {u(s.conv1)});
  add("conv2.weight", {u(s.conv2), u(s.conv1), 3, 3});
  add("conv2.bias", {u(s.conv2)});
  add("conv3.weight", {u(s.conv3), u(s.conv2), 3, 3});
  add("conv3.bias", {u(s.conv3)});
  const std::size_t flat = u(s.conv3) * u(s.input_size / 8) * u(s.input_size / 8);
  add("fc1.weight", {u(s.hidden), flat});
  add("fc1.bias", {u(s.hidden)});
  add("fc2.weight", {u(s.num_classes), u(s.hidden)});
  add("fc2.bias", {u(s.num_classes)});
  return blocks;
}

struct ConvNet::Trace {
  std::vector<double> c1, p1, c2, p2, c3, p3, h_pre, h, z;
  std::vector<int> a1, a2, a3;
};

ConvNet::ConvNet(const ConvNetShape& shape, std::uint64_t seed)
    : shape_(shape), blocks_(conv_net_blocks(shape)) {
  params_.assign(blocks_.back().offset + blocks_.back().size, 0.0);
  Rng rng(seed);
  std::span<double> p(params_);
  for (const auto& b : blocks_) {
    if (b.shape.size() == 1) continue;  // biases start at zero
    std::size_t fan_in = 1;
    for (std::size_t k = 1; k < b.shape.size(); ++k) fan_in *= b.shape[k];
    const bool head = b.name == "fc2.weight";
    FillNormal(p.subspan(b.offset, b.size), std::sqrt((head ? 1.0 : 2.0) / fan_in), rng);
  }
}

ConvNet::ConvNet(const ConvNetShape& shape, std::vector<double> params)
    : shape_(shape), blocks_(conv_net_blocks(shape)), params_(std::move(params)) {
  if (params_.size() != blocks_.back().offset + blocks_.back().size) {
    throw ValidationError("conv net parameter count does not match its shape");
  }
}

std::size_t ConvNet::input_dim() const {
  return static_cast<std::size_t>(shape_.channels) * shape_.input_size * shape_.input_size;
}

void ConvNet::forward(std::span<const double> input, Trace& t) const {
  if (input.size() != input_dim()) throw ValidationError("conv net: input has wrong size");
  const int s0 = shape_.input_size, s1 = s0 / 2, s2 = s0 / 4, s3 = s0 / 8;
  const double* p = params_.data();
  auto sz = [](int c, int s) { return static_cast<std::size_t>(c) * s * s; };

  t.c1.assign(sz(shape_.conv1, s0), 0.0);
  t.p1.assign(sz(shape_.conv1, s1), 0.0);
  t.a1.assign(t.p1.size(), 0);
  Conv3x3(input.data(), shape_.channels, s0, p + blocks_[0].offset, p + blocks_[1].offset,
          shape_.conv1, t.c1.data());
  ReluPool(t.c1.data(), shape_.conv1, s0, t.p1.data(), t.a1.data());

  t.c2.assign(sz(shape_.conv2, s1), 0.0);
  t.p2.assign(sz(shape_.conv2, s2), 0.0);
  t.a2.assign(t.p2.size(), 0);
  Conv3x3(t.p1.data(), shape_.conv1, s1, p + blocks_[2].offset, p + blocks_[3].offset,
          shape_.conv2, t.c2.data());
  ReluPool(t.c2.data(), shape_.conv2, s1, t.p2.data(), t.a2.data());

  t.c3.assign(sz(shape_.conv3, s2), 0.0);
  t.p3.assign(sz(shape_.conv3, s3), 0.0);
  t.a3.assign(t.p3.size(), 0);
  Conv3x3(t.p2.data(), shape_.conv2, s2, p + blocks_[4].offset, p + blocks_[5].offset,
          shape_.conv3, t.c3.data());
  ReluPool(t.c3.data(), shape_.conv3, s2, t.p3.data(), t.a3.data());

  const auto hidden = static_cast<std::size_t>(shape_.hidden);
  const auto classes = static_cast<std::size_t>(shape_.num_classes);
  t.h_pre.assign(hidden, 0.0);
  Dense(t.p3.data(), t.p3.size(), p + blocks_[6].offset, p + blocks_[7].offset, hidden,
        t.h_pre.data());
  t.h = t.h_pre;
  for (double& v : t.h) v = std::max(0.0, v);
  t.z.assign(classes, 0.0);
  Dense(t.h.data(), hidden, p + blocks_[8].offset, p + blocks_[9].offset, classes, t.z.data());
}

std::vector<double> ConvNet::logits(std::span<const double> input) const {
  Trace t;
  forward(input, t);
  return t.z;
}

std::vector<double> ConvNet::features(std::span<const double> input) const {
  Trace t;
  forward(input, t);
  return t.h;
}

std::vector<double> ConvNet::backprop(std::span<const double> input, const LogitGradFn& dloss,
                                      std::span<double> grad) const {
  Trace t;
  forward(input, t);
  const auto dz = dloss(t.z);
  const int s0 = shape_.input_size, s1 = s0 / 2, s2 = s0 / 4;
  const double* p = params_.data();
  double* g = grad.data();
  const auto hidden = static_cast<std::size_t>(shape_.hidden);
  const auto classes = static_cast<std::size_t>(shape_.num_classes);

  std::vector<double> dh(hidden, 0.0);
  DenseBackward(t.h.data(), hidden, p + blocks_[8].offset, classes, dz.data(),
                g + blocks_[8].offset, g + blocks_[9].offset, dh.data());
  for (std::size_t j = 0; j < hidden; ++j) {
    if (t.h_pre[j] <= 0.0) dh[j] = 0.0;
  }
  std::vector<double> dp3(t.p3.size(), 0.0);
  DenseBackward(t.p3.data(), t.p3.size(), p + blocks_[6].offset, hidden, dh.data(),
                g + blocks_[6].offset, g + blocks_[7].offset, dp3.data());

  std::vector<double> dc3(t.c3.size(), 0.0);
  ReluPoolBackward(t.c3.data(), t.a3.data(), t.p3.size(), dp3.data(), dc3.data());
  std::vector<double> dp2(t.p2.size(), 0.0);
  Conv3x3Backward(t.p2.data(), shape_.conv2, s2, p + blocks_[4].offset, shape_.conv3, dc3.data(),
                  g + blocks_[4].offset, g + blocks_[5].offset, dp2.data());

  std::vector<double> dc2(t.c2.size(), 0.0);
  ReluPoolBackward(t.c2.data(), t.a2.data(), t.p2.size(), dp2.data(), dc2.data());
  std::vector<double> dp1(t.p1.size(), 0.0);
  Conv3x3Backward(t.p1.data(), shape_.conv1, s1, p + blocks_[2].offset, shape_.conv2, dc2.data(),
                  g + blocks_[2].offset, g + blocks_[3].offset, dp1.data());

  std::vector<double> dc1(t.c1.size(), 0.0);
  ReluPoolBackward(t.c1.data(), t.a1.data(), t.p1.size(), dp1.data(), dc1.data());
  Conv3x3Backward(input.data(), shape_.channels, s0, p + blocks_[0].offset, shape_.conv1,
                  dc1.data(), g + blocks_[0].offset, g + blocks_[1].offset, nullptr);
  return t.z;
}

std::unique_ptr<DifferentiableClassifier> ConvNet::clone() const {
  return std::make_unique<ConvNet>(*this);
}

}  // namespace debias
