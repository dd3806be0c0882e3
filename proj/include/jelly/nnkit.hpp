#pragma once

// Minimal neural-network kit: dense/conv layers, hand-written backprop, Adam,
// weighted cross-entropy, and the model file format. Layers are templated on
// the scalar so the float production path and the float64 shadow copies used
// by gradient verification share one set of formulas.
//
// Storage is 32-bit float in production; reductions (sums, means, losses)
// accumulate in 64-bit regardless of the storage scalar.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "jelly/core.hpp"
#include "jelly/error.hpp"
#include "jelly/rng.hpp"

namespace jelly::nn {

template <class S>
struct TensorT {
  std::vector<Eigen::Index> shape;
  Eigen::Matrix<S, Eigen::Dynamic, 1> data;  // flat, row-major semantics

  TensorT() = default;

  static TensorT zeros(std::vector<Eigen::Index> shp) {
    TensorT t;
    t.shape = std::move(shp);
    t.data.setZero(count(t.shape));
    return t;
  }

  static Eigen::Index count(const std::vector<Eigen::Index>& shp) {
    Eigen::Index n = 1;
    for (auto d : shp) {
      require(d > 0, Errc::invalid_argument, "tensor dims must be positive");
      n *= d;
    }
    return n;
  }

  Eigen::Index size() const { return data.size(); }
  Eigen::Index dim(std::size_t i) const { return shape.at(i); }
  S* ptr() { return data.data(); }
  const S* ptr() const { return data.data(); }

  // row-major matrix view; r*c must equal size()
  auto mat(Eigen::Index r, Eigen::Index c) {
    require(r * c == size(), Errc::shape_mismatch, "bad matrix view");
    return Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(ptr(), r,
                                                                                         c);
  }
  auto mat(Eigen::Index r, Eigen::Index c) const {
    require(r * c == size(), Errc::shape_mismatch, "bad matrix view");
    return Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        ptr(), r, c);
  }

  TensorT reshaped(std::vector<Eigen::Index> shp) const {
    require(count(shp) == size(), Errc::shape_mismatch, "reshape changes element count");
    TensorT t;
    t.shape = std::move(shp);
    t.data = data;
    return t;
  }

  // 64-bit accumulation independent of S
  double sum64() const {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < data.size(); ++i) acc += static_cast<double>(data[i]);
    return acc;
  }

  template <class T>
  TensorT<T> cast() const {
    TensorT<T> t;
    t.shape = shape;
    t.data = data.template cast<T>();
    return t;
  }

  bool same_shape(const TensorT& o) const { return shape == o.shape; }
};

using Tensor = TensorT<float>;

// Named parameter set. std::map gives the deterministic lexicographic iteration
// order the file format relies on.
using ModelParams = std::map<std::string, Tensor>;

template <class T, class S>
std::map<std::string, TensorT<T>> cast_params(const std::map<std::string, TensorT<S>>& in) {
  std::map<std::string, TensorT<T>> out;
  for (const auto& [k, v] : in) out[k] = v.template cast<T>();
  return out;
}

// ---------------------------------------------------------------------------
// layers

// Saved forward intermediates for one layer invocation. Which fields are used
// depends on the layer.
template <class S>
struct CacheT {
  TensorT<S> input;
  TensorT<S> output;
  std::vector<Eigen::Index> indices;
};

template <class S>
using GradMap = std::map<std::string, TensorT<S>>;

template <class S>
class Layer {
 public:
  virtual ~Layer() = default;

  // Pure given (params, x); safe to call concurrently on a shared const model.
  // `cache` may be null for inference.
  virtual TensorT<S> forward(const TensorT<S>& x, CacheT<S>* cache) const = 0;

  // Returns grad wrt input; accumulates parameter grads into *grads (entries
  // pre-allocated and zeroed by the caller).
  virtual TensorT<S> backward(const TensorT<S>& dy, const CacheT<S>& cache,
                              GradMap<S>* grads) const = 0;

  virtual void visit_params(const std::function<void(const std::string&, TensorT<S>*)>&) {}

  void set_name(std::string n) { name_ = std::move(n); }
  const std::string& name() const { return name_; }

 protected:
  std::string name_;
};

// y = x W^T + b, x: (N, in), W: (out, in), b: (out)
template <class S>
class Dense : public Layer<S> {
 public:
  Dense(Eigen::Index in, Eigen::Index out)
      : in_(in), out_(out), w_(TensorT<S>::zeros({out, in})), b_(TensorT<S>::zeros({out})) {}

  TensorT<S> forward(const TensorT<S>& x, CacheT<S>* cache) const override {
    require(x.shape.size() == 2 && x.dim(1) == in_, Errc::shape_mismatch,
            this->name_ + ": expected (N," + std::to_string(in_) + ") input");
    Eigen::Index n = x.dim(0);
    TensorT<S> y = TensorT<S>::zeros({n, out_});
    y.mat(n, out_).noalias() = x.mat(n, in_) * w_.mat(out_, in_).transpose();
    y.mat(n, out_).rowwise() += b_.data.transpose();
    if (cache) cache->input = x;
    return y;
  }

  TensorT<S> backward(const TensorT<S>& dy, const CacheT<S>& cache,
                      GradMap<S>* grads) const override {
    const TensorT<S>& x = cache.input;
    Eigen::Index n = x.dim(0);
    auto dym = dy.mat(n, out_);
    grads->at(this->name_ + ".w").mat(out_, in_).noalias() += dym.transpose() * x.mat(n, in_);
    grads->at(this->name_ + ".b").data += dym.colwise().sum().transpose();
    TensorT<S> dx = TensorT<S>::zeros({n, in_});
    dx.mat(n, in_).noalias() = dym * w_.mat(out_, in_);
    return dx;
  }

  void visit_params(const std::function<void(const std::string&, TensorT<S>*)>& fn) override {
    fn(this->name_ + ".w", &w_);
    fn(this->name_ + ".b", &b_);
  }

  Eigen::Index fan_in() const { return in_; }
  Eigen::Index fan_out() const { return out_; }
  TensorT<S>& weight() { return w_; }
  TensorT<S>& bias() { return b_; }

 private:
  Eigen::Index in_, out_;
  TensorT<S> w_, b_;
};

// 2-D convolution, stride 1, zero padding. x: (N, Cin, H, W) -> (N, Cout, H', W').
template <class S>
class Conv2D : public Layer<S> {
 public:
  Conv2D(Eigen::Index cin, Eigen::Index cout, Eigen::Index k, Eigen::Index pad)
      : cin_(cin),
        cout_(cout),
        k_(k),
        pad_(pad),
        w_(TensorT<S>::zeros({cout, cin, k, k})),
        b_(TensorT<S>::zeros({cout})) {}

  TensorT<S> forward(const TensorT<S>& x, CacheT<S>* cache) const override {
    require(x.shape.size() == 4 && x.dim(1) == cin_, Errc::shape_mismatch,
            this->name_ + ": expected (N," + std::to_string(cin_) + ",H,W) input");
    Eigen::Index n = x.dim(0), h = x.dim(2), w = x.dim(3);
    Eigen::Index ho = h + 2 * pad_ - k_ + 1, wo = w + 2 * pad_ - k_ + 1;
    require(ho > 0 && wo > 0, Errc::shape_mismatch, this->name_ + ": input smaller than kernel");
    TensorT<S> y = TensorT<S>::zeros({n, cout_, ho, wo});
    Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> cols(cin_ * k_ * k_,
                                                                           ho * wo);
    auto wm = w_.mat(cout_, cin_ * k_ * k_);
    for (Eigen::Index i = 0; i < n; ++i) {
      im2col(x.ptr() + i * cin_ * h * w, h, w, ho, wo, cols);
      Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> out(
          y.ptr() + i * cout_ * ho * wo, cout_, ho * wo);
      out.noalias() = wm * cols;
      out.colwise() += b_.data;
    }
    if (cache) cache->input = x;
    return y;
  }

  TensorT<S> backward(const TensorT<S>& dy, const CacheT<S>& cache,
                      GradMap<S>* grads) const override {
    const TensorT<S>& x = cache.input;
    Eigen::Index n = x.dim(0), h = x.dim(2), w = x.dim(3);
    Eigen::Index ho = h + 2 * pad_ - k_ + 1, wo = w + 2 * pad_ - k_ + 1;
    TensorT<S> dx = TensorT<S>::zeros(x.shape);
    auto& dw = grads->at(this->name_ + ".w");
    auto& db = grads->at(this->name_ + ".b");
    Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> cols(cin_ * k_ * k_,
                                                                           ho * wo);
    Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> dcols(cin_ * k_ * k_,
                                                                            ho * wo);
    auto wm = w_.mat(cout_, cin_ * k_ * k_);
    auto dwm = dw.mat(cout_, cin_ * k_ * k_);
    for (Eigen::Index i = 0; i < n; ++i) {
      im2col(x.ptr() + i * cin_ * h * w, h, w, ho, wo, cols);
      Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> dym(
          dy.ptr() + i * cout_ * ho * wo, cout_, ho * wo);
      dwm.noalias() += dym * cols.transpose();
      db.data += dym.rowwise().sum();
      dcols.noalias() = wm.transpose() * dym;
      col2im_add(dcols, h, w, ho, wo, dx.ptr() + i * cin_ * h * w);
    }
    return dx;
  }

  void visit_params(const std::function<void(const std::string&, TensorT<S>*)>& fn) override {
    fn(this->name_ + ".w", &w_);
    fn(this->name_ + ".b", &b_);
  }

  Eigen::Index fan_in() const { return cin_ * k_ * k_; }
  TensorT<S>& weight() { return w_; }

 private:
  void im2col(const S* x, Eigen::Index h, Eigen::Index w, Eigen::Index ho, Eigen::Index wo,
              Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& cols) const {
    for (Eigen::Index c = 0; c < cin_; ++c) {
      const S* plane = x + c * h * w;
      for (Eigen::Index ky = 0; ky < k_; ++ky) {
        for (Eigen::Index kx = 0; kx < k_; ++kx) {
          Eigen::Index row = (c * k_ + ky) * k_ + kx;
          S* dst = cols.data() + row * ho * wo;
          for (Eigen::Index oy = 0; oy < ho; ++oy) {
            Eigen::Index iy = oy + ky - pad_;
            for (Eigen::Index ox = 0; ox < wo; ++ox) {
              Eigen::Index ix = ox + kx - pad_;
              dst[oy * wo + ox] = (iy >= 0 && iy < h && ix >= 0 && ix < w)
                                      ? plane[iy * w + ix]
                                      : S(0);
            }
          }
        }
      }
    }
  }

  void col2im_add(const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& cols,
                  Eigen::Index h, Eigen::Index w, Eigen::Index ho, Eigen::Index wo, S* dx) const {
    for (Eigen::Index c = 0; c < cin_; ++c) {
      S* plane = dx + c * h * w;
      for (Eigen::Index ky = 0; ky < k_; ++ky) {
        for (Eigen::Index kx = 0; kx < k_; ++kx) {
          Eigen::Index row = (c * k_ + ky) * k_ + kx;
          const S* src = cols.data() + row * ho * wo;
          for (Eigen::Index oy = 0; oy < ho; ++oy) {
            Eigen::Index iy = oy + ky - pad_;
            if (iy < 0 || iy >= h) continue;
            for (Eigen::Index ox = 0; ox < wo; ++ox) {
              Eigen::Index ix = ox + kx - pad_;
              if (ix >= 0 && ix < w) plane[iy * w + ix] += src[oy * wo + ox];
            }
          }
        }
      }
    }
  }

  Eigen::Index cin_, cout_, k_, pad_;
  TensorT<S> w_, b_;
};

// 1-D convolution over a channel-major sequence, stride 1, no padding.
// x: (N, Cin, L) -> (N, Cout, L - K + 1).
template <class S>
class Conv1D : public Layer<S> {
 public:
  Conv1D(Eigen::Index cin, Eigen::Index cout, Eigen::Index k)
      : cin_(cin), cout_(cout), k_(k), w_(TensorT<S>::zeros({cout, cin, k})),
        b_(TensorT<S>::zeros({cout})) {}

  TensorT<S> forward(const TensorT<S>& x, CacheT<S>* cache) const override {
    require(x.shape.size() == 3 && x.dim(1) == cin_, Errc::shape_mismatch,
            this->name_ + ": expected (N," + std::to_string(cin_) + ",L) input");
    Eigen::Index n = x.dim(0), len = x.dim(2), lo = len - k_ + 1;
    require(lo > 0, Errc::shape_mismatch, this->name_ + ": sequence shorter than kernel");
    TensorT<S> y = TensorT<S>::zeros({n, cout_, lo});
    Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> cols(cin_ * k_, lo);
    auto wm = w_.mat(cout_, cin_ * k_);
    for (Eigen::Index i = 0; i < n; ++i) {
      im2col(x.ptr() + i * cin_ * len, len, lo, cols);
      Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> out(
          y.ptr() + i * cout_ * lo, cout_, lo);
      out.noalias() = wm * cols;
      out.colwise() += b_.data;
    }
    if (cache) cache->input = x;
    return y;
  }

  TensorT<S> backward(const TensorT<S>& dy, const CacheT<S>& cache,
                      GradMap<S>* grads) const override {
    const TensorT<S>& x = cache.input;
    Eigen::Index n = x.dim(0), len = x.dim(2), lo = len - k_ + 1;
    TensorT<S> dx = TensorT<S>::zeros(x.shape);
    auto& dw = grads->at(this->name_ + ".w");
    auto& db = grads->at(this->name_ + ".b");
    Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> cols(cin_ * k_, lo);
    auto wm = w_.mat(cout_, cin_ * k_);
    auto dwm = dw.mat(cout_, cin_ * k_);
    for (Eigen::Index i = 0; i < n; ++i) {
      im2col(x.ptr() + i * cin_ * len, len, lo, cols);
      Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> dym(
          dy.ptr() + i * cout_ * lo, cout_, lo);
      dwm.noalias() += dym * cols.transpose();
      db.data += dym.rowwise().sum();
      Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> dcols =
          wm.transpose() * dym;
      S* dplane = dx.ptr() + i * cin_ * len;
      for (Eigen::Index c = 0; c < cin_; ++c)
        for (Eigen::Index kk = 0; kk < k_; ++kk)
          for (Eigen::Index o = 0; o < lo; ++o)
            dplane[c * len + o + kk] += dcols(c * k_ + kk, o);
    }
    return dx;
  }

  void visit_params(const std::function<void(const std::string&, TensorT<S>*)>& fn) override {
    fn(this->name_ + ".w", &w_);
    fn(this->name_ + ".b", &b_);
  }

  Eigen::Index fan_in() const { return cin_ * k_; }
  TensorT<S>& weight() { return w_; }

 private:
  void im2col(const S* x, Eigen::Index len, Eigen::Index lo,
              Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& cols) const {
    for (Eigen::Index c = 0; c < cin_; ++c)
      for (Eigen::Index kk = 0; kk < k_; ++kk)
        for (Eigen::Index o = 0; o < lo; ++o) cols(c * k_ + kk, o) = x[c * len + o + kk];
  }

  Eigen::Index cin_, cout_, k_;
  TensorT<S> w_, b_;
};

// 2x2 max pooling, stride 2. Requires even spatial dims.
template <class S>
class MaxPool2 : public Layer<S> {
 public:
  TensorT<S> forward(const TensorT<S>& x, CacheT<S>* cache) const override {
    require(x.shape.size() == 4 && x.dim(2) % 2 == 0 && x.dim(3) % 2 == 0, Errc::shape_mismatch,
            this->name_ + ": expected (N,C,H,W) with even H,W");
    Eigen::Index n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    Eigen::Index ho = h / 2, wo = w / 2;
    TensorT<S> y = TensorT<S>::zeros({n, c, ho, wo});
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(y.size()));
    for (Eigen::Index p = 0; p < n * c; ++p) {
      const S* plane = x.ptr() + p * h * w;
      S* out = y.ptr() + p * ho * wo;
      Eigen::Index* oidx = idx.data() + p * ho * wo;
      for (Eigen::Index oy = 0; oy < ho; ++oy) {
        for (Eigen::Index ox = 0; ox < wo; ++ox) {
          Eigen::Index base = (2 * oy) * w + 2 * ox;
          Eigen::Index best = base;
          S bv = plane[base];
          for (Eigen::Index dy2 = 0; dy2 < 2; ++dy2)
            for (Eigen::Index dx2 = 0; dx2 < 2; ++dx2) {
              Eigen::Index q = base + dy2 * w + dx2;
              if (plane[q] > bv) {
                bv = plane[q];
                best = q;
              }
            }
          out[oy * wo + ox] = bv;
          oidx[oy * wo + ox] = p * h * w + best;
        }
      }
    }
    if (cache) {
      cache->input = x;
      cache->indices = std::move(idx);
    }
    return y;
  }

  TensorT<S> backward(const TensorT<S>& dy, const CacheT<S>& cache,
                      GradMap<S>*) const override {
    TensorT<S> dx = TensorT<S>::zeros(cache.input.shape);
    for (Eigen::Index i = 0; i < dy.size(); ++i)
      dx.data[cache.indices[static_cast<std::size_t>(i)]] += dy.data[i];
    return dx;
  }
};

// Global mean and max over the time axis. x: (N, C, L) -> (N, 2C), mean block first.
template <class S>
class GlobalMeanMax1D : public Layer<S> {
 public:
  TensorT<S> forward(const TensorT<S>& x, CacheT<S>* cache) const override {
    require(x.shape.size() == 3, Errc::shape_mismatch, this->name_ + ": expected (N,C,L)");
    Eigen::Index n = x.dim(0), c = x.dim(1), len = x.dim(2);
    TensorT<S> y = TensorT<S>::zeros({n, 2 * c});
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n * c));
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index ch = 0; ch < c; ++ch) {
        const S* row = x.ptr() + (i * c + ch) * len;
        double acc = 0.0;
        Eigen::Index best = 0;
        for (Eigen::Index t = 0; t < len; ++t) {
          acc += static_cast<double>(row[t]);
          if (row[t] > row[best]) best = t;
        }
        y.data[i * 2 * c + ch] = static_cast<S>(acc / static_cast<double>(len));
        y.data[i * 2 * c + c + ch] = row[best];
        idx[static_cast<std::size_t>(i * c + ch)] = (i * c + ch) * len + best;
      }
    }
    if (cache) {
      cache->input = x;
      cache->indices = std::move(idx);
    }
    return y;
  }

  TensorT<S> backward(const TensorT<S>& dy, const CacheT<S>& cache,
                      GradMap<S>*) const override {
    Eigen::Index n = cache.input.dim(0), c = cache.input.dim(1), len = cache.input.dim(2);
    TensorT<S> dx = TensorT<S>::zeros(cache.input.shape);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index ch = 0; ch < c; ++ch) {
        S dmean = dy.data[i * 2 * c + ch];
        S* row = dx.ptr() + (i * c + ch) * len;
        S spread = static_cast<S>(static_cast<double>(dmean) / static_cast<double>(len));
        for (Eigen::Index t = 0; t < len; ++t) row[t] += spread;
        dx.data[cache.indices[static_cast<std::size_t>(i * c + ch)]] +=
            dy.data[i * 2 * c + c + ch];
      }
    }
    return dx;
  }
};

template <class S>
class ReLU : public Layer<S> {
 public:
  TensorT<S> forward(const TensorT<S>& x, CacheT<S>* cache) const override {
    TensorT<S> y = x;
    y.data = y.data.cwiseMax(S(0));
    if (cache) cache->input = x;
    return y;
  }
  TensorT<S> backward(const TensorT<S>& dy, const CacheT<S>& cache,
                      GradMap<S>*) const override {
    TensorT<S> dx = dy;
    for (Eigen::Index i = 0; i < dx.size(); ++i)
      if (cache.input.data[i] <= S(0)) dx.data[i] = S(0);
    return dx;
  }
};

template <class S>
class LeakyReLU : public Layer<S> {
 public:
  explicit LeakyReLU(double alpha) : alpha_(static_cast<S>(alpha)) {}
  TensorT<S> forward(const TensorT<S>& x, CacheT<S>* cache) const override {
    TensorT<S> y = x;
    for (Eigen::Index i = 0; i < y.size(); ++i)
      if (y.data[i] < S(0)) y.data[i] *= alpha_;
    if (cache) cache->input = x;
    return y;
  }
  TensorT<S> backward(const TensorT<S>& dy, const CacheT<S>& cache,
                      GradMap<S>*) const override {
    TensorT<S> dx = dy;
    for (Eigen::Index i = 0; i < dx.size(); ++i)
      if (cache.input.data[i] < S(0)) dx.data[i] *= alpha_;
    return dx;
  }

 private:
  S alpha_;
};

template <class S>
class Tanh : public Layer<S> {
 public:
  TensorT<S> forward(const TensorT<S>& x, CacheT<S>* cache) const override {
    TensorT<S> y = x;
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data[i] = std::tanh(y.data[i]);
    if (cache) cache->output = y;
    return y;
  }
  TensorT<S> backward(const TensorT<S>& dy, const CacheT<S>& cache,
                      GradMap<S>*) const override {
    TensorT<S> dx = dy;
    for (Eigen::Index i = 0; i < dx.size(); ++i)
      dx.data[i] *= S(1) - cache.output.data[i] * cache.output.data[i];
    return dx;
  }
};

// (N, d0, d1, ...) -> (N, d0*d1*...)
template <class S>
class Flatten : public Layer<S> {
 public:
  TensorT<S> forward(const TensorT<S>& x, CacheT<S>* cache) const override {
    require(x.shape.size() >= 2, Errc::shape_mismatch, "flatten needs a batch dim");
    if (cache) cache->input = x;
    return x.reshaped({x.dim(0), x.size() / x.dim(0)});
  }
  TensorT<S> backward(const TensorT<S>& dy, const CacheT<S>& cache,
                      GradMap<S>*) const override {
    return dy.reshaped(cache.input.shape);
  }
};

// ---------------------------------------------------------------------------
// network container

template <class S>
class Sequential {
 public:
  Sequential() = default;
  Sequential(Sequential&&) noexcept = default;
  Sequential& operator=(Sequential&&) noexcept = default;

  void add(std::string name, std::unique_ptr<Layer<S>> layer) {
    for (const auto& l : layers_)
      require(l->name() != name, Errc::duplicate_name, "layer name reused: " + name);
    layer->set_name(std::move(name));
    layers_.push_back(std::move(layer));
  }

  TensorT<S> forward(const TensorT<S>& x) const {
    TensorT<S> h = x;
    for (const auto& l : layers_) h = l->forward(h, nullptr);
    return h;
  }

  TensorT<S> forward(const TensorT<S>& x, std::vector<CacheT<S>>* caches) const {
    caches->assign(layers_.size(), {});
    TensorT<S> h = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) h = layers_[i]->forward(h, &(*caches)[i]);
    return h;
  }

  // Backpropagates dy through the whole stack; returns grad wrt the input.
  TensorT<S> backward(const TensorT<S>& dy, const std::vector<CacheT<S>>& caches,
                      GradMap<S>* grads) const {
    TensorT<S> g = dy;
    for (std::size_t i = layers_.size(); i-- > 0;) g = layers_[i]->backward(g, caches[i], grads);
    return g;
  }

  std::map<std::string, TensorT<S>*> params() {
    std::map<std::string, TensorT<S>*> out;
    for (auto& l : layers_)
      l->visit_params([&](const std::string& n, TensorT<S>* t) {
        require(!out.count(n), Errc::duplicate_name, "parameter name reused: " + n);
        out[n] = t;
      });
    return out;
  }

  std::map<std::string, TensorT<S>> export_params() const {
    std::map<std::string, TensorT<S>> out;
    for (auto& l : const_cast<Sequential*>(this)->layers_)
      l->visit_params([&](const std::string& n, TensorT<S>* t) { out[n] = *t; });
    return out;
  }

  // Strict: the name set and every shape must match the architecture.
  void import_params(const std::map<std::string, TensorT<S>>& p) {
    auto mine = params();
    require(mine.size() == p.size(), Errc::shape_mismatch,
            "parameter set size mismatch on import");
    for (auto& [name, tensor] : mine) {
      auto it = p.find(name);
      require(it != p.end(), Errc::shape_mismatch, "missing parameter: " + name);
      require(it->second.shape == tensor->shape, Errc::shape_mismatch,
              "shape mismatch for parameter: " + name);
      *tensor = it->second;
    }
  }

  GradMap<S> zero_grads() {
    GradMap<S> g;
    for (auto& [name, tensor] : params()) g[name] = TensorT<S>::zeros(tensor->shape);
    return g;
  }

  Eigen::Index param_count() {
    Eigen::Index n = 0;
    for (auto& [name, tensor] : params()) n += tensor->size();
    return n;
  }

  std::size_t layer_count() const { return layers_.size(); }
  Layer<S>* layer(std::size_t i) { return layers_[i].get(); }

 private:
  std::vector<std::unique_ptr<Layer<S>>> layers_;
};

// ---------------------------------------------------------------------------
// initialization

template <class S>
void fill_uniform(TensorT<S>& t, double lo, double hi, Rng& rng) {
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data[i] = static_cast<S>(rng.uniform(lo, hi));
}

// He-uniform: U(-sqrt(6/fan_in), +sqrt(6/fan_in)); biases stay zero.
template <class S>
void fill_he_uniform(TensorT<S>& t, Eigen::Index fan_in, Rng& rng) {
  double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  fill_uniform(t, -limit, limit, rng);
}

template <class S>
void fill_xavier_uniform(TensorT<S>& t, Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng) {
  double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  fill_uniform(t, -limit, limit, rng);
}

// ---------------------------------------------------------------------------
// losses

struct LossWeights {
  std::array<double, kNumClasses> w{1.0, 1.0, 1.0, 1.0, 1.0, 1.0};

  double operator[](ClassLabel c) const { return w[static_cast<std::size_t>(class_index(c))]; }

  static LossWeights jellyfish_seaweed(double x, double y) {
    LossWeights lw;
    lw.w[class_index(ClassLabel::Jellyfish)] = x;
    lw.w[class_index(ClassLabel::Seaweed)] = y;
    return lw;
  }
};

inline void validate(const LossWeights& lw) {
  for (double v : lw.w)
    require(v > 0.0, Errc::invalid_argument, "loss weights must be positive");
}

inline constexpr double kLogClamp = 1e-12;

// Numerically stabilized softmax over the last axis (class axis). Accepts (C)
// or (N, C). Shifts by the row max so magnitudes up to +-1e4 stay finite;
// row sums accumulate in 64-bit.
template <class S>
TensorT<S> softmax(const TensorT<S>& logits) {
  require(!logits.shape.empty(), Errc::shape_mismatch, "softmax: empty tensor");
  for (Eigen::Index i = 0; i < logits.size(); ++i)
    require(!std::isnan(static_cast<double>(logits.data[i])), Errc::invalid_argument,
            "softmax: NaN input");
  Eigen::Index c = logits.shape.back();
  Eigen::Index n = logits.size() / c;
  TensorT<S> out = logits;
  for (Eigen::Index i = 0; i < n; ++i) {
    S* row = out.ptr() + i * c;
    S mx = row[0];
    for (Eigen::Index j = 1; j < c; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (Eigen::Index j = 0; j < c; ++j) {
      double e = std::exp(static_cast<double>(row[j]) - static_cast<double>(mx));
      row[j] = static_cast<S>(e);
      sum += e;
    }
    for (Eigen::Index j = 0; j < c; ++j)
      row[j] = static_cast<S>(static_cast<double>(row[j]) / sum);
  }
  return out;
}

inline ConfidenceVector softmax6(const ConfidenceVector& logits) {
  Tensor t = Tensor::zeros({kNumClasses});
  for (int i = 0; i < kNumClasses; ++i) t.data[i] = logits[i];
  Tensor s = softmax(t);
  ConfidenceVector out;
  for (int i = 0; i < kNumClasses; ++i) out[i] = s.data[i];
  return out;
}

// -w[target] * log(probs[target]); probs clamped at 1e-12 before the log.
inline double weighted_cross_entropy(const ConfidenceVector& probs, ClassLabel target,
                                     const LossWeights& weights) {
  require(is_valid_confidence(probs), Errc::invalid_argument,
          "weighted_cross_entropy: probs is not a valid confidence vector");
  double p = std::max(static_cast<double>(probs[class_index(target)]), kLogClamp);
  return -weights[target] * std::log(p);
}

// Mean weighted cross-entropy over a batch, fused with softmax for gradient
// stability. logits: (N, C); dlogits (optional) gets w[t]/N * (softmax - onehot).
template <class S>
double weighted_softmax_ce(const TensorT<S>& logits, const std::vector<int>& targets,
                           const LossWeights& weights, TensorT<S>* dlogits) {
  Eigen::Index c = logits.shape.back();
  Eigen::Index n = logits.size() / c;
  require(static_cast<Eigen::Index>(targets.size()) == n, Errc::shape_mismatch,
          "weighted_softmax_ce: target count mismatch");
  TensorT<S> probs = softmax(logits);
  if (dlogits) *dlogits = probs;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    int t = targets[static_cast<std::size_t>(i)];
    require(t >= 0 && t < c, Errc::invalid_argument, "target class out of range");
    double w = weights.w[static_cast<std::size_t>(t)];
    double p = std::max(static_cast<double>(probs.data[i * c + t]), kLogClamp);
    loss += -w * std::log(p);
    if (dlogits) {
      S scale = static_cast<S>(w / static_cast<double>(n));
      for (Eigen::Index j = 0; j < c; ++j) dlogits->data[i * c + j] *= scale;
      dlogits->data[i * c + t] -= scale;
    }
  }
  return loss / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// optimizer

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <class S>
struct AdamStateT {
  std::map<std::string, TensorT<S>> m, v;
  std::int64_t step = 0;
};

using AdamState = AdamStateT<float>;

// Standard Adam with bias correction. State tensors are created lazily on the
// first step and must keep their shapes afterwards.
template <class S>
void adam_step(std::map<std::string, TensorT<S>*>& params,
               const std::map<std::string, TensorT<S>>& grads, AdamStateT<S>& state,
               const AdamConfig& cfg = {}) {
  state.step += 1;
  double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (auto& [name, p] : params) {
    auto git = grads.find(name);
    require(git != grads.end(), Errc::shape_mismatch, "adam_step: missing gradient for " + name);
    const TensorT<S>& g = git->second;
    require(g.shape == p->shape, Errc::shape_mismatch, "adam_step: gradient shape mismatch for " + name);
    auto& m = state.m[name];
    auto& v = state.v[name];
    if (m.size() == 0) m = TensorT<S>::zeros(p->shape);
    if (v.size() == 0) v = TensorT<S>::zeros(p->shape);
    require(m.shape == p->shape && v.shape == p->shape, Errc::shape_mismatch,
            "adam_step: state shape mismatch for " + name);
    const S b1 = static_cast<S>(cfg.beta1), b2 = static_cast<S>(cfg.beta2);
    for (Eigen::Index i = 0; i < p->size(); ++i) {
      S gi = g.data[i];
      m.data[i] = b1 * m.data[i] + (S(1) - b1) * gi;
      v.data[i] = b2 * v.data[i] + (S(1) - b2) * gi * gi;
      double mhat = static_cast<double>(m.data[i]) / bc1;
      double vhat = static_cast<double>(v.data[i]) / bc2;
      p->data[i] -= static_cast<S>(cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
    }
  }
}

// ---------------------------------------------------------------------------
// model files: model.json (manifest) + weights.bin (f32 little-endian blob)

void save_model(const ModelParams& params, const std::filesystem::path& dir);
ModelParams load_model(const std::filesystem::path& dir);

}  // namespace jelly::nn
