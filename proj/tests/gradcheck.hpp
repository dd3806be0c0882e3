#pragma once

// Central finite-difference gradient checking for layers, run on the double
// instantiation so FD truncation error is the only error source. Inputs come
// from spread_tensor: globally distinct, well-separated values, so piecewise
// layers (ReLU, LeakyReLU, max pooling) are probed away from their kinks and
// ties and the FD quotient stays exact.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "jelly/nnkit.hpp"
#include "jelly/rng.hpp"

namespace gradcheck {

using DTensor = jelly::nn::TensorT<double>;

inline DTensor random_tensor(std::vector<Eigen::Index> shape, jelly::Rng& rng,
                             double scale = 1.0) {
  DTensor t = DTensor::zeros(std::move(shape));
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data[i] = rng.uniform(-scale, scale);
  return t;
}

// a random permutation of centered values spaced 0.07 apart, all at least
// 0.035 from zero (odd-sized sets shift half a step so none lands on zero)
inline DTensor spread_tensor(std::vector<Eigen::Index> shape, jelly::Rng& rng) {
  DTensor t = DTensor::zeros(std::move(shape));
  Eigen::Index n = t.size();
  std::vector<double> values(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    double v = (double(i) + 0.5 - double(n) / 2.0) * 0.07;
    values[std::size_t(i)] = n % 2 == 1 ? v + 0.035 : v;
  }
  for (Eigen::Index i = n - 1; i > 0; --i)
    std::swap(values[std::size_t(i)], values[std::size_t(rng.uniform_int(0, int(i)))]);
  for (Eigen::Index i = 0; i < n; ++i) t.data[i] = values[std::size_t(i)];
  return t;
}

// Max relative error between analytic and central-FD gradients of
// J = sum(dy .* layer(x)), over every input and parameter element.
inline double max_rel_err(jelly::nn::Layer<double>& layer, DTensor x, jelly::Rng& rng,
                          double h = 1e-3) {
  if (layer.name().empty()) layer.set_name("L");

  jelly::nn::CacheT<double> cache;
  DTensor y = layer.forward(x, &cache);
  DTensor dy = random_tensor(y.shape, rng);

  jelly::nn::GradMap<double> grads;
  layer.visit_params(
      [&](const std::string& n, DTensor* t) { grads[n] = DTensor::zeros(t->shape); });
  DTensor dx = layer.backward(dy, cache, &grads);

  auto objective = [&](const DTensor& xx) {
    DTensor yy = layer.forward(xx, nullptr);
    double s = 0.0;
    for (Eigen::Index i = 0; i < yy.size(); ++i) s += dy.data[i] * yy.data[i];
    return s;
  };

  double worst = 0.0;
  auto compare = [&](double analytic, double fd) {
    double denom = std::max({std::abs(analytic), std::abs(fd), 1e-8});
    worst = std::max(worst, std::abs(analytic - fd) / denom);
  };

  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double keep = x.data[i];
    x.data[i] = keep + h;
    double jp = objective(x);
    x.data[i] = keep - h;
    double jm = objective(x);
    x.data[i] = keep;
    compare(dx.data[i], (jp - jm) / (2.0 * h));
  }

  std::vector<std::pair<std::string, DTensor*>> params;
  layer.visit_params(
      [&](const std::string& n, DTensor* t) { params.emplace_back(n, t); });
  for (auto& [name, tensor] : params) {
    for (Eigen::Index i = 0; i < tensor->size(); ++i) {
      double keep = tensor->data[i];
      tensor->data[i] = keep + h;
      double jp = objective(x);
      tensor->data[i] = keep - h;
      double jm = objective(x);
      tensor->data[i] = keep;
      compare(grads.at(name).data[i], (jp - jm) / (2.0 * h));
    }
  }
  return worst;
}

}  // namespace gradcheck
