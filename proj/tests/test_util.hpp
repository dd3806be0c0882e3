#pragma once

// Shared helpers for the test binaries: DFT-based periodicity probes,
// per-class centroid math, and a self-cleaning temp directory.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "jelly/core.hpp"

namespace testutil {

inline double dft_power(const std::vector<double>& x, int k) {
  constexpr double kTwoPi = 6.283185307179586476925287;
  double re = 0.0, im = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    double ang = kTwoPi * k * double(t) / double(x.size());
    re += x[t] * std::cos(ang);
    im -= x[t] * std::sin(ang);
  }
  return re * re + im * im;
}

// strongest non-DC bin in 1..n/2 of a mean-removed series
inline int dominant_bin(std::vector<double> x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= double(x.size());
  for (double& v : x) v -= mean;
  int best = 1;
  double best_power = -1.0;
  for (int k = 1; k <= int(x.size()) / 2; ++k) {
    double p = dft_power(x, k);
    if (p > best_power) {
      best_power = p;
      best = k;
    }
  }
  return best;
}

inline std::vector<double> mean_image(const std::vector<const jelly::Frame*>& frames) {
  std::vector<double> acc;
  if (frames.empty()) return acc;
  acc.assign(frames[0]->pixels.size(), 0.0);
  for (const auto* f : frames)
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += double(f->pixels[i]);
  for (double& v : acc) v /= double(frames.size());
  return acc;
}

inline double l2_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path = std::filesystem::temp_directory_path() /
           (tag + "-" + std::to_string(rd()) + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

}  // namespace testutil
