#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "jelly/error.hpp"
#include "jelly/rng.hpp"

namespace jelly {

// The six object categories, in the fixed order used by every confusion matrix
// and class-indexed array in this project.
enum class ClassLabel : int {
  Background = 0,
  Jellyfish = 1,
  Artefacts = 2,
  Fish = 3,
  Seaweed = 4,
  Sediment = 5,
};

inline constexpr int kNumClasses = 6;

inline constexpr std::array<const char*, kNumClasses> kClassNames = {
    "Background", "Jellyfish", "Artefacts", "Fish", "Seaweed", "Sediment"};

inline int class_index(ClassLabel c) { return static_cast<int>(c); }

inline ClassLabel class_from_index(int i) {
  require(i >= 0 && i < kNumClasses, Errc::invalid_argument,
          "class index out of range: " + std::to_string(i));
  return static_cast<ClassLabel>(i);
}

// Per-class event counts, indexed by ClassLabel.
using ClassCounts = std::array<std::int64_t, kNumClasses>;

inline std::int64_t total(const ClassCounts& c) {
  std::int64_t n = 0;
  for (auto v : c) n += v;
  return n;
}

// One grayscale sonar patch, 8-bit, row-major.
struct Frame {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  bool operator==(const Frame&) const = default;

  Eigen::Map<const Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
  map() const {
    return {pixels.data(), height, width};
  }
};

inline Frame make_frame(int width, int height) {
  Frame f;
  f.width = width;
  f.height = height;
  f.pixels.assign(static_cast<std::size_t>(width) * height, 0);
  return f;
}

// One tracked object: an ordered frame sequence with a single ground-truth label.
// Real events have 4..300 frames; GAN-synthesized events have exactly one frame,
// carry synthetic=true and environment_id=-1, and are valid only as frame-classifier
// training input.
struct Event {
  std::int64_t id = 0;
  ClassLabel label = ClassLabel::Background;
  int environment_id = 0;
  bool synthetic = false;
  std::vector<Frame> frames;

  bool operator==(const Event&) const = default;
};

inline constexpr int kMinEventFrames = 4;
inline constexpr int kMaxEventFrames = 300;

// Per-frame class probabilities. Valid vectors are non-negative and sum to 1
// within 1e-6 (see is_valid_confidence).
using ConfidenceVector = Eigen::Matrix<float, kNumClasses, 1>;

inline bool is_valid_confidence(const ConfidenceVector& v, double tol = 1e-6) {
  double sum = 0.0;
  for (int i = 0; i < kNumClasses; ++i) {
    if (!(v[i] >= 0.0f)) return false;
    sum += static_cast<double>(v[i]);
  }
  return std::abs(sum - 1.0) <= tol;
}

// argmax with ties broken toward the lowest class index
inline ClassLabel argmax_class(const ConfidenceVector& v) {
  int best = 0;
  for (int i = 1; i < kNumClasses; ++i)
    if (v[i] > v[best]) best = i;
  return static_cast<ClassLabel>(best);
}

// Per-frame probability vectors for one event, one row per frame.
struct ConfidenceSequence {
  std::int64_t event_id = 0;
  Eigen::Matrix<float, Eigen::Dynamic, kNumClasses, Eigen::RowMajor> probs;

  Eigen::Index length() const { return probs.rows(); }
  ConfidenceVector row(Eigen::Index i) const { return probs.row(i).transpose(); }
};

enum class SplitMode { RandomSplit, LeaveOneEnvironmentOut };

struct SplitSpec {
  double train_frac = 0.75;
  double val_frac = 0.125;
  double test_frac = 0.125;
  SplitMode mode = SplitMode::RandomSplit;
  std::optional<int> held_out_environment;  // required iff mode == LeaveOneEnvironmentOut
};

struct SplitResult {
  std::vector<Event> train;
  std::vector<Event> val;
  std::vector<Event> test;
};

// Deterministic dataset split.
//
// RandomSplit: stratified by class. Global split sizes are fixed by largest-remainder
// rounding of N*frac (so each split size is within one event of its exact share), and
// per-class allocations are rounded so class proportions are preserved within rounding.
// LeaveOneEnvironmentOut: test = every event of the held-out environment; the rest is
// split train/val by train_frac/(train_frac+val_frac), stratified the same way.
SplitResult split_dataset(const std::vector<Event>& events, const SplitSpec& spec,
                          std::uint64_t seed);

// Largest-remainder rounding of total*fracs[i] to integers summing to total;
// remainder ties go to the lower index. fracs must be non-negative.
std::vector<std::int64_t> largest_remainder(std::int64_t total, const std::vector<double>& fracs);

}  // namespace jelly
