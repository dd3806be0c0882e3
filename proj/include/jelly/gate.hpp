#pragma once

// Jellyfish reporting gate: an event is reported iff its fused prediction is
// Jellyfish AND the confidence clears tau. Other classes are never gated.
// Below-threshold jellyfish predictions keep their argmax label in confusion
// matrices; only the `reported` flag changes.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "jelly/core.hpp"

namespace jelly {

struct GateConfig {
  double tau = 0.45;
};

struct GateDecision {
  std::int64_t event_id = 0;
  ClassLabel predicted = ClassLabel::Background;
  double confidence = 0.0;
  bool reported = false;  // implies predicted == Jellyfish
};

GateDecision apply_gate(const ConfidenceVector& pred, const GateConfig& cfg,
                        std::int64_t event_id = 0);

struct SweepPoint {
  double tau = 0.0;
  double tp_rate = 0.0;   // reported true jellyfish / total true jellyfish
  std::int64_t fp_count = 0;  // reported non-jellyfish events
  double fp_rate = 0.0;   // fp_count / total non-jellyfish
};

// One point per tau (taus outside [0,1] are clamped). With no true jellyfish
// in the data the TP rate is reported as 0.
std::vector<SweepPoint> sweep_threshold(const std::vector<ConfidenceVector>& preds,
                                        const std::vector<ClassLabel>& labels,
                                        const std::vector<double>& taus);

std::vector<double> default_sweep_grid();  // 0.00 .. 0.95 step 0.05

// CSV: tau,tp_rate,fp_count,fp_rate
void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepPoint>& curve);

}  // namespace jelly
