#pragma once

// End-to-end evaluation harness: per-run metrics from frozen models,
// multi-seed evaluation on fixed data, and the cumulative method ladder
// A (baseline) -> B (+ generated data) -> C (+ event classifier) ->
// D (+ weighted loss) -> E (+ confidence threshold).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "jelly/core.hpp"
#include "jelly/evalkit.hpp"
#include "jelly/eventfuse.hpp"
#include "jelly/framecls.hpp"
#include "jelly/ganaug.hpp"
#include "jelly/gate.hpp"
#include "jelly/nnkit.hpp"
#include "jelly/sonargen.hpp"

namespace jelly {

enum class FusionMode { Average, Network };

struct EvalOptions {
  FusionMode mode = FusionMode::Average;
  const nn::ModelParams* fusion_model = nullptr;  // required iff mode == Network
  // When set, jellyfish accuracy / FP switch from argmax counts to gated
  // reports and the confusion matrix carries reported_counts.
  std::optional<GateConfig> gate;
};

// Metrics of frozen models on precomputed test sequences. Frame accuracy is
// the fraction of sequence rows whose argmax matches the event label.
RunMetrics evaluate_sequences(const std::vector<ConfidenceSequence>& seqs,
                              const std::vector<ClassLabel>& labels, const EvalOptions& opts);

// classify_dataset + evaluate_sequences. Test events must be real (synthetic
// events never reach evaluation).
RunMetrics evaluate_events(const nn::ModelParams& frame_model, const std::vector<Event>& events,
                           const EvalOptions& opts);

struct EvalRunConfig {
  FrameTrainConfig frame;    // per-run seed is overridden
  FusionTrainConfig fusion;  // per-run seed is overridden
  FusionMode mode = FusionMode::Network;
  std::optional<GateConfig> gate;
  int runs = 3;             // >= 2 (std reporting)
  std::uint64_t seed = 0;   // run i trains with seed + i
};

// Trains frame + fusion models per seed on the fixed split and evaluates each
// on the test events.
RunReport run_eval(const SplitResult& split, const EvalRunConfig& cfg);

struct PipelineConfig {
  GenConfig gen;             // dataset, fixed across runs
  SplitSpec split;           // RandomSplit by default
  std::uint64_t split_seed = 7;
  FrameTrainConfig frame;
  GanTrainConfig gan;
  EnhancementStrategy strategy = EnhancementStrategy::Equal;
  double fraction = 0.1;
  FusionTrainConfig fusion;  // loss weights used by methods D and E
  GateConfig gate;           // method E threshold
  int runs = 3;
  std::uint64_t seed = 0;
};

struct MethodResult {
  std::string method;  // "A".."E"
  std::string name;
  RunReport report;
};

struct PipelineResult {
  std::vector<MethodResult> methods;
};

// Runs the full ladder `runs` times (run i uses training seed seed + i) on one
// fixed dataset and split. Within a run, later methods reuse the earlier
// artifacts: C-E share B's frame classifier, E shares D's fusion model.
PipelineResult run_pipeline(const PipelineConfig& cfg);

// CSV: method,frame_acc,event_acc,jelly_acc,jelly_fp — means over runs;
// jelly_fp is the FP proportion among non-jellyfish test events.
void write_comparison_csv(const std::filesystem::path& path, const PipelineResult& result);

}  // namespace jelly
