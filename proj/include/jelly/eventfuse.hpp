#pragma once

// Second-stage event classification: the averaging baseline and the 1-D
// convolutional confidence-sequence network. Both consume ConfidenceSequences
// from a frozen frame classifier and emit one ConfidenceVector per event.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "jelly/core.hpp"
#include "jelly/framecls.hpp"  // TrainLog
#include "jelly/nnkit.hpp"

namespace jelly {

inline constexpr int kFusionWindow = 7;

// conv1d 6->16 (window 7, stride 1, valid) + ReLU
// global mean-pool and max-pool over time, concatenated (32) -> dense 6
template <class S>
nn::Sequential<S> make_fusion_net() {
  nn::Sequential<S> net;
  net.add("conv", std::make_unique<nn::Conv1D<S>>(kNumClasses, 16, kFusionWindow));
  net.add("relu", std::make_unique<nn::ReLU<S>>());
  net.add("pool", std::make_unique<nn::GlobalMeanMax1D<S>>());
  net.add("dense", std::make_unique<nn::Dense<S>>(32, kNumClasses));
  return net;
}

nn::ModelParams build_fusion_model(std::uint64_t seed);

// Elementwise mean of the frame vectors (64-bit accumulation).
ConfidenceVector fuse_by_average(const ConfidenceSequence& seq);

// (1, 6, L) channel-major input; sequences shorter than the window are
// edge-replicated to length 7 by repeating the final vector.
nn::Tensor sequence_to_input(const ConfidenceSequence& seq);

class FusionClassifier {
 public:
  explicit FusionClassifier(const nn::ModelParams& params);
  ConfidenceVector fuse(const ConfidenceSequence& seq) const;

 private:
  nn::Sequential<float> net_;
};

ConfidenceVector fuse_by_network(const nn::ModelParams& params, const ConfidenceSequence& seq);

struct FusionTrainConfig {
  nn::LossWeights loss_weights = nn::LossWeights::jellyfish_seaweed(2.0, 1.0);
  int epochs = 40;
  int batch_size = 8;  // sequences per optimizer step
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

struct FusionTrainResult {
  nn::ModelParams params;
  TrainLog log;
};

// Minimizes the weighted cross-entropy of the fused prediction at event level.
// Fixed epoch budget (no early stopping); validation accuracy is logged per
// epoch. Deterministic given cfg.seed.
FusionTrainResult train_fusion(const nn::ModelParams& init,
                               const std::vector<ConfidenceSequence>& train_seqs,
                               const std::vector<ClassLabel>& train_labels,
                               const std::vector<ConfidenceSequence>& val_seqs,
                               const std::vector<ClassLabel>& val_labels,
                               const FusionTrainConfig& cfg);

// CSV: event_id,pred,conf0,conf1,conf2,conf3,conf4,conf5,label
void write_predictions_csv(const std::filesystem::path& path,
                           const std::vector<std::int64_t>& event_ids,
                           const std::vector<ConfidenceVector>& preds,
                           const std::vector<ClassLabel>& labels);

}  // namespace jelly
