#pragma once

// First-stage frame classifier: a small fixed CNN mapping one 32x32 frame to a
// 6-class confidence vector. Frames inherit their event's label for training,
// including frames where the object has faded — that label noise is part of
// the domain, not a bug to fix here.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "jelly/core.hpp"
#include "jelly/nnkit.hpp"

namespace jelly {

// conv 1->8 (3x3, pad 1) + ReLU + 2x2 maxpool
// conv 8->16 (3x3, pad 1) + ReLU + 2x2 maxpool
// flatten (16*8*8) -> dense 64 + ReLU -> dense 6
template <class S>
nn::Sequential<S> make_frame_net() {
  nn::Sequential<S> net;
  net.add("conv1", std::make_unique<nn::Conv2D<S>>(1, 8, 3, 1));
  net.add("relu1", std::make_unique<nn::ReLU<S>>());
  net.add("pool1", std::make_unique<nn::MaxPool2<S>>());
  net.add("conv2", std::make_unique<nn::Conv2D<S>>(8, 16, 3, 1));
  net.add("relu2", std::make_unique<nn::ReLU<S>>());
  net.add("pool2", std::make_unique<nn::MaxPool2<S>>());
  net.add("flat", std::make_unique<nn::Flatten<S>>());
  net.add("dense1", std::make_unique<nn::Dense<S>>(16 * 8 * 8, 64));
  net.add("relu3", std::make_unique<nn::ReLU<S>>());
  net.add("dense2", std::make_unique<nn::Dense<S>>(64, 6));
  return net;
}

// He-uniform weights drawn from Rng(seed) in architecture order; zero biases.
nn::ModelParams build_frame_model(std::uint64_t seed);

struct FrameTrainConfig {
  int epochs = 30;
  int batch_size = 64;
  double lr = 1e-3;
  int patience = 5;             // early-stop epochs without val improvement
  int max_frames_per_event = 20;  // evenly strided subsample of long events
  std::uint64_t seed = 0;
};

struct TrainLogEntry {
  int epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
};

struct TrainLog {
  std::vector<TrainLogEntry> epochs;
  int best_epoch = -1;
};

struct FrameTrainResult {
  nn::ModelParams params;
  TrainLog log;
};

// Trains on individual frames (event label applied to every frame); keeps the
// parameters of the best validation epoch. Deterministic given cfg.seed.
FrameTrainResult train_frame_classifier(const std::vector<Event>& train,
                                        const std::vector<Event>& val,
                                        const FrameTrainConfig& cfg);

// Read-only wrapper for inference; safe to share across threads.
class FrameClassifier {
 public:
  explicit FrameClassifier(const nn::ModelParams& params);

  ConfidenceSequence classify(const Event& event) const;
  // batched frame accuracy over events (every frame counted, no subsampling)
  double frame_accuracy(const std::vector<Event>& events) const;

 private:
  nn::Sequential<float> net_;
};

ConfidenceSequence classify_frames(const nn::ModelParams& params, const Event& event);

// Parallel over events; order preserved.
std::vector<ConfidenceSequence> classify_dataset(const nn::ModelParams& params,
                                                 const std::vector<Event>& events);

// CSV: event_id,frame_idx,p0,p1,p2,p3,p4,p5,label ; 9 significant digits, LF endings.
void write_confidence_csv(const std::filesystem::path& path,
                          const std::vector<ConfidenceSequence>& seqs,
                          const std::vector<ClassLabel>& labels);

// Frames normalized to [0,1] as the (N,1,H,W) network input.
nn::Tensor frames_to_tensor(const std::vector<const Frame*>& frames);

}  // namespace jelly
