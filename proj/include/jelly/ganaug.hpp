#pragma once

// Conditional GAN (non-saturating loss) used as a synthetic-frame source, plus
// the three training-set enhancement strategies and their budget arithmetic.
// The GAN is a deliberately small MLP pair: the substance here is the loss,
// the conditioning, and the enhancement bookkeeping, not image fidelity.

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "jelly/core.hpp"
#include "jelly/nnkit.hpp"

namespace jelly {

inline constexpr int kGanZDim = 32;
inline constexpr int kGanFrameSide = 32;
inline constexpr int kGanFramePixels = kGanFrameSide * kGanFrameSide;

// G: z(32) + one-hot(6) -> dense 256 ReLU -> dense 1024 tanh (a 32x32 frame in [-1,1])
template <class S>
nn::Sequential<S> make_generator() {
  nn::Sequential<S> net;
  net.add("g1", std::make_unique<nn::Dense<S>>(kGanZDim + kNumClasses, 256));
  net.add("g1a", std::make_unique<nn::ReLU<S>>());
  net.add("g2", std::make_unique<nn::Dense<S>>(256, kGanFramePixels));
  net.add("g2a", std::make_unique<nn::Tanh<S>>());
  return net;
}

// D: frame(1024) + one-hot(6) -> dense 256 leakyReLU(0.2) -> dense 64 leakyReLU -> dense 1
// (returns the logit; discriminate() applies the sigmoid)
template <class S>
nn::Sequential<S> make_discriminator() {
  nn::Sequential<S> net;
  net.add("d1", std::make_unique<nn::Dense<S>>(kGanFramePixels + kNumClasses, 256));
  net.add("d1a", std::make_unique<nn::LeakyReLU<S>>(0.2));
  net.add("d2", std::make_unique<nn::Dense<S>>(256, 64));
  net.add("d2a", std::make_unique<nn::LeakyReLU<S>>(0.2));
  net.add("d3", std::make_unique<nn::Dense<S>>(64, 1));
  return net;
}

struct GanModels {
  nn::ModelParams generator;
  nn::ModelParams discriminator;
  ClassCounts class_support{};  // training frames seen per class
};

GanModels build_gan_models(std::uint64_t seed);

// Eq.-1 pair for one (d_real, d_fake) probability pair, inputs clamped to
// [1e-12, 1-1e-12]:
//   L_D = log(d_real) + log(1 - d_fake)   (the discriminator ascends this)
//   L_G = -log(d_fake)                    (the generator descends this;
//                                          non-saturating form)
std::pair<double, double> gan_losses(double d_real, double d_fake);

struct GanTrainConfig {
  int epochs = 30;
  int batch_size = 64;
  double lr = 2e-4;
  double beta1 = 0.5;
  int max_frames_per_event = 6;
  int probe_size = 128;  // real frames held out for the D-accuracy probe
  std::uint64_t seed = 0;
  // Classes the GAN must support. Empty = every class present in the data.
  std::vector<int> conditioning_classes;
};

struct GanLogEntry {
  int epoch = 0;
  double loss_d = 0.0;  // Eq. 1 L_D, epoch mean
  double loss_g = 0.0;  // Eq. 1 L_G, epoch mean
  double probe_acc = 0.0;  // D accuracy on held-out real vs fresh fake
};

struct GanTrainResult {
  GanModels models;
  std::vector<GanLogEntry> log;
};

// Alternating single-step training (one D step, one G step per batch).
GanTrainResult train_gan(const std::vector<Event>& train, const GanTrainConfig& cfg);

// D(frame, class) as a probability in (0,1).
double discriminate(const nn::ModelParams& discriminator, const Frame& frame, ClassLabel cls);

// n conditioned samples from G; tanh output mapped to 8 bits via
// round((v+1)*127.5).
std::vector<Frame> generate_frames(const nn::ModelParams& generator, ClassLabel cls, int n,
                                   Rng& rng);

enum class EnhancementStrategy {
  ProportionalReal,     // a) quotas proportional to real class counts
  ProportionalMissing,  // b) proportional to gaps vs the majority class
  Equal,                // c) equal share per class
};

struct EnhancementPlan {
  EnhancementStrategy strategy = EnhancementStrategy::ProportionalReal;
  double fraction = 0.1;
  ClassCounts added{};
};

// Budget B = round_half_up(p * sum(real)); per-class quotas integerized by
// largest remainder, ties to the lowest class index. Strategy b) with an
// all-zero gap vector falls back to c).
EnhancementPlan plan_enhancement(const ClassCounts& real, EnhancementStrategy strategy, double p);

// Emits plan.added single-frame events (synthetic=true, environment_id=-1),
// ids id_base.. in class-major order. Sample i draws only from split(i) of
// Rng(seed).
std::vector<Event> synthesize(const GanModels& gan, const EnhancementPlan& plan,
                              std::uint64_t seed, std::int64_t id_base = 1000000);

// Directory format: gan.json + generator/ + discriminator/ (nnkit model dirs).
void save_gan(const GanModels& gan, const std::filesystem::path& dir);
GanModels load_gan(const std::filesystem::path& dir);

}  // namespace jelly
