#pragma once

// Deterministic synthetic sonar-event simulator plus the dataset file format.
//
// Each class renders with both a distinctive appearance and distinctive
// temporal dynamics (see generate_event). Everything stochastic draws from the
// one Rng passed in, with a fixed documented draw order, so (inputs, seed)
// fully determine the output.

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "jelly/core.hpp"
#include "jelly/rng.hpp"

namespace jelly {

struct EnvironmentProfile {
  int id = 0;
  double noise_sigma = 10.0;      // Gaussian pixel noise std, intensity units
  double artefact_rate = 0.05;    // chance any frame gains a horizontal streak
  double background_level = 40.0; // mean intensity
  std::array<double, 2> drift{0.0, 0.0};  // px/frame mean object translation
};

// Event lengths are drawn from a lognormal (sigma fixed at 0.9) clipped to
// [min_frames, max_frames]; mu is solved numerically so the clipped mean hits
// target_mean.
struct LengthDistribution {
  int min_frames = kMinEventFrames;
  int max_frames = kMaxEventFrames;
  double target_mean = 76.0;
};

struct GenConfig {
  ClassCounts class_counts{55, 6, 19, 64, 16, 31};
  std::vector<EnvironmentProfile> environments;
  LengthDistribution length_distribution;
  std::uint64_t seed = 1;
  int width = 32;
  int height = 32;
};

// Two simulated deployments: a calm "trial" site and a noisier, artefact-heavy
// "deployment" site. The gap between them is what leave-one-environment-out
// evaluation probes.
std::vector<EnvironmentProfile> default_environments();

GenConfig default_gen_config();

// Renders one event of exactly n_frames frames.
//
// Class dynamics (all positions reflect off frame borders; object velocity =
// class-specific velocity + env.drift, fixed per event):
//   Background  noise only, no coherent object.
//   Jellyfish   elliptical blob (aspect 2.0-3.0) whose area oscillates as
//               A0*(1 + amp*sin(2*pi*t/T + phase)), amp in [0.30,0.45],
//               T in [9.5,17] frames; slow drift.
//   Artefacts   intermittent bright horizontal streaks (no coherent object).
//   Fish        compact bright blob moving fast along a straight line.
//   Seaweed     elongated shape (aspect 3.5-5.0), bright, area constant to
//               within 1%; slow drift.
//   Sediment    low-contrast diffuse cloud that grows while its peak dims
//               (total intensity roughly conserved).
// Every frame may additionally gain a streak with probability
// env.artefact_rate, then Gaussian pixel noise with env.noise_sigma.
Event generate_event(ClassLabel cls, const EnvironmentProfile& env, int n_frames, Rng& rng,
                     int width = 32, int height = 32);

// Draws the length from `dist` first, then renders.
Event generate_event(ClassLabel cls, const EnvironmentProfile& env,
                     const LengthDistribution& dist, Rng& rng, int width = 32, int height = 32);

// Default-distribution convenience overload.
Event generate_event(ClassLabel cls, const EnvironmentProfile& env, Rng& rng, int width = 32,
                     int height = 32);

// Generates cfg.class_counts events per class, split evenly across
// environments (remainder to the lowest environment id). Events are ordered by
// class, then by environment id, with ids 0..N-1; event i draws only from
// child stream split(i) of Rng(cfg.seed), so generation parallelizes without
// affecting the result.
std::vector<Event> generate_dataset(const GenConfig& cfg);

// Solves the lognormal location parameter for `dist` (see LengthDistribution).
double solve_length_mu(const LengthDistribution& dist);

int sample_length(const LengthDistribution& dist, double mu, Rng& rng);

// Segmented object area: pixels strictly above `threshold`, excluding rows
// where more than 85% of pixels exceed it (those are artefact streaks, which
// span the frame; compact objects never fill a row at these sizes).
int segmented_area(const Frame& frame, double threshold);

// Conventional segmentation threshold for an environment: background + 3 sigma.
double segmentation_threshold(const EnvironmentProfile& env);

// Dataset directory format: manifest.json + frames.bin (see save_dataset in
// sonargen.cpp for the exact layout). Round-trips byte-exactly.
void save_dataset(const std::vector<Event>& events, const std::filesystem::path& dir);
std::vector<Event> load_dataset(const std::filesystem::path& dir);

}  // namespace jelly
