#pragma once

// Event-classification latency benchmark: per-event wall time of the
// averaging path vs the fusion-network path across frame lengths.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "jelly/nnkit.hpp"

namespace jelly {

struct BenchRow {
  int length = 0;
  double t_avg_ms = 0.0;     // frame classification + averaging
  double t_fusion_ms = 0.0;  // frame classification + fusion network
  double overhead_ratio = 0.0;  // t_fusion / t_avg - 1
};

// Synthesizes one event per length and times both paths, `repetitions` times
// each after one untimed warm-up. The shared frame-classification stage and
// the two fusion stages are timed separately (steady_clock) and composed, so
// overhead_ratio reflects the fusion stages rather than scheduler noise; each
// reported time is the trimmed mean over repetitions (min and max dropped).
// Single-threaded; lengths must lie in [4, 300]; repetitions >= 10.
std::vector<BenchRow> bench_event_latency(const nn::ModelParams& frame_model,
                                          const nn::ModelParams& fusion_model,
                                          const std::vector<int>& lengths, int repetitions,
                                          std::uint64_t seed);

std::vector<int> default_bench_lengths();  // {4, 50, 100, 150, 200, 300}

// CSV: length,t_avg_ms,t_fusion_ms,overhead_ratio
void write_bench_csv(const std::filesystem::path& path, const std::vector<BenchRow>& rows);

// JSON sidecar with hardware/OS metadata, peak RSS, and the timing
// methodology note.
void write_bench_metadata(const std::filesystem::path& path, int repetitions,
                          std::uint64_t seed);

}  // namespace jelly
