#include "jelly/benchkit.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <string>
#include <thread>

#include <json.hpp>

#include "jelly/binio.hpp"
#include "jelly/error.hpp"
#include "jelly/eventfuse.hpp"
#include "jelly/framecls.hpp"
#include "jelly/rng.hpp"
#include "jelly/sonargen.hpp"

namespace jelly {
namespace {

using clock_type = std::chrono::steady_clock;

double elapsed_ms(clock_type::time_point t0, clock_type::time_point t1) {
  return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

// Mean with min and max dropped; plain mean when fewer than 3 samples.
double trimmed_mean(std::vector<double> v) {
  if (v.empty()) fail(Errc::degenerate_input, "trimmed_mean: empty");
  if (v.size() < 3) return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
  std::sort(v.begin(), v.end());
  double sum = std::accumulate(v.begin() + 1, v.end() - 1, 0.0);
  return sum / double(v.size() - 2);
}

long read_peak_rss_kb() {
  std::ifstream in("/proc/self/status");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("VmHWM:", 0) == 0) {
      long kb = 0;
      if (std::sscanf(line.c_str(), "VmHWM: %ld", &kb) == 1) return kb;
    }
  }
  return -1;
}

std::string read_first_line(const char* path) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  return line;
}

std::string cpu_model() {
  std::ifstream in("/proc/cpuinfo");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("model name", 0) == 0) {
      auto pos = line.find(':');
      if (pos != std::string::npos) {
        auto s = line.substr(pos + 1);
        auto b = s.find_first_not_of(" \t");
        return b == std::string::npos ? s : s.substr(b);
      }
    }
  }
  return "unknown";
}

}  // namespace

std::vector<int> default_bench_lengths() { return {4, 50, 100, 150, 200, 300}; }

std::vector<BenchRow> bench_event_latency(const nn::ModelParams& frame_model,
                                          const nn::ModelParams& fusion_model,
                                          const std::vector<int>& lengths, int repetitions,
                                          std::uint64_t seed) {
  if (lengths.empty()) fail(Errc::invalid_argument, "bench: no lengths");
  for (int n : lengths) {
    if (n < kMinEventFrames || n > kMaxEventFrames)
      fail(Errc::invalid_argument, "bench: length " + std::to_string(n) + " outside [" +
                                       std::to_string(kMinEventFrames) + ", " +
                                       std::to_string(kMaxEventFrames) + "]");
  }
  if (repetitions < 10) fail(Errc::invalid_argument, "bench: repetitions must be >= 10");

  FrameClassifier clf(frame_model);
  FusionClassifier fus(fusion_model);
  auto envs = default_environments();
  Rng root(seed);

  std::vector<BenchRow> rows;
  rows.reserve(lengths.size());
  for (std::size_t li = 0; li < lengths.size(); ++li) {
    int n = lengths[li];
    Rng rng = root.split(li);
    Event ev = generate_event(ClassLabel::Jellyfish, envs[0], n, rng);

    std::vector<double> t_frames, t_mean, t_net;
    t_frames.reserve(repetitions);
    t_mean.reserve(repetitions);
    t_net.reserve(repetitions);
    for (int rep = -1; rep < repetitions; ++rep) {
      auto a = clock_type::now();
      ConfidenceSequence seq = clf.classify(ev);
      auto b = clock_type::now();
      ConfidenceVector avg = fuse_by_average(seq);
      auto c = clock_type::now();
      ConfidenceVector net = fus.fuse(seq);
      auto d = clock_type::now();
      if (rep < 0) continue;  // warm-up
      (void)avg;
      (void)net;
      t_frames.push_back(elapsed_ms(a, b));
      t_mean.push_back(elapsed_ms(b, c));
      t_net.push_back(elapsed_ms(c, d));
    }

    BenchRow row;
    row.length = n;
    double f = trimmed_mean(t_frames);
    row.t_avg_ms = f + trimmed_mean(t_mean);
    row.t_fusion_ms = f + trimmed_mean(t_net);
    row.overhead_ratio = row.t_fusion_ms / row.t_avg_ms - 1.0;
    rows.push_back(row);
  }
  return rows;
}

void write_bench_csv(const std::filesystem::path& path, const std::vector<BenchRow>& rows) {
  std::string out = "length,t_avg_ms,t_fusion_ms,overhead_ratio\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g\n", r.length, r.t_avg_ms, r.t_fusion_ms,
                  r.overhead_ratio);
    out += buf;
  }
  io::write_text(path, out);
}

void write_bench_metadata(const std::filesystem::path& path, int repetitions,
                          std::uint64_t seed) {
  nlohmann::json j;
  j["cpu_model"] = cpu_model();
  j["hardware_concurrency"] = std::thread::hardware_concurrency();
  j["os"] = read_first_line("/proc/version");
#if defined(__clang__)
  j["compiler"] = "clang " + std::to_string(__clang_major__) + "." +
                  std::to_string(__clang_minor__) + "." + std::to_string(__clang_patchlevel__);
#elif defined(__GNUC__)
  j["compiler"] = "gcc " + std::to_string(__GNUC__) + "." + std::to_string(__GNUC_MINOR__) + "." +
                  std::to_string(__GNUC_PATCHLEVEL__);
#else
  j["compiler"] = "unknown";
#endif
  j["peak_rss_kb"] = read_peak_rss_kb();
  j["repetitions"] = repetitions;
  j["seed"] = seed;
  j["timing"] =
      "steady_clock; per repetition the shared frame-classification stage and the two fusion "
      "stages are timed separately; t_avg_ms = frames + mean-fusion, t_fusion_ms = frames + "
      "network-fusion; trimmed mean over repetitions (min and max dropped); one untimed warm-up; "
      "single-threaded";
  io::write_json(path, j);
}

}  // namespace jelly
