#include "jelly/sonargen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "jelly/binio.hpp"
#include "jelly/parallel.hpp"

namespace jelly {

namespace {

constexpr double kLengthSigma = 0.9;
constexpr const char* kDatasetFormat = "jelly-dataset";
constexpr int kDatasetVersion = 1;

// Working buffer for one frame before quantization.
using Field = std::vector<double>;

// Elliptical blob with a steep logistic edge at normalized radius 1, so the
// above-threshold pixel count tracks `area` closely even under pixel noise.
void add_ellipse(Field& buf, int w, int h, double cx, double cy, double theta, double area,
                 double ratio, double peak, double edge_k) {
  double b = std::sqrt(area / (std::numbers::pi * ratio));
  double a = ratio * b;
  double ct = std::cos(theta), st = std::sin(theta);
  int x0 = std::max(0, static_cast<int>(std::floor(cx - a - 3)));
  int x1 = std::min(w - 1, static_cast<int>(std::ceil(cx + a + 3)));
  int y0 = std::max(0, static_cast<int>(std::floor(cy - a - 3)));
  int y1 = std::min(h - 1, static_cast<int>(std::ceil(cy + a + 3)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      double dx = x - cx, dy = y - cy;
      double u = ct * dx + st * dy;
      double v = -st * dx + ct * dy;
      double rho = std::sqrt((u / a) * (u / a) + (v / b) * (v / b));
      if (rho > 2.0) continue;
      buf[static_cast<std::size_t>(y) * w + x] += peak / (1.0 + std::exp(edge_k * (rho - 1.0)));
    }
  }
}

// Diffuse Gaussian cloud (sediment).
void add_cloud(Field& buf, int w, int h, double cx, double cy, double radius, double peak) {
  int reach = static_cast<int>(std::ceil(radius * 3));
  int x0 = std::max(0, static_cast<int>(cx) - reach);
  int x1 = std::min(w - 1, static_cast<int>(cx) + reach);
  int y0 = std::max(0, static_cast<int>(cy) - reach);
  int y1 = std::min(h - 1, static_cast<int>(cy) + reach);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      double dx = x - cx, dy = y - cy;
      double rho2 = (dx * dx + dy * dy) / (radius * radius);
      if (rho2 > 9.0) continue;
      buf[static_cast<std::size_t>(y) * w + x] += peak * std::exp(-rho2);
    }
  }
}

void add_streak(Field& buf, int w, int h, Rng& rng) {
  int row = rng.uniform_int(0, h - 1);
  double brightness = rng.uniform(60.0, 110.0);
  bool full = rng.uniform() < 0.5;
  int xa = 0, xb = w - 1;
  if (!full) {
    xa = rng.uniform_int(0, w / 2 - 1);
    xb = rng.uniform_int(w / 2, w - 1);
  }
  for (int x = xa; x <= xb; ++x) buf[static_cast<std::size_t>(row) * w + x] += brightness;
}

struct Mover {
  double x, y, vx, vy;

  void step(double lo_x, double hi_x, double lo_y, double hi_y) {
    x += vx;
    y += vy;
    if (x < lo_x) { x = 2 * lo_x - x; vx = -vx; }
    if (x > hi_x) { x = 2 * hi_x - x; vx = -vx; }
    if (y < lo_y) { y = 2 * lo_y - y; vy = -vy; }
    if (y > hi_y) { y = 2 * hi_y - y; vy = -vy; }
  }
};

Frame quantize(const Field& buf, int w, int h, const EnvironmentProfile& env, Rng& rng) {
  Frame f = make_frame(w, h);
  for (std::size_t i = 0; i < buf.size(); ++i) {
    double v = buf[i] + rng.gaussian(0.0, env.noise_sigma);
    long q = std::lround(v);
    f.pixels[i] = static_cast<std::uint8_t>(std::clamp(q, 0L, 255L));
  }
  return f;
}

}  // namespace

std::vector<EnvironmentProfile> default_environments() {
  EnvironmentProfile trial;
  trial.id = 0;
  trial.noise_sigma = 10.0;
  trial.artefact_rate = 0.05;
  trial.background_level = 40.0;
  trial.drift = {0.06, 0.02};
  EnvironmentProfile deployment;
  deployment.id = 1;
  deployment.noise_sigma = 16.0;
  deployment.artefact_rate = 0.30;
  deployment.background_level = 70.0;
  deployment.drift = {0.18, 0.08};
  return {trial, deployment};
}

GenConfig default_gen_config() {
  GenConfig cfg;
  cfg.environments = default_environments();
  return cfg;
}

double segmentation_threshold(const EnvironmentProfile& env) {
  return env.background_level + 3.0 * env.noise_sigma;
}

int segmented_area(const Frame& frame, double threshold) {
  // Objects are at least two pixels tall, while artefact streaks and isolated
  // noise hits are one pixel tall; requiring a vertical neighbour above the
  // threshold keeps the area series a property of the object alone.
  auto above = [&](int y, int x) {
    return frame.pixels[static_cast<std::size_t>(y) * frame.width + x] > threshold;
  };
  int area = 0;
  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < frame.width; ++x) {
      if (!above(y, x)) continue;
      if ((y > 0 && above(y - 1, x)) || (y + 1 < frame.height && above(y + 1, x))) ++area;
    }
  }
  return area;
}

Event generate_event(ClassLabel cls, const EnvironmentProfile& env, int n_frames, Rng& rng,
                     int width, int height) {
  require(n_frames >= 1 && n_frames <= kMaxEventFrames, Errc::invalid_argument,
          "n_frames out of range: " + std::to_string(n_frames));
  require(width >= 16 && height >= 16, Errc::invalid_argument, "frame size too small");
  require(env.noise_sigma >= 0.0, Errc::invalid_argument, "noise_sigma must be >= 0");
  require(env.artefact_rate >= 0.0 && env.artefact_rate <= 1.0, Errc::invalid_argument,
          "artefact_rate must be in [0,1]");

  double lo_x = 3.0, hi_x = width - 4.0;
  double lo_y = 3.0, hi_y = height - 4.0;
  const double mid_x = width / 2.0, mid_y = height / 2.0;

  Event ev;
  ev.label = cls;
  ev.environment_id = env.id;
  ev.frames.reserve(static_cast<std::size_t>(n_frames));

  // Static per-event parameters, drawn in a fixed order per class.
  Mover mv{mid_x, mid_y, env.drift[0], env.drift[1]};
  double theta = 0, ratio = 1, base_area = 0, amp = 0, period = 1, phase = 0, peak = 0;
  double grow = 0, radius0 = 0;
  switch (cls) {
    case ClassLabel::Background:
    case ClassLabel::Artefacts:
      break;
    case ClassLabel::Jellyfish:
      mv.x = mid_x + rng.uniform(-6.0, 6.0);
      mv.y = mid_y + rng.uniform(-6.0, 6.0);
      mv.vx += rng.uniform(-0.3, 0.3);
      mv.vy += rng.uniform(-0.3, 0.3);
      theta = rng.uniform(0.0, std::numbers::pi);
      ratio = rng.uniform(2.0, 3.0);
      base_area = rng.uniform(70.0, 110.0);
      amp = rng.uniform(0.30, 0.45);
      period = rng.uniform(9.5, 17.0);
      phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      peak = rng.uniform(60.0, 90.0);
      break;
    case ClassLabel::Fish: {
      mv.x = mid_x + rng.uniform(-6.0, 6.0);
      mv.y = mid_y + rng.uniform(-6.0, 6.0);
      double dir = rng.uniform(0.0, 2.0 * std::numbers::pi);
      double speed = rng.uniform(1.2, 2.2);
      mv.vx += speed * std::cos(dir);
      mv.vy += speed * std::sin(dir);
      theta = dir;
      ratio = rng.uniform(1.0, 1.4);
      base_area = rng.uniform(20.0, 40.0);
      peak = rng.uniform(80.0, 110.0);
      break;
    }
    case ClassLabel::Seaweed: {
      theta = rng.uniform(0.0, std::numbers::pi);
      ratio = rng.uniform(3.5, 5.0);
      base_area = rng.uniform(50.0, 80.0);
      phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      peak = rng.uniform(90.0, 110.0);
      // The silhouette must never clip the frame border: a drifting partial
      // exit is the one effect large enough to break the stable-area
      // signature, so the walk is confined to keep the full reach in-bounds.
      double reach = 1.15 * std::sqrt(1.01 * base_area * ratio / std::numbers::pi);
      lo_x = std::max(lo_x, reach);
      hi_x = std::min(hi_x, width - 1.0 - reach);
      lo_y = std::max(lo_y, reach);
      hi_y = std::min(hi_y, height - 1.0 - reach);
      if (lo_x > hi_x) lo_x = hi_x = mid_x;
      if (lo_y > hi_y) lo_y = hi_y = mid_y;
      mv.x = rng.uniform(lo_x, hi_x);
      mv.y = rng.uniform(lo_y, hi_y);
      mv.vx += rng.uniform(-0.2, 0.2);
      mv.vy += rng.uniform(-0.2, 0.2);
      break;
    }
    case ClassLabel::Sediment:
      mv.x = mid_x + rng.uniform(-6.0, 6.0);
      mv.y = mid_y + rng.uniform(-6.0, 6.0);
      mv.vx += rng.uniform(-0.15, 0.15);
      mv.vy += rng.uniform(-0.15, 0.15);
      radius0 = rng.uniform(2.5, 4.0);
      grow = rng.uniform(0.8, 1.8);
      peak = rng.uniform(18.0, 30.0);
      break;
  }

  Field buf(static_cast<std::size_t>(width) * height);
  for (int t = 0; t < n_frames; ++t) {
    std::fill(buf.begin(), buf.end(), env.background_level);
    double progress = n_frames > 1 ? static_cast<double>(t) / (n_frames - 1) : 0.0;

    switch (cls) {
      case ClassLabel::Background:
        break;
      case ClassLabel::Jellyfish: {
        double area =
            base_area * (1.0 + amp * std::sin(2.0 * std::numbers::pi * t / period + phase));
        add_ellipse(buf, width, height, mv.x, mv.y, theta, area, ratio, peak, 24.0);
        break;
      }
      case ClassLabel::Artefacts:
        if (rng.uniform() < 0.55) {
          add_streak(buf, width, height, rng);
          if (rng.uniform() < 0.3) add_streak(buf, width, height, rng);
        }
        break;
      case ClassLabel::Fish:
        add_ellipse(buf, width, height, mv.x, mv.y, theta, base_area, ratio, peak, 24.0);
        break;
      case ClassLabel::Seaweed: {
        double area = base_area * (1.0 + 0.01 * std::sin(2.0 * std::numbers::pi * t / 40.0 + phase));
        // Grid-snapped center: sub-pixel translation of a long, nearly
        // axis-aligned edge flips whole boundary rows at once, which would
        // swamp the class's stable-area signature. Snapping keeps the drift
        // visible while the silhouette translates as an unchanged pixel mask.
        add_ellipse(buf, width, height, std::round(mv.x), std::round(mv.y), theta, area, ratio,
                    peak, 24.0);
        break;
      }
      case ClassLabel::Sediment: {
        double radius = radius0 * (1.0 + grow * progress);
        double p = peak / ((1.0 + grow * progress) * (1.0 + grow * progress));
        add_cloud(buf, width, height, mv.x, mv.y, radius, p);
        break;
      }
    }

    if (rng.uniform() < env.artefact_rate) add_streak(buf, width, height, rng);
    ev.frames.push_back(quantize(buf, width, height, env, rng));
    mv.step(lo_x, hi_x, lo_y, hi_y);
  }
  return ev;
}

double solve_length_mu(const LengthDistribution& dist) {
  require(dist.min_frames >= kMinEventFrames && dist.max_frames <= kMaxEventFrames &&
              dist.min_frames <= dist.max_frames,
          Errc::invalid_argument, "length distribution bounds out of range");
  require(dist.target_mean > dist.min_frames && dist.target_mean < dist.max_frames,
          Errc::invalid_argument, "target_mean must lie inside (min, max)");
  // E[clip(exp(mu + sigma*Z))] is continuous and increasing in mu; bisect.
  auto clipped_mean = [&](double mu) {
    const double dz = 1.0 / 256.0;
    double acc = 0.0, wsum = 0.0;
    for (double z = -8.0; z <= 8.0; z += dz) {
      double w = std::exp(-0.5 * z * z);
      double v = std::clamp(std::exp(mu + kLengthSigma * z),
                            static_cast<double>(dist.min_frames),
                            static_cast<double>(dist.max_frames));
      acc += w * v;
      wsum += w;
    }
    return acc / wsum;
  };
  double lo = std::log(static_cast<double>(dist.min_frames));
  double hi = std::log(static_cast<double>(dist.max_frames));
  for (int i = 0; i < 80; ++i) {
    double mid = 0.5 * (lo + hi);
    if (clipped_mean(mid) < dist.target_mean)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

int sample_length(const LengthDistribution& dist, double mu, Rng& rng) {
  double v = std::exp(mu + kLengthSigma * rng.gaussian());
  v = std::clamp(v, static_cast<double>(dist.min_frames), static_cast<double>(dist.max_frames));
  return static_cast<int>(std::lround(v));
}

Event generate_event(ClassLabel cls, const EnvironmentProfile& env,
                     const LengthDistribution& dist, Rng& rng, int width, int height) {
  double mu = solve_length_mu(dist);
  int n = sample_length(dist, mu, rng);
  return generate_event(cls, env, n, rng, width, height);
}

Event generate_event(ClassLabel cls, const EnvironmentProfile& env, Rng& rng, int width,
                     int height) {
  return generate_event(cls, env, LengthDistribution{}, rng, width, height);
}

std::vector<Event> generate_dataset(const GenConfig& cfg) {
  require(!cfg.environments.empty(), Errc::invalid_argument, "no environments configured");
  for (auto c : cfg.class_counts)
    require(c >= 0, Errc::invalid_argument, "class counts must be non-negative");
  require(total(cfg.class_counts) > 0, Errc::degenerate_input, "zero total event count");

  // environments sorted by id; remainder events go to the lowest ids
  std::vector<EnvironmentProfile> envs = cfg.environments;
  std::sort(envs.begin(), envs.end(),
            [](const EnvironmentProfile& a, const EnvironmentProfile& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < envs.size(); ++i)
    require(envs[i].id != envs[i - 1].id, Errc::invalid_argument, "duplicate environment id");

  struct Slot {
    ClassLabel cls;
    const EnvironmentProfile* env;
  };
  std::vector<Slot> slots;
  const auto n_env = static_cast<std::int64_t>(envs.size());
  for (int c = 0; c < kNumClasses; ++c) {
    std::int64_t count = cfg.class_counts[static_cast<std::size_t>(c)];
    std::int64_t base = count / n_env, rem = count % n_env;
    for (std::int64_t e = 0; e < n_env; ++e) {
      std::int64_t k = base + (e < rem ? 1 : 0);
      for (std::int64_t j = 0; j < k; ++j)
        slots.push_back({class_from_index(c), &envs[static_cast<std::size_t>(e)]});
    }
  }

  double mu = solve_length_mu(cfg.length_distribution);
  Rng base(cfg.seed);
  std::vector<Event> events(slots.size());
  parallel_for(0, static_cast<std::int64_t>(slots.size()), [&](std::int64_t i) {
    Rng child = base.split(static_cast<std::uint64_t>(i));
    int n = sample_length(cfg.length_distribution, mu, child);
    events[static_cast<std::size_t>(i)] =
        generate_event(slots[static_cast<std::size_t>(i)].cls,
                       *slots[static_cast<std::size_t>(i)].env, n, child, cfg.width, cfg.height);
    events[static_cast<std::size_t>(i)].id = i;
  });
  return events;
}

// Dataset directory layout:
//   manifest.json  {format, format_version, width, height,
//                   events: [{id, label, environment_id, synthetic, n_frames, byte_offset}]}
//   frames.bin     all frames concatenated, 8-bit row-major, manifest order
void save_dataset(const std::vector<Event>& events, const std::filesystem::path& dir) {
  int width = 32, height = 32;
  if (!events.empty()) {
    width = events.front().frames.at(0).width;
    height = events.front().frames.at(0).height;
  }
  nlohmann::json manifest;
  manifest["format"] = kDatasetFormat;
  manifest["format_version"] = kDatasetVersion;
  manifest["width"] = width;
  manifest["height"] = height;
  nlohmann::json recs = nlohmann::json::array();
  std::vector<std::uint8_t> blob;
  std::uint64_t offset = 0;
  for (const auto& ev : events) {
    require(!ev.frames.empty(), Errc::invalid_argument,
            "event " + std::to_string(ev.id) + " has no frames");
    require(ev.frames.size() <= kMaxEventFrames, Errc::invalid_argument,
            "event " + std::to_string(ev.id) + " exceeds the frame-count bound");
    nlohmann::json r;
    r["id"] = ev.id;
    r["label"] = class_index(ev.label);
    r["environment_id"] = ev.environment_id;
    r["synthetic"] = ev.synthetic;
    r["n_frames"] = ev.frames.size();
    r["byte_offset"] = offset;
    recs.push_back(std::move(r));
    for (const auto& f : ev.frames) {
      require(f.width == width && f.height == height, Errc::shape_mismatch,
              "all frames in a dataset must share one size");
      require(f.pixels.size() == static_cast<std::size_t>(width) * height, Errc::shape_mismatch,
              "frame pixel count does not match its size");
      blob.insert(blob.end(), f.pixels.begin(), f.pixels.end());
      offset += f.pixels.size();
    }
  }
  manifest["events"] = std::move(recs);
  std::filesystem::create_directories(dir);
  io::write_json(dir / "manifest.json", manifest);
  io::write_bytes(dir / "frames.bin", blob.data(), blob.size());
}

std::vector<Event> load_dataset(const std::filesystem::path& dir) {
  nlohmann::json manifest = io::read_json(dir / "manifest.json");
  require(manifest.is_object(), Errc::parse_error, "manifest.json: expected an object");
  require(manifest.value("format", "") == kDatasetFormat, Errc::version_mismatch,
          "manifest.json: not a dataset manifest");
  require(manifest.value("format_version", -1) == kDatasetVersion, Errc::version_mismatch,
          "manifest.json: unsupported format_version");
  require(manifest.contains("width") && manifest["width"].is_number_integer() &&
              manifest.contains("height") && manifest["height"].is_number_integer(),
          Errc::parse_error, "manifest.json: missing width/height");
  int width = manifest["width"].get<int>();
  int height = manifest["height"].get<int>();
  require(width > 0 && height > 0, Errc::parse_error, "manifest.json: bad frame size");
  require(manifest.contains("events") && manifest["events"].is_array(), Errc::parse_error,
          "manifest.json: missing events array");

  auto blob = io::read_bytes(dir / "frames.bin");
  const std::size_t frame_bytes = static_cast<std::size_t>(width) * height;

  std::vector<Event> events;
  std::uint64_t offset = 0;
  for (const auto& r : manifest["events"]) {
    require(r.is_object(), Errc::parse_error, "manifest.json: bad event record");
    for (const char* key : {"id", "label", "environment_id", "n_frames", "byte_offset"})
      require(r.contains(key) && r[key].is_number_integer(), Errc::parse_error,
              std::string("manifest.json: event record missing ") + key);
    Event ev;
    ev.id = r["id"].get<std::int64_t>();
    int label = r["label"].get<int>();
    require(label >= 0 && label < kNumClasses, Errc::parse_error,
            "manifest.json: label out of range");
    ev.label = class_from_index(label);
    ev.environment_id = r["environment_id"].get<int>();
    ev.synthetic = r.value("synthetic", false);
    std::int64_t n = r["n_frames"].get<std::int64_t>();
    require(n >= 1 && n <= kMaxEventFrames, Errc::parse_error,
            "manifest.json: n_frames out of range");
    require(ev.synthetic || n >= kMinEventFrames, Errc::parse_error,
            "manifest.json: real events need at least 4 frames");
    require(r["byte_offset"].get<std::uint64_t>() == offset, Errc::offset_inconsistency,
            "manifest.json: byte_offset does not match running total");
    std::uint64_t need = static_cast<std::uint64_t>(n) * frame_bytes;
    require(offset + need <= blob.size(), Errc::truncated_blob,
            "frames.bin: too short for the declared events");
    for (std::int64_t i = 0; i < n; ++i) {
      Frame f = make_frame(width, height);
      std::copy_n(blob.begin() + static_cast<std::ptrdiff_t>(offset + i * frame_bytes),
                  frame_bytes, f.pixels.begin());
      ev.frames.push_back(std::move(f));
    }
    offset += need;
    events.push_back(std::move(ev));
  }
  require(offset == blob.size(), Errc::trailing_bytes,
          "frames.bin: has bytes beyond the manifest");
  return events;
}

}  // namespace jelly
