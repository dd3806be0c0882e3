// jelly: config-driven CLI chaining generation -> training -> enhancement ->
// fusion -> gating -> evaluation -> benchmark.
//
// One JSON config file holds a section per subcommand (plus the shared
// "split" section); command-line flags override config values, and the
// effective merged config is echoed into every output directory as
// effective_config.json. The env var JELLY_THREADS caps worker parallelism.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <string>
#include <vector>

#include "jelly/benchkit.hpp"
#include "jelly/binio.hpp"
#include "jelly/core.hpp"
#include "jelly/error.hpp"
#include "jelly/eventfuse.hpp"
#include "jelly/framecls.hpp"
#include "jelly/ganaug.hpp"
#include "jelly/gate.hpp"
#include "jelly/pipeline.hpp"
#include "jelly/sonargen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace jelly;

namespace {

// ---------- config plumbing ----------

json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  json j = io::read_json(path);
  require(j.is_object(), Errc::parse_error, "config root must be a JSON object");
  return j;
}

json section(const json& cfg, const std::string& name) {
  if (!cfg.contains(name)) return json::object();
  require(cfg.at(name).is_object(), Errc::parse_error,
          "config section '" + name + "' must be an object");
  return cfg.at(name);
}

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    require(known, Errc::parse_error, "unknown config key '" + where + "." + it.key() + "'");
  }
}

template <class T>
T get_or(const json& j, const std::string& where, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(Errc::parse_error, "invalid config value for '" + where + "." + std::string(key) + "'");
  }
}

void echo_config(const fs::path& out_dir, const json& effective) {
  io::write_json(out_dir / "effective_config.json", effective);
}

// ---------- typed config builders ----------

GenConfig gen_config_from(const json& s) {
  check_keys(s, "gen",
             {"seed", "width", "height", "class_counts", "target_mean_length", "environments"});
  GenConfig cfg = default_gen_config();
  cfg.seed = get_or<std::uint64_t>(s, "gen", "seed", cfg.seed);
  cfg.width = get_or<int>(s, "gen", "width", cfg.width);
  cfg.height = get_or<int>(s, "gen", "height", cfg.height);
  cfg.length_distribution.target_mean =
      get_or<double>(s, "gen", "target_mean_length", cfg.length_distribution.target_mean);
  if (s.contains("class_counts")) {
    const auto& a = s.at("class_counts");
    require(a.is_array() && a.size() == kNumClasses, Errc::parse_error,
            "'gen.class_counts' must be an array of 6 integers");
    for (int c = 0; c < kNumClasses; ++c) {
      require(a[std::size_t(c)].is_number_integer(), Errc::parse_error,
              "'gen.class_counts' must be an array of 6 integers");
      cfg.class_counts[std::size_t(c)] = a[std::size_t(c)].get<std::int64_t>();
    }
  }
  if (s.contains("environments")) {
    const auto& a = s.at("environments");
    require(a.is_array() && !a.empty(), Errc::parse_error,
            "'gen.environments' must be a non-empty array");
    cfg.environments.clear();
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto& e = a[i];
      std::string where = "gen.environments[" + std::to_string(i) + "]";
      require(e.is_object(), Errc::parse_error, "'" + where + "' must be an object");
      check_keys(e, where, {"id", "noise_sigma", "artefact_rate", "background_level", "drift"});
      EnvironmentProfile p;
      p.id = get_or<int>(e, where, "id", int(i));
      p.noise_sigma = get_or<double>(e, where, "noise_sigma", p.noise_sigma);
      p.artefact_rate = get_or<double>(e, where, "artefact_rate", p.artefact_rate);
      p.background_level = get_or<double>(e, where, "background_level", p.background_level);
      if (e.contains("drift")) {
        const auto& d = e.at("drift");
        require(d.is_array() && d.size() == 2, Errc::parse_error,
                "'" + where + ".drift' must be an array of 2 numbers");
        p.drift = {d[0].get<double>(), d[1].get<double>()};
      }
      cfg.environments.push_back(p);
    }
  }
  return cfg;
}

struct SplitSettings {
  SplitSpec spec;
  std::uint64_t seed = 7;
};

SplitSettings split_from(const json& s) {
  check_keys(s, "split", {"train", "val", "test", "mode", "held_out_environment", "seed"});
  SplitSettings out;
  out.spec.train_frac = get_or<double>(s, "split", "train", out.spec.train_frac);
  out.spec.val_frac = get_or<double>(s, "split", "val", out.spec.val_frac);
  out.spec.test_frac = get_or<double>(s, "split", "test", out.spec.test_frac);
  out.seed = get_or<std::uint64_t>(s, "split", "seed", out.seed);
  std::string mode = get_or<std::string>(s, "split", "mode", "random");
  if (mode == "random") {
    out.spec.mode = SplitMode::RandomSplit;
  } else if (mode == "leave-one-environment-out") {
    out.spec.mode = SplitMode::LeaveOneEnvironmentOut;
    require(s.contains("held_out_environment"), Errc::parse_error,
            "'split.held_out_environment' is required for leave-one-environment-out");
  } else {
    fail(Errc::parse_error, "'split.mode' must be \"random\" or \"leave-one-environment-out\"");
  }
  if (s.contains("held_out_environment"))
    out.spec.held_out_environment = get_or<int>(s, "split", "held_out_environment", 0);
  return out;
}

FrameTrainConfig frame_config_from(const json& s) {
  check_keys(s, "train-frame",
             {"epochs", "batch_size", "lr", "patience", "max_frames_per_event", "seed"});
  FrameTrainConfig cfg;
  cfg.epochs = get_or<int>(s, "train-frame", "epochs", cfg.epochs);
  cfg.batch_size = get_or<int>(s, "train-frame", "batch_size", cfg.batch_size);
  cfg.lr = get_or<double>(s, "train-frame", "lr", cfg.lr);
  cfg.patience = get_or<int>(s, "train-frame", "patience", cfg.patience);
  cfg.max_frames_per_event =
      get_or<int>(s, "train-frame", "max_frames_per_event", cfg.max_frames_per_event);
  cfg.seed = get_or<std::uint64_t>(s, "train-frame", "seed", cfg.seed);
  return cfg;
}

GanTrainConfig gan_config_from(const json& s) {
  check_keys(s, "train-gan",
             {"epochs", "batch_size", "lr", "beta1", "max_frames_per_event", "probe_size",
              "seed"});
  GanTrainConfig cfg;
  cfg.epochs = get_or<int>(s, "train-gan", "epochs", cfg.epochs);
  cfg.batch_size = get_or<int>(s, "train-gan", "batch_size", cfg.batch_size);
  cfg.lr = get_or<double>(s, "train-gan", "lr", cfg.lr);
  cfg.beta1 = get_or<double>(s, "train-gan", "beta1", cfg.beta1);
  cfg.max_frames_per_event =
      get_or<int>(s, "train-gan", "max_frames_per_event", cfg.max_frames_per_event);
  cfg.probe_size = get_or<int>(s, "train-gan", "probe_size", cfg.probe_size);
  cfg.seed = get_or<std::uint64_t>(s, "train-gan", "seed", cfg.seed);
  return cfg;
}

struct EventTrainSettings {
  FusionTrainConfig cfg;
  double wx = 2.0;
  double wy = 1.0;
};

EventTrainSettings event_config_from(const json& s) {
  check_keys(s, "train-event", {"epochs", "batch_size", "lr", "wx", "wy", "seed"});
  EventTrainSettings out;
  out.cfg.epochs = get_or<int>(s, "train-event", "epochs", out.cfg.epochs);
  out.cfg.batch_size = get_or<int>(s, "train-event", "batch_size", out.cfg.batch_size);
  out.cfg.lr = get_or<double>(s, "train-event", "lr", out.cfg.lr);
  out.wx = get_or<double>(s, "train-event", "wx", out.wx);
  out.wy = get_or<double>(s, "train-event", "wy", out.wy);
  out.cfg.seed = get_or<std::uint64_t>(s, "train-event", "seed", out.cfg.seed);
  out.cfg.loss_weights = nn::LossWeights::jellyfish_seaweed(out.wx, out.wy);
  return out;
}

EnhancementStrategy strategy_from(const std::string& s) {
  if (s == "a") return EnhancementStrategy::ProportionalReal;
  if (s == "b") return EnhancementStrategy::ProportionalMissing;
  if (s == "c") return EnhancementStrategy::Equal;
  fail(Errc::invalid_argument, "strategy must be a, b, or c (got '" + s + "')");
}

const char* strategy_letter(EnhancementStrategy s) {
  switch (s) {
    case EnhancementStrategy::ProportionalReal: return "a";
    case EnhancementStrategy::ProportionalMissing: return "b";
    case EnhancementStrategy::Equal: return "c";
  }
  return "?";
}

// ---------- shared helpers ----------

std::vector<Event> load_datasets(const std::vector<std::string>& dirs) {
  std::vector<Event> all;
  for (const auto& d : dirs) {
    auto ev = load_dataset(d);
    all.insert(all.end(), std::make_move_iterator(ev.begin()), std::make_move_iterator(ev.end()));
  }
  return all;
}

void partition_synthetic(std::vector<Event> all, std::vector<Event>* real,
                         std::vector<Event>* synth) {
  for (auto& e : all) (e.synthetic ? synth : real)->push_back(std::move(e));
}

void write_train_log_csv(const fs::path& path, const TrainLog& log) {
  std::string out = "epoch,train_loss,train_acc,val_acc\n";
  char buf[160];
  for (const auto& e : log.epochs) {
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g\n", e.epoch, e.train_loss, e.train_acc,
                  e.val_acc);
    out += buf;
  }
  io::write_text(path, out);
}

void write_gan_log_csv(const fs::path& path, const std::vector<GanLogEntry>& log) {
  std::string out = "epoch,loss_d,loss_g,probe_acc\n";
  char buf[160];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g\n", e.epoch, e.loss_d, e.loss_g,
                  e.probe_acc);
    out += buf;
  }
  io::write_text(path, out);
}

std::vector<double> tau_grid(double lo, double hi, double step) {
  require(step > 0.0, Errc::invalid_argument, "sweep step must be > 0");
  require(lo >= 0.0 && hi <= 1.0 && lo <= hi, Errc::invalid_argument,
          "sweep range must satisfy 0 <= min <= max <= 1");
  std::vector<double> taus;
  for (double t = lo; t <= hi + 1e-9; t += step) taus.push_back(t);
  return taus;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "jelly: synthetic sonar event generation, two-stage classification, GAN "
      "training-set enhancement, threshold gating, evaluation, and latency "
      "benchmarking.\n"
      "Config: one JSON file, one section per subcommand plus the shared \"split\" "
      "section; flags override config; the effective config is written to every "
      "output directory. JELLY_THREADS caps worker parallelism."};
  app.require_subcommand(1);

  try {
    // ---- gen ----
    auto* gen = app.add_subcommand("gen", "Generate a synthetic event dataset");
    struct {
      std::string config, out;
      std::uint64_t seed = 0;
    } g;
    gen->add_option("--config", g.config, "JSON config file (section: gen)");
    gen->add_option("--out", g.out, "Output dataset directory")->required();
    gen->add_option("--seed", g.seed, "Generation seed (overrides gen.seed)");
    gen->callback([&] {
      json s = section(load_config_file(g.config), "gen");
      if (gen->count("--seed")) s["seed"] = g.seed;
      GenConfig cfg = gen_config_from(s);
      auto events = generate_dataset(cfg);
      fs::create_directories(g.out);
      save_dataset(events, g.out);
      echo_config(g.out, json{{"gen", s}});
      std::printf("wrote %zu events to %s\n", events.size(), g.out.c_str());
    });

    // ---- train-frame ----
    auto* tf = app.add_subcommand("train-frame", "Train the per-frame CNN classifier");
    struct {
      std::string config, out;
      std::vector<std::string> data;
      std::uint64_t seed = 0;
    } f;
    tf->add_option("--config", f.config, "JSON config file (sections: split, train-frame)");
    tf->add_option("--data", f.data,
                   "Dataset directory; repeatable — synthetic events from any directory "
                   "join the training split only")
        ->required();
    tf->add_option("--out", f.out, "Output model directory")->required();
    tf->add_option("--seed", f.seed, "Training seed (overrides train-frame.seed)");
    tf->callback([&] {
      json cfgj = load_config_file(f.config);
      json sp = section(cfgj, "split");
      json s = section(cfgj, "train-frame");
      if (tf->count("--seed")) s["seed"] = f.seed;
      SplitSettings split_cfg = split_from(sp);
      FrameTrainConfig cfg = frame_config_from(s);

      std::vector<Event> real, synth;
      partition_synthetic(load_datasets(f.data), &real, &synth);
      auto split = split_dataset(real, split_cfg.spec, split_cfg.seed);
      std::vector<Event> train = split.train;
      train.insert(train.end(), synth.begin(), synth.end());

      auto result = train_frame_classifier(train, split.val, cfg);
      fs::create_directories(f.out);
      nn::save_model(result.params, f.out);
      write_train_log_csv(fs::path(f.out) / "train_log.csv", result.log);
      echo_config(f.out, json{{"split", sp}, {"train-frame", s}});
      std::printf("trained on %zu events (%zu synthetic); best epoch %d\n", train.size(),
                  synth.size(), result.log.best_epoch);
    });

    // ---- train-gan ----
    auto* tg = app.add_subcommand("train-gan", "Train the conditional GAN on the train split");
    struct {
      std::string config, data, out;
      std::uint64_t seed = 0;
    } ga;
    tg->add_option("--config", ga.config, "JSON config file (sections: split, train-gan)");
    tg->add_option("--data", ga.data, "Dataset directory (real events only)")->required();
    tg->add_option("--out", ga.out, "Output GAN directory")->required();
    tg->add_option("--seed", ga.seed, "Training seed (overrides train-gan.seed)");
    tg->callback([&] {
      json cfgj = load_config_file(ga.config);
      json sp = section(cfgj, "split");
      json s = section(cfgj, "train-gan");
      if (tg->count("--seed")) s["seed"] = ga.seed;
      SplitSettings split_cfg = split_from(sp);
      GanTrainConfig cfg = gan_config_from(s);

      auto events = load_dataset(ga.data);
      for (const auto& e : events)
        require(!e.synthetic, Errc::invalid_argument,
                "train-gan: dataset contains synthetic events");
      auto split = split_dataset(events, split_cfg.spec, split_cfg.seed);
      auto result = train_gan(split.train, cfg);
      fs::create_directories(ga.out);
      save_gan(result.models, ga.out);
      write_gan_log_csv(fs::path(ga.out) / "gan_log.csv", result.log);
      echo_config(ga.out, json{{"split", sp}, {"train-gan", s}});
      std::printf("trained GAN on %zu events; final probe accuracy %.3f\n", split.train.size(),
                  result.log.empty() ? 0.0 : result.log.back().probe_acc);
    });

    // ---- synth ----
    auto* sy = app.add_subcommand("synth",
                                  "Synthesize a frame dataset from a trained GAN; the budget "
                                  "fraction is relative to the GAN's real training frames");
    struct {
      std::string config, gan, out, strategy;
      double fraction = 0.0;
      std::uint64_t seed = 0;
      std::int64_t id_base = 0;
    } sn;
    sy->add_option("--config", sn.config, "JSON config file (section: synth)");
    sy->add_option("--gan", sn.gan, "Trained GAN directory")->required();
    sy->add_option("--strategy", sn.strategy,
                   "Enhancement strategy: a (proportional to real), b (proportional to "
                   "missing), c (equal)");
    sy->add_option("--fraction", sn.fraction, "Synthetic budget as a fraction of real samples");
    sy->add_option("--out", sn.out, "Output dataset directory")->required();
    sy->add_option("--seed", sn.seed, "Synthesis seed (overrides synth.seed)");
    sy->add_option("--id-base", sn.id_base, "First synthetic event id (default 1000000)");
    sy->callback([&] {
      json s = section(load_config_file(sn.config), "synth");
      check_keys(s, "synth", {"strategy", "fraction", "seed", "id_base"});
      if (sy->count("--strategy")) s["strategy"] = sn.strategy;
      if (sy->count("--fraction")) s["fraction"] = sn.fraction;
      if (sy->count("--seed")) s["seed"] = sn.seed;
      if (sy->count("--id-base")) s["id_base"] = sn.id_base;

      EnhancementStrategy strat = strategy_from(get_or<std::string>(s, "synth", "strategy", "c"));
      double fraction = get_or<double>(s, "synth", "fraction", 0.1);
      std::uint64_t seed = get_or<std::uint64_t>(s, "synth", "seed", 0);
      std::int64_t id_base = get_or<std::int64_t>(s, "synth", "id_base", 1000000);

      GanModels gan = load_gan(sn.gan);
      EnhancementPlan plan = plan_enhancement(gan.class_support, strat, fraction);
      auto events = synthesize(gan, plan, seed, id_base);
      fs::create_directories(sn.out);
      save_dataset(events, sn.out);
      json plan_json{{"strategy", strategy_letter(plan.strategy)},
                     {"fraction", plan.fraction},
                     {"real_counts", gan.class_support},
                     {"added", plan.added}};
      io::write_json(fs::path(sn.out) / "plan.json", plan_json);
      echo_config(sn.out, json{{"synth", s}});
      std::printf("synthesized %zu frames to %s\n", events.size(), sn.out.c_str());
    });

    // ---- train-event ----
    auto* te = app.add_subcommand(
        "train-event", "Train the confidence-sequence fusion network on frozen frame outputs");
    struct {
      std::string config, frame_model, data, out;
      double wx = 2.0, wy = 1.0;
      std::uint64_t seed = 0;
    } ev;
    te->add_option("--config", ev.config, "JSON config file (sections: split, train-event)");
    te->add_option("--frame-model", ev.frame_model, "Trained frame-classifier directory")
        ->required();
    te->add_option("--data", ev.data, "Dataset directory (synthetic events are excluded)")
        ->required();
    te->add_option("--out", ev.out, "Output model directory")->required();
    te->add_option("--wx", ev.wx, "Jellyfish loss weight X (overrides train-event.wx)");
    te->add_option("--wy", ev.wy, "Seaweed loss weight Y (overrides train-event.wy)");
    te->add_option("--seed", ev.seed, "Training seed (overrides train-event.seed)");
    te->callback([&] {
      json cfgj = load_config_file(ev.config);
      json sp = section(cfgj, "split");
      json s = section(cfgj, "train-event");
      if (te->count("--wx")) s["wx"] = ev.wx;
      if (te->count("--wy")) s["wy"] = ev.wy;
      if (te->count("--seed")) s["seed"] = ev.seed;
      SplitSettings split_cfg = split_from(sp);
      EventTrainSettings cfg = event_config_from(s);

      std::vector<Event> real, synth;
      partition_synthetic(load_dataset(ev.data), &real, &synth);
      auto split = split_dataset(real, split_cfg.spec, split_cfg.seed);

      auto frame_params = nn::load_model(ev.frame_model);
      auto train_seqs = classify_dataset(frame_params, split.train);
      auto val_seqs = classify_dataset(frame_params, split.val);
      std::vector<ClassLabel> train_labels, val_labels;
      for (const auto& e : split.train) train_labels.push_back(e.label);
      for (const auto& e : split.val) val_labels.push_back(e.label);

      auto result = train_fusion(build_fusion_model(cfg.cfg.seed), train_seqs, train_labels,
                                 val_seqs, val_labels, cfg.cfg);
      fs::create_directories(ev.out);
      nn::save_model(result.params, ev.out);
      write_train_log_csv(fs::path(ev.out) / "train_log.csv", result.log);
      echo_config(ev.out, json{{"split", sp}, {"train-event", s}});
      std::printf("trained fusion on %zu events (weights %.3g/%.3g, %zu synthetic excluded)\n",
                  split.train.size(), cfg.wx, cfg.wy, synth.size());
    });

    // ---- eval ----
    auto* evc = app.add_subcommand(
        "eval", "Train and evaluate end-to-end over K seeds on a fixed dataset and split");
    struct {
      std::string config, data, out, fusion_mode;
      int runs = 0;
      double threshold = 0.0;
      std::uint64_t seed = 0;
    } e;
    evc->add_option("--config", e.config,
                    "JSON config file (sections: split, train-frame, train-event, eval)");
    evc->add_option("--data", e.data, "Dataset directory")->required();
    evc->add_option("--out", e.out, "Output report directory")->required();
    evc->add_option("--runs", e.runs, "Number of seeds (>= 2; overrides eval.runs)");
    evc->add_option("--threshold", e.threshold,
                    "Jellyfish reporting threshold tau; omit for ungated evaluation");
    evc->add_option("--fusion", e.fusion_mode,
                    "Event fusion: average or network (overrides eval.fusion)");
    evc->add_option("--seed", e.seed, "Base seed; run i trains with seed+i");
    evc->callback([&] {
      json cfgj = load_config_file(e.config);
      json sp = section(cfgj, "split");
      json s = section(cfgj, "eval");
      check_keys(s, "eval", {"runs", "threshold", "fusion", "seed"});
      if (evc->count("--runs")) s["runs"] = e.runs;
      if (evc->count("--threshold")) s["threshold"] = e.threshold;
      if (evc->count("--fusion")) s["fusion"] = e.fusion_mode;
      if (evc->count("--seed")) s["seed"] = e.seed;

      SplitSettings split_cfg = split_from(sp);
      EvalRunConfig cfg;
      cfg.frame = frame_config_from(section(cfgj, "train-frame"));
      cfg.fusion = event_config_from(section(cfgj, "train-event")).cfg;
      cfg.runs = get_or<int>(s, "eval", "runs", 3);
      cfg.seed = get_or<std::uint64_t>(s, "eval", "seed", 0);
      std::string mode = get_or<std::string>(s, "eval", "fusion", "network");
      if (mode == "average")
        cfg.mode = FusionMode::Average;
      else if (mode == "network")
        cfg.mode = FusionMode::Network;
      else
        fail(Errc::parse_error, "'eval.fusion' must be \"average\" or \"network\"");
      if (s.contains("threshold") && !s.at("threshold").is_null())
        cfg.gate = GateConfig{get_or<double>(s, "eval", "threshold", 0.45)};

      std::vector<Event> real, synth;
      partition_synthetic(load_dataset(e.data), &real, &synth);
      auto split = split_dataset(real, split_cfg.spec, split_cfg.seed);
      split.train.insert(split.train.end(), synth.begin(), synth.end());

      RunReport report = run_eval(split, cfg);
      fs::create_directories(e.out);
      write_report(report, e.out);
      echo_config(e.out, json{{"split", sp},
                              {"train-frame", section(cfgj, "train-frame")},
                              {"train-event", section(cfgj, "train-event")},
                              {"eval", s}});
      std::printf("eval over %d runs: frame %.4f+-%.4f, event %.4f+-%.4f\n", report.n_runs,
                  report.frame_acc.mean, report.frame_acc.std, report.event_acc.mean,
                  report.event_acc.std);
    });

    // ---- sweep ----
    auto* sw = app.add_subcommand(
        "sweep", "Sweep the jellyfish reporting threshold over the test split");
    struct {
      std::string config, data, frame_model, event_model, out;
      double lo = 0.0, hi = 0.95, step = 0.05;
    } w;
    sw->add_option("--config", w.config, "JSON config file (sections: split, sweep)");
    sw->add_option("--data", w.data, "Dataset directory")->required();
    sw->add_option("--frame-model", w.frame_model, "Trained frame-classifier directory")
        ->required();
    sw->add_option("--event-model", w.event_model,
                   "Trained fusion-model directory (omit to fuse by averaging)");
    sw->add_option("--min", w.lo, "Lowest tau (overrides sweep.min)");
    sw->add_option("--max", w.hi, "Highest tau (overrides sweep.max)");
    sw->add_option("--step", w.step, "Tau increment (overrides sweep.step)");
    sw->add_option("--out", w.out, "Output directory")->required();
    sw->callback([&] {
      json cfgj = load_config_file(w.config);
      json sp = section(cfgj, "split");
      json s = section(cfgj, "sweep");
      check_keys(s, "sweep", {"min", "max", "step"});
      if (sw->count("--min")) s["min"] = w.lo;
      if (sw->count("--max")) s["max"] = w.hi;
      if (sw->count("--step")) s["step"] = w.step;
      double lo = get_or<double>(s, "sweep", "min", 0.0);
      double hi = get_or<double>(s, "sweep", "max", 0.95);
      double step = get_or<double>(s, "sweep", "step", 0.05);

      SplitSettings split_cfg = split_from(sp);
      std::vector<Event> real, synth;
      partition_synthetic(load_dataset(w.data), &real, &synth);
      auto split = split_dataset(real, split_cfg.spec, split_cfg.seed);

      auto frame_params = nn::load_model(w.frame_model);
      auto seqs = classify_dataset(frame_params, split.test);
      std::vector<ConfidenceVector> preds;
      std::vector<ClassLabel> labels;
      if (!w.event_model.empty()) {
        FusionClassifier fus(nn::load_model(w.event_model));
        for (const auto& q : seqs) preds.push_back(fus.fuse(q));
      } else {
        for (const auto& q : seqs) preds.push_back(fuse_by_average(q));
      }
      for (const auto& evn : split.test) labels.push_back(evn.label);

      auto curve = sweep_threshold(preds, labels, tau_grid(lo, hi, step));
      fs::create_directories(w.out);
      write_sweep_csv(fs::path(w.out) / "sweep.csv", curve);
      echo_config(w.out, json{{"split", sp}, {"sweep", s}});
      std::printf("swept %zu thresholds over %zu test events\n", curve.size(), labels.size());
    });

    // ---- bench ----
    auto* be = app.add_subcommand("bench",
                                  "Measure event classification latency vs frame length");
    struct {
      std::string config, frame_model, event_model, out;
      std::vector<int> lengths;
      int repetitions = 0;
      std::uint64_t seed = 0;
    } b;
    be->add_option("--config", b.config, "JSON config file (section: bench)");
    be->add_option("--lengths", b.lengths, "Comma-separated frame lengths in [4, 300]")
        ->delimiter(',');
    be->add_option("--repetitions", b.repetitions, "Timed repetitions per length (>= 10)");
    be->add_option("--frame-model", b.frame_model,
                   "Frame-classifier directory (default: fresh seeded weights)");
    be->add_option("--event-model", b.event_model,
                   "Fusion-model directory (default: fresh seeded weights)");
    be->add_option("--seed", b.seed, "Seed for event synthesis and default weights");
    be->add_option("--out", b.out, "Output directory")->required();
    be->callback([&] {
      json s = section(load_config_file(b.config), "bench");
      check_keys(s, "bench", {"lengths", "repetitions", "seed"});
      if (be->count("--lengths")) s["lengths"] = b.lengths;
      if (be->count("--repetitions")) s["repetitions"] = b.repetitions;
      if (be->count("--seed")) s["seed"] = b.seed;
      auto lengths = get_or<std::vector<int>>(s, "bench", "lengths", default_bench_lengths());
      int reps = get_or<int>(s, "bench", "repetitions", 20);
      std::uint64_t seed = get_or<std::uint64_t>(s, "bench", "seed", 0);

      nn::ModelParams frame_params =
          b.frame_model.empty() ? build_frame_model(seed) : nn::load_model(b.frame_model);
      nn::ModelParams fusion_params =
          b.event_model.empty() ? build_fusion_model(seed) : nn::load_model(b.event_model);

      auto rows = bench_event_latency(frame_params, fusion_params, lengths, reps, seed);
      fs::create_directories(b.out);
      write_bench_csv(fs::path(b.out) / "bench.csv", rows);
      write_bench_metadata(fs::path(b.out) / "bench_meta.json", reps, seed);
      echo_config(b.out, json{{"bench", s}});
      for (const auto& r : rows)
        std::printf("length %3d: avg %.3f ms, fusion %.3f ms, overhead %.1f%%\n", r.length,
                    r.t_avg_ms, r.t_fusion_ms, 100.0 * r.overhead_ratio);
    });

    // ---- pipeline ----
    auto* pi = app.add_subcommand(
        "pipeline", "Run the cumulative method ladder A-E and emit a comparison table");
    struct {
      std::string config, out, strategy;
      int runs = 0;
      double fraction = 0.0, tau = 0.0;
      std::uint64_t seed = 0;
    } p;
    pi->add_option("--config", p.config,
                   "JSON config file (sections: gen, split, train-frame, train-gan, "
                   "train-event, pipeline)");
    pi->add_option("--out", p.out, "Output directory")->required();
    pi->add_option("--runs", p.runs, "Seeds per method (>= 2; overrides pipeline.runs)");
    pi->add_option("--strategy", p.strategy, "Enhancement strategy a|b|c for method B");
    pi->add_option("--fraction", p.fraction, "Synthetic budget fraction for method B");
    pi->add_option("--tau", p.tau, "Reporting threshold for method E");
    pi->add_option("--seed", p.seed, "Base training seed; run i uses seed+i");
    pi->callback([&] {
      json cfgj = load_config_file(p.config);
      json s = section(cfgj, "pipeline");
      check_keys(s, "pipeline", {"runs", "strategy", "fraction", "tau", "seed"});
      if (pi->count("--runs")) s["runs"] = p.runs;
      if (pi->count("--strategy")) s["strategy"] = p.strategy;
      if (pi->count("--fraction")) s["fraction"] = p.fraction;
      if (pi->count("--tau")) s["tau"] = p.tau;
      if (pi->count("--seed")) s["seed"] = p.seed;

      PipelineConfig cfg;
      cfg.gen = gen_config_from(section(cfgj, "gen"));
      SplitSettings split_cfg = split_from(section(cfgj, "split"));
      cfg.split = split_cfg.spec;
      cfg.split_seed = split_cfg.seed;
      cfg.frame = frame_config_from(section(cfgj, "train-frame"));
      cfg.gan = gan_config_from(section(cfgj, "train-gan"));
      cfg.fusion = event_config_from(section(cfgj, "train-event")).cfg;
      cfg.strategy = strategy_from(get_or<std::string>(s, "pipeline", "strategy", "c"));
      cfg.fraction = get_or<double>(s, "pipeline", "fraction", 0.1);
      cfg.gate.tau = get_or<double>(s, "pipeline", "tau", 0.45);
      cfg.runs = get_or<int>(s, "pipeline", "runs", 3);
      cfg.seed = get_or<std::uint64_t>(s, "pipeline", "seed", 0);

      PipelineResult result = run_pipeline(cfg);
      fs::create_directories(p.out);
      write_comparison_csv(fs::path(p.out) / "comparison.csv", result);
      for (const auto& m : result.methods) {
        fs::path mdir = fs::path(p.out) / ("method_" + m.method);
        fs::create_directories(mdir);
        write_report(m.report, mdir);
      }
      echo_config(p.out, json{{"gen", section(cfgj, "gen")},
                              {"split", section(cfgj, "split")},
                              {"train-frame", section(cfgj, "train-frame")},
                              {"train-gan", section(cfgj, "train-gan")},
                              {"train-event", section(cfgj, "train-event")},
                              {"pipeline", s}});
      for (const auto& m : result.methods)
        std::printf("%s %-24s frame %.4f event %.4f jelly %.4f fp %.4f\n", m.method.c_str(),
                    m.name.c_str(), m.report.frame_acc.mean, m.report.event_acc.mean,
                    m.report.jelly_acc.mean, m.report.jelly_fp_rate.mean);
    });

    app.parse(argc, argv);
  } catch (const CLI::Success& ok) {
    return app.exit(ok);
  } catch (const CLI::ParseError& pe) {
    json err{{"error", {{"code", "cli"}, {"message", pe.what()}}}};
    std::cerr << err.dump() << "\n";
    return pe.get_exit_code() == 0 ? 1 : pe.get_exit_code();
  } catch (const Error& je) {
    json err{{"error", {{"code", errc_name(je.code())}, {"message", je.what()}}}};
    std::cerr << err.dump() << "\n";
    return 1;
  } catch (const std::exception& ex) {
    json err{{"error", {{"code", "internal"}, {"message", ex.what()}}}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
