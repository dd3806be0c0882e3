#include "jelly/pipeline.hpp"

#include <cstdio>
#include <string>

#include "jelly/binio.hpp"
#include "jelly/error.hpp"

namespace jelly {
namespace {

constexpr int kJelly = static_cast<int>(ClassLabel::Jellyfish);

std::vector<ClassLabel> event_labels(const std::vector<Event>& events) {
  std::vector<ClassLabel> labels;
  labels.reserve(events.size());
  for (const auto& e : events) labels.push_back(e.label);
  return labels;
}

void require_real(const std::vector<Event>& events, const char* where) {
  for (const auto& e : events)
    require(!e.synthetic, Errc::invalid_argument,
            std::string(where) + ": synthetic event " + std::to_string(e.id) +
                " in an evaluation set");
}

}  // namespace

RunMetrics evaluate_sequences(const std::vector<ConfidenceSequence>& seqs,
                              const std::vector<ClassLabel>& labels, const EvalOptions& opts) {
  require(!seqs.empty(), Errc::degenerate_input, "evaluate: no sequences");
  require(seqs.size() == labels.size(), Errc::shape_mismatch,
          "evaluate: sequence/label count mismatch");
  if (opts.mode == FusionMode::Network)
    require(opts.fusion_model != nullptr, Errc::invalid_argument,
            "evaluate: network fusion requested without a fusion model");

  RunMetrics rm;

  std::int64_t frames_total = 0, frames_correct = 0;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    int truth = class_index(labels[i]);
    for (Eigen::Index t = 0; t < seqs[i].length(); ++t) {
      frames_total += 1;
      if (class_index(argmax_class(seqs[i].row(t))) == truth) frames_correct += 1;
    }
  }
  require(frames_total > 0, Errc::degenerate_input, "evaluate: no frames");
  rm.frame_acc = double(frames_correct) / double(frames_total);

  std::optional<FusionClassifier> fus;
  if (opts.mode == FusionMode::Network) fus.emplace(*opts.fusion_model);

  std::array<std::int64_t, kNumClasses> reported{};
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    ConfidenceVector pred =
        opts.mode == FusionMode::Average ? fuse_by_average(seqs[i]) : fus->fuse(seqs[i]);
    rm.confusion.add(labels[i], argmax_class(pred));
    if (opts.gate) {
      GateDecision d = apply_gate(pred, *opts.gate, seqs[i].event_id);
      if (d.reported) reported[class_index(labels[i])] += 1;
    }
  }
  rm.event_acc = accuracy(rm.confusion);

  std::int64_t true_jelly = rm.confusion.row_total(kJelly);
  std::int64_t non_jelly = rm.confusion.total() - true_jelly;
  if (opts.gate) {
    rm.confusion.reported_counts = reported;
    if (true_jelly > 0) rm.jelly_acc = double(reported[kJelly]) / double(true_jelly);
    rm.jelly_fp_count = 0;
    for (int c = 0; c < kNumClasses; ++c)
      if (c != kJelly) rm.jelly_fp_count += reported[c];
  } else {
    if (true_jelly > 0)
      rm.jelly_acc = double(rm.confusion.m(kJelly, kJelly)) / double(true_jelly);
    rm.jelly_fp_count = jellyfish_fp_count(rm.confusion);
  }
  rm.jelly_fp_rate = non_jelly > 0 ? double(rm.jelly_fp_count) / double(non_jelly) : 0.0;
  return rm;
}

RunMetrics evaluate_events(const nn::ModelParams& frame_model, const std::vector<Event>& events,
                           const EvalOptions& opts) {
  require_real(events, "evaluate_events");
  auto seqs = classify_dataset(frame_model, events);
  return evaluate_sequences(seqs, event_labels(events), opts);
}

RunReport run_eval(const SplitResult& split, const EvalRunConfig& cfg) {
  require(cfg.runs >= 2, Errc::invalid_argument, "eval: runs must be >= 2 for std reporting");
  require_real(split.test, "run_eval test");
  require_real(split.val, "run_eval val");

  // synthetic train events feed the frame classifier only
  std::vector<Event> real_train;
  for (const auto& e : split.train)
    if (!e.synthetic) real_train.push_back(e);
  require(!real_train.empty(), Errc::degenerate_input, "run_eval: no real training events");

  auto val_labels = event_labels(split.val);
  auto train_labels = event_labels(real_train);
  auto test_labels = event_labels(split.test);

  std::vector<RunMetrics> runs;
  runs.reserve(cfg.runs);
  for (int r = 0; r < cfg.runs; ++r) {
    std::uint64_t run_seed = cfg.seed + std::uint64_t(r);

    FrameTrainConfig fcfg = cfg.frame;
    fcfg.seed = run_seed;
    auto frame = train_frame_classifier(split.train, split.val, fcfg);

    EvalOptions opts;
    opts.mode = cfg.mode;
    opts.gate = cfg.gate;
    nn::ModelParams fusion;
    if (cfg.mode == FusionMode::Network) {
      auto train_seqs = classify_dataset(frame.params, real_train);
      auto val_seqs = classify_dataset(frame.params, split.val);
      FusionTrainConfig ecfg = cfg.fusion;
      ecfg.seed = run_seed;
      fusion = train_fusion(build_fusion_model(run_seed), train_seqs, train_labels, val_seqs,
                            val_labels, ecfg)
                   .params;
      opts.fusion_model = &fusion;
    }

    auto test_seqs = classify_dataset(frame.params, split.test);
    runs.push_back(evaluate_sequences(test_seqs, test_labels, opts));
  }
  return aggregate_runs(runs);
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
  require(cfg.runs >= 2, Errc::invalid_argument, "pipeline: runs must be >= 2");

  auto events = generate_dataset(cfg.gen);
  auto split = split_dataset(events, cfg.split, cfg.split_seed);
  require_real(split.test, "pipeline");

  auto train_labels = event_labels(split.train);
  auto val_labels = event_labels(split.val);
  auto test_labels = event_labels(split.test);

  std::vector<std::vector<RunMetrics>> per_method(5);
  for (int r = 0; r < cfg.runs; ++r) {
    std::uint64_t run_seed = cfg.seed + std::uint64_t(r);

    FrameTrainConfig fcfg = cfg.frame;
    fcfg.seed = run_seed;
    auto frame_a = train_frame_classifier(split.train, split.val, fcfg);
    auto seqs_a = classify_dataset(frame_a.params, split.test);
    per_method[0].push_back(
        evaluate_sequences(seqs_a, test_labels, {FusionMode::Average, nullptr, {}}));

    GanTrainConfig gcfg = cfg.gan;
    gcfg.seed = run_seed;
    auto gan = train_gan(split.train, gcfg);
    // budget basis = frames the GAN trained on, so `fraction` means a
    // fraction of the real sample pool
    auto plan = plan_enhancement(gan.models.class_support, cfg.strategy, cfg.fraction);
    auto synth = synthesize(gan.models, plan, run_seed);

    std::vector<Event> augmented = split.train;
    augmented.insert(augmented.end(), synth.begin(), synth.end());
    auto frame_b = train_frame_classifier(augmented, split.val, fcfg);
    auto seqs_b = classify_dataset(frame_b.params, split.test);
    per_method[1].push_back(
        evaluate_sequences(seqs_b, test_labels, {FusionMode::Average, nullptr, {}}));

    auto train_seqs = classify_dataset(frame_b.params, split.train);
    auto val_seqs = classify_dataset(frame_b.params, split.val);

    FusionTrainConfig unweighted = cfg.fusion;
    unweighted.loss_weights = nn::LossWeights{};
    unweighted.seed = run_seed;
    auto fusion_c = train_fusion(build_fusion_model(run_seed), train_seqs, train_labels,
                                 val_seqs, val_labels, unweighted);
    per_method[2].push_back(
        evaluate_sequences(seqs_b, test_labels, {FusionMode::Network, &fusion_c.params, {}}));

    FusionTrainConfig weighted = cfg.fusion;
    weighted.seed = run_seed;
    auto fusion_d = train_fusion(build_fusion_model(run_seed), train_seqs, train_labels,
                                 val_seqs, val_labels, weighted);
    per_method[3].push_back(
        evaluate_sequences(seqs_b, test_labels, {FusionMode::Network, &fusion_d.params, {}}));

    per_method[4].push_back(evaluate_sequences(
        seqs_b, test_labels, {FusionMode::Network, &fusion_d.params, cfg.gate}));
  }

  static const char* kNames[5] = {"Baseline", "+ Generated data", "+ Event classifier",
                                  "+ Weighted loss", "+ Confidence threshold"};
  PipelineResult result;
  for (int m = 0; m < 5; ++m) {
    MethodResult mr;
    mr.method = std::string(1, char('A' + m));
    mr.name = kNames[m];
    mr.report = aggregate_runs(per_method[m]);
    result.methods.push_back(std::move(mr));
  }
  return result;
}

void write_comparison_csv(const std::filesystem::path& path, const PipelineResult& result) {
  std::string out = "method,frame_acc,event_acc,jelly_acc,jelly_fp\n";
  char buf[200];
  for (const auto& m : result.methods) {
    std::snprintf(buf, sizeof(buf), "%s,%.9g,%.9g,%.9g,%.9g\n", m.method.c_str(),
                  m.report.frame_acc.mean, m.report.event_acc.mean, m.report.jelly_acc.mean,
                  m.report.jelly_fp_rate.mean);
    out += buf;
  }
  io::write_text(path, out);
}

}  // namespace jelly
